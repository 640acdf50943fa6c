use std::io::Write;

use super::TableRow;
use crate::error::{Error, Result};

/// C-style `%g` with six significant digits; `nan`/`inf` for non-finite values.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    strip_zeros(&format!("{x:.decimals$}")).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_HEADER: [&str; 8] = ["r", "apinv_1norm", "variant", "1nr", "sr", "lsr", "2nr", "status"];

pub fn write_table_csv<W: Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(err)?;
    for row in rows {
        let (a, b, c, d) = match &row.metrics {
            Some(m) => (m.one_norm_ratio, m.sparsity_ratio, m.lsr, m.two_norm_ratio),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        w.write_record([
            row.r.to_string(),
            fmt_g(row.apinv_one_norm),
            row.variant.clone(),
            fmt_g(a),
            fmt_g(b),
            fmt_g(c),
            fmt_g(d),
            row.status.clone(),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_c() {
        let cases = [
            (1.0, "1"),
            (0.04, "0.04"),
            (0.123456789, "0.123457"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (999999.5, "1e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (1.4142135623730951, "1.41421"),
            (0.0, "0"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g(x), s, "{x}");
        }
        assert_eq!(fmt_g(f64::NAN), "nan");
    }
}
