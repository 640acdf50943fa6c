//! Dense CSV and Matrix Market matrix files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::densela::DenseMatrix;
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// One matrix row per line, comma separated. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_csv_matrix(text: &str) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .map_err(|_| parse_err(k + 1, format!("not a number: '{f}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    k + 1,
                    format!("expected {} fields, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no matrix rows"));
    }
    DenseMatrix::from_rows(&rows)
}

/// Writes 17 significant digits per entry, which reads back bit for bit.
pub fn write_csv_matrix<W: Write>(m: &DenseMatrix, mut out: W) -> Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads the `coordinate` (real or integer; general, symmetric or
/// skew-symmetric) and `array` (real general) Matrix Market layouts.
pub fn parse_matrix_market(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let head: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if head.len() != 5 || head[0] != "%%matrixmarket" || head[1] != "matrix" {
        return Err(parse_err(1, "missing '%%MatrixMarket matrix' header"));
    }
    let layout = head[2].as_str();
    if !matches!(head[3].as_str(), "real" | "integer" | "double") {
        return Err(parse_err(1, format!("unsupported field '{}'", head[3])));
    }
    let symmetry = head[4].as_str();
    if !matches!(symmetry, "general" | "symmetric" | "skew-symmetric") {
        return Err(parse_err(1, format!("unsupported symmetry '{symmetry}'")));
    }

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_no, size_line) = body.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let nums = |k: usize, l: &str| -> Result<Vec<f64>> {
        l.split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(k + 1, format!("not a number: '{f}'"))))
            .collect()
    };
    let size = nums(size_no, size_line)?;
    let dim = |x: f64| -> Result<usize> {
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(parse_err(size_no + 1, "bad dimension"))
        }
    };

    match layout {
        "coordinate" => {
            if size.len() != 3 {
                return Err(parse_err(size_no + 1, "expected 'rows cols entries'"));
            }
            let (rows, cols) = (dim(size[0])?, dim(size[1])?);
            let mut m = DenseMatrix::zeros(rows, cols);
            let mut count = 0usize;
            for (k, l) in body {
                let v = nums(k, l)?;
                if v.len() != 3 {
                    return Err(parse_err(k + 1, "expected 'row col value'"));
                }
                let (i, j) = (v[0] as usize, v[1] as usize);
                if i == 0 || j == 0 || i > rows || j > cols || v[0].fract() != 0.0 || v[1].fract() != 0.0 {
                    return Err(parse_err(k + 1, "index out of range"));
                }
                if !v[2].is_finite() {
                    return Err(parse_err(k + 1, "non-finite value"));
                }
                m[(i - 1, j - 1)] = v[2];
                if i != j {
                    match symmetry {
                        "symmetric" => m[(j - 1, i - 1)] = v[2],
                        "skew-symmetric" => m[(j - 1, i - 1)] = -v[2],
                        _ => {}
                    }
                }
                count += 1;
            }
            if count as f64 != size[2] {
                return Err(parse_err(size_no + 1, format!("declared {} entries, found {count}", size[2])));
            }
            Ok(m)
        }
        "array" => {
            if size.len() != 2 || symmetry != "general" {
                return Err(parse_err(size_no + 1, "only general arrays are supported"));
            }
            let (rows, cols) = (dim(size[0])?, dim(size[1])?);
            let mut vals = Vec::with_capacity(rows * cols);
            for (k, l) in body {
                vals.extend(nums(k, l)?);
            }
            if vals.len() != rows * cols {
                return Err(parse_err(0, format!("expected {} values, found {}", rows * cols, vals.len())));
            }
            // Column-major on disk.
            let mut m = DenseMatrix::zeros(rows, cols);
            for (k, v) in vals.into_iter().enumerate() {
                m[(k % rows, k / rows)] = v;
            }
            if let Some(pos) = m.as_slice().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: pos / cols, col: pos % cols });
            }
            Ok(m)
        }
        other => Err(parse_err(1, format!("unsupported layout '{other}'"))),
    }
}

/// Reads a matrix file, choosing Matrix Market for `.mtx` and CSV otherwise.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    let is_mtx = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("mtx"));
    if is_mtx {
        parse_matrix_market(&text)
    } else {
        parse_csv_matrix(&text)
    }
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut buf = Vec::new();
    write_csv_matrix(m, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}
