use faer::{Mat, Side};

use crate::densela::DenseMatrix;
use crate::error::{Error, Result};

/// Eigenvalues (ascending) and column-major eigenvectors of a symmetric
/// `d × d` matrix given row-major.
pub(crate) fn sym_eigen(data: &[f64], d: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let m = Mat::from_fn(d, d, |i, j| data[i * d + j]);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let vals = (0..d).map(|k| s[k]).collect();
    Ok((vals, evd.U().to_owned()))
}

pub(crate) fn sym_eigenvalues(data: &[f64], d: usize) -> Result<Vec<f64>> {
    let m = Mat::from_fn(d, d, |i, j| data[i * d + j]);
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))
}

/// Clamps the negative spectrum of a symmetric row-major matrix in place.
pub(crate) fn clamp_psd(data: &mut [f64], d: usize) -> Result<()> {
    let (vals, u) = sym_eigen(data, d)?;
    if vals.first().is_none_or(|&v| v >= 0.0) {
        return Ok(());
    }
    data.iter_mut().for_each(|x| *x = 0.0);
    for (k, &lam) in vals.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        for i in 0..d {
            let ui = lam * u[(i, k)];
            for j in 0..d {
                data[i * d + j] += ui * u[(j, k)];
            }
        }
    }
    Ok(())
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn psd_project(s: &DenseMatrix) -> Result<DenseMatrix> {
    let asym = s.asymmetry()?;
    if asym > 1e-10 * s.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut sym = s.symmetrized()?;
    clamp_psd(sym.as_mut_slice(), s.rows())?;
    Ok(sym)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(s: &DenseMatrix) -> Result<f64> {
    let sym = s.symmetrized()?;
    Ok(sym_eigenvalues(sym.as_slice(), s.rows())?
        .first()
        .copied()
        .unwrap_or(0.0))
}

/// Projection onto `{(x, s) : |x| ≤ s}`.
#[inline]
pub(crate) fn abs_cone_project(x: f64, s: f64) -> (f64, f64) {
    if x.abs() <= s {
        (x, s)
    } else if x.abs() <= -s {
        (0.0, 0.0)
    } else {
        let a = 0.5 * (x.abs() + s);
        (a.copysign(x), a)
    }
}
