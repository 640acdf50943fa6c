//! Dense real linear algebra: the matrix type, Jacobi SVD, the Moore-Penrose
//! pseudoinverse and the four Moore-Penrose property residuals.

mod lu;
mod matrix;
mod svd;

pub use lu::{inverse, invert_in_place};
pub use matrix::DenseMatrix;
pub use svd::{svd, SvdFactors, JACOBI_TOL, MAX_SWEEPS};

use crate::error::{Error, Result};

/// Default zero tolerance used when counting nonzeros.
pub const DEFAULT_ZERO_TOL: f64 = 1e-5;

/// Frobenius residuals of the four Moore-Penrose equations for a candidate `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyResiduals {
    /// `‖AHA − A‖_F`
    pub p1: f64,
    /// `‖HAH − H‖_F`
    pub p2: f64,
    /// `‖(AH)ᵀ − AH‖_F`
    pub p3: f64,
    /// `‖(HA)ᵀ − HA‖_F`
    pub p4: f64,
}

impl PropertyResiduals {
    pub fn max(&self) -> f64 {
        self.p1.max(self.p2).max(self.p3).max(self.p4)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }
}

/// Moore-Penrose pseudoinverse `V Σ⁺ Uᵀ`. Singular values at or below
/// `rank_tol` are treated as zero; `None` selects `eps · max(m, n) · σ₁`.
pub fn mp_pinv(a: &DenseMatrix, rank_tol: Option<f64>) -> Result<DenseMatrix> {
    let f = svd(a)?;
    Ok(pinv_from_svd(&f, rank_tol))
}

pub fn pinv_from_svd(f: &SvdFactors, rank_tol: Option<f64>) -> DenseMatrix {
    let tol = rank_tol.unwrap_or_else(|| f.default_rank_tol());
    let (m, n) = (f.u.rows(), f.v.rows());
    let mut out = DenseMatrix::zeros(n, m);
    for (k, &sk) in f.s.iter().enumerate() {
        if sk <= tol || sk == 0.0 {
            continue;
        }
        let inv = 1.0 / sk;
        for i in 0..n {
            let vik = f.v[(i, k)] * inv;
            if vik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += vik * f.u[(j, k)];
            }
        }
    }
    out
}

pub fn mp_residuals(a: &DenseMatrix, h: &DenseMatrix) -> Result<PropertyResiduals> {
    let (m, n) = a.shape();
    if h.shape() != (n, m) {
        return Err(Error::Shape {
            op: "mp_residuals",
            expected: (n, m),
            got: h.shape(),
        });
    }
    let ah = a.matmul(h)?;
    let ha = h.matmul(a)?;
    let p1 = ah.matmul(a)?.sub(a)?.frobenius_norm();
    let p2 = ha.matmul(h)?.sub(h)?.frobenius_norm();
    let p3 = ah.asymmetry()?;
    let p4 = ha.asymmetry()?;
    Ok(PropertyResiduals { p1, p2, p3, p4 })
}

pub fn one_norm(m: &DenseMatrix) -> f64 {
    m.one_norm()
}

pub fn nnz(m: &DenseMatrix, zero_tol: f64) -> usize {
    m.nnz(zero_tol)
}

/// Euclidean norm of a vector.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
