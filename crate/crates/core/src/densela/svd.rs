//! One-sided (Hestenes) Jacobi singular value decomposition.
//!
//! Columns of a working copy of `A` (or `Aᵀ` when `A` is wide) are rotated
//! pairwise until every pair is orthogonal to a relative cosine of
//! [`JACOBI_TOL`]. The column norms are then the singular values and the
//! accumulated rotations give `V`.

use super::DenseMatrix;
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 60;
pub const JACOBI_TOL: f64 = 1e-14;

/// `A = U · diag(S) · Vᵀ` with `U` m×m, `V` n×n orthogonal and `S`
/// non-increasing of length `min(m, n)`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
    pub sweeps: usize,
}

impl SvdFactors {
    /// Rebuilds `U · diag(S) · Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = DenseMatrix::zeros(m, n);
        for (k, &sk) in self.s.iter().enumerate() {
            if sk == 0.0 {
                continue;
            }
            for i in 0..m {
                let uik = self.u[(i, k)] * sk;
                for j in 0..n {
                    out[(i, j)] += uik * self.v[(j, k)];
                }
            }
        }
        out
    }

    /// Number of singular values strictly above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.s.iter().filter(|&&s| s > tol).count()
    }

    /// Default rank cutoff `eps · max(m, n) · σ₁`.
    pub fn default_rank_tol(&self) -> f64 {
        let dim = self.u.rows().max(self.v.rows()) as f64;
        f64::EPSILON * dim * self.s.first().copied().unwrap_or(0.0)
    }
}

pub fn svd(a: &DenseMatrix) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    if m >= n {
        let (u, s, v, sweeps) = jacobi_tall(a)?;
        Ok(SvdFactors { u, s, v, sweeps })
    } else {
        let (v, s, u, sweeps) = jacobi_tall(&a.transpose())?;
        Ok(SvdFactors { u, s, v, sweeps })
    }
}

/// SVD of a tall matrix (`rows >= cols`) returning `(U, S, V, sweeps)`.
fn jacobi_tall(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix, usize)> {
    let (m, n) = a.shape();
    // Column-major working copies so that rotations touch contiguous memory.
    let mut b: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut sweeps = 0;
    let mut converged = n < 2;
    let mut max_cosine = 0.0f64;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        max_cosine = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta, gamma) = gram(&b[p], &b[q]);
                if alpha == 0.0 || beta == 0.0 || gamma == 0.0 {
                    continue;
                }
                let cosine = gamma.abs() / (alpha * beta).sqrt();
                max_cosine = max_cosine.max(cosine);
                if cosine < JACOBI_TOL {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = b.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps, max_cosine });
    }

    let norms: Vec<f64> = b.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = s.first().copied().unwrap_or(0.0);
    let null_tol = f64::EPSILON * (m.max(n) as f64) * smax;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    for &j in &order {
        if norms[j] > null_tol && norms[j] > 0.0 {
            u_cols.push(b[j].iter().map(|x| x / norms[j]).collect());
        } else {
            break;
        }
    }
    complete_orthonormal(&mut u_cols, m);

    let mut u = DenseMatrix::zeros(m, m);
    for (k, col) in u_cols.iter().enumerate() {
        for i in 0..m {
            u[(i, k)] = col[i];
        }
    }
    let mut vm = DenseMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        for i in 0..n {
            vm[(i, k)] = v[j][i];
        }
    }
    Ok((u, s, vm, sweeps))
}

fn gram(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut g = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        a += xi * xi;
        b += yi * yi;
        g += xi * yi;
    }
    (a, b, g)
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Extends an orthonormal set of length-`m` columns to a basis of ℝ^m using
/// twice-iterated Gram-Schmidt on the standard basis vectors.
fn complete_orthonormal(cols: &mut Vec<Vec<f64>>, m: usize) {
    let mut e = 0;
    while cols.len() < m && e < m {
        let mut w = vec![0.0; m];
        w[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for c in cols.iter() {
                let d: f64 = c.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, ci) in w.iter_mut().zip(c) {
                    *wi -= d * ci;
                }
            }
        }
        let nw = norm(&w);
        if nw > 1e-8 {
            cols.push(w.iter().map(|x| x / nw).collect());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orth_err(q: &DenseMatrix) -> f64 {
        let g = q.transpose().matmul(q).unwrap();
        g.sub(&DenseMatrix::identity(q.cols())).unwrap().max_abs()
    }

    #[test]
    fn identity_and_diagonal() {
        let f = svd(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(f.s, vec![1.0, 1.0]);
        assert!(orth_err(&f.u) < 1e-15 && orth_err(&f.v) < 1e-15);

        let f = svd(&DenseMatrix::from_diag(&[3.0, 0.0])).unwrap();
        assert_eq!(f.s, vec![3.0, 0.0]);
        assert!(orth_err(&f.u) < 1e-14);
    }

    #[test]
    fn rank_one_tall() {
        let u = [0.3, -1.2, 0.7];
        let v = [2.0, -0.5];
        let a = DenseMatrix::from_rows(&[
            [u[0] * v[0], u[0] * v[1]],
            [u[1] * v[0], u[1] * v[1]],
            [u[2] * v[0], u[2] * v[1]],
        ])
        .unwrap();
        let f = svd(&a).unwrap();
        let expect = (u.iter().map(|x| x * x).sum::<f64>() * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
        assert!((f.s[0] - expect).abs() < 1e-14);
        assert!(f.s[1].abs() < 1e-15);
        assert!(f.reconstruct().sub(&a).unwrap().frobenius_norm() < 1e-14);
        assert!(orth_err(&f.u) < 1e-12 && orth_err(&f.v) < 1e-12);
    }

    #[test]
    fn wide_matrix_and_zero() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]]).unwrap();
        let f = svd(&a).unwrap();
        assert_eq!((f.u.rows(), f.v.rows(), f.s.len()), (2, 3, 2));
        assert!(f.reconstruct().sub(&a).unwrap().frobenius_norm() < 1e-13);
        assert!(f.s[0] >= f.s[1]);

        let z = DenseMatrix::zeros(3, 2);
        let f = svd(&z).unwrap();
        assert_eq!(f.s, vec![0.0, 0.0]);
        assert!(orth_err(&f.u) < 1e-15);
    }
}
