//! Semidefinite relaxation of `HAH = H` by per-entry lifting.
//!
//! For each selected entry `(i, j)` of `H` the vector `x_ij` stacks row `i`
//! and column `j` of `H`, and the matrix `Z_ij = [[1, x_ijᵀ], [x_ij, 𝓗_ij]]`
//! is required to be positive semidefinite with `⟨Q̄, Z_ij⟩ / 2 = h_ij`.

mod admm;
mod cone;

use std::collections::HashSet;

pub use admm::{solve_sdp, SdpParams, SdpSolution};
pub use cone::{min_eigenvalue, psd_project};

use crate::densela::DenseMatrix;
use crate::error::{Error, Result};
use crate::lp::{build_relaxed_mp_lp, LpProblem, PropertySet};

/// One lifted block, tied to entry `(i, j)` of the `n × m` unknown `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LiftedBlockSpec {
    pub i: usize,
    pub j: usize,
    /// `m + n + 1`
    pub dim: usize,
}

impl LiftedBlockSpec {
    pub fn new(i: usize, j: usize, m: usize, n: usize) -> Self {
        Self { i, j, dim: m + n + 1 }
    }

    /// Positions in `H` of the components of `x_ij`: row `i` (length `m`)
    /// then column `j` (length `n`).
    pub fn selector(&self, m: usize, n: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..m).map(|k| (self.i, k)).collect();
        out.extend((0..n).map(|l| (l, self.j)));
        out
    }

    pub fn lift_vector(&self, h: &DenseMatrix) -> Vec<f64> {
        let (n, m) = h.shape();
        self.selector(m, n).into_iter().map(|p| h[p]).collect()
    }

    /// The rank-one lift `(1, x)(1, x)ᵀ`.
    pub fn rank_one_lift(&self, h: &DenseMatrix) -> DenseMatrix {
        let mut v = vec![1.0];
        v.extend(self.lift_vector(h));
        let d = v.len();
        let mut z = DenseMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                z[(a, b)] = v[a] * v[b];
            }
        }
        z
    }
}

/// `[[0_m, A], [Aᵀ, 0_n]]`
pub fn build_q(a: &DenseMatrix) -> DenseMatrix {
    let (m, n) = a.shape();
    let mut q = DenseMatrix::zeros(m + n, m + n);
    for i in 0..m {
        for j in 0..n {
            q[(i, m + j)] = a[(i, j)];
            q[(m + j, i)] = a[(i, j)];
        }
    }
    q
}

/// Borders `q` with a leading zero row and column.
pub fn build_qbar(q: &DenseMatrix) -> Result<DenseMatrix> {
    let asym = q.asymmetry()?;
    if asym > 0.0 {
        return Err(Error::NotSymmetric(asym));
    }
    let d = q.rows();
    let mut out = DenseMatrix::zeros(d + 1, d + 1);
    for i in 0..d {
        for j in 0..d {
            out[(i + 1, j + 1)] = q[(i, j)];
        }
    }
    Ok(out)
}

/// The relaxed LP plus a set of lifted blocks.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub a: DenseMatrix,
    pub props: PropertySet,
    pub base_lp: LpProblem,
    pub blocks: Vec<LiftedBlockSpec>,
    pub q: DenseMatrix,
    pub qbar: DenseMatrix,
}

/// Constraint violations of a candidate `(H, Z)` for an [`SdpProblem`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftCheck {
    pub base: f64,
    pub corner: f64,
    pub border: f64,
    pub coupling: f64,
    pub min_eig: f64,
}

impl LiftCheck {
    /// Largest equality violation.
    pub fn max_equality(&self) -> f64 {
        self.base.max(self.corner).max(self.border).max(self.coupling)
    }
}

/// All `(i, j)` pairs of an `n × m` unknown, row-major.
pub fn all_blocks(m: usize, n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect()
}

/// Pairs `(i, i)` for `i < min(m, n)`.
pub fn diagonal_blocks(m: usize, n: usize) -> Vec<(usize, usize)> {
    (0..m.min(n)).map(|i| (i, i)).collect()
}

/// Default block set: every pair when `m, n ≤ 8`, none otherwise.
pub fn default_blocks(m: usize, n: usize) -> Vec<(usize, usize)> {
    if m <= 8 && n <= 8 {
        all_blocks(m, n)
    } else {
        Vec::new()
    }
}

pub fn build_sdp(
    a: &DenseMatrix,
    props: PropertySet,
    block_set: &[(usize, usize)],
) -> Result<SdpProblem> {
    let (m, n) = a.shape();
    let base_lp = build_relaxed_mp_lp(a, props.without_sdp())?;
    let mut seen = HashSet::new();
    let mut blocks = Vec::with_capacity(block_set.len());
    for &(i, j) in block_set {
        if i >= n || j >= m {
            return Err(Error::InvalidBlocks(format!(
                "block ({i}, {j}) outside a {n}x{m} unknown"
            )));
        }
        if !seen.insert((i, j)) {
            return Err(Error::InvalidBlocks(format!("duplicate block ({i}, {j})")));
        }
        blocks.push(LiftedBlockSpec::new(i, j, m, n));
    }
    let q = build_q(a);
    let qbar = build_qbar(&q)?;
    Ok(SdpProblem {
        a: a.clone(),
        props: props.with_sdp(),
        base_lp,
        blocks,
        q,
        qbar,
    })
}

impl SdpProblem {
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Checks the base equalities, corner, border and coupling rows and
    /// the smallest block eigenvalue.
    pub fn check(&self, h: &DenseMatrix, z_blocks: &[DenseMatrix]) -> Result<LiftCheck> {
        let (m, n) = (self.m(), self.n());
        if h.shape() != (n, m) {
            return Err(Error::Shape { op: "SdpProblem::check", expected: (n, m), got: h.shape() });
        }
        if z_blocks.len() != self.blocks.len() {
            return Err(Error::InvalidBlocks(format!(
                "{} blocks supplied for {} specs",
                z_blocks.len(),
                self.blocks.len()
            )));
        }
        let mut x = vec![0.0; self.base_lp.num_vars];
        x[..n * m].copy_from_slice(h.as_slice());
        let base = self
            .base_lp
            .eq_rows
            .iter()
            .map(|r| (r.eval(&x) - r.rhs).abs())
            .fold(0.0, f64::max);
        let mut out = LiftCheck { base, corner: 0.0, border: 0.0, coupling: 0.0, min_eig: f64::INFINITY };
        for (spec, z) in self.blocks.iter().zip(z_blocks) {
            let d = spec.dim;
            if z.shape() != (d, d) {
                return Err(Error::Shape { op: "SdpProblem::check", expected: (d, d), got: z.shape() });
            }
            let xv = spec.lift_vector(h);
            out.corner = out.corner.max((z[(0, 0)] - 1.0).abs());
            for (k, &xk) in xv.iter().enumerate() {
                out.border = out.border.max((z[(0, k + 1)] - xk).abs()).max((z[(k + 1, 0)] - xk).abs());
            }
            let coupled = 0.5 * self.qbar.dot(z)?;
            out.coupling = out.coupling.max((coupled - h[(spec.i, spec.j)]).abs());
            out.min_eig = out.min_eig.min(min_eigenvalue(z)?);
        }
        if self.blocks.is_empty() {
            out.min_eig = 0.0;
        }
        Ok(out)
    }
}
