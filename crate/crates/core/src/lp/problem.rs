use std::fmt;

use crate::densela::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Free,
    NonNeg,
}

/// Sparse linear row `Σ coeffs[k].1 · x[coeffs[k].0]` compared against `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearRow {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, c)| c * x[j]).sum()
    }
}

/// Where the entries of an unknown matrix live in the variable vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VarMap {
    pub rows: usize,
    pub cols: usize,
    /// Variable index of entry `(i, j)`, row-major.
    pub h_index: Vec<usize>,
    /// Epigraph variable bounding `|h_ij|`, row-major.
    pub t_index: Vec<usize>,
}

impl VarMap {
    pub fn h(&self, i: usize, j: usize) -> usize {
        self.h_index[i * self.cols + j]
    }

    pub fn t(&self, i: usize, j: usize) -> usize {
        self.t_index[i * self.cols + j]
    }

    /// Reads the unknown matrix out of a full variable vector.
    pub fn extract(&self, x: &[f64]) -> DenseMatrix {
        let data = self.h_index.iter().map(|&k| x[k]).collect();
        DenseMatrix::new(self.rows, self.cols, data).unwrap_or_else(|_| {
            DenseMatrix::zeros(self.rows, self.cols)
        })
    }
}

/// A linear program `min cᵀx` over free/nonnegative variables subject to
/// equality rows and `≤` inequality rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub kinds: Vec<VarKind>,
    pub objective: Vec<f64>,
    pub eq_rows: Vec<LinearRow>,
    /// Rows read as `coeffs · x ≤ rhs`.
    pub ineq_rows: Vec<LinearRow>,
    pub var_map: Option<VarMap>,
}

impl LpProblem {
    pub fn new(kinds: Vec<VarKind>, objective: Vec<f64>) -> Self {
        Self {
            num_vars: kinds.len(),
            kinds,
            objective,
            eq_rows: Vec::new(),
            ineq_rows: Vec::new(),
            var_map: None,
        }
    }

    /// Minimum entry-wise 1-norm skeleton for an unknown `rows × cols` matrix:
    /// free `h_ij` (indices `0..rc`), nonnegative `t_ij` (indices `rc..2rc`)
    /// with unit cost, and the rows `h_ij − t_ij ≤ 0`, `−h_ij − t_ij ≤ 0`.
    pub fn one_norm_epigraph(rows: usize, cols: usize) -> Self {
        let rc = rows * cols;
        let mut kinds = vec![VarKind::Free; rc];
        kinds.extend(std::iter::repeat_n(VarKind::NonNeg, rc));
        let mut objective = vec![0.0; rc];
        objective.extend(std::iter::repeat_n(1.0, rc));
        let mut p = Self::new(kinds, objective);
        for k in 0..rc {
            p.ineq_rows.push(LinearRow::new(vec![(k, 1.0), (rc + k, -1.0)], 0.0));
            p.ineq_rows.push(LinearRow::new(vec![(k, -1.0), (rc + k, -1.0)], 0.0));
        }
        p.var_map = Some(VarMap {
            rows,
            cols,
            h_index: (0..rc).collect(),
            t_index: (rc..2 * rc).collect(),
        });
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.kinds.len() != self.num_vars || self.objective.len() != self.num_vars {
            return Err(Error::MalformedLp(format!(
                "{} variables but {} kinds and {} objective coefficients",
                self.num_vars,
                self.kinds.len(),
                self.objective.len()
            )));
        }
        for row in self.eq_rows.iter().chain(&self.ineq_rows) {
            if !row.rhs.is_finite() {
                return Err(Error::MalformedLp("non-finite right-hand side".into()));
            }
            for &(j, c) in &row.coeffs {
                if j >= self.num_vars {
                    return Err(Error::MalformedLp(format!("variable index {j} out of range")));
                }
                if !c.is_finite() {
                    return Err(Error::MalformedLp("non-finite coefficient".into()));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedLp("non-finite objective coefficient".into()));
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation over all rows and sign restrictions at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .eq_rows
            .iter()
            .map(|r| (r.eval(x) - r.rhs).abs())
            .fold(0.0, f64::max);
        let ineq = self
            .ineq_rows
            .iter()
            .map(|r| (r.eval(x) - r.rhs).max(0.0))
            .fold(0.0, f64::max);
        let sign = self
            .kinds
            .iter()
            .zip(x)
            .filter(|(k, _)| **k == VarKind::NonNeg)
            .map(|(_, v)| (-v).max(0.0))
            .fold(0.0, f64::max);
        eq.max(ineq).max(sign)
    }
}

/// Which Moore-Penrose properties a relaxed variant enforces. `p2_sdp`
/// selects the semidefinite relaxation of the quadratic property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PropertySet {
    pub p1: bool,
    pub p3: bool,
    pub p4: bool,
    pub p2_sdp: bool,
}

impl PropertySet {
    pub const P1: PropertySet = PropertySet { p1: true, p3: false, p4: false, p2_sdp: false };
    pub const P1_P3: PropertySet = PropertySet { p1: true, p3: true, p4: false, p2_sdp: false };
    pub const P1_P4: PropertySet = PropertySet { p1: true, p3: false, p4: true, p2_sdp: false };
    pub const P1_P3_P4: PropertySet = PropertySet { p1: true, p3: true, p4: true, p2_sdp: false };

    /// The four LP-only variants in table order.
    pub const LP_VARIANTS: [PropertySet; 4] = [Self::P1, Self::P1_P3, Self::P1_P4, Self::P1_P3_P4];

    pub fn with_sdp(mut self) -> Self {
        self.p2_sdp = true;
        self
    }

    pub fn without_sdp(mut self) -> Self {
        self.p2_sdp = false;
        self
    }

    /// True when every property of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &PropertySet) -> bool {
        (!self.p1 || other.p1)
            && (!self.p3 || other.p3)
            && (!self.p4 || other.p4)
            && (!self.p2_sdp || other.p2_sdp)
    }
}

impl fmt::Display for PropertySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.p1 {
            parts.push("p1");
        }
        if self.p3 {
            parts.push("p3");
        }
        if self.p4 {
            parts.push("p4");
        }
        if self.p2_sdp {
            parts.push("p2sdp");
        }
        if parts.is_empty() {
            write!(f, "none")
        } else {
            write!(f, "{}", parts.join("+"))
        }
    }
}

/// One subproblem per row of `H` for `HA = I_n`: row `i` is
/// `min ‖h_{i·}‖₁ s.t. h_{i·} A = e_iᵀ`.
pub fn build_left_inverse_lps(a: &DenseMatrix) -> Vec<LpProblem> {
    let (m, n) = a.shape();
    (0..n)
        .map(|i| {
            let mut p = LpProblem::one_norm_epigraph(1, m);
            for j in 0..n {
                let coeffs = (0..m)
                    .filter(|&k| a[(k, j)] != 0.0)
                    .map(|k| (k, a[(k, j)]))
                    .collect();
                p.eq_rows.push(LinearRow::new(coeffs, if i == j { 1.0 } else { 0.0 }));
            }
            p
        })
        .collect()
}

/// One subproblem per column of `H` for `AH = I_m`: column `j` is
/// `min ‖h_{·j}‖₁ s.t. A h_{·j} = e_j`.
pub fn build_right_inverse_lps(a: &DenseMatrix) -> Vec<LpProblem> {
    let (m, n) = a.shape();
    (0..m)
        .map(|j| {
            let mut p = LpProblem::one_norm_epigraph(n, 1);
            for i in 0..m {
                let coeffs = (0..n)
                    .filter(|&l| a[(i, l)] != 0.0)
                    .map(|l| (l, a[(i, l)]))
                    .collect();
                p.eq_rows.push(LinearRow::new(coeffs, if i == j { 1.0 } else { 0.0 }));
            }
            p
        })
        .collect()
}

/// `min ‖H‖₁` subject to `AHA = A` and, as requested, symmetry of `AH`
/// and/or `HA`. `H` is `n × m` for an `m × n` input.
pub fn build_relaxed_mp_lp(a: &DenseMatrix, props: PropertySet) -> Result<LpProblem> {
    if !props.p1 {
        return Err(Error::InvalidProperties(
            "relaxed variants must enforce P1 (otherwise H = 0 is optimal)".into(),
        ));
    }
    let (m, n) = a.shape();
    let mut p = LpProblem::one_norm_epigraph(n, m);
    let h = |k: usize, l: usize| k * m + l;

    // (AHA)_ij = Σ_kl A_ik h_kl A_lj
    for i in 0..m {
        for j in 0..n {
            let mut coeffs = Vec::new();
            for k in 0..n {
                let aik = a[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for l in 0..m {
                    let c = aik * a[(l, j)];
                    if c != 0.0 {
                        coeffs.push((h(k, l), c));
                    }
                }
            }
            p.eq_rows.push(LinearRow::new(coeffs, a[(i, j)]));
        }
    }
    // (AH)_ik = (AH)_ki for i < k, with (AH)_ik = Σ_l A_il h_lk
    if props.p3 {
        for i in 0..m {
            for k in i + 1..m {
                let mut coeffs = Vec::new();
                for l in 0..n {
                    if a[(i, l)] != 0.0 {
                        coeffs.push((h(l, k), a[(i, l)]));
                    }
                    if a[(k, l)] != 0.0 {
                        coeffs.push((h(l, i), -a[(k, l)]));
                    }
                }
                p.eq_rows.push(LinearRow::new(coeffs, 0.0));
            }
        }
    }
    // (HA)_jl = (HA)_lj for j < l, with (HA)_jl = Σ_k h_jk A_kl
    if props.p4 {
        for j in 0..n {
            for l in j + 1..n {
                let mut coeffs = Vec::new();
                for k in 0..m {
                    if a[(k, l)] != 0.0 {
                        coeffs.push((h(j, k), a[(k, l)]));
                    }
                    if a[(k, j)] != 0.0 {
                        coeffs.push((h(l, k), -a[(k, j)]));
                    }
                }
                p.eq_rows.push(LinearRow::new(coeffs, 0.0));
            }
        }
    }
    Ok(p)
}
