//! Named sparse pseudoinverse variants and property verification.

mod variant;

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

pub use variant::{BlockSpec, Variant, VariantKind};

use crate::densela::{mp_pinv, mp_residuals, DenseMatrix, PropertyResiduals};
use crate::error::{Error, Result};
use crate::lp::{
    build_left_inverse_lps, build_relaxed_mp_lp, build_right_inverse_lps, solve_lp_with, LpProblem,
    LpSolution, LpStatus, SolveOptions,
};
use crate::sdp::{build_sdp, solve_sdp, SdpParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Lp,
    Sdp,
    Svd,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Lp => "lp",
            SolverKind::Sdp => "sdp",
            SolverKind::Svd => "svd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinvStatus {
    Optimal,
    Infeasible,
    /// Iteration cap reached; `h` is the last iterate.
    NotConverged,
}

impl fmt::Display for PinvStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PinvStatus::Optimal => "optimal",
            PinvStatus::Infeasible => "infeasible",
            PinvStatus::NotConverged => "not-converged",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ComputeOptions {
    pub lp: SolveOptions,
    pub sdp: SdpParams,
    /// Rank cutoff for the SVD pseudoinverse; `None` uses the default.
    pub rank_tol: Option<f64>,
}

impl Default for ComputeOptions {
    fn default() -> Self {
        Self { lp: SolveOptions::default(), sdp: SdpParams::default(), rank_tol: None }
    }
}

#[derive(Debug, Clone)]
pub struct PinvResult {
    pub h: DenseMatrix,
    /// `‖H‖₁`; NaN when infeasible.
    pub objective: f64,
    pub residuals: PropertyResiduals,
    pub solver: SolverKind,
    pub status: PinvStatus,
    pub timing_ms: f64,
    /// Simplex pivots or ADMM iterations, summed over subproblems.
    pub iterations: usize,
    /// Largest LP duality gap over the solved subproblems.
    pub duality_gap: f64,
    /// Set for lifted solves.
    pub sdp: Option<SdpDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpDiagnostics {
    pub blocks: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub min_block_eig: f64,
}

pub fn compute(a: &DenseMatrix, v: &Variant, opts: &ComputeOptions) -> Result<PinvResult> {
    let start = Instant::now();
    let (m, n) = a.shape();
    let mut out = match v.kind {
        VariantKind::Mp => {
            let h = mp_pinv(a, opts.rank_tol)?;
            finished(a, h, SolverKind::Svd, PinvStatus::Optimal)?
        }
        VariantKind::Left => {
            let sols = solve_all(&build_left_inverse_lps(a), &opts.lp)?;
            assemble(a, &sols, n, m, |h, k, sol| {
                for (j, &x) in sol.iter().enumerate() {
                    h[(k, j)] = x;
                }
            })?
        }
        VariantKind::Right => {
            let sols = solve_all(&build_right_inverse_lps(a), &opts.lp)?;
            assemble(a, &sols, n, m, |h, k, sol| {
                for (i, &x) in sol.iter().enumerate() {
                    h[(i, k)] = x;
                }
            })?
        }
        VariantKind::Relaxed if v.props.p2_sdp => {
            let blocks = v.blocks.resolve(m, n);
            let p = build_sdp(a, v.props, &blocks)?;
            if blocks.is_empty() {
                let sols = solve_all(std::slice::from_ref(&p.base_lp), &opts.lp)?;
                relaxed_from_lp(a, &sols[0])?
            } else {
                let sol = solve_sdp(&p, &opts.sdp)?;
                let status = if sol.converged { PinvStatus::Optimal } else { PinvStatus::NotConverged };
                let mut r = finished(a, sol.h, SolverKind::Sdp, status)?;
                r.iterations = sol.iterations;
                r.sdp = Some(SdpDiagnostics {
                    blocks: blocks.len(),
                    primal_residual: sol.primal_residual,
                    dual_residual: sol.dual_residual,
                    min_block_eig: sol.min_block_eig,
                });
                r
            }
        }
        VariantKind::Relaxed => {
            let p = build_relaxed_mp_lp(a, v.props)?;
            let sols = solve_all(std::slice::from_ref(&p), &opts.lp)?;
            relaxed_from_lp(a, &sols[0])?
        }
    };
    out.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(out)
}

fn solve_all(problems: &[LpProblem], opts: &SolveOptions) -> Result<Vec<LpSolution>> {
    problems.par_iter().map(|p| solve_lp_with(p, opts)).collect()
}

fn lp_status(sols: &[LpSolution]) -> Result<PinvStatus> {
    if sols.iter().any(|s| s.status == LpStatus::Infeasible) {
        return Ok(PinvStatus::Infeasible);
    }
    if sols.iter().any(|s| s.status == LpStatus::IterationLimit) {
        return Ok(PinvStatus::NotConverged);
    }
    if let Some(s) = sols.iter().find(|s| s.status != LpStatus::Optimal) {
        return Err(Error::Numerical(format!("LP ended with status {}", s.status.as_str())));
    }
    Ok(PinvStatus::Optimal)
}

fn finished(a: &DenseMatrix, h: DenseMatrix, solver: SolverKind, status: PinvStatus) -> Result<PinvResult> {
    let residuals = mp_residuals(a, &h)?;
    let objective = if status == PinvStatus::Infeasible { f64::NAN } else { h.one_norm() };
    Ok(PinvResult {
        h,
        objective,
        residuals,
        solver,
        status,
        timing_ms: 0.0,
        iterations: 0,
        duality_gap: 0.0,
        sdp: None,
    })
}

fn relaxed_from_lp(a: &DenseMatrix, sol: &LpSolution) -> Result<PinvResult> {
    let status = lp_status(std::slice::from_ref(sol))?;
    let (m, n) = a.shape();
    let h = match (&sol.h, status) {
        (Some(h), PinvStatus::Optimal) => h.clone(),
        _ => DenseMatrix::zeros(n, m),
    };
    let mut r = finished(a, h, SolverKind::Lp, status)?;
    r.iterations = sol.iterations;
    r.duality_gap = sol.duality_gap;
    Ok(r)
}

fn assemble(
    a: &DenseMatrix,
    sols: &[LpSolution],
    n: usize,
    m: usize,
    place: impl Fn(&mut DenseMatrix, usize, &[f64]),
) -> Result<PinvResult> {
    let status = lp_status(sols)?;
    let mut h = DenseMatrix::zeros(n, m);
    if status == PinvStatus::Optimal {
        for (k, s) in sols.iter().enumerate() {
            let part = s
                .h
                .as_ref()
                .ok_or_else(|| Error::Numerical("LP solution carries no matrix".into()))?;
            place(&mut h, k, part.as_slice());
        }
    }
    let mut r = finished(a, h, SolverKind::Lp, status)?;
    r.iterations = sols.iter().map(|s| s.iterations).sum();
    r.duality_gap = sols.iter().map(|s| s.duality_gap).fold(0.0, f64::max);
    Ok(r)
}

/// Which Moore-Penrose properties and identities a candidate satisfies.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub residuals: PropertyResiduals,
    /// Threshold the residuals were compared against.
    pub threshold: f64,
    pub p1: bool,
    pub p2: bool,
    pub p3: bool,
    pub p4: bool,
    /// `HA = I`
    pub left_inverse: bool,
    /// `AH = I`
    pub right_inverse: bool,
    /// `AH = AA⁺`
    pub ah_is_projector: bool,
    /// `HA = A⁺A`
    pub ha_is_projector: bool,
    pub ah_gap: f64,
    pub ha_gap: f64,
}

impl VerifyReport {
    pub fn all_properties(&self) -> bool {
        self.p1 && self.p2 && self.p3 && self.p4
    }
}

/// Compares each residual against `tol · max(1, ‖A‖_F, ‖H‖_F)`.
pub fn verify(a: &DenseMatrix, h: &DenseMatrix, tol: f64) -> Result<VerifyReport> {
    let residuals = mp_residuals(a, h)?;
    let threshold = tol * 1f64.max(a.frobenius_norm()).max(h.frobenius_norm());
    let ap = mp_pinv(a, None)?;
    let ah = a.matmul(h)?;
    let ha = h.matmul(a)?;
    let (m, n) = a.shape();
    let left_gap = ha.sub(&DenseMatrix::identity(n))?.frobenius_norm();
    let right_gap = ah.sub(&DenseMatrix::identity(m))?.frobenius_norm();
    let ah_gap = ah.sub(&a.matmul(&ap)?)?.frobenius_norm();
    let ha_gap = ha.sub(&ap.matmul(a)?)?.frobenius_norm();
    Ok(VerifyReport {
        p1: residuals.p1 <= threshold,
        p2: residuals.p2 <= threshold,
        p3: residuals.p3 <= threshold,
        p4: residuals.p4 <= threshold,
        left_inverse: left_gap <= threshold,
        right_inverse: right_gap <= threshold,
        ah_is_projector: ah_gap <= threshold,
        ha_is_projector: ha_gap <= threshold,
        residuals,
        threshold,
        ah_gap,
        ha_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::PropertySet;

    fn j2() -> DenseMatrix {
        DenseMatrix::filled(2, 2, 1.0)
    }

    #[test]
    fn identity_every_variant() {
        let i3 = DenseMatrix::identity(3);
        for v in Variant::relaxed_family().into_iter().chain([Variant::left(), Variant::right(), Variant::mp()]) {
            let r = compute(&i3, &v, &ComputeOptions::default()).unwrap();
            assert_eq!(r.status, PinvStatus::Optimal, "{v}");
            assert!(r.h.sub(&i3).unwrap().max_abs() < 1e-9, "{v}");
            assert!((r.objective - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn left_of_rank_deficient_is_infeasible() {
        let r = compute(&j2(), &Variant::left(), &ComputeOptions::default()).unwrap();
        assert_eq!(r.status, PinvStatus::Infeasible);
        assert!(r.objective.is_nan());
        let r = compute(&j2(), &Variant::right(), &ComputeOptions::default()).unwrap();
        assert_eq!(r.status, PinvStatus::Infeasible);
    }

    #[test]
    fn verify_examples() {
        let h = DenseMatrix::from_rows(&[[0.5, 0.5], [0.0, 0.0]]).unwrap();
        let rep = verify(&j2(), &h, 1e-9).unwrap();
        assert!(rep.p1 && rep.p3 && !rep.p4 && rep.ah_is_projector && !rep.ha_is_projector);
        let i2 = DenseMatrix::identity(2);
        let rep = verify(&i2, &i2, 1e-12).unwrap();
        assert!(rep.all_properties() && rep.left_inverse && rep.right_inverse);
        assert!(verify(&i2, &DenseMatrix::zeros(3, 2), 1e-9).is_err());
    }

    #[test]
    fn relaxed_objective_matches_norm() {
        let r = compute(&j2(), &Variant::relaxed(PropertySet::P1_P3_P4), &ComputeOptions::default()).unwrap();
        assert!((r.objective - 1.0).abs() < 1e-9);
        assert_eq!(r.objective, r.h.one_norm());
    }
}
