use std::f64::consts::SQRT_2;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use rayon::prelude::*;

use super::cone::{abs_cone_project, clamp_psd, sym_eigen, sym_eigenvalues};
use super::{build_q, SdpProblem};
use crate::densela::{norm2, DenseMatrix};
use crate::error::{Error, Result};
use crate::lp::{build_relaxed_mp_lp, solve_lp, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpParams {
    pub rho: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub alpha: f64,
    pub tol: f64,
    pub max_iterations: usize,
    /// Rebalance `rho` when one residual dominates the other.
    pub adaptive_rho: bool,
}

impl Default for SdpParams {
    fn default() -> Self {
        Self { rho: 1.0, alpha: 1.6, tol: 1e-5, max_iterations: 20_000, adaptive_rho: true }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub h: DenseMatrix,
    pub z_blocks: Vec<DenseMatrix>,
    /// `‖H‖₁`
    pub objective: f64,
    /// Relative ADMM primal residual at termination.
    pub primal_residual: f64,
    /// Relative ADMM dual residual at termination.
    pub dual_residual: f64,
    pub min_block_eig: f64,
    pub iterations: usize,
    pub converged: bool,
}

const RHO_INTERVAL: usize = 100;
const RHO_BALANCE: f64 = 10.0;
const RHO_MIN: f64 = 1e-4;
const RHO_MAX: f64 = 1e4;

/// svec position of `(a, b)`, `a ≤ b`, in a `d × d` upper triangle stored row by row.
#[inline]
fn sidx(d: usize, a: usize, b: usize) -> usize {
    a * (2 * d - a + 1) / 2 + (b - a)
}

fn unpack(sv: &[f64], d: usize, out: &mut [f64]) {
    for a in 0..d {
        out[a * d + a] = sv[sidx(d, a, a)];
        for b in a + 1..d {
            let v = sv[sidx(d, a, b)] / SQRT_2;
            out[a * d + b] = v;
            out[b * d + a] = v;
        }
    }
}

fn pack(full: &[f64], d: usize, sv: &mut [f64]) {
    for a in 0..d {
        sv[sidx(d, a, a)] = full[a * d + a];
        for b in a + 1..d {
            sv[sidx(d, a, b)] = 0.5 * (full[a * d + b] + full[b * d + a]) * SQRT_2;
        }
    }
}

struct Row {
    h: Vec<(usize, f64)>,
    z: Vec<(usize, f64)>,
    rhs: f64,
}

struct SoftRow {
    h: Vec<(usize, f64)>,
    z: Vec<(usize, f64)>,
    rhs: f64,
    inv_norm2: f64,
}

/// Euclidean projection onto `{w : rows hold}` where every row with a
/// lifted part owns its lifted coordinates exclusively. Those coordinates
/// are eliminated, leaving a small equality-constrained problem in `h`.
struct AffineProjector {
    nh: usize,
    soft: Vec<SoftRow>,
    hard: Vec<(Vec<(usize, f64)>, f64)>,
    p_inv: Mat<f64>,
    k: Mat<f64>,
    s_inv: Mat<f64>,
}

impl AffineProjector {
    fn new(nh: usize, rows: Vec<Row>) -> Result<Self> {
        let mut soft = Vec::new();
        let mut hard = Vec::new();
        for r in rows {
            if r.z.is_empty() {
                let nrm = r.h.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
                if nrm == 0.0 {
                    continue;
                }
                let coeffs = r.h.iter().map(|&(j, c)| (j, c / nrm)).collect();
                hard.push((coeffs, r.rhs / nrm));
            } else {
                let n2: f64 = r.z.iter().map(|(_, c)| c * c).sum();
                soft.push(SoftRow { h: r.h, z: r.z, rhs: r.rhs, inv_norm2: 1.0 / n2 });
            }
        }

        let mut p = Mat::<f64>::identity(nh, nh);
        for r in &soft {
            for &(a, ca) in &r.h {
                for &(b, cb) in &r.h {
                    p[(a, b)] += ca * cb * r.inv_norm2;
                }
            }
        }
        let p_inv = p
            .llt(Side::Lower)
            .map_err(|e| Error::Numerical(format!("affine projector: {e:?}")))?
            .inverse();

        let kb = |rows: &[(Vec<(usize, f64)>, f64)]| {
            let mut k = Mat::<f64>::zeros(nh, rows.len());
            for (c, (coeffs, _)) in rows.iter().enumerate() {
                for i in 0..nh {
                    k[(i, c)] = coeffs.iter().map(|&(j, v)| p_inv[(i, j)] * v).sum();
                }
            }
            k
        };
        let schur = |rows: &[(Vec<(usize, f64)>, f64)], k: &Mat<f64>| {
            Mat::<f64>::from_fn(rows.len(), rows.len(), |a, b| {
                rows[a].0.iter().map(|&(j, v)| v * k[(j, b)]).sum()
            })
        };

        let k_all = kb(&hard);
        let s_all = schur(&hard, &k_all);
        let keep = independent_rows(&s_all);
        let hard: Vec<_> = keep.into_iter().map(|i| hard[i].clone()).collect();
        let k = kb(&hard);
        let s = schur(&hard, &k);
        let s_inv = if hard.is_empty() {
            Mat::zeros(0, 0)
        } else {
            s.llt(Side::Lower)
                .map_err(|e| Error::Numerical(format!("affine projector: {e:?}")))?
                .inverse()
        };
        Ok(Self { nh, soft, hard, p_inv, k, s_inv })
    }

    fn project(&self, y: &[f64], out: &mut [f64]) {
        let nh = self.nh;
        out.copy_from_slice(y);
        let mut q = y[..nh].to_vec();
        for r in &self.soft {
            let az: f64 = r.z.iter().map(|&(j, c)| c * y[j]).sum();
            let scale = (r.rhs - az) * r.inv_norm2;
            for &(j, c) in &r.h {
                q[j] += c * scale;
            }
        }
        let mut h: Vec<f64> = (0..nh)
            .map(|i| (0..nh).map(|j| self.p_inv[(i, j)] * q[j]).sum())
            .collect();
        if !self.hard.is_empty() {
            let viol: Vec<f64> = self
                .hard
                .iter()
                .map(|(coeffs, rhs)| coeffs.iter().map(|&(j, c)| c * h[j]).sum::<f64>() - rhs)
                .collect();
            let nb = viol.len();
            let lam: Vec<f64> = (0..nb)
                .map(|a| (0..nb).map(|b| self.s_inv[(a, b)] * viol[b]).sum())
                .collect();
            for (i, hi) in h.iter_mut().enumerate() {
                *hi -= (0..nb).map(|b| self.k[(i, b)] * lam[b]).sum::<f64>();
            }
        }
        out[..nh].copy_from_slice(&h);
        for r in &self.soft {
            let az: f64 = r.z.iter().map(|&(j, c)| c * y[j]).sum();
            let gh: f64 = r.h.iter().map(|&(j, c)| c * h[j]).sum();
            let step = (r.rhs - gh - az) * r.inv_norm2;
            for &(j, c) in &r.z {
                out[j] += c * step;
            }
        }
    }
}

/// Indices of a maximal well-conditioned subset of rows of a PSD Gram
/// matrix, by diagonally pivoted Cholesky.
fn independent_rows(s: &Mat<f64>) -> Vec<usize> {
    let n = s.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| s[(i, i)]).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = Mat::<f64>::zeros(n, n);
    let first = diag.iter().cloned().fold(0.0, f64::max);
    let mut keep = Vec::new();
    for k in 0..n {
        let (piv, &best) = diag[k..]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i + k, v))
            .unwrap();
        if best <= 1e-11 * first || best <= 0.0 {
            break;
        }
        perm.swap(k, piv);
        diag.swap(k, piv);
        for c in 0..k {
            let t = l[(k, c)];
            l[(k, c)] = l[(piv, c)];
            l[(piv, c)] = t;
        }
        let lkk = best.sqrt();
        l[(k, k)] = lkk;
        for r in k + 1..n {
            let mut v = s[(perm[r], perm[k])];
            for c in 0..k {
                v -= l[(r, c)] * l[(k, c)];
            }
            l[(r, k)] = v / lkk;
            diag[r] -= l[(r, k)] * l[(r, k)];
        }
        keep.push(perm[k]);
    }
    keep.sort_unstable();
    keep
}

struct Layout {
    m: usize,
    n: usize,
    nh: usize,
    d: usize,
    s: usize,
    nblocks: usize,
}

impl Layout {
    fn block_off(&self, b: usize) -> usize {
        2 * self.nh + b * self.s
    }

    fn len(&self) -> usize {
        2 * self.nh + self.nblocks * self.s
    }
}

fn affine_rows(p: &SdpProblem, a_s: &DenseMatrix, lay: &Layout) -> Result<Vec<Row>> {
    let base = build_relaxed_mp_lp(a_s, p.props.without_sdp())?;
    let mut rows: Vec<Row> = base
        .eq_rows
        .into_iter()
        .map(|r| Row { h: r.coeffs, z: Vec::new(), rhs: r.rhs })
        .collect();
    let qbar = super::build_qbar(&build_q(a_s))?;
    let d = lay.d;
    for (b, spec) in p.blocks.iter().enumerate() {
        let off = lay.block_off(b);
        rows.push(Row { h: Vec::new(), z: vec![(off + sidx(d, 0, 0), 1.0)], rhs: 1.0 });
        for (k, (r, c)) in spec.selector(lay.m, lay.n).into_iter().enumerate() {
            rows.push(Row {
                h: vec![(r * lay.m + c, -1.0)],
                z: vec![(off + sidx(d, 0, k + 1), 1.0 / SQRT_2)],
                rhs: 0.0,
            });
        }
        let mut z = Vec::new();
        for x in 1..d {
            for y in x..d {
                let v = qbar[(x, y)];
                if v != 0.0 {
                    z.push((off + sidx(d, x, y), if x == y { v } else { SQRT_2 * v }));
                }
            }
        }
        rows.push(Row { h: vec![(spec.i * lay.m + spec.j, -2.0)], z, rhs: 0.0 });
    }
    Ok(rows)
}

fn project_cone(x: &mut [f64], lay: &Layout) -> Result<()> {
    let nh = lay.nh;
    let (ht, zs) = x.split_at_mut(2 * nh);
    let (h, t) = ht.split_at_mut(nh);
    for (hv, tv) in h.iter_mut().zip(t.iter_mut()) {
        (*hv, *tv) = abs_cone_project(*hv, *tv);
    }
    let (d, s) = (lay.d, lay.s);
    zs.par_chunks_mut(s).try_for_each_init(
        || vec![0.0; d * d],
        |full, sv| {
            unpack(sv, d, full);
            clamp_psd(full, d)?;
            pack(full, d, sv);
            Ok(())
        },
    )
}

/// Alternating projections between the affine constraint set and the
/// product of the `|h| ≤ t` cones and the block PSD cones, with
/// over-relaxation. An empty block set solves the plain LP.
pub fn solve_sdp(p: &SdpProblem, params: &SdpParams) -> Result<SdpSolution> {
    if !(params.rho > 0.0 && params.tol > 0.0 && params.alpha > 0.0 && params.alpha < 2.0) {
        return Err(Error::InvalidData(format!("invalid SDP parameters {params:?}")));
    }
    if p.blocks.is_empty() {
        return solve_as_lp(p);
    }
    let (m, n) = (p.m(), p.n());
    let fro = p.a.frobenius_norm();
    let sigma = if fro > 0.0 { fro } else { 1.0 };
    let a_s = p.a.scale(1.0 / sigma);
    let d = m + n + 1;
    let lay = Layout { m, n, nh: n * m, d, s: d * (d + 1) / 2, nblocks: p.blocks.len() };
    let proj = AffineProjector::new(lay.nh, affine_rows(p, &a_s, &lay)?)?;

    let len = lay.len();
    let nh = lay.nh;
    let (mut rho, alpha) = (params.rho, params.alpha);
    let mut v = vec![0.0; len];
    let mut u = vec![0.0; len];
    let mut w = vec![0.0; len];
    let mut y = vec![0.0; len];
    let mut v_prev = vec![0.0; len];
    let mut iterations = 0;
    let (mut rp, mut rd) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut best = (f64::INFINITY, f64::INFINITY, w.clone(), v.clone());
    while iterations < params.max_iterations {
        iterations += 1;
        for k in 0..len {
            y[k] = v[k] - u[k];
        }
        for yk in &mut y[nh..2 * nh] {
            *yk -= 1.0 / rho;
        }
        proj.project(&y, &mut w);
        v_prev.copy_from_slice(&v);
        for k in 0..len {
            v[k] = alpha * w[k] + (1.0 - alpha) * v_prev[k] + u[k];
        }
        project_cone(&mut v, &lay)?;
        for k in 0..len {
            u[k] += alpha * w[k] + (1.0 - alpha) * v_prev[k] - v[k];
        }

        let mut prim = 0.0;
        let mut dual = 0.0;
        for k in 0..len {
            prim += (w[k] - v[k]).powi(2);
            dual += (v[k] - v_prev[k]).powi(2);
        }
        let scale_p = norm2(&w).max(norm2(&v)).max(1.0);
        let scale_d = (rho * norm2(&u)).max(1.0);
        rp = prim.sqrt() / scale_p;
        rd = rho * dual.sqrt() / scale_d;
        if rp <= params.tol && rd <= params.tol {
            converged = true;
            break;
        }
        if rp.max(rd) < best.0.max(best.1) {
            best.0 = rp;
            best.1 = rd;
            best.2.copy_from_slice(&w);
            best.3.copy_from_slice(&v);
        }
        if params.adaptive_rho && iterations % RHO_INTERVAL == 0 {
            let factor = if rp > RHO_BALANCE * rd {
                2.0
            } else if rd > RHO_BALANCE * rp {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 && (RHO_MIN..=RHO_MAX).contains(&(rho * factor)) {
                rho *= factor;
                for uk in &mut u {
                    *uk /= factor;
                }
            }
        }
    }

    if !converged && best.0.is_finite() {
        (rp, rd, w, v) = best;
    }
    let h_s = DenseMatrix::new(n, m, w[..nh].to_vec())?;
    let z_blocks = repair_blocks(p, &a_s, &h_s, &v, &lay, sigma)?;
    let h = h_s.scale(1.0 / sigma);
    let mut min_block_eig = f64::INFINITY;
    for z in &z_blocks {
        let e = sym_eigenvalues(z.as_slice(), d)?;
        min_block_eig = min_block_eig.min(e[0]);
    }
    Ok(SdpSolution {
        objective: h.one_norm(),
        h,
        z_blocks,
        primal_residual: rp,
        dual_residual: rd,
        min_block_eig,
        iterations,
        converged,
    })
}

/// Rebuilds each block around the final `H` so the corner, border and
/// coupling rows hold exactly: keeps the PSD part of the iterate's Schur
/// complement and corrects the coupling along an extreme eigenvector of `Q`.
fn repair_blocks(
    p: &SdpProblem,
    a_s: &DenseMatrix,
    h_s: &DenseMatrix,
    v: &[f64],
    lay: &Layout,
    sigma: f64,
) -> Result<Vec<DenseMatrix>> {
    let d = lay.d;
    let dq = d - 1;
    let q = build_q(a_s);
    let (qvals, qvecs) = sym_eigen(q.as_slice(), dq)?;
    let (lo, hi) = (qvals[0], qvals[dq - 1]);
    let mut full = vec![0.0; d * d];
    let mut out = Vec::with_capacity(p.blocks.len());
    for (b, spec) in p.blocks.iter().enumerate() {
        let off = lay.block_off(b);
        unpack(&v[off..off + lay.s], d, &mut full);
        let x = spec.lift_vector(h_s);
        let mut schur = vec![0.0; dq * dq];
        for r in 0..dq {
            for c in 0..dq {
                schur[r * dq + c] = full[(r + 1) * d + c + 1] - x[r] * x[c];
            }
        }
        clamp_psd(&mut schur, dq)?;
        let mut inner = schur.clone();
        for r in 0..dq {
            for c in 0..dq {
                inner[r * dq + c] += x[r] * x[c];
            }
        }
        let coupled = 0.5 * (0..dq * dq).map(|k| q.as_slice()[k] * inner[k]).sum::<f64>();
        let delta = h_s[(spec.i, spec.j)] - coupled;
        let (lam, col) = if delta > 0.0 { (hi, dq - 1) } else { (lo, 0) };
        if delta != 0.0 && lam.abs() > 1e-12 && lam.signum() == delta.signum() {
            let step = 2.0 * delta / lam;
            for r in 0..dq {
                for c in 0..dq {
                    inner[r * dq + c] += step * qvecs[(r, col)] * qvecs[(c, col)];
                }
            }
        }
        let mut z = DenseMatrix::zeros(d, d);
        z[(0, 0)] = 1.0;
        for r in 0..dq {
            z[(0, r + 1)] = x[r] / sigma;
            z[(r + 1, 0)] = x[r] / sigma;
            for c in 0..dq {
                z[(r + 1, c + 1)] = inner[r * dq + c] / (sigma * sigma);
            }
        }
        out.push(z);
    }
    Ok(out)
}

fn solve_as_lp(p: &SdpProblem) -> Result<SdpSolution> {
    let sol = solve_lp(&p.base_lp, 1e-9)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "LP relaxation ended with status {}",
            sol.status.as_str()
        )));
    }
    let h = sol
        .h
        .ok_or_else(|| Error::Numerical("LP solution carries no matrix".into()))?;
    Ok(SdpSolution {
        objective: h.one_norm(),
        h,
        z_blocks: Vec::new(),
        primal_residual: sol.primal_violation,
        dual_residual: sol.dual_infeasibility,
        min_block_eig: 0.0,
        iterations: sol.iterations,
        converged: true,
    })
}
