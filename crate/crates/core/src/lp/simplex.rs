//! Two-phase dense revised simplex.
//!
//! The problem is brought into standard form `min cᵀx, Ax = b, x ≥ 0`:
//! free variables become a pair of antiparallel columns sharing storage,
//! `≤` rows get slacks, and epigraph pairs `±h − t ≤ 0` whose `t` occurs
//! nowhere else are folded into an absolute-value cost on `h`. Rows are
//! scaled to unit infinity norm and sign-flipped so that `b ≥ 0`.
//!
//! Phase 1 starts from an all-artificial basis. The basis inverse is kept
//! in "working basis" form: with `T` the rows not covered by a basic
//! artificial and `K` the basic structural columns, only `W = C[T, K]⁻¹`
//! is stored, so the dense factor grows with the number of structural
//! pivots rather than with the row count. After phase 1, artificials left
//! in the basis are pivoted out where possible and their rows dropped as
//! redundant otherwise.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;

use crate::error::{Error, Result};

use super::problem::{LpProblem, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Most negative reduced cost, switching to Bland's rule after a long
    /// run of degenerate pivots.
    Dantzig,
    /// Smallest-index entering and leaving variables throughout.
    Bland,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Feasibility and optimality tolerance on the scaled problem.
    pub tol: f64,
    pub pivot_rule: PivotRule,
    /// `None` picks a cap proportional to the problem size.
    pub max_iterations: Option<usize>,
    /// Record `(entering, leaving)` for every pivot.
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            pivot_rule: PivotRule::Dantzig,
            max_iterations: None,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl LpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration-limit",
        }
    }
}

/// One pivot: internal indices of the entering and leaving variables.
/// Artificial variables are numbered after the structural ones.
pub type PivotStep = (usize, usize);

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the original variables (zeros unless optimal).
    pub x: Vec<f64>,
    /// Unknown matrix read through the problem's var map, when optimal.
    pub h: Option<crate::densela::DenseMatrix>,
    pub objective: f64,
    /// `|cᵀx − bᵀy|` for the final basis, in original units.
    pub duality_gap: f64,
    /// Largest negative reduced cost at the final basis (0 when dual feasible).
    pub dual_infeasibility: f64,
    /// Largest constraint violation of `x` in the original problem.
    pub primal_violation: f64,
    /// Sum of artificials at the end of phase 1 (scaled units).
    pub phase1_objective: f64,
    /// Duals of the equality rows followed by the unfolded inequality rows.
    pub duals: Vec<f64>,
    pub iterations: usize,
    /// Rows found redundant after phase 1.
    pub redundant_rows: usize,
    pub trace: Vec<PivotStep>,
}

pub fn solve_lp(p: &LpProblem, tol: f64) -> Result<LpSolution> {
    solve_lp_with(
        p,
        &SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_lp_with(p: &LpProblem, opts: &SolveOptions) -> Result<LpSolution> {
    p.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::MalformedLp(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let sf = StandardForm::build(p);
    let mut sx = Simplex::new(&sf, opts);
    let outcome = sx.run()?;
    Ok(sx.finish(p, outcome))
}

#[derive(Debug, Clone, Copy)]
struct InternalVar {
    col: usize,
    sign: f64,
    cost: f64,
}

#[derive(Debug, Clone, Copy)]
enum ColOrigin {
    Original(usize),
    Slack,
}

struct StandardForm {
    /// Linearly independent rows kept for the solve.
    nrows: usize,
    /// Rows before the independence filter.
    all_rows: usize,
    ncols: usize,
    /// Column-major `nrows × ncols`, scaled and sign-adjusted.
    cols: Vec<f64>,
    b: Vec<f64>,
    /// Original row equals `row_factor[i]` times scaled row `i`.
    row_factor: Vec<f64>,
    orig_rhs: Vec<f64>,
    /// Position of each kept row among all rows.
    row_index: Vec<usize>,
    /// Largest right-hand side residual of a dropped dependent row.
    inconsistency: f64,
    /// Initial basis as (row, column) pairs over free columns.
    crash: Vec<(usize, usize)>,
    vars: Vec<InternalVar>,
    /// First internal variable of each column; free columns own two.
    col_var_start: Vec<usize>,
    /// For each original variable: its column, if not folded away.
    col_of_var: Vec<Option<usize>>,
    /// Folded epigraph variable → the variable whose magnitude it bounds.
    folded: Vec<(usize, usize)>,
}

impl StandardForm {
    fn build(p: &LpProblem) -> Self {
        let nv = p.num_vars;

        // Occurrence counts decide which epigraph variables can be folded.
        let mut occurrences = vec![0usize; nv];
        for row in p.eq_rows.iter().chain(&p.ineq_rows) {
            for &(j, _) in &row.coeffs {
                occurrences[j] += 1;
            }
        }
        // (h, t) -> [row with +h, row with -h]
        let mut pairs: std::collections::BTreeMap<(usize, usize), [Option<usize>; 2]> =
            std::collections::BTreeMap::new();
        for (r, row) in p.ineq_rows.iter().enumerate() {
            if row.rhs != 0.0 || row.coeffs.len() != 2 {
                continue;
            }
            let (a, b) = (row.coeffs[0], row.coeffs[1]);
            let (h, t) = if b.1 < 0.0 && p.kinds[b.0] == VarKind::NonNeg {
                (a, b)
            } else if a.1 < 0.0 && p.kinds[a.0] == VarKind::NonNeg {
                (b, a)
            } else {
                continue;
            };
            if h.0 == t.0 || (h.1.abs() - t.1.abs()).abs() > 1e-15 * t.1.abs() {
                continue;
            }
            let slot = if h.1 > 0.0 { 0 } else { 1 };
            pairs.entry((h.0, t.0)).or_insert([None, None])[slot] = Some(r);
        }
        let mut abs_cost = vec![0.0; nv];
        let mut folded_t = vec![false; nv];
        let mut consumed_row = vec![false; p.ineq_rows.len()];
        let mut folded = Vec::new();
        for (&(h, t), rows) in &pairs {
            let (Some(r0), Some(r1)) = (rows[0], rows[1]) else {
                continue;
            };
            if p.kinds[h] != VarKind::Free
                || folded_t[t]
                || occurrences[t] != 2
                || p.objective[t] < 0.0
                || abs_cost[h] != 0.0
            {
                continue;
            }
            folded_t[t] = true;
            abs_cost[h] = p.objective[t];
            consumed_row[r0] = true;
            consumed_row[r1] = true;
            folded.push((t, h));
        }

        let mut col_of_var = vec![None; nv];
        let mut col_origin = Vec::new();
        for j in 0..nv {
            if !folded_t[j] {
                col_of_var[j] = Some(col_origin.len());
                col_origin.push(ColOrigin::Original(j));
            }
        }
        let kept_ineq: Vec<usize> = (0..p.ineq_rows.len()).filter(|&r| !consumed_row[r]).collect();
        let slack_base = col_origin.len();
        col_origin.extend(std::iter::repeat_n(ColOrigin::Slack, kept_ineq.len()));

        let all_rows = p.eq_rows.len() + kept_ineq.len();
        let ncols = col_origin.len();
        let mut dense = vec![0.0; all_rows * ncols];
        let mut rhs = vec![0.0; all_rows];
        let rows_iter = p
            .eq_rows
            .iter()
            .map(|r| (r, None))
            .chain(kept_ineq.iter().enumerate().map(|(s, &r)| (&p.ineq_rows[r], Some(slack_base + s))));
        for (i, (row, slack)) in rows_iter.enumerate() {
            let dst = &mut dense[i * ncols..(i + 1) * ncols];
            for &(j, c) in &row.coeffs {
                let col = col_of_var[j].expect("folded variables occur only in consumed rows");
                dst[col] += c;
            }
            if let Some(s) = slack {
                dst[s] = 1.0;
            }
            rhs[i] = row.rhs;
        }

        let mut factor_all = vec![1.0; all_rows];
        for i in 0..all_rows {
            let row = &mut dense[i * ncols..(i + 1) * ncols];
            let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut factor = if scale > 0.0 { scale } else { 1.0 };
            if rhs[i] < 0.0 {
                factor = -factor;
            }
            factor_all[i] = factor;
            let inv = 1.0 / factor;
            row.iter_mut().for_each(|v| *v *= inv);
            rhs[i] *= inv;
        }

        let free: Vec<bool> = col_origin
            .iter()
            .map(|o| matches!(o, ColOrigin::Original(j) if p.kinds[*j] == VarKind::Free))
            .collect();
        let pre = presolve(&dense, &rhs, all_rows, ncols, &free);
        let kept = pre.kept;
        let nrows = kept.len();
        let mut cols = vec![0.0; nrows * ncols];
        for (k, &i) in kept.iter().enumerate() {
            for (c, &v) in dense[i * ncols..(i + 1) * ncols].iter().enumerate() {
                cols[c * nrows + k] = v;
            }
        }
        let b: Vec<f64> = kept.iter().map(|&i| rhs[i]).collect();
        let row_factor: Vec<f64> = kept.iter().map(|&i| factor_all[i]).collect();
        let orig_rhs: Vec<f64> = kept.iter().map(|&i| rhs[i] * factor_all[i]).collect();
        let crash: Vec<(usize, usize)> = pre
            .crash
            .iter()
            .map(|&(r, c)| (kept.binary_search(&r).expect("crash rows are kept"), c))
            .collect();
        let inconsistency = pre.inconsistency;

        let mut vars = Vec::new();
        let mut col_var_start = Vec::with_capacity(ncols);
        for (col, origin) in col_origin.iter().enumerate() {
            col_var_start.push(vars.len());
            match *origin {
                ColOrigin::Original(j) => match p.kinds[j] {
                    VarKind::NonNeg => vars.push(InternalVar { col, sign: 1.0, cost: p.objective[j] }),
                    VarKind::Free => {
                        vars.push(InternalVar { col, sign: 1.0, cost: p.objective[j] + abs_cost[j] });
                        vars.push(InternalVar { col, sign: -1.0, cost: -p.objective[j] + abs_cost[j] });
                    }
                },
                ColOrigin::Slack => vars.push(InternalVar { col, sign: 1.0, cost: 0.0 }),
            }
        }

        Self {
            nrows,
            all_rows,
            ncols,
            cols,
            b,
            row_factor,
            orig_rhs,
            row_index: kept,
            inconsistency,
            crash,
            vars,
            col_var_start,
            col_of_var,
            folded,
        }
    }

    #[inline]
    fn col(&self, c: usize) -> &[f64] {
        &self.cols[c * self.nrows..(c + 1) * self.nrows]
    }

    fn is_free_col(&self, c: usize) -> bool {
        let v = self.col_var_start[c];
        v + 1 < self.vars.len() && self.vars[v + 1].col == c
    }

    /// The other half of a split free variable.
    fn twin(&self, v: usize) -> Option<usize> {
        let c = self.vars[v].col;
        if !self.is_free_col(c) {
            return None;
        }
        let start = self.col_var_start[c];
        Some(if v == start { start + 1 } else { start })
    }
}

struct Presolve {
    kept: Vec<usize>,
    crash: Vec<(usize, usize)>,
    inconsistency: f64,
}

/// Full-pivoting LU over the rows that touch only free columns picks a
/// well-conditioned square block for the initial basis. The remaining such
/// rows are combinations of block rows; they are dropped, and the
/// right-hand side mismatch they leave is reported.
fn presolve(dense: &[f64], rhs: &[f64], nrows: usize, ncols: usize, free: &[bool]) -> Presolve {
    let free_cols: Vec<usize> = (0..ncols).filter(|&c| free[c]).collect();
    let pure: Vec<usize> = (0..nrows)
        .filter(|&i| dense[i * ncols..(i + 1) * ncols].iter().zip(free).all(|(&v, &f)| f || v == 0.0))
        .collect();
    let all = Presolve {
        kept: (0..nrows).collect(),
        crash: Vec::new(),
        inconsistency: 0.0,
    };
    if pure.is_empty() || free_cols.is_empty() {
        return all;
    }
    let m = Mat::<f64>::from_fn(pure.len(), free_cols.len(), |i, j| dense[pure[i] * ncols + free_cols[j]]);
    let lu = m.full_piv_lu();
    let u = lu.U();
    let diag_len = u.nrows().min(u.ncols());
    let top = if diag_len > 0 { u[(0, 0)].abs() } else { 0.0 };
    let rank = if top < CRASH_TOL {
        0
    } else {
        (0..diag_len).take_while(|&i| u[(i, i)].abs() > RANK_TOL * top).count()
    };
    let row_perm = lu.P().arrays().0;
    let col_perm = lu.Q().arrays().0;
    let t_rows: Vec<usize> = row_perm[..rank].iter().map(|&i| pure[i]).collect();
    let k_cols: Vec<usize> = col_perm[..rank].iter().map(|&j| free_cols[j]).collect();

    let mut x = Mat::<f64>::from_fn(rank, 1, |a, _| rhs[t_rows[a]]);
    if rank > 0 {
        let block = Mat::<f64>::from_fn(rank, rank, |a, b| dense[t_rows[a] * ncols + k_cols[b]]);
        block.partial_piv_lu().solve_in_place(x.as_mut());
    }

    let mut dropped = vec![false; nrows];
    for &i in &row_perm[rank..] {
        dropped[pure[i]] = true;
    }
    let mut kept = Vec::with_capacity(nrows);
    let mut inconsistency = 0.0f64;
    for i in 0..nrows {
        if !dropped[i] {
            kept.push(i);
            continue;
        }
        let row = &dense[i * ncols..(i + 1) * ncols];
        let fitted: f64 = k_cols.iter().enumerate().map(|(a, &c)| row[c] * x[(a, 0)]).sum();
        inconsistency = inconsistency.max((rhs[i] - fitted).abs());
    }
    let crash = t_rows.into_iter().zip(k_cols).collect();
    Presolve {
        kept,
        crash,
        inconsistency,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowState {
    Artificial,
    Structural,
    Dropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Debug, Clone, Copy)]
enum Leaving {
    Structural(usize),
    Artificial(usize),
}

const PIVOT_TOL: f64 = 1e-7;
const RANK_TOL: f64 = 1e-9;
const CRASH_TOL: f64 = 1e-6;
const REFRESH_INTERVAL: usize = 100;

struct Simplex<'a> {
    sf: &'a StandardForm,
    opts: &'a SolveOptions,
    t_rows: Vec<usize>,
    k_vars: Vec<usize>,
    x_k: Vec<f64>,
    w: Vec<f64>,
    cap: usize,
    row_state: Vec<RowState>,
    art_val: Vec<f64>,
    /// Artificial column of row `i` is `art_sign[i] · e_i`.
    art_sign: Vec<f64>,
    var_basic: Vec<bool>,
    col_basic: Vec<bool>,
    y: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    degenerate_run: usize,
    since_refresh: usize,
    phase1_objective: f64,
    phase1_done: bool,
    rejected: Vec<bool>,
    d: Vec<f64>,
    weights: Vec<f64>,
    redundant_rows: usize,
    trace: Vec<PivotStep>,
}

impl<'a> Simplex<'a> {
    fn new(sf: &'a StandardForm, opts: &'a SolveOptions) -> Self {
        let cap = sf.nrows.min(sf.ncols).max(1);
        let max_iterations = opts
            .max_iterations
            .unwrap_or_else(|| 10_000 + 20 * (sf.nrows + sf.vars.len()));
        Self {
            sf,
            opts,
            t_rows: Vec::new(),
            k_vars: Vec::new(),
            x_k: Vec::new(),
            w: vec![0.0; cap * cap],
            cap,
            row_state: vec![RowState::Artificial; sf.nrows],
            art_val: sf.b.clone(),
            art_sign: vec![1.0; sf.nrows],
            var_basic: vec![false; sf.vars.len()],
            col_basic: vec![false; sf.ncols],
            y: vec![0.0; sf.nrows],
            iterations: 0,
            max_iterations,
            degenerate_run: 0,
            since_refresh: 0,
            phase1_objective: 0.0,
            phase1_done: false,
            rejected: vec![false; sf.vars.len()],
            d: vec![0.0; sf.vars.len()],
            weights: vec![1.0; sf.vars.len()],
            redundant_rows: 0,
            trace: Vec::new(),
        }
    }

    fn k(&self) -> usize {
        self.k_vars.len()
    }

    fn feas_tol(&self) -> f64 {
        let bmax = self.sf.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.opts.tol * bmax.max(1.0)
    }

    fn run(&mut self) -> Result<Outcome> {
        self.crash()?;
        if self.sf.inconsistency > 1e-6 * self.sf.b.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
            return Ok(Outcome::Infeasible);
        }
        match self.iterate(Phase::One)? {
            Outcome::Optimal => {}
            other => return Ok(other),
        }
        self.phase1_objective = self.artificial_sum();
        if self.phase1_objective > self.feas_tol() {
            return Ok(Outcome::Infeasible);
        }
        self.drive_out_artificials()?;
        self.refresh(true)?;
        self.degenerate_run = 0;
        self.iterate(Phase::Two)
    }

    fn artificial_sum(&self) -> f64 {
        (0..self.sf.nrows)
            .filter(|&i| self.row_state[i] == RowState::Artificial)
            .map(|i| self.art_val[i].max(0.0))
            .sum()
    }

    /// Starts from a basis of free columns found by complete-pivoting
    /// elimination. Free basic variables may take either sign, so the basis
    /// is feasible once twins and artificial signs are chosen to match.
    fn crash(&mut self) -> Result<()> {
        let sf = self.sf;
        if sf.crash.is_empty() {
            return Ok(());
        }
        for &(r, c) in &sf.crash {
            let v = sf.col_var_start[c];
            self.t_rows.push(r);
            self.k_vars.push(v);
            self.x_k.push(0.0);
            self.row_state[r] = RowState::Structural;
            self.var_basic[v] = true;
            self.col_basic[c] = true;
        }
        if self.reinvert().is_err() {
            for &(r, _) in &sf.crash {
                self.row_state[r] = RowState::Artificial;
            }
            for &v in &self.k_vars {
                self.var_basic[v] = false;
                self.col_basic[sf.vars[v].col] = false;
            }
            self.t_rows.clear();
            self.k_vars.clear();
            self.x_k.clear();
            return Ok(());
        }
        self.recompute_values();
        let k = self.k();
        for b in 0..k {
            if self.x_k[b] < 0.0 {
                let v = self.k_vars[b];
                let twin = sf.twin(v).expect("crash columns are free");
                self.var_basic[v] = false;
                self.var_basic[twin] = true;
                self.k_vars[b] = twin;
                self.x_k[b] = -self.x_k[b];
                for w in &mut self.w[b * self.cap..b * self.cap + k] {
                    *w = -*w;
                }
            }
        }
        for i in 0..sf.nrows {
            if self.row_state[i] == RowState::Artificial && self.art_val[i] < 0.0 {
                self.art_sign[i] = -1.0;
                self.art_val[i] = -self.art_val[i];
            }
        }
        Ok(())
    }

    fn iterate(&mut self, phase: Phase) -> Result<Outcome> {
        // Phase 2 updates reduced costs from the pivot row and prices with
        // devex weights; phase 1 recomputes them every iteration.
        let incremental = phase == Phase::Two;
        let mut verified = false;
        self.weights.fill(1.0);
        self.compute_reduced_costs(phase);
        loop {
            if self.iterations >= self.max_iterations {
                return Ok(Outcome::IterationLimit);
            }
            if self.since_refresh >= REFRESH_INTERVAL {
                self.refresh(false)?;
                self.compute_reduced_costs(phase);
            } else if !incremental {
                self.compute_reduced_costs(phase);
            }
            let bland = self.opts.pivot_rule == PivotRule::Bland
                || self.degenerate_run > 10 * self.sf.nrows.max(1);
            let Some(entering) = self.price(bland) else {
                if verified || (self.since_refresh == 0 && !self.rejected.iter().any(|&r| r)) {
                    return Ok(Outcome::Optimal);
                }
                // Confirm optimality against freshly recomputed values.
                self.rejected.fill(false);
                self.refresh(true)?;
                self.compute_reduced_costs(phase);
                verified = true;
                continue;
            };
            let (u, alpha_art) = self.ftran(entering, phase);
            let Some((leaving, theta, flips)) = self.ratio_test(entering, &u, &alpha_art, bland, phase) else {
                // A descent direction with only negligible pivots is noise in
                // phase 1; in phase 2 it is unbounded if nothing blocks.
                let tiny = u.iter().any(|&v| v > 0.0 && v <= PIVOT_TOL)
                    || alpha_art.iter().any(|&(_, v)| v > 0.0 && v <= PIVOT_TOL);
                if phase == Phase::Two && !tiny {
                    return Ok(Outcome::Unbounded);
                }
                self.rejected[entering] = true;
                continue;
            };
            verified = false;
            self.rejected.fill(false);
            let Leaving::Structural(p) = leaving else {
                self.pivot(entering, leaving, theta, &u, &alpha_art, &flips);
                continue;
            };
            if incremental && flips.is_empty() {
                self.update_reduced_costs(entering, p, u[p]);
                self.pivot(entering, leaving, theta, &u, &alpha_art, &flips);
            } else {
                self.pivot(entering, leaving, theta, &u, &alpha_art, &flips);
                if incremental {
                    self.compute_reduced_costs(phase);
                }
            }
        }
    }

    fn compute_reduced_costs(&mut self, phase: Phase) {
        self.compute_duals(phase);
        let sf = self.sf;
        let mut last_col = usize::MAX;
        let mut g = 0.0;
        for v in 0..sf.vars.len() {
            let var = sf.vars[v];
            if self.col_basic[var.col] {
                self.d[v] = if self.var_basic[v] { 0.0 } else { f64::INFINITY };
                continue;
            }
            if var.col != last_col {
                g = self.column_dot_y(var.col);
                last_col = var.col;
            }
            self.d[v] = self.reduced_cost(v, g, phase);
        }
    }

    /// Updates reduced costs and devex weights for `entering` replacing the
    /// basic variable at position `p`, where `pivot = (B⁻¹a_q)_p`. Must run
    /// before `W` changes.
    fn update_reduced_costs(&mut self, entering: usize, p: usize, pivot: f64) {
        let sf = self.sf;
        let mut rho = vec![0.0; sf.nrows];
        for (a, &row) in self.t_rows.iter().enumerate() {
            rho[row] = self.w[p * self.cap + a];
        }
        let leaving = self.k_vars[p];
        let leaving_col = sf.vars[leaving].col;
        let entering_col = sf.vars[entering].col;
        let step = self.d[entering] / pivot;
        let wq = self.weights[entering];
        let mut last_col = usize::MAX;
        let mut alpha = 0.0;
        for v in 0..sf.vars.len() {
            let var = sf.vars[v];
            if var.col == entering_col {
                self.d[v] = if v == entering { 0.0 } else { f64::INFINITY };
                continue;
            }
            if self.col_basic[var.col] && var.col != leaving_col {
                continue;
            }
            if var.col != last_col {
                alpha = sf.col(var.col).iter().zip(&rho).map(|(a, r)| a * r).sum();
                last_col = var.col;
            }
            let av = var.sign * alpha;
            if var.col == leaving_col {
                let d_leaving = -step;
                self.d[v] = if v == leaving {
                    d_leaving
                } else {
                    let twin = sf.twin(v).expect("two variables share only free columns");
                    sf.vars[v].cost + sf.vars[twin].cost - d_leaving
                };
                self.weights[v] = (wq / (pivot * pivot)).max(1.0);
                continue;
            }
            self.d[v] -= step * av;
            let ratio = av / pivot;
            self.weights[v] = self.weights[v].max(ratio * ratio * wq);
        }
    }

    /// `y` solves `yᵀB = c_Bᵀ`; rows dropped as redundant get zero.
    fn compute_duals(&mut self, phase: Phase) {
        let sf = self.sf;
        let k = self.k();
        let mut r = vec![0.0; k];
        for (b, &v) in self.k_vars.iter().enumerate() {
            let var = sf.vars[v];
            let mut rb = if phase == Phase::Two { var.cost } else { 0.0 };
            if phase == Phase::One {
                let col = sf.col(var.col);
                let mut s = 0.0;
                for (i, &c) in col.iter().enumerate() {
                    if self.row_state[i] == RowState::Artificial {
                        s += self.art_sign[i] * c;
                    }
                }
                rb -= var.sign * s;
            }
            r[b] = rb;
        }
        self.y.fill(0.0);
        if phase == Phase::One {
            for i in 0..sf.nrows {
                if self.row_state[i] == RowState::Artificial {
                    self.y[i] = self.art_sign[i];
                }
            }
        }
        let mut y_t = vec![0.0; k];
        for (b, &rb) in r.iter().enumerate() {
            if rb == 0.0 {
                continue;
            }
            let wrow = &self.w[b * self.cap..b * self.cap + k];
            for (yt, &wv) in y_t.iter_mut().zip(wrow) {
                *yt += rb * wv;
            }
        }
        for (a, &row) in self.t_rows.iter().enumerate() {
            self.y[row] = y_t[a];
        }
    }

    fn reduced_cost(&self, v: usize, g: f64, phase: Phase) -> f64 {
        let var = self.sf.vars[v];
        let cost = if phase == Phase::Two { var.cost } else { 0.0 };
        cost - var.sign * g
    }

    fn column_dot_y(&self, c: usize) -> f64 {
        self.sf.col(c).iter().zip(&self.y).map(|(a, y)| a * y).sum()
    }

    fn price(&self, bland: bool) -> Option<usize> {
        let tol = self.opts.tol;
        let mut best: Option<(usize, f64)> = None;
        for (v, &d) in self.d.iter().enumerate() {
            if d >= -tol || self.rejected[v] || self.col_basic[self.sf.vars[v].col] {
                continue;
            }
            if bland {
                return Some(v);
            }
            let score = d * d / self.weights[v];
            if best.is_none_or(|(_, bs)| score > bs) {
                best = Some((v, score));
            }
        }
        best.map(|(v, _)| v)
    }

    /// Returns `u = W a_T` for the entering column `a` and `B⁻¹a` restricted
    /// to artificial rows.
    fn ftran(&self, entering: usize, phase: Phase) -> (Vec<f64>, Vec<(usize, f64)>) {
        let sf = self.sf;
        let var = sf.vars[entering];
        let a: Vec<f64> = sf.col(var.col).iter().map(|v| v * var.sign).collect();
        let k = self.k();
        let a_t: Vec<f64> = self.t_rows.iter().map(|&r| a[r]).collect();
        let mut u = vec![0.0; k];
        for (b, ub) in u.iter_mut().enumerate() {
            let wrow = &self.w[b * self.cap..b * self.cap + k];
            *ub = wrow.iter().zip(&a_t).map(|(w, x)| w * x).sum();
        }
        let mut alpha_art = Vec::new();
        if phase == Phase::One && self.row_state.iter().any(|&s| s == RowState::Artificial) {
            let mut z = vec![0.0; sf.nrows];
            for (b, &v) in self.k_vars.iter().enumerate() {
                let coef = u[b] * sf.vars[v].sign;
                if coef == 0.0 {
                    continue;
                }
                for (zi, &c) in z.iter_mut().zip(sf.col(sf.vars[v].col)) {
                    *zi += coef * c;
                }
            }
            for i in 0..sf.nrows {
                if self.row_state[i] == RowState::Artificial {
                    alpha_art.push((i, self.art_sign[i] * (a[i] - z[i])));
                }
            }
        }
        (u, alpha_art)
    }

    fn artificial_index(&self, row: usize) -> usize {
        self.sf.vars.len() + row
    }

    /// Chooses the leaving variable. Outside Bland mode a basic free
    /// variable that reaches zero switches to its twin instead of leaving
    /// while the objective keeps decreasing; those positions are returned as
    /// flips.
    fn ratio_test(
        &self,
        entering: usize,
        u: &[f64],
        alpha_art: &[(usize, f64)],
        bland: bool,
        phase: Phase,
    ) -> Option<(Leaving, f64, Vec<usize>)> {
        // (leaving, alpha, value, index for tie-breaks)
        let mut cands: Vec<(Leaving, f64, f64, usize)> = Vec::new();
        for (b, &ub) in u.iter().enumerate() {
            if ub > PIVOT_TOL {
                cands.push((Leaving::Structural(b), ub, self.x_k[b].max(0.0), self.k_vars[b]));
            }
        }
        for &(row, al) in alpha_art {
            if al > PIVOT_TOL {
                cands.push((
                    Leaving::Artificial(row),
                    al,
                    self.art_val[row].max(0.0),
                    self.artificial_index(row),
                ));
            }
        }
        if cands.is_empty() {
            return None;
        }
        if !bland {
            return self.long_step(entering, cands, phase);
        }
        if bland {
            let theta = cands.iter().map(|c| c.2 / c.1).fold(f64::INFINITY, f64::min);
            let slack = 1e-12 * (1.0 + theta);
            let pick = cands
                .iter()
                .filter(|c| c.2 / c.1 <= theta + slack)
                .min_by_key(|c| c.3)?;
            return Some((pick.0, pick.2 / pick.1, Vec::new()));
        }
        unreachable!()
    }

    fn long_step(
        &self,
        entering: usize,
        mut cands: Vec<(Leaving, f64, f64, usize)>,
        phase: Phase,
    ) -> Option<(Leaving, f64, Vec<usize>)> {
        let sf = self.sf;
        cands.sort_by(|x, y| (x.2 / x.1).total_cmp(&(y.2 / y.1)).then(x.3.cmp(&y.3)));
        let mut slope = self.d[entering];
        let mut flips = Vec::new();
        for (i, c) in cands.iter().enumerate() {
            let crossing = match c.0 {
                Leaving::Structural(b) => sf.twin(self.k_vars[b]).map(|twin| {
                    let v = self.k_vars[b];
                    if phase == Phase::Two {
                        (sf.vars[v].cost + sf.vars[twin].cost) * c.1
                    } else {
                        0.0
                    }
                }),
                Leaving::Artificial(_) => None,
            };
            if let Some(extra) = crossing {
                if slope + extra < -self.opts.tol {
                    slope += extra;
                    if let Leaving::Structural(b) = c.0 {
                        flips.push(b);
                    }
                    continue;
                }
            }
            // Among breakpoints tied with this one, pivot on the largest entry.
            let theta = c.2 / c.1;
            let window = theta + self.opts.tol / c.1;
            let mut pick = i;
            for (j, o) in cands.iter().enumerate().skip(i + 1) {
                if o.2 / o.1 > window {
                    break;
                }
                if o.1 > cands[pick].1 {
                    pick = j;
                }
            }
            if pick != i {
                // The skipped breakpoint at `i` is crossed too; it flips if free.
                if let (Leaving::Structural(b), Some(_)) = (c.0, crossing) {
                    flips.push(b);
                } else if crossing.is_none() {
                    pick = i;
                }
            }
            let p = &cands[pick];
            let theta = (p.2 / p.1).max(theta);
            if let Leaving::Structural(b) = p.0 {
                flips.retain(|&f| f != b);
            }
            return Some((p.0, theta, flips));
        }
        None
    }

    fn pivot(
        &mut self,
        entering: usize,
        leaving: Leaving,
        theta: f64,
        u: &[f64],
        alpha_art: &[(usize, f64)],
        flips: &[usize],
    ) {
        self.iterations += 1;
        self.since_refresh += 1;
        if theta <= 1e-12 {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
        for (xb, &ub) in self.x_k.iter_mut().zip(u) {
            *xb -= theta * ub;
        }
        for &(row, al) in alpha_art {
            self.art_val[row] -= theta * al;
        }
        let mut u = u.to_vec();
        let k = self.k();
        for &b in flips {
            let v = self.k_vars[b];
            let twin = self.sf.twin(v).expect("only free variables flip");
            self.var_basic[v] = false;
            self.var_basic[twin] = true;
            self.k_vars[b] = twin;
            self.x_k[b] = -self.x_k[b];
            u[b] = -u[b];
            for w in &mut self.w[b * self.cap..b * self.cap + k] {
                *w = -*w;
            }
        }
        let u = &u[..];
        let leaving_id = match leaving {
            Leaving::Structural(p) => self.k_vars[p],
            Leaving::Artificial(row) => self.artificial_index(row),
        };
        if self.opts.record_trace {
            self.trace.push((entering, leaving_id));
        }
        match leaving {
            Leaving::Structural(p) => {
                let old = self.k_vars[p];
                self.var_basic[old] = false;
                self.col_basic[self.sf.vars[old].col] = false;
                self.replace_column(p, u);
                self.k_vars[p] = entering;
                self.x_k[p] = theta;
            }
            Leaving::Artificial(row) => {
                let delta = alpha_art
                    .iter()
                    .find(|&&(r, _)| r == row)
                    .map(|&(_, al)| al * self.art_sign[row])
                    .expect("leaving artificial has a pivot entry");
                self.border(row, entering, u, delta);
                self.x_k.push(theta);
                self.art_val[row] = 0.0;
            }
        }
        self.var_basic[entering] = true;
        self.col_basic[self.sf.vars[entering].col] = true;
    }

    /// Product-form update when the structural column at position `p` leaves.
    fn replace_column(&mut self, p: usize, u: &[f64]) {
        let k = self.k();
        let cap = self.cap;
        let inv = 1.0 / u[p];
        for x in &mut self.w[p * cap..p * cap + k] {
            *x *= inv;
        }
        let prow: Vec<f64> = self.w[p * cap..p * cap + k].to_vec();
        for (b, &ub) in u.iter().enumerate() {
            if b == p || ub == 0.0 {
                continue;
            }
            let row = &mut self.w[b * cap..b * cap + k];
            for (x, &pv) in row.iter_mut().zip(&prow) {
                *x -= ub * pv;
            }
        }
    }

    /// Grows `W` by one row and column when the artificial of `row` leaves
    /// and `entering` joins the structural part.
    fn border(&mut self, row: usize, entering: usize, u: &[f64], delta: f64) {
        let sf = self.sf;
        let k = self.k();
        let cap = self.cap;
        assert!(k < cap, "working basis exceeds its capacity");
        // g = C[row, K] · W
        let mut g = vec![0.0; k];
        for (b, &v) in self.k_vars.iter().enumerate() {
            let c = sf.vars[v].sign * sf.col(sf.vars[v].col)[row];
            if c == 0.0 {
                continue;
            }
            for (gi, &wv) in g.iter_mut().zip(&self.w[b * cap..b * cap + k]) {
                *gi += c * wv;
            }
        }
        let inv = 1.0 / delta;
        for (b, &ub) in u.iter().enumerate() {
            let f = ub * inv;
            let wrow = &mut self.w[b * cap..b * cap + k + 1];
            if f != 0.0 {
                for (x, &gv) in wrow[..k].iter_mut().zip(&g) {
                    *x += f * gv;
                }
            }
            wrow[k] = -f;
        }
        let last = &mut self.w[k * cap..k * cap + k + 1];
        for (x, &gv) in last[..k].iter_mut().zip(&g) {
            *x = -gv * inv;
        }
        last[k] = inv;
        self.t_rows.push(row);
        self.k_vars.push(entering);
        self.row_state[row] = RowState::Structural;
    }

    /// Recomputes basic values from `W`; rebuilds `W` itself when `force`
    /// is set or the recomputed values leave a visible residual.
    fn refresh(&mut self, force: bool) -> Result<()> {
        self.since_refresh = 0;
        if force {
            self.reinvert()?;
            self.recompute_values();
            return Ok(());
        }
        self.recompute_values();
        if self.primal_residual() > 1e-9 * self.feas_tol() / self.opts.tol {
            self.reinvert()?;
            self.recompute_values();
        }
        Ok(())
    }

    fn recompute_values(&mut self) {
        let sf = self.sf;
        let k = self.k();
        let b_t: Vec<f64> = self.t_rows.iter().map(|&r| sf.b[r]).collect();
        for b in 0..k {
            let wrow = &self.w[b * self.cap..b * self.cap + k];
            self.x_k[b] = wrow.iter().zip(&b_t).map(|(w, x)| w * x).sum();
        }
        if self.row_state.iter().any(|&s| s == RowState::Artificial) {
            let z = self.basic_product();
            for i in 0..sf.nrows {
                if self.row_state[i] == RowState::Artificial {
                    self.art_val[i] = self.art_sign[i] * (sf.b[i] - z[i]);
                }
            }
        }
    }

    /// `C[:, K] · x_K` over all rows.
    fn basic_product(&self) -> Vec<f64> {
        let sf = self.sf;
        let mut z = vec![0.0; sf.nrows];
        for (b, &v) in self.k_vars.iter().enumerate() {
            let coef = self.x_k[b] * sf.vars[v].sign;
            if coef == 0.0 {
                continue;
            }
            for (zi, &c) in z.iter_mut().zip(sf.col(sf.vars[v].col)) {
                *zi += coef * c;
            }
        }
        z
    }

    fn primal_residual(&self) -> f64 {
        let z = self.basic_product();
        self.t_rows
            .iter()
            .map(|&r| (z[r] - self.sf.b[r]).abs())
            .fold(0.0, f64::max)
    }

    fn reinvert(&mut self) -> Result<()> {
        let sf = self.sf;
        let k = self.k();
        if k == 0 {
            return Ok(());
        }
        let cap = self.cap;
        // C[T, K]: rows follow T, columns follow K. Its inverse is indexed
        // (K, T), which is how W is stored.
        let block = Mat::<f64>::from_fn(k, k, |a, b| {
            let var = sf.vars[self.k_vars[b]];
            var.sign * sf.col(var.col)[self.t_rows[a]]
        });
        let lu = block.partial_piv_lu();
        let u = lu.U();
        let scale = (0..k).fold(0.0f64, |m, i| m.max(u[(i, i)].abs()));
        let smallest = (0..k).fold(f64::INFINITY, |m, i| m.min(u[(i, i)].abs()));
        if !(smallest > 1e-14 * scale) {
            return Err(Error::Numerical(format!("basis of size {k} became singular")));
        }
        let inv = lu.inverse();
        for b in 0..k {
            for a in 0..k {
                self.w[b * cap + a] = inv[(b, a)];
            }
        }
        Ok(())
    }

    fn drive_out_artificials(&mut self) -> Result<()> {
        let sf = self.sf;
        self.phase1_done = true;
        for row in 0..sf.nrows {
            if self.row_state[row] != RowState::Artificial {
                continue;
            }
            let k = self.k();
            let cap = self.cap;
            // g = C[row, K] · W, so that (B⁻¹a)_row = a_row − g · a_T.
            let mut g = vec![0.0; k];
            for (b, &v) in self.k_vars.iter().enumerate() {
                let c = sf.vars[v].sign * sf.col(sf.vars[v].col)[row];
                if c == 0.0 {
                    continue;
                }
                for (gi, &wv) in g.iter_mut().zip(&self.w[b * cap..b * cap + k]) {
                    *gi += c * wv;
                }
            }
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let drop_tol = 1e-7 * gmax.max(1.0);
            let mut best: Option<(usize, f64)> = None;
            for c in 0..sf.ncols {
                if self.col_basic[c] {
                    continue;
                }
                let col = sf.col(c);
                let mut alpha = col[row];
                for (a, &r) in self.t_rows.iter().enumerate() {
                    alpha -= g[a] * col[r];
                }
                if alpha.abs() > drop_tol && best.is_none_or(|(_, ba)| alpha.abs() > ba.abs()) {
                    best = Some((c, alpha));
                }
            }
            match best {
                None => {
                    self.row_state[row] = RowState::Dropped;
                    self.art_val[row] = 0.0;
                    self.redundant_rows += 1;
                }
                Some((c, alpha)) => {
                    // Enter along the direction with a positive pivot when the
                    // column is free; otherwise the only direction available.
                    let entering = (0..sf.vars.len())
                        .filter(|&v| sf.vars[v].col == c)
                        .max_by(|&v1, &v2| {
                            (sf.vars[v1].sign * alpha).total_cmp(&(sf.vars[v2].sign * alpha))
                        })
                        .expect("every column has an internal variable");
                    let sign = sf.vars[entering].sign;
                    let (u, _) = self.ftran(entering, Phase::Two);
                    self.border(row, entering, &u, sign * alpha);
                    self.x_k.push(0.0);
                    self.art_val[row] = 0.0;
                    self.var_basic[entering] = true;
                    self.col_basic[c] = true;
                    self.iterations += 1;
                    if self.opts.record_trace {
                        let art = self.artificial_index(row);
                        self.trace.push((entering, art));
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(&mut self, p: &LpProblem, outcome: Outcome) -> LpSolution {
        let sf = self.sf;
        let status = match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Infeasible => LpStatus::Infeasible,
            Outcome::Unbounded => LpStatus::Unbounded,
            Outcome::IterationLimit => LpStatus::IterationLimit,
        };
        let mut sol = LpSolution {
            status,
            x: vec![0.0; p.num_vars],
            h: None,
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::NAN,
            },
            duality_gap: f64::NAN,
            dual_infeasibility: f64::NAN,
            primal_violation: f64::NAN,
            phase1_objective: if self.phase1_done {
                self.phase1_objective
            } else {
                self.artificial_sum()
            },
            duals: Vec::new(),
            iterations: self.iterations,
            redundant_rows: self.redundant_rows + sf.all_rows - sf.nrows,
            trace: std::mem::take(&mut self.trace),
        };
        if status != LpStatus::Optimal {
            return sol;
        }

        // Internal values.
        let mut val = vec![0.0; sf.vars.len()];
        for (b, &v) in self.k_vars.iter().enumerate() {
            val[v] = self.x_k[b].max(0.0);
        }
        let mut col_val = vec![0.0; sf.ncols];
        for (v, var) in sf.vars.iter().enumerate() {
            col_val[var.col] += var.sign * val[v];
        }
        let mut x = vec![0.0; p.num_vars];
        for (j, col) in sf.col_of_var.iter().enumerate() {
            if let Some(c) = col {
                x[j] = col_val[*c];
            }
        }
        for &(t, h) in &sf.folded {
            x[t] = x[h].abs();
        }

        // Duals in original units and the resulting gap.
        self.compute_duals(Phase::Two);
        let mut duals = vec![0.0; sf.all_rows];
        let mut dual_obj = 0.0;
        for i in 0..sf.nrows {
            let d = self.y[i] / sf.row_factor[i];
            duals[sf.row_index[i]] = d;
            dual_obj += d * sf.orig_rhs[i];
        }
        let internal_obj: f64 = sf.vars.iter().zip(&val).map(|(v, x)| v.cost * x).sum();
        let mut dual_inf = 0.0f64;
        for (v, var) in sf.vars.iter().enumerate() {
            let g = self.column_dot_y(var.col);
            let d = self.reduced_cost(v, g, Phase::Two);
            dual_inf = dual_inf.max(-d);
        }

        sol.objective = p.objective_value(&x);
        sol.duality_gap = (internal_obj - dual_obj).abs();
        sol.dual_infeasibility = dual_inf.max(0.0);
        sol.primal_violation = p.max_violation(&x);
        sol.duals = duals;
        sol.h = p.var_map.as_ref().map(|vm| vm.extract(&x));
        sol.x = x;
        sol
    }
}
