//! Random low-rank instances, sparsity/quality metrics and the
//! sparsity-versus-quality table.

mod format;

use rand::{Rng, SeedableRng};
use rand_xorshift::XorShiftRng;
use rayon::prelude::*;
use serde::Serialize;

pub use format::{fmt_g, write_table_csv, CSV_HEADER};

use crate::densela::{norm2, pinv_from_svd, svd, DenseMatrix, DEFAULT_ZERO_TOL};
use crate::error::{Error, Result};
use crate::pseudo::{compute, ComputeOptions, PinvStatus, Variant};

/// Below this a metric denominator is treated as zero.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// A numerator this small over a vanishing denominator counts as a ratio of 1.
pub const NEGLIGIBLE_NUMERATOR: f64 = 1e-8;
/// Give up after this many rank-deficient draws.
pub const MAX_REDRAWS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub r: usize,
    pub seed: u64,
    pub scale: f64,
}

impl InstanceSpec {
    pub fn new(n: usize, r: usize, seed: u64) -> Self {
        Self { n, r, seed, scale: 0.01 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.n {
            return Err(Error::InvalidInstance(format!("rank {} outside 1..={}", self.r, self.n)));
        }
        if !self.scale.is_finite() || self.scale == 0.0 {
            return Err(Error::InvalidInstance(format!("bad scale {}", self.scale)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub a: DenseMatrix,
    /// Rank-deficient draws discarded before this one.
    pub redraws: u32,
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a parent seed and labels.
pub fn sub_seed(parent: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix64(parent), |acc, &l| mix64(acc ^ mix64(l)))
}

const ROLE_U: u64 = 1;
const ROLE_V: u64 = 2;

fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = XorShiftRng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::new(rows, cols, data).expect("finite uniform draws")
}

/// `scale · U · V` with `U` n×r and `V` r×n drawn iid uniform on (−1, 1).
/// Draws whose numerical rank is not exactly `r` are replaced.
pub fn generate_instance(spec: InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let (n, r) = (spec.n, spec.r);
    for attempt in 0..=MAX_REDRAWS {
        let a_attempt = attempt as u64;
        let u = uniform_matrix(n, r, sub_seed(spec.seed, &[n as u64, r as u64, ROLE_U, a_attempt]));
        let v = uniform_matrix(r, n, sub_seed(spec.seed, &[n as u64, r as u64, ROLE_V, a_attempt]));
        let a = u.matmul(&v)?.scale(spec.scale);
        let f = svd(&a)?;
        let tol = f.default_rank_tol();
        let head_ok = f.s[r - 1] > 1e3 * tol;
        let tail_ok = f.s[r..].iter().all(|&s| s <= tol);
        if head_ok && tail_ok {
            return Ok(Instance { spec, a, redraws: attempt });
        }
    }
    Err(Error::InvalidInstance(format!(
        "no rank-{r} draw in {MAX_REDRAWS} attempts"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRecord {
    /// `‖H‖₁ / ‖A⁺‖₁`
    pub one_norm_ratio: f64,
    /// `nnz(H) / nnz(A⁺)`
    pub sparsity_ratio: f64,
    /// `‖AHb − b‖₂ / ‖AA⁺b − b‖₂`
    pub lsr: f64,
    /// `‖HA·1‖₂ / ‖A⁺A·1‖₂`
    pub two_norm_ratio: f64,
    pub apinv_one_norm: f64,
    pub nnz_h: usize,
    pub nnz_apinv: usize,
    /// A ratio had a vanishing denominator with a nonzero numerator.
    pub flagged: bool,
}

fn ratio(num: f64, den: f64, flagged: &mut bool) -> f64 {
    if den < DEGENERATE_TOL {
        if num < NEGLIGIBLE_NUMERATOR {
            return 1.0;
        }
        *flagged = true;
        return f64::INFINITY;
    }
    num / den
}

pub fn metrics(a: &DenseMatrix, apinv: &DenseMatrix, h: &DenseMatrix, zero_tol: f64) -> Result<MetricsRecord> {
    metrics_with_rhs(a, apinv, h, zero_tol, &vec![1.0; a.rows()])
}

/// [`metrics`] with an explicit right-hand side for the least-squares ratio.
pub fn metrics_with_rhs(
    a: &DenseMatrix,
    apinv: &DenseMatrix,
    h: &DenseMatrix,
    zero_tol: f64,
    b: &[f64],
) -> Result<MetricsRecord> {
    let (m, n) = a.shape();
    for (mat, name) in [(apinv, "metrics(A+)"), (h, "metrics(H)")] {
        if mat.shape() != (n, m) {
            return Err(Error::Shape { op: name, expected: (n, m), got: mat.shape() });
        }
    }
    if b.len() != m {
        return Err(Error::Shape { op: "metrics(b)", expected: (m, 1), got: (b.len(), 1) });
    }
    let mut flagged = false;
    let apinv_one_norm = apinv.one_norm();
    let one_norm_ratio = ratio(h.one_norm(), apinv_one_norm, &mut flagged);
    let nnz_h = h.nnz(zero_tol);
    let nnz_apinv = apinv.nnz(zero_tol);
    let sparsity_ratio = ratio(nnz_h as f64, nnz_apinv as f64, &mut flagged);

    let resid = |p: &DenseMatrix| -> Result<f64> {
        let ab = a.mul_vec(&p.mul_vec(b)?)?;
        Ok(norm2(&ab.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()))
    };
    let lsr = ratio(resid(h)?, resid(apinv)?, &mut flagged);

    let ones = vec![1.0; n];
    let a1 = a.mul_vec(&ones)?;
    let two_norm_ratio = ratio(norm2(&h.mul_vec(&a1)?), norm2(&apinv.mul_vec(&a1)?), &mut flagged);
    Ok(MetricsRecord {
        one_norm_ratio,
        sparsity_ratio,
        lsr,
        two_norm_ratio,
        apinv_one_norm,
        nnz_h,
        nnz_apinv,
        flagged,
    })
}

/// Fraction of entries of `m` with magnitude above `tol`.
pub fn density(m: &DenseMatrix, tol: f64) -> f64 {
    m.nnz(tol) as f64 / (m.rows() * m.cols()) as f64
}

#[derive(Debug, Clone)]
pub struct TableConfig {
    pub n: usize,
    pub ranks: Vec<usize>,
    /// Instances per rank.
    pub seeds: usize,
    pub base_seed: u64,
    pub variants: Vec<Variant>,
    pub zero_tol: f64,
    pub scale: f64,
    /// Right-hand side for the least-squares ratio; all ones when `None`.
    pub rhs: Option<Vec<f64>>,
    pub options: ComputeOptions,
}

impl TableConfig {
    pub fn new(n: usize, ranks: Vec<usize>, seeds: usize, variants: Vec<Variant>) -> Self {
        Self {
            n,
            ranks,
            seeds,
            base_seed: 0,
            variants,
            zero_tol: DEFAULT_ZERO_TOL,
            scale: 0.01,
            rhs: None,
            options: ComputeOptions::default(),
        }
    }

    /// Seed of instance `k` at rank `r`.
    pub fn instance_seed(&self, r: usize, k: usize) -> u64 {
        sub_seed(self.base_seed, &[r as u64, k as u64])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceRecord {
    pub r: usize,
    pub instance: usize,
    pub seed: u64,
    pub redraws: u32,
    pub apinv_one_norm: f64,
    /// Share of `A⁺` entries above 0.1 in magnitude.
    pub apinv_density_0_1: f64,
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub r: usize,
    pub instance: usize,
    pub apinv_one_norm: f64,
    pub variant: String,
    pub metrics: Option<MetricsRecord>,
    /// `optimal`, `infeasible`, `not-converged`, `flagged` or `error: …`.
    pub status: String,
    pub h: Option<DenseMatrix>,
    pub duality_gap: f64,
    pub timing_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TableOutput {
    pub rows: Vec<TableRow>,
    pub instances: Vec<InstanceRecord>,
}

fn cell(inst: &Instance, apinv: &DenseMatrix, cfg: &TableConfig, v: &Variant, k: usize) -> TableRow {
    let mut row = TableRow {
        r: inst.spec.r,
        instance: k,
        apinv_one_norm: apinv.one_norm(),
        variant: v.to_string(),
        metrics: None,
        status: String::new(),
        h: None,
        duality_gap: f64::NAN,
        timing_ms: f64::NAN,
    };
    let res = match compute(&inst.a, v, &cfg.options) {
        Ok(res) => res,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    row.duality_gap = res.duality_gap;
    row.timing_ms = res.timing_ms;
    row.status = res.status.to_string();
    if res.status == PinvStatus::Infeasible {
        return row;
    }
    let b = cfg.rhs.clone().unwrap_or_else(|| vec![1.0; inst.a.rows()]);
    match metrics_with_rhs(&inst.a, apinv, &res.h, cfg.zero_tol, &b) {
        Ok(m) => {
            if m.flagged && res.status == PinvStatus::Optimal {
                row.status = "flagged".into();
            }
            row.metrics = Some(m);
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row.h = Some(res.h);
    row
}

/// Runs every variant on `seeds` instances per rank. Rows come out ordered
/// by rank, then instance, then variant, independent of scheduling.
pub fn run_table(cfg: &TableConfig) -> Result<TableOutput> {
    if cfg.ranks.is_empty() || cfg.seeds == 0 || cfg.variants.is_empty() {
        return Err(Error::InvalidInstance("empty rank, seed or variant list".into()));
    }
    let jobs: Vec<(usize, usize)> = cfg
        .ranks
        .iter()
        .flat_map(|&r| (0..cfg.seeds).map(move |k| (r, k)))
        .collect();
    let results: Vec<(InstanceRecord, Vec<TableRow>)> = jobs
        .par_iter()
        .map(|&(r, k)| -> Result<_> {
            let spec = InstanceSpec { n: cfg.n, r, seed: cfg.instance_seed(r, k), scale: cfg.scale };
            let inst = generate_instance(spec)?;
            let apinv = pinv_from_svd(&svd(&inst.a)?, None);
            let rows = cfg.variants.iter().map(|v| cell(&inst, &apinv, cfg, v, k)).collect();
            let rec = InstanceRecord {
                r,
                instance: k,
                seed: spec.seed,
                redraws: inst.redraws,
                apinv_one_norm: apinv.one_norm(),
                apinv_density_0_1: density(&apinv, 0.1),
            };
            Ok((rec, rows))
        })
        .collect::<Result<_>>()?;
    let mut out = TableOutput { rows: Vec::new(), instances: Vec::new() };
    for (rec, rows) in results {
        out.instances.push(rec);
        out.rows.extend(rows);
    }
    Ok(out)
}
