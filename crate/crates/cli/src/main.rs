use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sparse_pinv::bench::{run_table, write_table_csv, TableConfig};
use sparse_pinv::densela::{DenseMatrix, DEFAULT_ZERO_TOL};
use sparse_pinv::io::{read_matrix, write_matrix};
use sparse_pinv::lp::{PivotRule, SolveOptions};
use sparse_pinv::pseudo::{compute, verify, ComputeOptions, PinvStatus, Variant};
use sparse_pinv::sdp::SdpParams;

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

const THREADS_ENV: &str = "SPARSE_PINV_THREADS";

#[derive(Parser)]
#[command(name = "sparse-pinv", version, about = "Sparse pseudoinverses by 1-norm minimization")]
struct Cli {
    /// Worker threads (default: $SPARSE_PINV_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a sparse pseudoinverse of a matrix file.
    Pinv(PinvArgs),
    /// Check which Moore-Penrose properties a candidate satisfies.
    Verify(VerifyArgs),
    /// Run the random low-rank benchmark table.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Pivot {
    Dantzig,
    Bland,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// LP feasibility/optimality tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value = "dantzig")]
    pivot: Pivot,
    /// Simplex iteration cap (default grows with problem size).
    #[arg(long)]
    max_iterations: Option<usize>,
    /// SVD rank cutoff for the Moore-Penrose pseudoinverse.
    #[arg(long)]
    rank_tol: Option<f64>,
    /// ADMM stopping tolerance.
    #[arg(long, default_value_t = 1e-5)]
    sdp_tol: f64,
    #[arg(long, default_value_t = 20_000)]
    sdp_max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    sdp_rho: f64,
    #[arg(long, default_value_t = 1.6)]
    sdp_alpha: f64,
    /// Keep the ADMM step size fixed at --sdp-rho.
    #[arg(long)]
    sdp_fixed_rho: bool,
}

impl SolverArgs {
    fn options(&self) -> Result<ComputeOptions> {
        if !(self.tol > 0.0) {
            bail!("--tol must be positive");
        }
        Ok(ComputeOptions {
            lp: SolveOptions {
                tol: self.tol,
                pivot_rule: match self.pivot {
                    Pivot::Dantzig => PivotRule::Dantzig,
                    Pivot::Bland => PivotRule::Bland,
                },
                max_iterations: self.max_iterations,
                record_trace: false,
            },
            sdp: SdpParams {
                rho: self.sdp_rho,
                alpha: self.sdp_alpha,
                tol: self.sdp_tol,
                max_iterations: self.sdp_max_iter,
                adaptive_rho: !self.sdp_fixed_rho,
            },
            rank_tol: self.rank_tol,
        })
    }

    fn echo(&self) -> serde_json::Value {
        json!({
            "lp_tol": self.tol,
            "pivot": match self.pivot { Pivot::Dantzig => "dantzig", Pivot::Bland => "bland" },
            "max_iterations": self.max_iterations,
            "rank_tol": self.rank_tol,
            "sdp_tol": self.sdp_tol,
            "sdp_max_iter": self.sdp_max_iter,
            "sdp_rho": self.sdp_rho,
            "sdp_alpha": self.sdp_alpha,
            "sdp_adaptive_rho": !self.sdp_fixed_rho,
        })
    }
}

#[derive(Args)]
struct PinvArgs {
    /// Matrix file (CSV, or Matrix Market with a .mtx extension).
    #[arg(long)]
    input: PathBuf,
    /// left, right, mp, p1, p1+p3, p1+p4, p1+p3+p4, optionally +p2sdp[:blocks].
    #[arg(long, default_value = "p1")]
    variant: String,
    /// Where to write H as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero tolerance for the reported nonzero count.
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    zero_tol: f64,
    /// Also write `<out>.provenance.json` echoing the configuration.
    #[arg(long)]
    provenance: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    h: PathBuf,
    /// Residuals are compared against tol · max(1, ‖A‖_F, ‖H‖_F).
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Comma-separated properties that must hold (p1..p4, left, right).
    #[arg(long, value_delimiter = ',')]
    require: Vec<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "4,8,12")]
    ranks: Vec<usize>,
    /// Instances per rank.
    #[arg(long, default_value_t = 3)]
    seeds: usize,
    /// Base seed from which instance seeds are derived.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "p1,p1+p3,p1+p4,p1+p3+p4")]
    variants: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    zero_tol: f64,
    /// Multiplier applied to U·V.
    #[arg(long, default_value_t = 0.01)]
    scale: f64,
    /// Right-hand side for the least-squares ratio (one value per line); all ones by default.
    #[arg(long)]
    rhs: Option<PathBuf>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `<out>.provenance.json` (on by default when --out is given).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    provenance: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_ERROR);
    }
    let res = match cli.command {
        Command::Pinv(a) => run_pinv(a),
        Command::Verify(a) => run_verify(a),
        Command::Bench(a) => run_bench(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .with_context(|| format!("{THREADS_ENV}='{v}' is not a thread count"))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = flag.or(from_env) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

fn check_output(path: &Path) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
    }
    if path.is_dir() {
        bail!("output path {} is a directory", path.display());
    }
    Ok(())
}

fn load(path: &Path, what: &str) -> Result<DenseMatrix> {
    read_matrix(path).with_context(|| format!("cannot load {what} from {}", path.display()))
}

fn provenance_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

fn run_pinv(args: PinvArgs) -> Result<u8> {
    let variant: Variant = args.variant.parse().context("bad --variant")?;
    let opts = args.solver.options()?;
    if let Some(out) = &args.out {
        check_output(out)?;
    }
    let a = load(&args.input, "matrix")?;
    let res = compute(&a, &variant, &opts).context("solve failed")?;

    println!("variant: {variant}");
    println!("status: {}", res.status);
    println!("solver: {}", res.solver);
    if res.status == PinvStatus::Infeasible {
        eprintln!(
            "infeasible: no {} exists for this {}x{} matrix (it is rank deficient on that side)",
            match variant.to_string().as_str() {
                "left" => "left inverse",
                "right" => "right inverse",
                _ => "solution",
            },
            a.rows(),
            a.cols()
        );
        return Ok(EXIT_INFEASIBLE);
    }
    let r = &res.residuals;
    println!("objective: {:.12e}", res.objective);
    println!("nnz: {} (zero tol {:e})", res.h.nnz(args.zero_tol), args.zero_tol);
    println!("residual p1: {:.3e}", r.p1);
    println!("residual p2: {:.3e}", r.p2);
    println!("residual p3: {:.3e}", r.p3);
    println!("residual p4: {:.3e}", r.p4);
    if let Some(d) = &res.sdp {
        println!(
            "sdp: blocks {} primal {:.3e} dual {:.3e} min eig {:.3e}",
            d.blocks, d.primal_residual, d.dual_residual, d.min_block_eig
        );
    }
    println!("iterations: {}", res.iterations);
    println!("time: {:.1} ms", res.timing_ms);

    if let Some(out) = &args.out {
        write_matrix(out, &res.h).with_context(|| format!("cannot write {}", out.display()))?;
        if args.provenance {
            let doc = json!({
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "input": args.input.display().to_string(),
                "variant": variant.to_string(),
                "solver_options": args.solver.echo(),
                "status": res.status.to_string(),
                "objective": res.objective,
            });
            fs::write(provenance_path(out), serde_json::to_string_pretty(&doc)? + "\n")?;
        }
    }
    Ok(match res.status {
        PinvStatus::Optimal => EXIT_OK,
        PinvStatus::NotConverged => {
            eprintln!("warning: iteration cap reached before convergence");
            EXIT_NOT_CONVERGED
        }
        PinvStatus::Infeasible => EXIT_INFEASIBLE,
    })
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "yes"
    } else {
        "no"
    }
}

fn run_verify(args: VerifyArgs) -> Result<u8> {
    let a = load(&args.a, "A")?;
    let h = load(&args.h, "H")?;
    let rep = verify(&a, &h, args.tol).context("verification failed")?;
    let r = &rep.residuals;
    println!("threshold: {:.3e}", rep.threshold);
    println!("P1 AHA=A      {:<3} ({:.3e})", mark(rep.p1), r.p1);
    println!("P2 HAH=H      {:<3} ({:.3e})", mark(rep.p2), r.p2);
    println!("P3 AH sym     {:<3} ({:.3e})", mark(rep.p3), r.p3);
    println!("P4 HA sym     {:<3} ({:.3e})", mark(rep.p4), r.p4);
    println!("HA=I          {}", mark(rep.left_inverse));
    println!("AH=I          {}", mark(rep.right_inverse));
    println!("AH=AA+        {:<3} ({:.3e})", mark(rep.ah_is_projector), rep.ah_gap);
    println!("HA=A+A        {:<3} ({:.3e})", mark(rep.ha_is_projector), rep.ha_gap);

    let mut failed = Vec::new();
    for req in &args.require {
        let ok = match req.trim().to_ascii_lowercase().as_str() {
            "p1" => rep.p1,
            "p2" => rep.p2,
            "p3" => rep.p3,
            "p4" => rep.p4,
            "left" => rep.left_inverse,
            "right" => rep.right_inverse,
            other => bail!("unknown property '{other}' in --require"),
        };
        if !ok {
            failed.push(req.clone());
        }
    }
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("required properties not satisfied: {}", failed.join(", "));
        Ok(EXIT_VERIFY_FAILED)
    }
}

fn run_bench(args: BenchArgs) -> Result<u8> {
    let variants = args
        .variants
        .iter()
        .map(|s| s.parse::<Variant>().with_context(|| format!("bad variant '{s}'")))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&r) = args.ranks.iter().find(|&&r| r == 0 || r > args.n) {
        bail!("rank {r} outside 1..={}", args.n);
    }
    if let Some(out) = &args.out {
        check_output(out)?;
    }
    let rhs = match &args.rhs {
        Some(p) => {
            let b = load(p, "right-hand side")?;
            if b.cols() != 1 || b.rows() != args.n {
                bail!("--rhs must hold {} values, one per line", args.n);
            }
            Some(b.into_vec())
        }
        None => None,
    };
    let mut cfg = TableConfig::new(args.n, args.ranks.clone(), args.seeds, variants.clone());
    cfg.base_seed = args.seed;
    cfg.zero_tol = args.zero_tol;
    cfg.scale = args.scale;
    cfg.rhs = rhs;
    cfg.options = args.solver.options()?;

    let table = run_table(&cfg).context("benchmark failed")?;
    let mut buf = Vec::new();
    write_table_csv(&table.rows, &mut buf)?;
    match &args.out {
        Some(out) => {
            fs::write(out, &buf).with_context(|| format!("cannot write {}", out.display()))?;
            if args.provenance {
                let doc = json!({
                    "tool": env!("CARGO_PKG_NAME"),
                    "version": env!("CARGO_PKG_VERSION"),
                    "n": args.n,
                    "ranks": args.ranks,
                    "seeds_per_rank": args.seeds,
                    "base_seed": args.seed,
                    "scale": args.scale,
                    "zero_tol": args.zero_tol,
                    "rhs": args.rhs.as_ref().map(|p| p.display().to_string()),
                    "variants": variants.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                    "solver_options": args.solver.echo(),
                    "rng": "xorshift128 streams seeded by splitmix64 mixing of (seed, rank, instance, role, redraw)",
                    "instances": table.instances,
                });
                fs::write(provenance_path(out), serde_json::to_string_pretty(&doc)? + "\n")?;
            }
        }
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    let failures = table.rows.iter().filter(|r| r.status.starts_with("error")).count();
    if failures > 0 {
        eprintln!("{failures} cells failed; see the status column");
    }
    Ok(EXIT_OK)
}
