use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sparse_pinv::densela::{mp_pinv, mp_residuals};
use sparse_pinv::io::{read_matrix, write_matrix};
use sparse_pinv::DenseMatrix;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparse-pinv"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn save(dir: &TempDir, name: &str, m: &DenseMatrix) -> PathBuf {
    let p = dir.path().join(name);
    write_matrix(&p, m).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn field(out: &str, key: &str) -> f64 {
    let line = out.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no '{key}' in {out}"));
    line[key.len()..].trim().split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn pinv_identity() {
    let dir = TempDir::new().unwrap();
    let a = save(&dir, "I3.csv", &DenseMatrix::identity(3));
    let h = dir.path().join("H.csv");
    let o = run(&["pinv", "--input", s(&a), "--variant", "p1", "--out", s(&h), "--provenance"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(read_matrix(&h).unwrap().sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-12);
    assert!((field(&stdout(&o), "objective:") - 3.0).abs() < 1e-9);
    let prov: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("H.csv.provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["variant"], "p1");
    assert_eq!(prov["solver_options"]["lp_tol"], 1e-9);
}

#[test]
fn pinv_left_of_rank_deficient_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let j = save(&dir, "J.csv", &DenseMatrix::filled(2, 2, 1.0));
    let o = run(&["pinv", "--input", s(&j), "--variant", "left"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("infeasible"));
}

#[test]
fn pinv_reports_small_residuals() {
    let dir = TempDir::new().unwrap();
    let u = DenseMatrix::from_rows(&[[1.0, 0.5], [0.2, -1.0], [0.3, 0.3], [-0.7, 0.1], [0.9, 0.4], [0.0, 1.1]]).unwrap();
    let v = DenseMatrix::from_rows(&[[0.4, -0.2, 1.0, 0.3, 0.0, 0.8], [0.6, 0.9, -0.5, 0.1, 0.7, -0.3]]).unwrap();
    let a = u.matmul(&v).unwrap();
    let input = save(&dir, "rank2_6x6.csv", &a);
    let h = dir.path().join("H.csv");
    let o = run(&["pinv", "--input", s(&input), "--variant", "p1+p3", "--tol", "1e-8", "--out", s(&h)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(field(&out, "residual p1:") <= 1e-6);
    assert!(field(&out, "residual p3:") <= 1e-6);
    let r = mp_residuals(&a, &read_matrix(&h).unwrap()).unwrap();
    assert!(r.p1 <= 1e-6 && r.p3 <= 1e-6);
}

#[test]
fn pinv_errors() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.csv");
    let o = run(&["pinv", "--input", s(&missing)]);
    assert_eq!(code(&o), 1);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n3,oops\n").unwrap();
    let o = run(&["pinv", "--input", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    let a = save(&dir, "I.csv", &DenseMatrix::identity(2));
    let o = run(&["pinv", "--input", s(&a), "--variant", "p7"]);
    assert_eq!(code(&o), 1);
    let o = run(&["pinv", "--input", s(&a), "--out", s(&dir.path().join("no/such/dir/H.csv"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn pinv_iteration_cap_is_not_convergence() {
    let dir = TempDir::new().unwrap();
    let a = DenseMatrix::from_rows(&[[1.0, 2.0, 0.5], [0.3, -1.0, 2.0], [1.3, 1.0, 2.5]]).unwrap();
    let input = save(&dir, "a.csv", &a);
    let o = run(&["pinv", "--input", s(&input), "--variant", "p1+p2sdp:all", "--sdp-max-iter", "2"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn verify_pinv_of_all_ones() {
    let dir = TempDir::new().unwrap();
    let j = DenseMatrix::filled(2, 2, 1.0);
    let a = save(&dir, "J.csv", &j);
    let h = save(&dir, "Jquarter.csv", &mp_pinv(&j, None).unwrap());
    let o = run(&["verify", "--a", s(&a), "--h", s(&h), "--require", "p1,p2,p3,p4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    for p in ["P1", "P2", "P3", "P4"] {
        assert!(out.lines().any(|l| l.starts_with(p) && l.contains("yes")), "{out}");
    }
    let z = save(&dir, "Z.csv", &DenseMatrix::zeros(2, 2));
    let o = run(&["verify", "--a", s(&a), "--h", s(&z), "--require", "p1"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn bench_row_count_and_determinism() {
    let dir = TempDir::new().unwrap();
    let t1 = dir.path().join("t.csv");
    let t2 = dir.path().join("t2.csv");
    for t in [&t1, &t2] {
        let o = run(&["bench", "--n", "20", "--ranks", "4,8,12", "--seeds", "3", "--variants", "p1,p1+p3", "--out", s(t)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = fs::read_to_string(&t1).unwrap();
    assert_eq!(text, fs::read_to_string(&t2).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "r,apinv_1norm,variant,1nr,sr,lsr,2nr,status");
    assert_eq!(lines.count(), 9 * 2);
    let prov: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("t.csv.provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["instances"].as_array().unwrap().len(), 9);
}

#[test]
fn bench_sdp_cell() {
    let o = bin().args(["bench", "--n", "6", "--ranks", "2", "--seeds", "1", "--variants", "p1+p2sdp"]).env("SPARSE_PINV_THREADS", "2").output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    let status = row.rsplit(',').next().unwrap();
    assert!(["optimal", "not-converged"].contains(&status), "{row}");
}

#[test]
fn bench_rejects_bad_config() {
    assert_eq!(code(&run(&["bench", "--n", "5", "--ranks", "6"])), 1);
    assert_eq!(code(&run(&["bench", "--n", "5", "--ranks", "2", "--variants", "p9"])), 1);
}
