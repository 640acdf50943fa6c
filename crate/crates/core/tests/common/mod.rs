//! Random problem generators shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xorshift::XorShiftRng;
use sparse_pinv::lp::{LinearRow, LpProblem, VarKind};
use sparse_pinv::DenseMatrix;

pub fn rng(seed: u64) -> XorShiftRng {
    XorShiftRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut XorShiftRng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

/// `scale · U V` with `U` rows×rank and `V` rank×cols uniform on (-1, 1).
pub fn random_low_rank(rng: &mut XorShiftRng, rows: usize, cols: usize, rank: usize, scale: f64) -> DenseMatrix {
    let u = random_matrix(rng, rows, rank);
    let v = random_matrix(rng, rank, cols);
    u.matmul(&v).unwrap().scale(scale)
}

/// A small LP whose feasible region is kept bounded by `|x_j| ≤ 5` rows.
/// Roughly half the instances have equality right-hand sides taken from a
/// point inside the box; the rest may be infeasible.
pub fn random_bounded_lp(rng: &mut XorShiftRng) -> LpProblem {
    let n = rng.random_range(1..=6);
    let kinds: Vec<VarKind> = (0..n)
        .map(|_| if rng.random_bool(0.5) { VarKind::Free } else { VarKind::NonNeg })
        .collect();
    let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-3..=3) as f64 + rng.random_range(-0.5..0.5)).collect();
    let mut p = LpProblem::new(kinds.clone(), objective);
    let x0: Vec<f64> = kinds
        .iter()
        .map(|k| match k {
            VarKind::Free => rng.random_range(-2.0..2.0),
            VarKind::NonNeg => rng.random_range(0.0..2.0),
        })
        .collect();
    let feasible = rng.random_bool(0.6);
    let coeffs = |rng: &mut XorShiftRng| -> Vec<(usize, f64)> {
        let mut c = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                c.push((j, rng.random_range(-4..=4) as f64 + rng.random_range(-0.5..0.5)));
            }
        }
        c
    };
    let n_eq = rng.random_range(0..=n.min(3));
    for _ in 0..n_eq {
        let c = coeffs(rng);
        let at_x0: f64 = c.iter().map(|&(j, v)| v * x0[j]).sum();
        let rhs = if feasible { at_x0 } else { rng.random_range(-6.0..6.0) };
        p.eq_rows.push(LinearRow::new(c, rhs));
    }
    for _ in 0..rng.random_range(0..=4) {
        let c = coeffs(rng);
        let at_x0: f64 = c.iter().map(|&(j, v)| v * x0[j]).sum();
        let rhs = if feasible { at_x0 + rng.random_range(0.0..2.0) } else { rng.random_range(-6.0..6.0) };
        p.ineq_rows.push(LinearRow::new(c, rhs));
    }
    for j in 0..n {
        p.ineq_rows.push(LinearRow::new(vec![(j, 1.0)], 5.0));
        if kinds[j] == VarKind::Free {
            p.ineq_rows.push(LinearRow::new(vec![(j, -1.0)], 5.0));
        }
    }
    p
}
