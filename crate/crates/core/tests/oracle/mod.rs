//! Brute-force reference solvers shared by the integration tests.

#![allow(dead_code)]

pub mod micro;

use sparse_pinv::lp::{LpProblem, VarKind};

#[derive(Debug, Clone, PartialEq)]
pub enum OracleResult {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
}

/// Solves a square system by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `1e-10` times the row scale.
pub fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        let scale = m[piv].iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if m[piv][col].abs() <= 1e-10 * scale.max(1e-300) {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

/// Enumerates every basic solution of a bounded LP: all equality rows plus
/// enough active inequalities or sign bounds to pin down every variable.
/// The caller must ensure the feasible region is bounded.
pub fn vertex_enumeration(p: &LpProblem, feas_tol: f64) -> OracleResult {
    let n = p.num_vars;
    let dense = |coeffs: &[(usize, f64)]| {
        let mut row = vec![0.0; n];
        for &(j, c) in coeffs {
            row[j] += c;
        }
        row
    };
    let eq: Vec<(Vec<f64>, f64)> = p.eq_rows.iter().map(|r| (dense(&r.coeffs), r.rhs)).collect();
    let mut optional: Vec<(Vec<f64>, f64)> = p.ineq_rows.iter().map(|r| (dense(&r.coeffs), r.rhs)).collect();
    for j in 0..n {
        if p.kinds[j] == VarKind::NonNeg {
            let mut row = vec![0.0; n];
            row[j] = -1.0;
            optional.push((row, 0.0));
        }
    }
    let Some(eq) = row_reduce(eq) else {
        return OracleResult::Infeasible;
    };
    enumerate(p, &eq, &optional, n, feas_tol)
}

/// Gauss-Jordan elimination of `[A | b]`. Drops dependent rows and returns
/// `None` if one of them has a nonzero right-hand side.
fn row_reduce(mut rows: Vec<(Vec<f64>, f64)>) -> Option<Vec<(Vec<f64>, f64)>> {
    let n = rows.first().map_or(0, |r| r.0.len());
    let mut rank = 0;
    for col in 0..n {
        let Some(piv) = (rank..rows.len())
            .filter(|&r| rows[r].0[col].abs() > 1e-10)
            .max_by(|&a, &b| rows[a].0[col].abs().total_cmp(&rows[b].0[col].abs()))
        else {
            continue;
        };
        rows.swap(rank, piv);
        let (pr, pb) = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank {
                continue;
            }
            let f = row.0[col] / pr[col];
            for c in 0..n {
                row.0[c] -= f * pr[c];
            }
            row.1 -= f * pb;
        }
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r.1.abs() > 1e-9) {
        return None;
    }
    rows.truncate(rank);
    Some(rows)
}

fn enumerate(
    p: &LpProblem,
    fixed: &[(Vec<f64>, f64)],
    optional: &[(Vec<f64>, f64)],
    n: usize,
    feas_tol: f64,
) -> OracleResult {
    let need = n - fixed.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pick = Vec::with_capacity(need);
    combos(optional.len(), need, 0, &mut pick, &mut |idx| {
        let mut m: Vec<Vec<f64>> = fixed.iter().map(|r| r.0.clone()).collect();
        let mut rhs: Vec<f64> = fixed.iter().map(|r| r.1).collect();
        for &i in idx {
            m.push(optional[i].0.clone());
            rhs.push(optional[i].1);
        }
        let Some(x) = solve_square(m, rhs) else { return };
        if p.max_violation(&x) > feas_tol {
            return;
        }
        let obj = p.objective_value(&x);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    });
    match best {
        Some((objective, x)) => OracleResult::Optimal { objective, x },
        None => OracleResult::Infeasible,
    }
}

fn combos(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        combos(n, k, i + 1, cur, f);
        cur.pop();
    }
}
