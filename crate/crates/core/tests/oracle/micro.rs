//! Hand-derived cases for the 2×2 all-ones matrix `J`.
//!
//! With `H = [[a, b], [c, d]]` and `x = (a, b, c, d)`:
//! `JHJ = (a+b+c+d)·J`, `JH` has both rows equal to `(a+c, b+d)` and `HJ`
//! has both columns equal to `(a+b, c+d)`. So P1 is `a+b+c+d = 1`, P3 is
//! `a+c = b+d` and P4 is `a+b = c+d`.

use super::solve_square;

/// Equality rows over `(a, b, c, d)`.
pub fn j_rows(p3: bool, p4: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = vec![vec![1.0, 1.0, 1.0, 1.0]];
    let mut rhs = vec![1.0];
    if p3 {
        rows.push(vec![1.0, -1.0, 1.0, -1.0]);
        rhs.push(0.0);
    }
    if p4 {
        rows.push(vec![1.0, 1.0, -1.0, -1.0]);
        rhs.push(0.0);
    }
    (rows, rhs)
}

/// Minimum of `Σ|x|` over `rows·x = rhs` with every minimizing basic point.
/// Rows must be independent; some minimizer is supported on `rows.len()`
/// coordinates, so trying every such support is exhaustive.
pub fn min_one_norm(rows: &[Vec<f64>], rhs: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let n = rows[0].len();
    let k = rows.len();
    let mut best = f64::INFINITY;
    let mut points: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let sub = rows.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect();
        let Some(y) = solve_square(sub, rhs.to_vec()) else { continue };
        let mut x = vec![0.0; n];
        for (&j, v) in cols.iter().zip(y) {
            x[j] = v;
        }
        let obj: f64 = x.iter().map(|v| v.abs()).sum();
        if obj < best - 1e-12 {
            best = obj;
            points.clear();
        }
        if obj <= best + 1e-12 {
            points.push(x);
        }
    }
    (best, points)
}

/// `‖H·J·1‖₂ / ‖J⁺·J·1‖₂` where `J·1 = (2, 2)` and `J⁺J·1 = (1, 1)`.
pub fn j_two_norm_ratio(x: &[f64]) -> f64 {
    let top = 2.0 * (x[0] + x[1]);
    let bottom = 2.0 * (x[2] + x[3]);
    top.hypot(bottom) / 2f64.sqrt()
}

/// `J⁺ = J/4`, so `JJ⁺ = J/2`.
pub const J_PINV_ENTRY: f64 = 0.25;
pub const J_PROJECTOR_ENTRY: f64 = 0.5;
