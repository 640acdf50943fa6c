use super::DenseMatrix;
use crate::error::{Error, Result};

/// In-place Gauss-Jordan inversion of a row-major `n × n` block stored with
/// row stride `stride`. Partial pivoting; fails when the best pivot falls
/// below `pivot_tol` times the largest entry.
pub fn invert_in_place(data: &mut [f64], n: usize, stride: usize, pivot_tol: f64) -> Result<()> {
    let scale = (0..n)
        .flat_map(|i| data[i * stride..i * stride + n].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if n == 0 {
        return Ok(());
    }
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    let mut swaps: Vec<(usize, usize)> = Vec::new();
    for col in 0..n {
        let (piv_row, piv_abs) = (col..n)
            .map(|r| (r, data[r * stride + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= pivot_tol * scale {
            return Err(Error::Singular);
        }
        if piv_row != col {
            for j in 0..n {
                data.swap(piv_row * stride + j, col * stride + j);
            }
            swaps.push((col, piv_row));
        }
        let inv = 1.0 / data[col * stride + col];
        data[col * stride + col] = 1.0;
        for j in 0..n {
            data[col * stride + j] *= inv;
        }
        let pivot_row: Vec<f64> = data[col * stride..col * stride + n].to_vec();
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = data[r * stride + col];
            if f == 0.0 {
                continue;
            }
            data[r * stride + col] = 0.0;
            let row = &mut data[r * stride..r * stride + n];
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= f * p;
            }
        }
    }
    // inv(PA) · P = inv(A): replay the row interchanges as column swaps.
    for &(a, b) in swaps.iter().rev() {
        for r in 0..n {
            data.swap(r * stride + a, r * stride + b);
        }
    }
    Ok(())
}

/// Inverse of a square matrix.
pub fn inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::Shape {
            op: "inverse",
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let n = a.rows();
    let mut data = a.as_slice().to_vec();
    invert_in_place(&mut data, n, n, 1e-14)?;
    DenseMatrix::new(n, n, data)
}
