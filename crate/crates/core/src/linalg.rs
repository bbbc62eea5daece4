//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result};

/// `‖A^k‖∞` above which a power is flagged as poorly conditioned.
pub const POWER_WARN_NORM: f64 = 1e12;

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: ncols,
            found: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `[A^0, A^1, …, A^N]` by iterated multiplication.
pub fn powers(a: &DMatrix<f64>, n: usize) -> Result<Vec<DMatrix<f64>>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(DMatrix::identity(a.nrows(), a.ncols()));
    for k in 1..=n {
        let next = a * &out[k - 1];
        let norm = inf_norm(&next);
        if !norm.is_finite() {
            return Err(Error::Conditioning { power: k, norm });
        }
        if norm > POWER_WARN_NORM {
            log::warn!("‖A^{k}‖∞ = {norm:e} exceeds {POWER_WARN_NORM:e}");
        }
        out.push(next);
    }
    Ok(out)
}

/// 2-norm condition number from the singular values; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn complex_rank(m: &DMatrix<Complex<f64>>) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let tol = max * 1e-10 * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|s| **s > tol).count()
}

/// Popov–Belevitch–Hautus test: `rank [A − λI, B] = n` for every eigenvalue λ.
pub fn is_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let eig = a.complex_eigenvalues();
    eig.iter().all(|&lambda| {
        let mut m = DMatrix::<Complex<f64>>::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex::new(a[(i, j)], 0.0);
            }
            m[(i, i)] -= lambda;
            for j in 0..b.ncols() {
                m[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        complex_rank(&m) == n
    })
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
