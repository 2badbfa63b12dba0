//! Thomas algorithm for diagonally dominant tridiagonal systems.

use crate::error::{Error, Result};

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. Every row must be weakly
/// diagonally dominant with a nonzero pivot, which is what the implicit
/// stepper produces for `σ >= 0`.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(
        lower.len() == n && upper.len() == n && rhs.len() == n,
        "tridiagonal bands must have equal length"
    );
    if n == 0 {
        return Ok(Vec::new());
    }
    for i in 0..n {
        let off =
            if i > 0 { lower[i].abs() } else { 0.0 } + if i + 1 < n { upper[i].abs() } else { 0.0 };
        if !(diag[i].abs() >= off && diag[i] != 0.0) {
            return Err(Error::NotDiagonallyDominant { row: i });
        }
    }

    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / den } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
    }

    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
