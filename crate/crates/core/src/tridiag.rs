//! Thomas algorithm for tridiagonal systems.
//!
//! Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`;
//! `lower[0]` and `upper[n-1]` are ignored. No pivoting, so the matrix should
//! be (irreducibly) diagonally dominant, which every system assembled in this
//! crate is.

use crate::error::{Error, Result};

/// LU factorisation of a tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    // modified super-diagonal c'_i
    upper_mod: Vec<f64>,
    // reciprocal pivots
    inv_pivot: Vec<f64>,
}

impl TridiagonalLu {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: lower.len().min(upper.len()),
            });
        }
        let mut upper_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let l = if i == 0 { 0.0 } else { lower[i] };
            let pivot = diag[i] - l * prev_c;
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular { row: i });
            }
            inv_pivot[i] = 1.0 / pivot;
            let u = if i + 1 == n { 0.0 } else { upper[i] };
            prev_c = u * inv_pivot[i];
            upper_mod[i] = prev_c;
        }
        Ok(Self {
            lower: lower.to_vec(),
            upper_mod,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Solves in place: `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        let mut prev = 0.0;
        for i in 0..n {
            let l = if i == 0 { 0.0 } else { self.lower[i] };
            prev = (x[i] - l * prev) * self.inv_pivot[i];
            x[i] = prev;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.upper_mod[i] * x[i + 1];
        }
    }
}

/// One-shot solve.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = TridiagonalLu::new(lower, diag, upper)?;
    if rhs.len() != lu.len() {
        return Err(Error::Dimension {
            expected: lu.len(),
            got: rhs.len(),
        });
    }
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x);
    Ok(x)
}

/// `A x` for the tridiagonal `A`.
pub fn multiply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut s = diag[i] * x[i];
            if i > 0 {
                s += lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += upper[i] * x[i + 1];
            }
            s
        })
        .collect()
}
