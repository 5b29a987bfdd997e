//! Central-difference discretisation of `𝒜φ = b φ′ + ½σ² φ″` with
//! reflecting (zero-derivative) boundary rows.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::DiffusionModel;
use crate::tridiag;

/// Tridiagonal generator matrix on a grid.
#[derive(Debug, Clone)]
pub struct Generator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    dx: f64,
}

/// Builds the generator stencil. Errors if σ is not positive at some node.
pub fn build_generator(model: &DiffusionModel, grid: &Grid) -> Result<Generator> {
    model.check_grid(grid)?;
    model.sigma_min(grid)?;
    let n = grid.len();
    let h = grid.dx();
    let h2 = h * h;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for (i, &x) in grid.nodes().iter().enumerate() {
        let s = model.sigma(x);
        let a = 0.5 * s * s / h2;
        if i == 0 {
            // ghost node φ_{-1} = φ_1
            upper[i] = 2.0 * a;
            diag[i] = -2.0 * a;
        } else if i + 1 == n {
            lower[i] = 2.0 * a;
            diag[i] = -2.0 * a;
        } else {
            let c = model.b(x) / (2.0 * h);
            lower[i] = a - c;
            upper[i] = a + c;
            diag[i] = -2.0 * a;
        }
    }
    Ok(Generator {
        lower,
        diag,
        upper,
        dx: h,
    })
}

impl Generator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        tridiag::multiply(&self.lower, &self.diag, &self.upper, phi)
    }

    /// First node where an off-diagonal weight is negative, i.e. where
    /// `½σ²/Δx² < |b|/(2Δx)`.
    pub fn first_non_monotone(&self) -> Option<usize> {
        (0..self.len()).find(|&i| self.lower[i] < 0.0 || self.upper[i] < 0.0)
    }

    pub fn check_monotone(&self, grid: &Grid) -> Result<()> {
        match self.first_non_monotone() {
            Some(i) => Err(Error::NonMonotoneScheme {
                x: grid.nodes()[i],
                dx: grid.dx(),
            }),
            None => Ok(()),
        }
    }

    /// Factorises `c·I + diag(d) − k·𝒜`, i.e. row i is
    /// `(c + d_i) v_i − k (𝒜v)_i`.
    pub fn shifted_lu(&self, c: f64, d: &[f64], k: f64) -> Result<tridiag::TridiagonalLu> {
        let lower: Vec<f64> = self.lower.iter().map(|v| -k * v).collect();
        let upper: Vec<f64> = self.upper.iter().map(|v| -k * v).collect();
        let diag: Vec<f64> = self
            .diag
            .iter()
            .zip(d)
            .map(|(v, di)| c + di - k * v)
            .collect();
        tridiag::TridiagonalLu::new(&lower, &diag, &upper)
    }

    /// Normalised left null vector (the stationary law of the discrete
    /// chain), from detailed balance of the birth–death structure. Requires
    /// a monotone stencil.
    pub fn discrete_stationary(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let mut log_pi = vec![0.0; n];
        for i in 0..n - 1 {
            let up = self.upper[i];
            let down = self.lower[i + 1];
            if !(up > 0.0 && down > 0.0) {
                return Err(Error::Singular { row: i });
            }
            log_pi[i + 1] = log_pi[i] + up.ln() - down.ln();
        }
        let max = log_pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut pi: Vec<f64> = log_pi.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        Ok(pi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou() -> (DiffusionModel, Grid) {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -6.0, 6.0).unwrap();
        let g = Grid::new(-6.0, 6.0, 600).unwrap();
        (m, g)
    }

    #[test]
    fn constants_are_annihilated() {
        let (m, g) = ou();
        let gen = build_generator(&m, &g).unwrap();
        let out = gen.apply(&vec![3.7; g.len()]);
        assert!(out.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn linear_function_exact_at_interior() {
        let (m, g) = ou();
        let gen = build_generator(&m, &g).unwrap();
        let out = gen.apply(g.nodes());
        for i in 1..g.len() - 1 {
            let x = g.nodes()[i];
            assert!((out[i] + x).abs() < 1e-9, "x = {x}: {}", out[i]);
        }
    }

    #[test]
    fn quadratic_second_order() {
        // 𝒜x² = −2x² + 2 for OU(1, 0, √2); central differences are exact on
        // quadratics so the error is pure round-off.
        let (m, g) = ou();
        let gen = build_generator(&m, &g).unwrap();
        let phi: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        let out = gen.apply(&phi);
        let err = (1..g.len() - 1)
            .map(|i| {
                let x = g.nodes()[i];
                (out[i] - (-2.0 * x * x + 2.0)).abs()
            })
            .fold(0.0, f64::max);
        assert!(err <= 1e-6 + 10.0 * g.dx() * g.dx(), "err {err}");
    }

    #[test]
    fn cubic_error_quarters_on_refinement() {
        // φ = x³ + x² − x: central differences leave a b·φ‴Δx²/6 term.
        let phi = |x: f64| x * x * x + x * x - x;
        let exact = |x: f64| -x * (3.0 * x * x + 2.0 * x - 1.0) + (6.0 * x + 2.0);
        let err_for = |n: usize| {
            let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -2.0, 2.0).unwrap();
            let g = Grid::new(-2.0, 2.0, n).unwrap();
            let gen = build_generator(&m, &g).unwrap();
            let v: Vec<f64> = g.nodes().iter().map(|&x| phi(x)).collect();
            let out = gen.apply(&v);
            (1..g.len() - 1)
                .map(|i| (out[i] - exact(g.nodes()[i])).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err_for(40) / err_for(80);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn reflecting_rows_have_zero_drift_term() {
        let (m, g) = ou();
        let gen = build_generator(&m, &g).unwrap();
        let n = g.len();
        assert_eq!(gen.upper[0], -gen.diag[0]);
        assert_eq!(gen.lower[n - 1], -gen.diag[n - 1]);
    }

    #[test]
    fn nonmonotone_detected() {
        let m = DiffusionModel::ornstein_uhlenbeck(50.0, 0.0, 0.1, -8.0, 8.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 40).unwrap();
        let gen = build_generator(&m, &g).unwrap();
        assert!(matches!(gen.check_monotone(&g), Err(Error::NonMonotoneScheme { .. })));
    }

    #[test]
    fn discrete_stationary_is_left_null() {
        let (m, g) = ou();
        let gen = build_generator(&m, &g).unwrap();
        let pi = gen.discrete_stationary().unwrap();
        let n = g.len();
        for j in 0..n {
            let mut s = pi[j] * gen.diag[j];
            if j > 0 {
                s += pi[j - 1] * gen.upper[j - 1];
            }
            if j + 1 < n {
                s += pi[j + 1] * gen.lower[j + 1];
            }
            assert!(s.abs() < 1e-9, "column {j}: {s}");
        }
    }
}
