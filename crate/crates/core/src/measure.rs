use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::DiffusionModel;

/// Stationary density sampled on a grid, normalised by the trapezoidal rule.
#[derive(Debug, Clone)]
pub struct InvariantMeasure {
    grid: Grid,
    density: Vec<f64>,
    weights: Vec<f64>,
}

impl InvariantMeasure {
    /// Wraps a nonnegative density, renormalising it.
    pub fn from_density(grid: &Grid, density: Vec<f64>) -> Result<Self> {
        grid.check_len(&density)?;
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::ErgodicityFailure("density has negative or non-finite values".into()));
        }
        let weights = grid.trapezoid_weights();
        let total: f64 = density.iter().zip(&weights).map(|(d, w)| d * w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ErgodicityFailure(format!("normalising constant {total}")));
        }
        let density = density.into_iter().map(|d| d / total).collect();
        Ok(Self {
            grid: grid.clone(),
            density,
            weights,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `μ(φ)` for a grid function `φ`.
    pub fn integrate(&self, phi: &[f64]) -> Result<f64> {
        self.grid.check_len(phi)?;
        Ok(phi
            .iter()
            .zip(&self.density)
            .zip(&self.weights)
            .map(|((p, d), w)| p * d * w)
            .sum())
    }

    /// `μ(φ)` for a function of the state.
    pub fn integrate_fn(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(&self.density)
            .zip(&self.weights)
            .map(|((&x, d), w)| phi(x) * d * w)
            .sum()
    }

    /// Mass carried by the outermost cell at each end.
    pub fn boundary_mass(&self) -> (f64, f64) {
        let n = self.density.len();
        let h = self.grid.dx();
        (
            0.5 * h * (self.density[0] + self.density[1]),
            0.5 * h * (self.density[n - 2] + self.density[n - 1]),
        )
    }

    /// Whether the truncation leaves less than `1e-8` of mass at the edges.
    pub fn truncation_ok(&self) -> bool {
        let (l, r) = self.boundary_mass();
        l < 1e-8 && r < 1e-8
    }
}

/// `μ(φ)` by trapezoidal quadrature; errors on a grid mismatch.
pub fn mu_integral(measure: &InvariantMeasure, phi: &[f64]) -> Result<f64> {
    measure.integrate(phi)
}

/// Speed density `m(x) ∝ exp(∫ 2b/σ²)/σ²`, integrated cell-by-cell with
/// Simpson's rule and normalised on the grid.
pub fn stationary_density(model: &DiffusionModel, grid: &Grid) -> Result<InvariantMeasure> {
    model.check_grid(grid)?;
    model.sigma_min(grid)?;
    let integrand = |x: f64| {
        let s = model.sigma(x);
        2.0 * model.b(x) / (s * s)
    };
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut log_m = vec![0.0; n];
    let mut acc = 0.0;
    let mut left = integrand(nodes[0]);
    log_m[0] = -2.0 * model.sigma(nodes[0]).ln();
    for i in 0..n - 1 {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let mid = integrand(0.5 * (a + b));
        let right = integrand(b);
        acc += (b - a) / 6.0 * (left + 4.0 * mid + right);
        left = right;
        log_m[i + 1] = acc - 2.0 * model.sigma(b).ln();
    }
    if log_m.iter().any(|v| !v.is_finite()) {
        return Err(Error::ErgodicityFailure("speed density overflowed".into()));
    }
    let max = log_m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let interior_max = log_m[1..n - 1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if log_m[0] >= interior_max || log_m[n - 1] >= interior_max {
        return Err(Error::ErgodicityFailure(
            "speed density peaks at the truncation boundary".into(),
        ));
    }
    let density = log_m.iter().map(|l| (l - max).exp()).collect();
    InvariantMeasure::from_density(grid, density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::build_generator;
    use crate::func::ScalarFn;

    fn gaussian(x: f64, m: f64, v: f64) -> f64 {
        (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }

    #[test]
    fn ou_density_is_standard_normal() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -6.0, 6.0).unwrap();
        let g = Grid::new(-6.0, 6.0, 1200).unwrap();
        let mu = stationary_density(&m, &g).unwrap();
        let err = g
            .nodes()
            .iter()
            .zip(mu.density())
            .map(|(&x, d)| (d - gaussian(x, 0.0, 1.0)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "max abs error {err}");
    }

    #[test]
    fn shifted_ou_density() {
        let m = DiffusionModel::ornstein_uhlenbeck(2.0, 1.0, 2f64.sqrt(), -5.0, 7.0).unwrap();
        let g = Grid::new(-5.0, 7.0, 1200).unwrap();
        let mu = stationary_density(&m, &g).unwrap();
        let err = g
            .nodes()
            .iter()
            .zip(mu.density())
            .map(|(&x, d)| (d - gaussian(x, 1.0, 0.5)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "max abs error {err}");
    }

    #[test]
    fn normalised_and_nonnegative() {
        let m = DiffusionModel::double_well(1.0, 0.8, -4.0, 4.0).unwrap();
        let g = Grid::new(-4.0, 4.0, 800).unwrap();
        let mu = stationary_density(&m, &g).unwrap();
        assert!(mu.density().iter().all(|d| *d >= 0.0));
        assert!((mu.integrate_fn(|_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrals() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -8.0, 8.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 1600).unwrap();
        let mu = stationary_density(&m, &g).unwrap();
        assert!((mu.integrate(&vec![2.5; g.len()]).unwrap() - 2.5).abs() < 1e-12);
        let sq: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        assert!((mu_integral(&mu, &sq).unwrap() - 1.0).abs() < 1e-4);
        let odd: Vec<f64> = g.nodes().iter().map(|x| x.powi(3) + x.tanh()).collect();
        assert!(mu_integral(&mu, &odd).unwrap().abs() < 1e-10);
        let shifted: Vec<f64> = g.nodes().iter().map(|x| x.tanh() - 0.5).collect();
        assert!((mu_integral(&mu, &shifted).unwrap() + 0.5).abs() < 1e-6);
        assert!(mu.truncation_ok());
    }

    #[test]
    fn grid_mismatch_is_dimension_error() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 1.0, -5.0, 5.0).unwrap();
        let g = Grid::new(-5.0, 5.0, 100).unwrap();
        let mu = stationary_density(&m, &g).unwrap();
        assert!(matches!(mu.integrate(&[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn repelling_drift_is_not_ergodic() {
        let m = DiffusionModel::new(
            "repel",
            ScalarFn::new("x", |x| x),
            ScalarFn::constant(1.0),
            -5.0,
            5.0,
        )
        .unwrap();
        let g = Grid::new(-5.0, 5.0, 100).unwrap();
        assert!(matches!(stationary_density(&m, &g), Err(Error::ErgodicityFailure(_))));
    }

    #[test]
    fn measure_annihilates_generator_range() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -8.0, 8.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 1600).unwrap();
        let mu = stationary_density(&m, &g).unwrap();
        let gen = build_generator(&m, &g).unwrap();
        // smooth bump supported well inside the domain
        let phi: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&x| if x.abs() < 3.0 { (1.0 - (x / 3.0).powi(2)).powi(4) } else { 0.0 })
            .collect();
        let a_phi = gen.apply(&phi);
        let s = mu.integrate(&a_phi).unwrap();
        assert!(s.abs() <= 1e-4, "adjoint defect {s}");
    }
}
