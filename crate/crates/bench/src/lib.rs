//! Problem fixtures shared by the benchmarks.

use vstop::{DiffusionModel, Grid, RewardSpec, ScalarFn, SolverConfig};

pub struct Fixture {
    pub model: DiffusionModel,
    pub grid: Grid,
    pub rewards: RewardSpec,
    pub config: SolverConfig,
}

/// OU with `θ = 1`, `σ = √2` on `[−8, 8]`, `f = tanh − 0.5`, `g = arctan`.
pub fn tanh_arctan(intervals: usize) -> Fixture {
    let (lo, hi) = (-8.0, 8.0);
    let model = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, std::f64::consts::SQRT_2, lo, hi).unwrap();
    let grid = Grid::new(lo, hi, intervals).unwrap();
    let rewards = RewardSpec::undiscounted(
        ScalarFn::new("tanh(x) - 0.5", |x: f64| x.tanh() - 0.5),
        ScalarFn::new("arctan(x)", f64::atan),
        &grid,
    )
    .unwrap();
    Fixture {
        model,
        grid,
        rewards,
        config: SolverConfig::for_domain(lo, hi),
    }
}

/// Diagonally dominant tridiagonal system of size `n`.
pub fn tridiagonal(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let lower = vec![-1.0; n];
    let diag = (0..n).map(|i| 2.5 + (i as f64 * 0.1).sin()).collect();
    let upper = vec![-1.0; n];
    let rhs = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
    (lower, diag, upper, rhs)
}
