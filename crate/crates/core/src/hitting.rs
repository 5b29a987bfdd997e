use crate::error::{Error, Result};
use crate::generator::build_generator;
use crate::grid::Grid;
use crate::model::DiffusionModel;
use crate::tridiag;

/// `u(x) = E^x[τ_B]` for the first entry time into `B = [lo, hi]`, from the
/// boundary value problem `𝒜u = −1` off `B`, `u = 0` on `B`.
pub fn hitting_time_expectation(
    model: &DiffusionModel,
    grid: &Grid,
    ball: (f64, f64),
) -> Result<Vec<f64>> {
    let (lo, hi) = ball;
    let inside: Vec<bool> = grid.nodes().iter().map(|&x| x >= lo && x <= hi).collect();
    let n = grid.len();
    if !(lo <= hi) || !(1..n - 1).any(|i| inside[i]) {
        return Err(Error::InvalidRegion { lo, hi });
    }
    let gen = build_generator(model, grid)?;
    gen.check_monotone(grid)?;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        if inside[i] {
            diag[i] = 1.0;
        } else {
            lower[i] = -gen.lower[i];
            diag[i] = -gen.diag[i];
            upper[i] = -gen.upper[i];
            rhs[i] = 1.0;
        }
    }
    let mut u = tridiag::solve(&lower, &diag, &upper, &rhs)?;
    for (ui, &b) in u.iter_mut().zip(&inside) {
        if b {
            *ui = 0.0;
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou() -> (DiffusionModel, Grid) {
        (
            DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -8.0, 8.0).unwrap(),
            Grid::new(-8.0, 8.0, 1600).unwrap(),
        )
    }

    #[test]
    fn zero_inside_and_residual() {
        let (m, g) = ou();
        let u = hitting_time_expectation(&m, &g, (-0.5, 0.5)).unwrap();
        let gen = build_generator(&m, &g).unwrap();
        let au = gen.apply(&u);
        for (i, &x) in g.nodes().iter().enumerate() {
            if (-0.5..=0.5).contains(&x) {
                assert_eq!(u[i], 0.0);
            } else {
                assert!(u[i] >= 0.0);
                assert!((au[i] + 1.0).abs() < 1e-6, "x = {x}: {}", au[i]);
            }
        }
    }

    #[test]
    fn nondecreasing_away_from_ball() {
        let (m, g) = ou();
        let u = hitting_time_expectation(&m, &g, (-0.5, 0.5)).unwrap();
        let c = g.nearest(0.0);
        for i in c..g.len() - 1 {
            assert!(u[i + 1] >= u[i]);
        }
        for i in (1..=c).rev() {
            assert!(u[i - 1] >= u[i]);
        }
    }

    #[test]
    fn region_outside_domain() {
        let (m, g) = ou();
        assert!(matches!(
            hitting_time_expectation(&m, &g, (20.0, 21.0)),
            Err(Error::InvalidRegion { .. })
        ));
    }
}
