use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::grid::Grid;

/// Sup-norms of the reward triple over the truncated domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorms {
    pub f: f64,
    pub g: f64,
    pub r: f64,
}

/// Running reward `f`, terminal reward `g` and discount rate `r ≥ 0`.
#[derive(Debug, Clone)]
pub struct RewardSpec {
    pub running: ScalarFn,
    pub terminal: ScalarFn,
    pub discount: ScalarFn,
    pub norms: SupNorms,
    undiscounted: bool,
}

impl RewardSpec {
    /// Records grid sup-norms and checks `r ≥ 0` at every node.
    pub fn new(running: ScalarFn, terminal: ScalarFn, discount: ScalarFn, grid: &Grid) -> Result<Self> {
        let sup = |h: &ScalarFn| grid.nodes().iter().map(|&x| h.eval(x).abs()).fold(0.0, f64::max);
        for &x in grid.nodes() {
            let r = discount.eval(x);
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Parameter(format!("discount rate {r} at x = {x}")));
            }
        }
        let norms = SupNorms {
            f: sup(&running),
            g: sup(&terminal),
            r: sup(&discount),
        };
        Ok(Self {
            undiscounted: norms.r == 0.0,
            running,
            terminal,
            discount,
            norms,
        })
    }

    /// Same rewards with `r ≡ 0`.
    pub fn undiscounted(running: ScalarFn, terminal: ScalarFn, grid: &Grid) -> Result<Self> {
        Self::new(running, terminal, ScalarFn::zero(), grid)
    }

    /// `r` vanishes at every grid node.
    pub fn is_undiscounted(&self) -> bool {
        self.undiscounted
    }

    pub fn with_running(&self, running: ScalarFn, grid: &Grid) -> Result<Self> {
        Self::new(running, self.terminal.clone(), self.discount.clone(), grid)
    }

    pub fn with_terminal(&self, terminal: ScalarFn, grid: &Grid) -> Result<Self> {
        Self::new(self.running.clone(), terminal, self.discount.clone(), grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_are_grid_maxima() {
        let g = Grid::new(-8.0, 8.0, 160).unwrap();
        let spec = RewardSpec::new(
            ScalarFn::new("tanh-0.5", |x: f64| x.tanh() - 0.5),
            ScalarFn::new("atan", f64::atan),
            ScalarFn::new("r", |x: f64| 0.5 * (1.0 + x.tanh())),
            &g,
        )
        .unwrap();
        assert!((spec.norms.g - 8f64.atan()).abs() < 1e-15);
        assert!((spec.norms.f - (0.5 + 8f64.tanh())).abs() < 1e-15);
        assert!(!spec.is_undiscounted());
    }

    #[test]
    fn negative_rate_rejected() {
        let g = Grid::new(-1.0, 1.0, 10).unwrap();
        let err = RewardSpec::new(
            ScalarFn::zero(),
            ScalarFn::zero(),
            ScalarFn::new("x", |x| x),
            &g,
        );
        assert!(matches!(err, Err(Error::Parameter(_))));
    }
}
