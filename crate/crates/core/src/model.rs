//! One-dimensional diffusion models `dX = b(X) dt + σ(X) dW` on a truncated
//! interval with reflecting ends.

use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::grid::Grid;

/// Closed-form family a model belongs to, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// `b(x) = θ(m − x)`, constant σ.
    OrnsteinUhlenbeck { theta: f64, mean: f64, sigma: f64 },
    /// `b(x) = a x − x³`, constant σ.
    DoubleWell { a: f64, sigma: f64 },
    General,
}

#[derive(Debug, Clone)]
pub struct DiffusionModel {
    pub label: String,
    pub drift: ScalarFn,
    pub volatility: ScalarFn,
    pub lo: f64,
    pub hi: f64,
    pub kind: ModelKind,
}

impl DiffusionModel {
    pub fn new(
        label: impl Into<String>,
        drift: ScalarFn,
        volatility: ScalarFn,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidModel(format!("bad domain [{lo}, {hi}]")));
        }
        Ok(Self {
            label: label.into(),
            drift,
            volatility,
            lo,
            hi,
            kind: ModelKind::General,
        })
    }

    pub fn ornstein_uhlenbeck(theta: f64, mean: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::InvalidModel(format!("OU needs theta > 0, got {theta}")));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidModel(format!("OU needs sigma > 0, got {sigma}")));
        }
        let mut m = Self::new(
            format!("ou(theta={theta}, m={mean}, sigma={sigma})"),
            ScalarFn::new(format!("{theta}*({mean} - x)"), move |x| theta * (mean - x)),
            ScalarFn::constant(sigma),
            lo,
            hi,
        )?;
        m.kind = ModelKind::OrnsteinUhlenbeck { theta, mean, sigma };
        Ok(m)
    }

    pub fn double_well(a: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidModel(format!("double-well needs sigma > 0, got {sigma}")));
        }
        let mut m = Self::new(
            format!("double-well(a={a}, sigma={sigma})"),
            ScalarFn::new(format!("{a}*x - x^3"), move |x| a * x - x * x * x),
            ScalarFn::constant(sigma),
            lo,
            hi,
        )?;
        m.kind = ModelKind::DoubleWell { a, sigma };
        Ok(m)
    }

    #[inline]
    pub fn b(&self, x: f64) -> f64 {
        self.drift.eval(x)
    }

    #[inline]
    pub fn sigma(&self, x: f64) -> f64 {
        self.volatility.eval(x)
    }

    /// Radial drift `η(x) = sign(x) b(x)`. At the origin the direction is
    /// undefined and `|b(0)|` is returned; callers exclude it from regime
    /// checks.
    pub fn eta(&self, x: f64) -> f64 {
        if x == 0.0 {
            self.b(0.0).abs()
        } else {
            x.signum() * self.b(x)
        }
    }

    /// Smallest volatility over the grid; errors if it is not positive.
    pub fn sigma_min(&self, grid: &Grid) -> Result<f64> {
        let mut min = f64::INFINITY;
        for &x in grid.nodes() {
            let s = self.sigma(x);
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidModel(format!("volatility {s} at x = {x}")));
            }
            min = min.min(s);
        }
        Ok(min)
    }

    /// Checks the grid spans the model domain.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        let tol = 1e-12 * (self.hi - self.lo);
        if (grid.lo() - self.lo).abs() > tol || (grid.hi() - self.hi).abs() > tol {
            return Err(Error::InvalidGrid(format!(
                "grid [{}, {}] does not span model domain [{}, {}]",
                grid.lo(),
                grid.hi(),
                self.lo,
                self.hi
            )));
        }
        Ok(())
    }

    /// Largest `|b'(x)|` over the grid, by central differences.
    pub fn drift_stiffness(&self, grid: &Grid) -> f64 {
        let h = grid.dx().min(1e-3);
        grid.nodes()
            .iter()
            .map(|&x| ((self.b(x + h) - self.b(x - h)) / (2.0 * h)).abs())
            .fold(0.0, f64::max)
    }

    /// Gaussian transition law `(mean, variance)` of `X_t` from `x`, for OU.
    pub fn ou_transition(&self, x: f64, t: f64) -> Option<(f64, f64)> {
        match self.kind {
            ModelKind::OrnsteinUhlenbeck { theta, mean, sigma } => {
                let decay = (-theta * t).exp();
                let var = sigma * sigma / (2.0 * theta) * (1.0 - decay * decay);
                Some((mean + (x - mean) * decay, var))
            }
            _ => None,
        }
    }

    /// Stationary `(mean, variance)` for OU.
    pub fn ou_stationary(&self) -> Option<(f64, f64)> {
        match self.kind {
            ModelKind::OrnsteinUhlenbeck { theta, mean, sigma } => {
                Some((mean, sigma * sigma / (2.0 * theta)))
            }
            _ => None,
        }
    }
}
