use serde::Serialize;

use super::{solve_infinite_horizon_with, SolverConfig};
use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::grid::Grid;
use crate::measure::InvariantMeasure;
use crate::model::DiffusionModel;
use crate::potential::{PotentialFunction, PotentialKind};
use crate::rewards::RewardSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GammaRoute {
    /// Auxiliary stopping problem with running reward `f − d`, terminal 0.
    DynamicProgramming,
    /// `q − A` from the zero-potential.
    Potential,
    /// Pointwise minimum of both.
    Both,
}

/// `M(x) = (γ(x) + 2‖g‖ + 1)/(−d)` together with the `γ` it was built from.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCertificate {
    pub d: f64,
    #[serde(skip)]
    pub grid: Grid,
    pub gamma: Vec<f64>,
    pub m: Vec<f64>,
    pub source: GammaRoute,
    pub gamma_dp: Option<Vec<f64>>,
    pub gamma_potential: Option<Vec<f64>>,
    /// `sup_window (γ_dp − (q − A))`; the potential route is an upper bound,
    /// so this should not be materially positive.
    pub route_excess: Option<f64>,
    pub dp_converged: Option<bool>,
}

impl BoundCertificate {
    pub fn m_at(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.m, x)
    }

    pub fn gamma_at(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.gamma, x)
    }

    /// Whether the routes are consistent to within `tol` on the window.
    pub fn routes_consistent(&self, tol: f64) -> Option<bool> {
        self.route_excess.map(|e| e <= tol)
    }
}

/// `μ(f)/2` when `μ(f) < 0`.
pub fn default_d(mu_f: f64) -> Option<f64> {
    (mu_f < 0.0).then_some(0.5 * mu_f)
}

/// Builds `γ` by the dynamic-programming route and, when a zero-potential is
/// supplied, by the potential route; `M` uses the pointwise minimum.
pub fn gamma_and_m(
    model: &DiffusionModel,
    grid: &Grid,
    rewards: &RewardSpec,
    d: f64,
    config: &SolverConfig,
    measure: &InvariantMeasure,
    potential: Option<&PotentialFunction>,
) -> Result<BoundCertificate> {
    if !(d < 0.0) || !d.is_finite() {
        return Err(Error::Parameter(format!("d must be negative, got {d}")));
    }
    let aux = RewardSpec::new(
        rewards.running.shifted(d),
        ScalarFn::zero(),
        rewards.discount.clone(),
        grid,
    )?;
    let dp = solve_infinite_horizon_with(model, grid, &aux, config, measure)?;
    let dp_ok = dp.converged();

    let gamma_pot = match potential {
        Some(q) => {
            if q.kind != PotentialKind::ZeroPotential || !rewards.is_undiscounted() {
                return Err(Error::NotApplicable(
                    "potential route needs the zero-potential of an undiscounted problem".into(),
                ));
            }
            grid.check_len(&q.values)?;
            if !(d > q.mu_f) {
                return Err(Error::Parameter(format!(
                    "potential route needs mu(f) < d < 0, got d = {d}, mu(f) = {}",
                    q.mu_f
                )));
            }
            Some(q.values.iter().map(|v| v - q.lower_bound).collect::<Vec<f64>>())
        }
        None => None,
    };

    let (gamma, source) = match (&gamma_pot, dp_ok) {
        (Some(p), true) => (
            dp.surface.values.iter().zip(p).map(|(a, b)| a.min(*b)).collect(),
            GammaRoute::Both,
        ),
        (Some(p), false) => (p.clone(), GammaRoute::Potential),
        (None, true) => (dp.surface.values.clone(), GammaRoute::DynamicProgramming),
        (None, false) => {
            return Err(Error::NotApplicable(format!(
                "auxiliary problem did not converge by T = {}; supply a zero-potential",
                dp.surface.horizon
            )))
        }
    };
    let route_excess = gamma_pot.as_ref().map(|p| {
        grid.window(config.window.0, config.window.1)
            .map(|i| dp.surface.values[i] - p[i])
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let scale = 2.0 * rewards.norms.g + 1.0;
    let m = gamma.iter().map(|gm| (gm + scale) / -d).collect();
    Ok(BoundCertificate {
        d,
        grid: grid.clone(),
        gamma,
        m,
        source,
        gamma_dp: Some(dp.surface.values),
        gamma_potential: gamma_pot,
        route_excess,
        dp_converged: Some(dp_ok),
    })
}
