use serde::Serialize;

use super::{mask_of, partition, solve_infinite_horizon_with, HorizonStepper, SolverConfig, ValueSurface};
use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::grid::Grid;
use crate::measure::InvariantMeasure;
use crate::model::DiffusionModel;
use crate::potential::{PotentialFunction, PotentialKind};
use crate::rewards::RewardSpec;

#[derive(Debug, Clone, Serialize)]
pub struct TransformReport {
    /// `w − q`
    pub direct: Vec<f64>,
    /// Solve with running reward `μ(f)` and terminal reward `g − q`.
    pub solved: ValueSurface,
    pub window: (f64, f64),
    /// `sup_window |(w − q) − ŵ|`
    pub discrepancy: f64,
    /// `‖w‖ + ‖q‖`
    pub scale: f64,
    /// Window nodes whose masks differ and that are not within one node of
    /// a free-boundary edge of either solve.
    pub mask_disagreements: Vec<f64>,
}

impl TransformReport {
    pub fn relative_discrepancy(&self) -> f64 {
        if self.scale == 0.0 {
            self.discrepancy
        } else {
            self.discrepancy / self.scale
        }
    }
}

fn near_edge(mask: &[bool], i: usize) -> bool {
    let lo = i.saturating_sub(1);
    let hi = (i + 1).min(mask.len() - 1);
    (lo..hi).any(|j| mask[j] != mask[j + 1])
}

/// Checks `w − q` against a direct solve of the transformed problem.
pub fn transformed_problem(
    model: &DiffusionModel,
    rewards: &RewardSpec,
    surface: &ValueSurface,
    potential: &PotentialFunction,
    measure: &InvariantMeasure,
    config: &SolverConfig,
    window: (f64, f64),
) -> Result<TransformReport> {
    if !rewards.is_undiscounted() {
        return Err(Error::NotApplicable("the transformation needs r ≡ 0".into()));
    }
    if potential.kind != PotentialKind::ZeroPotential {
        return Err(Error::NotApplicable("the transformation needs the zero-potential".into()));
    }
    let grid = &surface.grid;
    grid.check_len(&potential.values)?;
    let direct: Vec<f64> = surface.values.iter().zip(&potential.values).map(|(w, q)| w - q).collect();
    let q = potential.as_fn();
    let terminal = {
        let g = rewards.terminal.clone();
        ScalarFn::new(format!("{} - q", g.label()), move |x| g.eval(x) - q.eval(x))
    };
    let running = ScalarFn::constant(potential.mu_f);
    let hat = RewardSpec::undiscounted(running, terminal, grid)?;
    let solved = solve_infinite_horizon_with(model, grid, &hat, config, measure)?.surface;
    let idx = grid.window(window.0, window.1);
    let discrepancy = idx
        .clone()
        .map(|i| (direct[i] - solved.values[i]).abs())
        .fold(0.0, f64::max);
    let mask_disagreements = idx
        .filter(|&i| surface.mask[i] != solved.mask[i])
        .filter(|&i| !near_edge(&surface.mask, i) && !near_edge(&solved.mask, i))
        .map(|i| grid.nodes()[i])
        .collect();
    Ok(TransformReport {
        direct,
        scale: surface.sup_norm() + potential.sup_norm(),
        solved,
        window,
        discrepancy,
        mask_disagreements,
    })
}

/// `t = 0` stopping masks of `w_T` along a horizon ladder.
#[derive(Debug, Clone, Serialize)]
pub struct MaskLadder {
    pub horizons: Vec<f64>,
    pub masks: Vec<Vec<bool>>,
    /// Each mask contains the next.
    pub nonincreasing: bool,
    /// The last two masks agree.
    pub stabilised: bool,
}

impl MaskLadder {
    pub fn counts(&self) -> Vec<usize> {
        self.masks.iter().map(|m| m.iter().filter(|b| **b).count()).collect()
    }

    /// Masked nodes inside `[a, b]` for each horizon.
    pub fn counts_in(&self, grid: &Grid, a: f64, b: f64) -> Vec<usize> {
        self.masks
            .iter()
            .map(|m| grid.window(a, b).filter(|&i| m[i]).count())
            .collect()
    }
}

pub fn tau_t_limit_check(
    model: &DiffusionModel,
    grid: &Grid,
    rewards: &RewardSpec,
    config: &SolverConfig,
    horizons: &[f64],
) -> Result<MaskLadder> {
    config.validate(grid)?;
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) || horizons[0] <= 0.0 {
        return Err(Error::Parameter("horizons must be positive and ascending".into()));
    }
    // common step so every horizon lies on the ladder
    let (_, dt) = partition(horizons[0], config.dt);
    let mut stepper = HorizonStepper::with_scheme(model, grid, rewards, dt, config.scheme, config.obstacle_tol)?;
    let mut masks = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let target = (t / dt).round() as usize;
        stepper.advance(target.saturating_sub(stepper.steps));
        masks.push(mask_of(stepper.values(), stepper.obstacle(), config.obstacle_tol));
    }
    let nonincreasing = masks
        .windows(2)
        .all(|p| p[1].iter().zip(&p[0]).all(|(later, earlier)| !*later || *earlier));
    let stabilised = masks.len() >= 2 && masks[masks.len() - 1] == masks[masks.len() - 2];
    Ok(MaskLadder {
        horizons: horizons.to_vec(),
        masks,
        nonincreasing,
        stabilised,
    })
}
