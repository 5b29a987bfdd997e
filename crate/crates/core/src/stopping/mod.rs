//! Finite-horizon dynamic programming and horizon growth.
//!
//! Backward induction in time-to-go: starting from `g`, each implicit step
//! with `M = I + Δt(r − 𝒜)` and `q = w + Δt f` either solves the discrete
//! obstacle problem `min(Mv − q, v − g) = 0` by policy iteration, or solves
//! `Mv = q` and projects `max(v, g)`. After `k` steps the iterate is the
//! `t = 0` slice of the horizon-`kΔt` problem, so growing the horizon is just
//! continuing the iteration.

mod bounds;
mod transform;

pub use bounds::{default_d, gamma_and_m, BoundCertificate, GammaRoute};
pub use transform::{tau_t_limit_check, transformed_problem, MaskLadder, TransformReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::build_generator;
use crate::grid::Grid;
use crate::measure::{stationary_density, InvariantMeasure};
use crate::model::DiffusionModel;
use crate::rewards::RewardSpec;
use crate::simulator::StoppingRule;
use crate::stats::{linear_fit, LinearFit};
use crate::tridiag::TridiagonalLu;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ObstacleScheme {
    /// Per-step complementarity solve; its fixed points satisfy the
    /// discrete variational inequality exactly.
    PolicyIteration,
    /// One linear solve then `max(v, g)`. Cheaper, biased toward stopping
    /// where the stencil couples strongly to stopped neighbours.
    Projected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub dt: f64,
    /// Horizon increment between Cauchy tests.
    pub horizon_step: f64,
    /// Compact window for the Cauchy test.
    pub window: (f64, f64),
    pub tol_w: f64,
    pub t_max: f64,
    /// A node is masked when `g ≥ w − obstacle_tol`; also the switching
    /// threshold of the policy iteration.
    pub obstacle_tol: f64,
    pub scheme: ObstacleScheme,
    /// State whose value is tracked in the convergence history.
    pub probe: f64,
    /// Keep the `t = 0` slice at every horizon of the ladder.
    pub keep_slabs: bool,
}

impl SolverConfig {
    /// Defaults for a domain: window is the inner 60%.
    pub fn for_domain(lo: f64, hi: f64) -> Self {
        let len = hi - lo;
        Self {
            dt: 0.01,
            horizon_step: 1.0,
            window: (lo + 0.2 * len, hi - 0.2 * len),
            tol_w: 1e-4,
            t_max: 500.0,
            obstacle_tol: 1e-12,
            scheme: ObstacleScheme::PolicyIteration,
            probe: 0.5 * (lo + hi),
            keep_slabs: false,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("horizon_step", self.horizon_step),
            ("tol_w", self.tol_w),
            ("t_max", self.t_max),
            ("obstacle_tol", self.obstacle_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        let (a, b) = self.window;
        if !(a < b && a > grid.lo() && b < grid.hi()) {
            return Err(Error::InvalidRegion { lo: a, hi: b });
        }
        if !grid.contains(self.probe) {
            return Err(Error::Parameter(format!("probe {} outside the domain", self.probe)));
        }
        Ok(())
    }
}

/// One rung of the horizon ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonRecord {
    pub t: f64,
    /// `sup_window |w_T − w_{T−ΔT}|`
    pub cauchy_diff: f64,
    pub probe: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueSurface {
    #[serde(skip)]
    pub grid: Grid,
    pub values: Vec<f64>,
    pub obstacle: Vec<f64>,
    pub horizon: f64,
    pub history: Vec<HorizonRecord>,
    pub mask: Vec<bool>,
    pub window: (f64, f64),
    pub converged: bool,
    /// `(T, w_T)` at every rung when requested.
    #[serde(skip)]
    pub slabs: Vec<(f64, Vec<f64>)>,
}

impl ValueSurface {
    pub fn eval(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.values, x)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `w − g`.
    pub fn max_gap(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.obstacle)
            .fold(0.0, |m, (w, g)| m.max(w - g))
    }

    /// Whether any node of `[a, b]` is masked.
    pub fn mask_hits(&self, a: f64, b: f64) -> bool {
        self.grid.window(a, b).any(|i| self.mask[i])
    }

    /// Pairs of adjacent nodes across which the mask changes.
    pub fn free_boundary(&self) -> Vec<(f64, f64)> {
        let x = self.grid.nodes();
        self.mask
            .windows(2)
            .enumerate()
            .filter(|(_, m)| m[0] != m[1])
            .map(|(i, _)| (x[i], x[i + 1]))
            .collect()
    }
}

fn mask_of(values: &[f64], obstacle: &[f64], tol: f64) -> Vec<bool> {
    values.iter().zip(obstacle).map(|(w, g)| *g >= w - tol).collect()
}

/// Time-stepper for the implicit obstacle scheme.
pub struct HorizonStepper {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    lu: TridiagonalLu,
    forcing: Vec<f64>,
    obstacle: Vec<f64>,
    w: Vec<f64>,
    active: Vec<bool>,
    scratch: Vec<f64>,
    scheme: ObstacleScheme,
    tol: f64,
    dt: f64,
    steps: usize,
    /// Policy-iteration sweeps used by the last step.
    pub last_sweeps: usize,
}

impl HorizonStepper {
    pub fn new(model: &DiffusionModel, grid: &Grid, rewards: &RewardSpec, dt: f64) -> Result<Self> {
        Self::with_scheme(model, grid, rewards, dt, ObstacleScheme::PolicyIteration, 1e-12)
    }

    pub fn with_scheme(
        model: &DiffusionModel,
        grid: &Grid,
        rewards: &RewardSpec,
        dt: f64,
        scheme: ObstacleScheme,
        tol: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let gen = build_generator(model, grid)?;
        gen.check_monotone(grid)?;
        let rates: Vec<f64> = rewards.discount.sample(grid.nodes()).iter().map(|r| dt * r).collect();
        let lu = gen.shifted_lu(1.0, &rates, dt)?;
        let lower = gen.lower.iter().map(|v| -dt * v).collect();
        let upper = gen.upper.iter().map(|v| -dt * v).collect();
        let diag = gen.diag.iter().zip(&rates).map(|(v, r)| 1.0 + r - dt * v).collect();
        let forcing = rewards.running.sample(grid.nodes()).iter().map(|f| dt * f).collect();
        let obstacle = rewards.terminal.sample(grid.nodes());
        let n = grid.len();
        Ok(Self {
            lower,
            diag,
            upper,
            lu,
            forcing,
            w: obstacle.clone(),
            obstacle,
            active: vec![true; n],
            scratch: vec![0.0; n],
            scheme,
            tol,
            dt,
            steps: 0,
            last_sweeps: 0,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn obstacle(&self) -> &[f64] {
        &self.obstacle
    }

    pub fn step(&mut self) {
        self.w.iter_mut().zip(&self.forcing).for_each(|(w, f)| *w += f);
        match self.scheme {
            ObstacleScheme::Projected => {
                self.lu.solve_in_place(&mut self.w);
                self.w
                    .iter_mut()
                    .zip(&self.obstacle)
                    .for_each(|(w, g)| *w = w.max(*g));
                self.last_sweeps = 1;
            }
            ObstacleScheme::PolicyIteration => self.policy_iteration(),
        }
        self.steps += 1;
    }

    /// Howard iteration for `min(Mv − q, v − g) = 0`, warm-started from the
    /// previous step's stopping set. `self.w` holds `q` on entry.
    fn policy_iteration(&mut self) {
        let n = self.w.len();
        let q = std::mem::take(&mut self.w);
        let mut v = vec![0.0; n];
        let max_sweeps = n + 1;
        let mut sweeps = 0;
        loop {
            sweeps += 1;
            self.masked_solve(&q, &mut v);
            let mut changed = false;
            for i in 0..n {
                let mut mv = self.diag[i] * v[i];
                if i > 0 {
                    mv += self.lower[i] * v[i - 1];
                }
                if i + 1 < n {
                    mv += self.upper[i] * v[i + 1];
                }
                let stop = v[i] - self.obstacle[i] <= mv - q[i] + self.tol;
                if stop != self.active[i] {
                    self.active[i] = stop;
                    changed = true;
                }
            }
            if !changed || sweeps >= max_sweeps {
                break;
            }
        }
        self.last_sweeps = sweeps;
        self.w = v;
    }

    /// Thomas solve with stopped rows replaced by `v_i = g_i`.
    fn masked_solve(&mut self, q: &[f64], v: &mut [f64]) {
        let n = q.len();
        let c = &mut self.scratch;
        let mut prev_c = 0.0;
        let mut prev_d = 0.0;
        for i in 0..n {
            let (l, d, u, rhs) = if self.active[i] {
                (0.0, 1.0, 0.0, self.obstacle[i])
            } else {
                (
                    if i == 0 { 0.0 } else { self.lower[i] },
                    self.diag[i],
                    if i + 1 == n { 0.0 } else { self.upper[i] },
                    q[i],
                )
            };
            let inv = 1.0 / (d - l * prev_c);
            prev_c = u * inv;
            prev_d = (rhs - l * prev_d) * inv;
            c[i] = prev_c;
            v[i] = prev_d;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            v[i] -= c[i] * v[i + 1];
        }
    }

    pub fn advance(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }
}

/// Steps per horizon and the adjusted time step so that `dt_eff` divides `span`.
fn partition(span: f64, dt: f64) -> (usize, f64) {
    let k = (span / dt - 1e-9).ceil().max(1.0) as usize;
    (k, span / k as f64)
}

/// The `t = 0` slice `w_T` of the finite-horizon problem.
pub fn solve_finite_horizon(
    model: &DiffusionModel,
    grid: &Grid,
    rewards: &RewardSpec,
    horizon: f64,
    config: &SolverConfig,
) -> Result<ValueSurface> {
    config.validate(grid)?;
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Parameter(format!("horizon must be nonnegative, got {horizon}")));
    }
    let (k, dt) = if horizon == 0.0 { (0, config.dt) } else { partition(horizon, config.dt) };
    let mut stepper = HorizonStepper::with_scheme(model, grid, rewards, dt, config.scheme, config.obstacle_tol)?;
    stepper.advance(k);
    let values = stepper.w;
    Ok(ValueSurface {
        grid: grid.clone(),
        mask: mask_of(&values, &stepper.obstacle, config.obstacle_tol),
        obstacle: stepper.obstacle,
        values,
        horizon,
        history: Vec::new(),
        window: config.window,
        converged: false,
        slabs: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `μ(f) < 0`
    VanishingDiscount,
    /// `μ(r) > 0`
    Discounted,
    /// `μ(r) = 0`, `μ(f) = 0`: finiteness is not guaranteed either way.
    Critical,
    /// `μ(r) = 0`, `μ(f) > 0`: never stopping pays off linearly in time.
    DivergenceExpected,
}

impl Regime {
    pub fn classify(mu_f: f64, mu_r: f64) -> Self {
        const ZERO: f64 = 1e-12;
        if mu_r > ZERO {
            Regime::Discounted
        } else if mu_f < -ZERO {
            Regime::VanishingDiscount
        } else if mu_f > ZERO {
            Regime::DivergenceExpected
        } else {
            Regime::Critical
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConvergenceStatus {
    Converged,
    NotConverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct InfiniteHorizonSolution {
    pub surface: ValueSurface,
    pub status: ConvergenceStatus,
    pub regime: Regime,
    pub mu_f: f64,
    pub mu_r: f64,
    /// Exponential decay rate of the Cauchy differences, fitted on the
    /// second half of the ladder.
    pub decay: Option<LinearFit>,
    /// Slope of the probe value against `T` over the second half.
    pub probe_slope: Option<LinearFit>,
}

impl InfiniteHorizonSolution {
    pub fn converged(&self) -> bool {
        self.status == ConvergenceStatus::Converged
    }

    pub fn decay_rate(&self) -> Option<f64> {
        self.decay.map(|d| -d.slope)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "status: {:?}\nregime: {:?}\nmu(f) = {:.6e}, mu(r) = {:.6e}\nhorizon reached: {}\n",
            self.status, self.regime, self.mu_f, self.mu_r, self.surface.horizon
        );
        if let Some(last) = self.surface.history.last() {
            s.push_str(&format!("last cauchy difference: {:.3e}\n", last.cauchy_diff));
        }
        if let Some(rate) = self.decay_rate() {
            s.push_str(&format!("fitted decay rate: {rate:.4}\n"));
        }
        if let Some(fit) = self.probe_slope {
            s.push_str(&format!("probe slope: {:.4} (R^2 {:.4})\n", fit.slope, fit.r_squared));
        }
        s
    }
}

fn tail_fit(history: &[HorizonRecord], y: impl Fn(&HorizonRecord) -> Option<f64>) -> Option<LinearFit> {
    let tail = &history[history.len() / 2..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().filter_map(|h| y(h).map(|v| (h.t, v))).unzip();
    linear_fit(&xs, &ys)
}

/// Grows the horizon until the Cauchy criterion holds on the window or
/// `t_max` is reached. Nonconvergence is reported, not raised.
pub fn solve_infinite_horizon(
    model: &DiffusionModel,
    grid: &Grid,
    rewards: &RewardSpec,
    config: &SolverConfig,
) -> Result<InfiniteHorizonSolution> {
    let measure = stationary_density(model, grid)?;
    solve_infinite_horizon_with(model, grid, rewards, config, &measure)
}

pub fn solve_infinite_horizon_with(
    model: &DiffusionModel,
    grid: &Grid,
    rewards: &RewardSpec,
    config: &SolverConfig,
    measure: &InvariantMeasure,
) -> Result<InfiniteHorizonSolution> {
    config.validate(grid)?;
    let mu_f = measure.integrate(&rewards.running.sample(grid.nodes()))?;
    let mu_r = measure.integrate(&rewards.discount.sample(grid.nodes()))?;
    let regime = Regime::classify(mu_f, mu_r);

    let (k, dt) = partition(config.horizon_step, config.dt);
    let mut stepper = HorizonStepper::with_scheme(model, grid, rewards, dt, config.scheme, config.obstacle_tol)?;
    let window = grid.window(config.window.0, config.window.1);
    let probe = config.probe;
    let mut history = Vec::new();
    let mut slabs = Vec::new();
    let mut prev = stepper.values().to_vec();
    let mut status = ConvergenceStatus::NotConverged;
    loop {
        stepper.advance(k);
        let t = stepper.horizon();
        let w = stepper.values();
        let diff = window.clone().map(|i| (w[i] - prev[i]).abs()).fold(0.0, f64::max);
        history.push(HorizonRecord {
            t,
            cauchy_diff: diff,
            probe: grid.interpolate(w, probe),
        });
        if config.keep_slabs {
            slabs.push((t, w.to_vec()));
        }
        prev.copy_from_slice(w);
        if diff < config.tol_w {
            status = ConvergenceStatus::Converged;
            break;
        }
        if t >= config.t_max - 1e-9 {
            break;
        }
    }
    let decay = tail_fit(&history, |h| (h.cauchy_diff > 0.0).then(|| h.cauchy_diff.ln()));
    let probe_slope = tail_fit(&history, |h| Some(h.probe));
    let values = stepper.values().to_vec();
    let surface = ValueSurface {
        grid: grid.clone(),
        mask: mask_of(&values, stepper.obstacle(), config.obstacle_tol),
        obstacle: stepper.obstacle().to_vec(),
        horizon: stepper.horizon(),
        values,
        history,
        window: config.window,
        converged: status == ConvergenceStatus::Converged,
        slabs,
    };
    Ok(InfiniteHorizonSolution {
        surface,
        status,
        regime,
        mu_f,
        mu_r,
        decay,
        probe_slope,
    })
}

/// First-entry rule into `{g ≥ w − ε}`.
pub fn stopping_rule(surface: &ValueSurface, epsilon: f64) -> Result<StoppingRule> {
    if !(epsilon >= 0.0) {
        return Err(Error::Parameter(format!("slack must be nonnegative, got {epsilon}")));
    }
    let mask: Vec<bool> = surface
        .values
        .iter()
        .zip(&surface.obstacle)
        .map(|(w, g)| *g >= w - epsilon)
        .collect();
    let tag = if epsilon == 0.0 { "tau*".to_string() } else { format!("tau_eps({epsilon})") };
    Ok(StoppingRule::from_mask(&surface.grid, &mask, epsilon, tag))
}

#[cfg(test)]
mod tests;
