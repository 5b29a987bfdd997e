//! Euler–Maruyama path simulation with reflection at the truncation
//! boundary, and Monte Carlo estimators of path functionals.
//!
//! Paths are never stored at full resolution. A [`PathEnsemble`] keeps a
//! coarse record plus everything needed to replay any path bit-for-bit:
//! path `i` draws its normals from a ChaCha8 stream selected by `i` under the
//! master seed, so replay is independent of thread scheduling.

mod functionals;
mod large_deviation;
mod rule;

pub use functionals::{
    evaluate_rule, observe_stops, supermartingale_check, time_average, CheckpointRow, Observation,
    RuleEvaluation, StopSpec, SupermartingaleReport, TimeAverageRow,
};
pub use large_deviation::{
    large_deviation_estimate, Averaging, DecayRate, LargeDeviationConfig, LargeDeviationRow,
    LargeDeviationTable,
};
pub use rule::StoppingRule;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::DiffusionModel;
use crate::rewards::RewardSpec;

/// Stored samples per path when the caller does not choose a stride.
const DEFAULT_RECORD_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EnsembleSpec {
    pub x0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// A reproducible ensemble of simulated paths.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub model: DiffusionModel,
    pub rewards: RewardSpec,
    pub spec: EnsembleSpec,
    record_every: usize,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    alphas: Vec<Vec<f64>>,
}

/// Step-by-step replay of one path. `integral` is the left-endpoint
/// quadrature of `∫ e^{−α_s} f(X_s) ds` for the rewards it was created with.
#[derive(Debug, Clone)]
pub struct PathWalker<'a> {
    model: &'a DiffusionModel,
    rewards: &'a RewardSpec,
    rng: ChaCha8Rng,
    dt: f64,
    sqrt_dt: f64,
    pub k: usize,
    pub t: f64,
    pub x: f64,
    pub alpha: f64,
    pub integral: f64,
    /// `∫ e^{−α_s} ds` accumulated the same way.
    pub discounted_time: f64,
}

impl<'a> PathWalker<'a> {
    pub(crate) fn new(model: &'a DiffusionModel, rewards: &'a RewardSpec, spec: &EnsembleSpec, path: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(path as u64);
        Self {
            model,
            rewards,
            rng,
            dt: spec.dt,
            sqrt_dt: spec.dt.sqrt(),
            k: 0,
            t: 0.0,
            x: spec.x0,
            alpha: 0.0,
            integral: 0.0,
            discounted_time: 0.0,
        }
    }

    #[inline]
    pub fn discount(&self) -> f64 {
        (-self.alpha).exp()
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances one step.
    pub fn step(&mut self) {
        let x = self.x;
        let dt = self.dt;
        let disc = self.discount();
        self.integral += disc * self.rewards.running.eval(x) * dt;
        self.discounted_time += disc * dt;
        self.alpha += self.rewards.discount.eval(x) * dt;
        let z: f64 = StandardNormal.sample(&mut self.rng);
        let mut next = x + self.model.b(x) * dt + self.model.sigma(x) * self.sqrt_dt * z;
        let (lo, hi) = (self.model.lo, self.model.hi);
        if next > hi {
            next = 2.0 * hi - next;
        }
        if next < lo {
            next = 2.0 * lo - next;
        }
        self.x = next.clamp(lo, hi);
        self.k += 1;
        self.t = self.k as f64 * dt;
    }
}

/// Simulates `n` paths from `x0` up to `horizon`, recording about 1000
/// samples per path.
pub fn simulate(
    model: &DiffusionModel,
    rewards: &RewardSpec,
    x0: f64,
    horizon: f64,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let steps = (horizon / dt).round().max(1.0) as usize;
    let every = steps.div_ceil(DEFAULT_RECORD_POINTS).max(1);
    simulate_recorded(model, rewards, EnsembleSpec { x0, horizon, dt, paths: n, seed }, every)
}

/// Simulates with an explicit recording stride (in steps).
pub fn simulate_recorded(
    model: &DiffusionModel,
    rewards: &RewardSpec,
    spec: EnsembleSpec,
    record_every: usize,
) -> Result<PathEnsemble> {
    if !(spec.dt > 0.0) || !(spec.horizon > 0.0) {
        return Err(Error::Parameter(format!(
            "need dt > 0 and horizon > 0, got dt = {}, horizon = {}",
            spec.dt, spec.horizon
        )));
    }
    if spec.paths == 0 {
        return Err(Error::Parameter("need at least one path".into()));
    }
    if !(spec.x0 >= model.lo && spec.x0 <= model.hi) {
        return Err(Error::Parameter(format!(
            "x0 = {} outside domain [{}, {}]",
            spec.x0, model.lo, model.hi
        )));
    }
    let probe = Grid::with_max_spacing(model.lo, model.hi, (model.hi - model.lo) / 400.0)?;
    model.sigma_min(&probe)?;
    let stiffness = model.drift_stiffness(&probe);
    if spec.dt * stiffness >= 1.0 {
        return Err(Error::StepSize { dt: spec.dt, stiffness });
    }
    let record_every = record_every.max(1);
    let steps = spec.steps();
    let mut record_steps: Vec<usize> = (0..=steps).step_by(record_every).collect();
    if *record_steps.last().unwrap() != steps {
        record_steps.push(steps);
    }
    let times = record_steps.iter().map(|&k| k as f64 * spec.dt).collect();
    let per_path: Vec<(Vec<f64>, Vec<f64>)> = (0..spec.paths)
        .into_par_iter()
        .map(|i| {
            let mut w = PathWalker::new(model, rewards, &spec, i);
            let mut xs = Vec::with_capacity(record_steps.len());
            let mut al = Vec::with_capacity(record_steps.len());
            for &k in &record_steps {
                while w.k < k {
                    w.step();
                }
                xs.push(w.x);
                al.push(w.alpha);
            }
            (xs, al)
        })
        .collect();
    let (states, alphas) = per_path.into_iter().unzip();
    Ok(PathEnsemble {
        model: model.clone(),
        rewards: rewards.clone(),
        spec,
        record_every,
        times,
        states,
        alphas,
    })
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.spec.paths
    }

    pub fn is_empty(&self) -> bool {
        self.spec.paths == 0
    }

    pub fn record_every(&self) -> usize {
        self.record_every
    }

    /// Recording times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Recorded states of path `i`.
    pub fn states(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    /// Recorded accumulated discount `α_t` of path `i`.
    pub fn alphas(&self, i: usize) -> &[f64] {
        &self.alphas[i]
    }

    /// States of every path at the final recorded time.
    pub fn terminal_states(&self) -> Vec<f64> {
        self.states.iter().map(|s| *s.last().unwrap()).collect()
    }

    /// `α` at the horizon for every path (the finite-horizon proxy for
    /// `R = lim α_t`).
    pub fn terminal_alphas(&self) -> Vec<f64> {
        self.alphas.iter().map(|s| *s.last().unwrap()).collect()
    }

    /// Replays path `i` at full resolution under the given rewards.
    pub fn walker<'a>(&'a self, i: usize, rewards: &'a RewardSpec) -> PathWalker<'a> {
        PathWalker::new(&self.model, rewards, &self.spec, i)
    }

    /// Maps every path through `f` in parallel, returning results in path
    /// order.
    pub fn map_paths<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        (0..self.spec.paths).into_par_iter().map(f).collect()
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || t > self.spec.horizon * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "time {t} outside [0, {}]",
                self.spec.horizon
            )));
        }
        Ok((t / self.spec.dt).round() as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::ScalarFn;
    use crate::stats::Estimate;

    fn setup() -> (DiffusionModel, RewardSpec) {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -8.0, 8.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 160).unwrap();
        let r = RewardSpec::undiscounted(ScalarFn::zero(), ScalarFn::zero(), &g).unwrap();
        (m, r)
    }

    #[test]
    fn zero_rate_gives_zero_alpha() {
        let (m, r) = setup();
        let e = simulate(&m, &r, 0.5, 5.0, 1e-2, 20, 3).unwrap();
        for i in 0..e.len() {
            assert!(e.alphas(i).iter().all(|a| *a == 0.0));
        }
    }

    #[test]
    fn alpha_nondecreasing() {
        let (m, _) = setup();
        let g = Grid::new(-8.0, 8.0, 160).unwrap();
        let r = RewardSpec::new(
            ScalarFn::zero(),
            ScalarFn::zero(),
            ScalarFn::new("r", |x: f64| 0.5 * (1.0 + x.tanh())),
            &g,
        )
        .unwrap();
        let e = simulate(&m, &r, 0.0, 10.0, 1e-2, 16, 11).unwrap();
        for i in 0..e.len() {
            assert!(e.alphas(i).windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn same_seed_same_paths() {
        let (m, r) = setup();
        let a = simulate(&m, &r, 1.0, 3.0, 1e-2, 32, 42).unwrap();
        let b = simulate(&m, &r, 1.0, 3.0, 1e-2, 32, 42).unwrap();
        let c = simulate(&m, &r, 1.0, 3.0, 1e-2, 32, 43).unwrap();
        for i in 0..32 {
            assert_eq!(a.states(i), b.states(i));
        }
        assert_ne!(a.states(0), c.states(0));
    }

    #[test]
    fn replay_matches_record() {
        let (m, r) = setup();
        let e = simulate_recorded(
            &m,
            &r,
            EnsembleSpec { x0: 0.0, horizon: 1.0, dt: 0.01, paths: 4, seed: 9 },
            10,
        )
        .unwrap();
        let mut w = e.walker(2, &r);
        for (j, &t) in e.times().iter().enumerate() {
            while w.t < t - 1e-12 {
                w.step();
            }
            assert_eq!(w.x, e.states(2)[j]);
        }
    }

    #[test]
    fn ou_terminal_moments() {
        let (m, r) = setup();
        let e = simulate(&m, &r, 0.0, 50.0, 1e-2, 4000, 2024).unwrap();
        let xt = e.terminal_states();
        let mean = Estimate::from_samples(&xt);
        assert!(mean.contains99(0.0), "{mean:?}");
        let sq: Vec<f64> = xt.iter().map(|x| x * x).collect();
        let var = Estimate::from_samples(&sq);
        // Euler bias on the variance is O(dt) = 0.5%
        assert!((var.mean - 1.0).abs() <= var.half_width(crate::stats::Z99) + 0.01, "{var:?}");
    }

    #[test]
    fn stiff_step_rejected() {
        let m = DiffusionModel::ornstein_uhlenbeck(50.0, 0.0, 1.0, -3.0, 3.0).unwrap();
        let g = Grid::new(-3.0, 3.0, 60).unwrap();
        let r = RewardSpec::undiscounted(ScalarFn::zero(), ScalarFn::zero(), &g).unwrap();
        assert!(matches!(
            simulate(&m, &r, 0.0, 1.0, 0.05, 4, 0),
            Err(Error::StepSize { .. })
        ));
    }
}
