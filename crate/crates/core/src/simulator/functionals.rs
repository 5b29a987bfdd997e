use serde::Serialize;

use super::{PathEnsemble, PathWalker, StoppingRule};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rewards::RewardSpec;
use crate::stats::{Estimate, Z99_ONE_SIDED};

/// A stopping time evaluated along a simulated path. Every variant is capped
/// by the horizon passed to [`observe_stops`].
#[derive(Debug, Clone, Copy)]
pub enum StopSpec<'a> {
    Zero,
    Fixed(f64),
    /// First sample time at which the path lies in the set.
    Rule(&'a StoppingRule),
    /// `min(rule entry time, t)`.
    RuleCapped(&'a StoppingRule, f64),
}

/// Path quantities frozen at a stopping time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub x: f64,
    pub alpha: f64,
    /// `∫_0^t e^{−α_s} f(X_s) ds`
    pub integral: f64,
    /// `∫_0^t e^{−α_s} ds`
    pub discounted_time: f64,
    /// False when the stop was forced by the cap.
    pub stopped: bool,
}

impl Observation {
    fn capture(w: &PathWalker<'_>, stopped: bool) -> Self {
        Self {
            t: w.t,
            x: w.x,
            alpha: w.alpha,
            integral: w.integral,
            discounted_time: w.discounted_time,
            stopped,
        }
    }

    pub fn discount(&self) -> f64 {
        (-self.alpha).exp()
    }
}

/// Walks a path until every stopping time in `stops` has occurred (or the
/// cap is hit) and returns the frozen quantities in the same order.
pub fn observe_stops(mut w: PathWalker<'_>, stops: &[StopSpec<'_>], cap: f64) -> Vec<Observation> {
    let dt = w.dt();
    let cap_k = (cap / dt).round() as usize;
    let mut out: Vec<Option<Observation>> = vec![None; stops.len()];
    let mut pending = stops.len();
    loop {
        for (slot, stop) in out.iter_mut().zip(stops) {
            if slot.is_some() {
                continue;
            }
            let hit = match *stop {
                StopSpec::Zero => true,
                StopSpec::Fixed(t) => w.k >= (t / dt).round() as usize,
                StopSpec::Rule(rule) => rule.contains(w.x),
                StopSpec::RuleCapped(rule, t) => {
                    rule.contains(w.x) || w.k >= (t / dt).round() as usize
                }
            };
            if hit {
                *slot = Some(Observation::capture(&w, true));
                pending -= 1;
            } else if w.k >= cap_k {
                *slot = Some(Observation::capture(&w, false));
                pending -= 1;
            }
        }
        if pending == 0 {
            break;
        }
        w.step();
    }
    out.into_iter().map(|o| o.unwrap()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeAverageRow {
    pub t: f64,
    pub estimate: Estimate,
    #[serde(skip)]
    pub per_path: Vec<f64>,
}

/// Per-path time averages `(1/t) ∫_0^t φ(X_s) ds` (left-endpoint rule) at
/// each requested time.
pub fn time_average(
    ensemble: &PathEnsemble,
    phi: impl Fn(f64) -> f64 + Sync + Send,
    times: &[f64],
) -> Result<Vec<TimeAverageRow>> {
    let mut ks = Vec::with_capacity(times.len());
    for &t in times {
        if !(t > 0.0) {
            return Err(Error::Parameter(format!("averaging time must be positive, got {t}")));
        }
        ks.push(ensemble.check_time(t)?);
    }
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let rewards = &ensemble.rewards;
    let per_path: Vec<Vec<f64>> = ensemble.map_paths(|i| {
        let mut w = ensemble.walker(i, rewards);
        let mut sum = 0.0;
        let mut out = vec![0.0; ks.len()];
        while w.k < max_k {
            sum += phi(w.x);
            w.step();
            for (j, &k) in ks.iter().enumerate() {
                if k == w.k {
                    out[j] = sum / k as f64;
                }
            }
        }
        out
    });
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let vals: Vec<f64> = per_path.iter().map(|p| p[j]).collect();
            TimeAverageRow {
                t,
                estimate: Estimate::from_samples(&vals),
                per_path: vals,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RuleEvaluation {
    pub payoff: Estimate,
    pub stop_time: Estimate,
    pub discounted_time: Estimate,
    pub unstopped_fraction: f64,
    pub cap: f64,
}

/// Discounted payoff of stopping at the first entry into `rule`, capped at
/// `cap`: `∫_0^{τ∧T} e^{−α} f ds + e^{−α_{τ∧T}} g(X_{τ∧T})`.
pub fn evaluate_rule(
    ensemble: &PathEnsemble,
    rewards: &RewardSpec,
    rule: &StoppingRule,
    cap: f64,
) -> Result<RuleEvaluation> {
    ensemble.check_time(cap)?;
    let obs: Vec<Observation> = ensemble.map_paths(|i| {
        observe_stops(ensemble.walker(i, rewards), &[StopSpec::Rule(rule)], cap)[0]
    });
    let payoff: Vec<f64> = obs
        .iter()
        .map(|o| o.integral + o.discount() * rewards.terminal.eval(o.x))
        .collect();
    let times: Vec<f64> = obs.iter().map(|o| o.t).collect();
    let dtimes: Vec<f64> = obs.iter().map(|o| o.discounted_time).collect();
    let unstopped = obs.iter().filter(|o| !o.stopped).count();
    Ok(RuleEvaluation {
        payoff: Estimate::from_samples(&payoff),
        stop_time: Estimate::from_samples(&times),
        discounted_time: Estimate::from_samples(&dtimes),
        unstopped_fraction: unstopped as f64 / obs.len() as f64,
        cap,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckpointRow {
    pub t: f64,
    /// `E[Z_t]`
    pub value: Estimate,
    /// Paired `E[Z_t − Z_prev]` against the previous checkpoint.
    pub increment: Estimate,
    /// Paired `E[Z_t − Z_0]`.
    pub drift: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupermartingaleReport {
    pub rows: Vec<CheckpointRow>,
    /// Every increment is ≤ 0 up to its one-sided 99% bound.
    pub nonincreasing: bool,
    /// Every drift from time 0 has a 99% interval containing 0.
    pub constant: bool,
    pub stopped: bool,
}

/// Estimates `E[Z_t]` for `Z_t = ∫_0^t e^{−α} f ds + e^{−α_t} w(X_t)` at each
/// checkpoint (and at 0). With `stop`, `Z` is frozen at the rule's entry time.
pub fn supermartingale_check(
    ensemble: &PathEnsemble,
    rewards: &RewardSpec,
    grid: &Grid,
    w: &[f64],
    checkpoints: &[f64],
    stop: Option<&StoppingRule>,
) -> Result<SupermartingaleReport> {
    grid.check_len(w)?;
    let mut times = vec![0.0];
    for &t in checkpoints {
        ensemble.check_time(t)?;
        if t > 0.0 {
            times.push(t);
        }
    }
    let cap = *times.last().unwrap();
    let z: Vec<Vec<f64>> = ensemble.map_paths(|i| {
        let stops: Vec<StopSpec<'_>> = times
            .iter()
            .map(|&t| match stop {
                Some(rule) => StopSpec::RuleCapped(rule, t),
                None => StopSpec::Fixed(t),
            })
            .collect();
        observe_stops(ensemble.walker(i, rewards), &stops, cap)
            .iter()
            .map(|o| o.integral + o.discount() * grid.interpolate(w, o.x))
            .collect()
    });
    let column = |j: usize| -> Vec<f64> { z.iter().map(|p| p[j]).collect() };
    let diff = |j: usize, base: usize| -> Vec<f64> { z.iter().map(|p| p[j] - p[base]).collect() };
    let rows: Vec<CheckpointRow> = (0..times.len())
        .map(|j| CheckpointRow {
            t: times[j],
            value: Estimate::from_samples(&column(j)),
            increment: Estimate::from_samples(&diff(j, j.saturating_sub(1))),
            drift: Estimate::from_samples(&diff(j, 0)),
        })
        .collect();
    let nonincreasing = rows
        .iter()
        .all(|r| r.increment.mean <= Z99_ONE_SIDED * r.increment.std_err + 1e-12);
    let constant = rows.iter().all(|r| r.drift.contains99(0.0) || r.drift.mean.abs() < 1e-12);
    Ok(SupermartingaleReport {
        rows,
        nonincreasing,
        constant,
        stopped: stop.is_some(),
    })
}
