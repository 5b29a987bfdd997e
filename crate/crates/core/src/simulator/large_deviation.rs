use rayon::prelude::*;
use serde::Serialize;

use super::{EnsembleSpec, PathWalker};
use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::model::DiffusionModel;
use crate::rewards::RewardSpec;
use crate::stats::linear_fit;

/// How the empirical average is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Averaging {
    /// `(1/t) ∫_0^t φ(X_s) ds`
    Plain,
    /// `∫_0^t e^{−α_s} φ(X_s) ds / ∫_0^t e^{−α_s} ds`
    Discounted,
}

#[derive(Debug, Clone)]
pub struct LargeDeviationConfig {
    pub phi: ScalarFn,
    pub target: f64,
    pub epsilon: f64,
    pub x0: f64,
    pub times: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    pub dt: f64,
    pub averaging: Averaging,
}

#[derive(Debug, Clone, Serialize)]
pub struct LargeDeviationRow {
    pub t: f64,
    /// `P{|avg_t − target| > ε}`
    pub freq: f64,
    /// `P{sup_{t ≤ s ≤ t_max} |avg_s − target| > ε}`
    pub sup_freq: f64,
    pub exceedances: usize,
    pub zero_observed: bool,
}

/// Fitted exponential decay `freq ≈ C e^{−p t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DecayRate {
    Fitted { p: f64, log_c: f64, r_squared: f64, points: usize },
    /// Every frequency was zero (or only one was positive) at this path
    /// count.
    Unresolved,
}

impl DecayRate {
    pub fn rate(&self) -> Option<f64> {
        match self {
            DecayRate::Fitted { p, .. } => Some(*p),
            DecayRate::Unresolved => None,
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            DecayRate::Fitted { log_c, .. } => Some(log_c.exp()),
            DecayRate::Unresolved => None,
        }
    }

    pub fn fit(times: &[f64], freqs: &[f64]) -> Self {
        let (ts, ls): (Vec<f64>, Vec<f64>) = times
            .iter()
            .zip(freqs)
            .filter(|(_, f)| **f > 0.0)
            .map(|(t, f)| (*t, f.ln()))
            .unzip();
        match linear_fit(&ts, &ls) {
            Some(fit) => DecayRate::Fitted {
                p: -fit.slope,
                log_c: fit.intercept,
                r_squared: fit.r_squared,
                points: ts.len(),
            },
            None => DecayRate::Unresolved,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LargeDeviationTable {
    pub rows: Vec<LargeDeviationRow>,
    pub paths: usize,
    pub rate: DecayRate,
    pub sup_rate: DecayRate,
}

impl LargeDeviationTable {
    /// Whether consecutive frequencies decrease by more than `z` standard
    /// errors of their difference (binomial variances, treated as
    /// independent).
    pub fn strictly_decreasing(&self, z: f64) -> bool {
        let n = self.paths as f64;
        self.rows.windows(2).all(|w| {
            let (a, b) = (w[0].freq, w[1].freq);
            let se = ((a * (1.0 - a) + b * (1.0 - b)) / n).sqrt();
            a - b > z * se
        })
    }
}

/// Empirical probability that the running average of `φ` deviates from
/// `target` by more than `ε`, tabulated over `times`, with an exponential
/// rate fitted on the positive frequencies.
pub fn large_deviation_estimate(
    model: &DiffusionModel,
    rewards: &RewardSpec,
    cfg: &LargeDeviationConfig,
) -> Result<LargeDeviationTable> {
    if cfg.times.is_empty() || cfg.times.windows(2).any(|w| w[1] <= w[0]) || cfg.times[0] <= 0.0 {
        return Err(Error::Parameter("times must be positive and strictly ascending".into()));
    }
    if cfg.paths < 1000 {
        return Err(Error::Parameter(format!("need at least 1000 paths, got {}", cfg.paths)));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {}", cfg.epsilon)));
    }
    let t_max = *cfg.times.last().unwrap();
    let spec = EnsembleSpec {
        x0: cfg.x0,
        horizon: t_max,
        dt: cfg.dt,
        paths: cfg.paths,
        seed: cfg.seed,
    };
    // validates dt, x0 and stiffness
    super::simulate_recorded(
        model,
        rewards,
        EnsembleSpec { paths: 1, horizon: cfg.dt, ..spec },
        1,
    )?;
    let ks: Vec<usize> = cfg.times.iter().map(|t| (t / cfg.dt).round() as usize).collect();
    let k_max = *ks.last().unwrap();

    let per_path: Vec<(Vec<bool>, usize)> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut w = PathWalker::new(model, rewards, &spec, i);
            let (mut num, mut den) = (0.0, 0.0);
            let mut at_times = vec![false; ks.len()];
            // last step index with an exceedance (0 = none)
            let mut last_exceed = 0usize;
            while w.k < k_max {
                let weight = match cfg.averaging {
                    Averaging::Plain => 1.0,
                    Averaging::Discounted => w.discount(),
                };
                num += weight * cfg.phi.eval(w.x);
                den += weight;
                w.step();
                let exceed = den > 0.0 && (num / den - cfg.target).abs() > cfg.epsilon;
                if exceed {
                    last_exceed = w.k;
                }
                for (j, &k) in ks.iter().enumerate() {
                    if k == w.k {
                        at_times[j] = exceed;
                    }
                }
            }
            (at_times, last_exceed)
        })
        .collect();

    let n = cfg.paths as f64;
    let rows: Vec<LargeDeviationRow> = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let exceedances = per_path.iter().filter(|p| p.0[j]).count();
            let sup_count = per_path.iter().filter(|p| p.1 >= k && p.1 > 0).count();
            LargeDeviationRow {
                t: cfg.times[j],
                freq: exceedances as f64 / n,
                sup_freq: sup_count as f64 / n,
                exceedances,
                zero_observed: exceedances == 0,
            }
        })
        .collect();
    let freqs: Vec<f64> = rows.iter().map(|r| r.freq).collect();
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_freq).collect();
    Ok(LargeDeviationTable {
        rate: DecayRate::fit(&cfg.times, &freqs),
        sup_rate: DecayRate::fit(&cfg.times, &sups),
        rows,
        paths: cfg.paths,
    })
}
