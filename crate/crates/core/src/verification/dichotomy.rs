use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measure::InvariantMeasure;
use crate::model::DiffusionModel;
use crate::rewards::RewardSpec;
use crate::simulator::{
    large_deviation_estimate, simulate_recorded, Averaging, DecayRate, EnsembleSpec,
    LargeDeviationConfig, LargeDeviationTable, StoppingRule,
};
use crate::stats::{Estimate, Z99};
use crate::stopping::{solve_infinite_horizon_with, stopping_rule, InfiniteHorizonSolution, SolverConfig};

#[derive(Debug, Clone)]
pub struct DichotomyConfig {
    pub x0: f64,
    /// Slack below `μ(r)`; `None` means `μ(r)/2`.
    pub epsilon: Option<f64>,
    /// Also run `ε ∈ {μ(r)/4, μ(r)/2, 3μ(r)/4}`.
    pub sensitivity: bool,
    pub ld_times: Vec<f64>,
    pub ld_paths: usize,
    pub paths: usize,
    pub dt: f64,
    /// Cap of the common stopping rule.
    pub cap: f64,
    pub seed: u64,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self {
            x0: 0.0,
            epsilon: None,
            sensitivity: true,
            ld_times: vec![5.0, 10.0, 20.0, 40.0],
            ld_paths: 10_000,
            paths: 10_000,
            dt: 0.01,
            cap: 60.0,
            seed: 2024,
        }
    }
}

/// Original versus modified discounting along common paths and rule.
#[derive(Debug, Clone, Serialize)]
pub struct DiscountComparison {
    pub epsilon: f64,
    /// `λ = μ(r) − ε`
    pub lambda: f64,
    /// Payoff under `e^{−α_t}`.
    pub original: Estimate,
    /// Payoff under `e^{−(α_t ∨ λt)}`.
    pub modified: Estimate,
    /// Paired `original − modified`.
    pub difference: Estimate,
    pub large_deviation: LargeDeviationTable,
    /// `‖f‖(n + (C/ρ)e^{−ρn}) + ‖g‖` with pessimistic empirical `C`, `ρ`.
    pub bound: Option<f64>,
    pub n: usize,
    pub c: Option<f64>,
    pub rho: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyReport {
    pub mu_r: f64,
    pub solution: InfiniteHorizonSolution,
    pub rule: StoppingRule,
    /// `w(x0)`
    pub value: f64,
    pub comparisons: Vec<DiscountComparison>,
    /// The comparison at the configured `ε`.
    pub primary: usize,
    /// `w(x0)` lies in the 99% interval of the original-discount payoff.
    pub value_matches_payoff: bool,
}

impl DichotomyReport {
    pub fn primary(&self) -> &DiscountComparison {
        &self.comparisons[self.primary]
    }

    pub fn to_text(&self) -> String {
        let sol = &self.solution;
        let mut s = format!(
            "mu(r) = {:.6}\nhorizon ladder: {:?} at T = {}, fitted decay rate {}\n",
            self.mu_r,
            sol.status,
            sol.surface.horizon,
            sol.decay_rate().map_or("n/a".to_string(), |r| format!("{r:.4}")),
        );
        let p = self.primary();
        let (lo, hi) = p.original.ci99();
        s.push_str(&format!(
            "w(x0) = {:.6}; MC payoff of '{}' = {:.6} [{:.6}, {:.6}] -> {}\n",
            self.value,
            self.rule.tag,
            p.original.mean,
            lo,
            hi,
            if self.value_matches_payoff { "match" } else { "MISMATCH" }
        ));
        for c in &self.comparisons {
            s.push_str(&format!(
                "eps = {:.4}, lambda = {:.4}: original - modified = {:.6} +- {:.6}; bound {} (n = {}, C = {}, rho = {}) -> {}\n",
                c.epsilon,
                c.lambda,
                c.difference.mean,
                c.difference.half_width(Z99),
                c.bound.map_or("n/a".into(), |b| format!("{b:.4}")),
                c.n,
                c.c.map_or("n/a".into(), |v| format!("{v:.4}")),
                c.rho.map_or("n/a".into(), |v| format!("{v:.4}")),
                match c.within_bound {
                    Some(true) => "within",
                    Some(false) => "EXCEEDED",
                    None => "inconclusive",
                }
            ));
        }
        s
    }
}

fn modified_payoffs(
    model: &DiffusionModel,
    rewards: &RewardSpec,
    rule: &StoppingRule,
    spec: EnsembleSpec,
    lambda: f64,
) -> Result<Vec<(f64, f64)>> {
    let ensemble = simulate_recorded(model, rewards, spec, spec.steps().max(1))?;
    let cap_k = spec.steps();
    Ok(ensemble.map_paths(|i| {
        let mut w = ensemble.walker(i, rewards);
        let dt = w.dt();
        let mut modified = 0.0;
        while !rule.contains(w.x) && w.k < cap_k {
            let m = (-(w.alpha.max(lambda * w.t))).exp();
            modified += m * rewards.running.eval(w.x) * dt;
            w.step();
        }
        let g = rewards.terminal.eval(w.x);
        let m = (-(w.alpha.max(lambda * w.t))).exp();
        (w.integral + w.discount() * g, modified + m * g)
    }))
}

/// Pessimistic `(C, ρ)` from the supremum-deviation frequencies: `ρ` is
/// the fitted rate and `C` the smallest constant putting every upper 99%
/// binomial bound under `C e^{−ρt}`.
fn pessimistic_constants(table: &LargeDeviationTable) -> Option<(f64, f64)> {
    let rho = match table.sup_rate {
        DecayRate::Fitted { p, .. } if p > 0.0 => p,
        _ => return None,
    };
    let n = table.paths as f64;
    let c = table
        .rows
        .iter()
        .map(|r| {
            let upper = r.sup_freq + Z99 * (r.sup_freq * (1.0 - r.sup_freq) / n).sqrt();
            upper.max(3.0 / n) * (rho * r.t).exp()
        })
        .fold(0.0, f64::max);
    Some((c, rho))
}

/// Runs the horizon ladder, the discount comparison and the large-deviation
/// estimate for `r`. Requires `μ(r) > 0`.
pub fn dichotomy_experiment(
    model: &DiffusionModel,
    grid: &Grid,
    rewards: &RewardSpec,
    measure: &InvariantMeasure,
    solver: &SolverConfig,
    cfg: &DichotomyConfig,
) -> Result<DichotomyReport> {
    let mu_r = measure.integrate(&rewards.discount.sample(grid.nodes()))?;
    if !(mu_r > 0.0) {
        return Err(Error::NotApplicable(format!(
            "mu(r) = {mu_r}; use the vanishing-discount route (zero-potential and gamma bound)"
        )));
    }
    let eps0 = cfg.epsilon.unwrap_or(0.5 * mu_r);
    if !(eps0 > 0.0 && eps0 < mu_r) {
        return Err(Error::Parameter(format!("epsilon must lie in (0, mu(r)), got {eps0}")));
    }
    let solution = solve_infinite_horizon_with(model, grid, rewards, solver, measure)?;
    let rule = stopping_rule(&solution.surface, 0.0)?;
    let value = solution.surface.eval(cfg.x0);

    let mut eps_list = vec![eps0];
    if cfg.sensitivity {
        for k in [0.25, 0.5, 0.75] {
            let e = k * mu_r;
            if (e - eps0).abs() > 1e-12 {
                eps_list.push(e);
            }
        }
    }
    let spec = EnsembleSpec {
        x0: cfg.x0,
        horizon: cfg.cap,
        dt: cfg.dt,
        paths: cfg.paths,
        seed: cfg.seed,
    };
    let norms = rewards.norms;
    let mut comparisons = Vec::new();
    for (j, &eps) in eps_list.iter().enumerate() {
        let lambda = mu_r - eps;
        let pay = modified_payoffs(model, rewards, &rule, spec, lambda)?;
        let orig: Vec<f64> = pay.iter().map(|p| p.0).collect();
        let modi: Vec<f64> = pay.iter().map(|p| p.1).collect();
        let diff: Vec<f64> = pay.iter().map(|p| p.0 - p.1).collect();
        let ld = large_deviation_estimate(
            model,
            rewards,
            &LargeDeviationConfig {
                phi: rewards.discount.clone(),
                target: mu_r,
                epsilon: eps,
                x0: cfg.x0,
                times: cfg.ld_times.clone(),
                paths: cfg.ld_paths,
                seed: cfg.seed.wrapping_add(1 + j as u64),
                dt: cfg.dt,
                averaging: Averaging::Plain,
            },
        )?;
        let n = cfg.ld_times[0].floor() as usize + 1;
        let consts = pessimistic_constants(&ld);
        let bound = consts.map(|(c, rho)| norms.f * (n as f64 + c / rho * (-rho * n as f64).exp()) + norms.g);
        let difference = Estimate::from_samples(&diff);
        let within_bound = bound.map(|b| difference.mean.abs() - difference.half_width(Z99) <= b);
        comparisons.push(DiscountComparison {
            epsilon: eps,
            lambda,
            original: Estimate::from_samples(&orig),
            modified: Estimate::from_samples(&modi),
            difference,
            large_deviation: ld,
            bound,
            n,
            c: consts.map(|c| c.0),
            rho: consts.map(|c| c.1),
            within_bound,
        });
    }
    let value_matches_payoff = comparisons[0].original.contains99(value);
    Ok(DichotomyReport {
        mu_r,
        solution,
        rule,
        value,
        comparisons,
        primary: 0,
        value_matches_payoff,
    })
}
