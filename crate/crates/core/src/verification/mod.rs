//! Independent checks of solved surfaces: discrete complementarity, the
//! Bellman inequality along simulated paths, and the two-regime experiment
//! for discount rates with positive stationary mean.

mod dichotomy;

pub use dichotomy::{dichotomy_experiment, DichotomyConfig, DichotomyReport, DiscountComparison};

use serde::Serialize;

use crate::error::Result;
use crate::generator::build_generator;
use crate::grid::Grid;
use crate::model::DiffusionModel;
use crate::rewards::RewardSpec;
use crate::simulator::{observe_stops, PathEnsemble, StopSpec};
use crate::stats::{Estimate, Z99};
use crate::stopping::{SolverConfig, ValueSurface};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyTolerances {
    /// PDE residual tolerance.
    pub tol_c: f64,
    /// Obstacle-gap tolerance on stopping nodes.
    pub tol_s: f64,
}

impl VerifyTolerances {
    /// `tol_c = 10·tol_w`.
    pub fn from_solver(config: &SolverConfig) -> Self {
        Self {
            tol_c: 10.0 * config.tol_w,
            tol_s: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeClass {
    Continuation,
    Stopping,
    BoundaryBand,
}

impl NodeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeClass::Continuation => "continuation",
            NodeClass::Stopping => "stopping",
            NodeClass::BoundaryBand => "boundary-band",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplementarityReport {
    pub x: Vec<f64>,
    /// `(−𝒜w + rw − f)_i`
    pub rho: Vec<f64>,
    /// `(w − g)_i`
    pub delta: Vec<f64>,
    pub class: Vec<NodeClass>,
    pub tolerances: VerifyTolerances,
    /// Largest `|ρ|` on continuation nodes.
    pub continuation_rho: f64,
    /// Smallest `δ` on continuation nodes.
    pub continuation_delta: f64,
    /// Largest `|δ|` on stopping nodes.
    pub stopping_delta: f64,
    /// Smallest `ρ` on stopping nodes.
    pub stopping_rho: f64,
    /// Largest `|min(ρ, δ)|` outside the band.
    pub complementarity: f64,
    /// Largest `|min(ρ, δ)|` inside the band.
    pub band_complementarity: f64,
    /// Grid positions that break a condition.
    pub violations: Vec<f64>,
    pub pass: bool,
}

impl ComplementarityReport {
    pub fn to_text(&self) -> String {
        let count = |c: NodeClass| self.class.iter().filter(|k| **k == c).count();
        format!(
            "[{}] complementarity (tol_c = {:.1e}, tol_s = {:.1e})\n\
             continuation nodes {}: max |rho| = {:.3e}, min delta = {:.3e}\n\
             stopping nodes {}: max |delta| = {:.3e}, min rho = {:.3e}\n\
             boundary band nodes {}: max |min(rho, delta)| = {:.3e}\n\
             max |min(rho, delta)| outside band = {:.3e}\n\
             violations: {}\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.tolerances.tol_c,
            self.tolerances.tol_s,
            count(NodeClass::Continuation),
            self.continuation_rho,
            self.continuation_delta,
            count(NodeClass::Stopping),
            self.stopping_delta,
            self.stopping_rho,
            count(NodeClass::BoundaryBand),
            self.band_complementarity,
            self.complementarity,
            self.violations.len(),
        )
    }
}

/// Discrete complementarity `min(−𝒜w + rw − f, w − g) = 0` on every node,
/// reflecting rows included. Nodes on either side of a change between
/// stopping and continuation form the boundary band.
pub fn vi_residual(
    model: &DiffusionModel,
    rewards: &RewardSpec,
    surface: &ValueSurface,
    tol: VerifyTolerances,
) -> Result<ComplementarityReport> {
    let grid = &surface.grid;
    let w = &surface.values;
    grid.check_len(w)?;
    let gen = build_generator(model, grid)?;
    let aw = gen.apply(w);
    let nodes = grid.nodes();
    let f = rewards.running.sample(nodes);
    let r = rewards.discount.sample(nodes);
    let g = rewards.terminal.sample(nodes);
    let n = grid.len();
    let rho: Vec<f64> = (0..n).map(|i| -aw[i] + r[i] * w[i] - f[i]).collect();
    let delta: Vec<f64> = (0..n).map(|i| w[i] - g[i]).collect();
    let stopping: Vec<bool> = delta.iter().map(|d| *d <= tol.tol_s).collect();
    let class: Vec<NodeClass> = (0..n)
        .map(|i| {
            let edge = (i > 0 && stopping[i - 1] != stopping[i])
                || (i + 1 < n && stopping[i + 1] != stopping[i]);
            if edge {
                NodeClass::BoundaryBand
            } else if stopping[i] {
                NodeClass::Stopping
            } else {
                NodeClass::Continuation
            }
        })
        .collect();

    let mut rep = ComplementarityReport {
        x: nodes.to_vec(),
        continuation_rho: 0.0,
        continuation_delta: f64::INFINITY,
        stopping_delta: 0.0,
        stopping_rho: f64::INFINITY,
        complementarity: 0.0,
        band_complementarity: 0.0,
        violations: Vec::new(),
        pass: true,
        tolerances: tol,
        rho,
        delta,
        class,
    };
    for i in 0..n {
        let (p, d) = (rep.rho[i], rep.delta[i]);
        let m = p.min(d).abs();
        let ok = match rep.class[i] {
            NodeClass::Continuation => {
                rep.continuation_rho = rep.continuation_rho.max(p.abs());
                rep.continuation_delta = rep.continuation_delta.min(d);
                p.abs() <= tol.tol_c && d > 0.0
            }
            NodeClass::Stopping => {
                rep.stopping_delta = rep.stopping_delta.max(d.abs());
                rep.stopping_rho = rep.stopping_rho.min(p);
                d.abs() <= tol.tol_s && p >= -tol.tol_c
            }
            NodeClass::BoundaryBand => {
                rep.band_complementarity = rep.band_complementarity.max(m);
                true
            }
        };
        if rep.class[i] != NodeClass::BoundaryBand {
            rep.complementarity = rep.complementarity.max(m);
        }
        let ok = ok && (rep.class[i] == NodeClass::BoundaryBand || m <= tol.tol_c);
        if !ok {
            rep.violations.push(nodes[i]);
        }
    }
    rep.pass = rep.violations.is_empty();
    Ok(rep)
}

/// `w − amplitude·exp(−(x − centre)²/(2 width²))` with the mask recomputed.
/// A positive amplitude lowers the surface.
pub fn inject_bump(surface: &ValueSurface, centre: f64, width: f64, amplitude: f64) -> ValueSurface {
    let mut out = surface.clone();
    for (w, &x) in out.values.iter_mut().zip(surface.grid.nodes()) {
        let z = (x - centre) / width;
        *w -= amplitude * (-0.5 * z * z).exp();
    }
    out.mask = out.values.iter().zip(&out.obstacle).map(|(w, g)| *g >= *w).collect();
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct BellmanRow {
    pub label: String,
    /// `E[∫_0^σ e^{−α} f + e^{−α_σ} g(X_σ)]`
    pub lhs: Estimate,
    /// `E[∫_0^{σ∧τ} e^{−α} f + 1{σ<τ} e^{−α_σ} g(X_σ) + 1{σ≥τ} e^{−α_τ} w(X_τ)]`
    pub rhs: Estimate,
    /// Paired `lhs − rhs`.
    pub difference: Estimate,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BellmanReport {
    pub rows: Vec<BellmanRow>,
    pub pass: bool,
}

impl BellmanReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("[{}] Bellman inequality\n", if self.pass { "PASS" } else { "FAIL" });
        for r in &self.rows {
            s.push_str(&format!(
                "    {}: lhs {:.5} +- {:.5}, rhs {:.5} +- {:.5}, lhs - rhs {:.5} +- {:.5} -> {}\n",
                r.label,
                r.lhs.mean,
                r.lhs.half_width(Z99),
                r.rhs.mean,
                r.rhs.half_width(Z99),
                r.difference.mean,
                r.difference.half_width(Z99),
                if r.pass { "PASS" } else { "FAIL" }
            ));
        }
        s
    }
}

/// A `(σ, τ)` pair: `σ` must be bounded (its cap is the replay horizon).
#[derive(Debug, Clone, Copy)]
pub struct StopPair<'a> {
    pub sigma: StopSpec<'a>,
    pub sigma_cap: f64,
    pub tau: StopSpec<'a>,
}

/// Monte Carlo check of the Bellman inequality for each pair.
pub fn bellman_inequality_check(
    rewards: &RewardSpec,
    surface: &ValueSurface,
    ensemble: &PathEnsemble,
    pairs: &[(String, StopPair<'_>)],
) -> Result<BellmanReport> {
    let grid: &Grid = &surface.grid;
    let w = &surface.values;
    let mut rows = Vec::with_capacity(pairs.len());
    for (label, pair) in pairs {
        ensemble.check_time(pair.sigma_cap)?;
        let samples: Vec<(f64, f64)> = ensemble.map_paths(|i| {
            let o = observe_stops(ensemble.walker(i, rewards), &[pair.sigma, pair.tau], pair.sigma_cap);
            let (s, t) = (o[0], o[1]);
            let lhs = s.integral + s.discount() * rewards.terminal.eval(s.x);
            let tau_first = t.stopped && t.t <= s.t;
            let rhs = if tau_first {
                t.integral + t.discount() * grid.interpolate(w, t.x)
            } else {
                lhs
            };
            (lhs, rhs)
        });
        let lhs: Vec<f64> = samples.iter().map(|p| p.0).collect();
        let rhs: Vec<f64> = samples.iter().map(|p| p.1).collect();
        let diff: Vec<f64> = samples.iter().map(|p| p.0 - p.1).collect();
        let difference = Estimate::from_samples(&diff);
        rows.push(BellmanRow {
            label: label.clone(),
            lhs: Estimate::from_samples(&lhs),
            rhs: Estimate::from_samples(&rhs),
            pass: difference.mean <= difference.half_width(Z99) + 1e-12,
            difference,
        });
    }
    Ok(BellmanReport {
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}
