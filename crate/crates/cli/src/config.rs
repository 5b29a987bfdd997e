//! Run configuration files.
//!
//! A config is TOML with the sections `model`, `rewards`, `grid`, `solver`,
//! `potential`, `simulation`, `verify` and `output`. Everything except
//! `rewards` and `grid` has defaults. [`RunConfig::resolve`] fills every
//! default in, so the resolved config written to the manifest describes the
//! run completely.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vstop::{build_generator, DiffusionModel, Grid, ObstacleScheme, RewardSpec, SolverConfig};

use crate::error::CliError;
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    pub rewards: RewardSection,
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Either a named family or drift/volatility expressions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: Option<String>,
    pub theta: Option<f64>,
    pub mean: Option<f64>,
    pub a: Option<f64>,
    pub sigma: Option<f64>,
    pub drift: Option<String>,
    pub volatility: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSection {
    pub f: String,
    pub g: String,
    #[serde(default = "zero_expr")]
    pub r: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_lo: f64,
    pub x_hi: f64,
    /// Number of intervals.
    #[serde(alias = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    #[default]
    PolicyIteration,
    Projected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    pub horizon_step: f64,
    /// Cauchy window; the inner 60% of the domain when absent.
    pub window: Option<[f64; 2]>,
    pub tol_w: f64,
    pub t_max: f64,
    pub obstacle_tol: f64,
    pub scheme: SchemeName,
    /// Defaults to the domain midpoint.
    pub probe: Option<f64>,
    /// Drift shift for the stopping-time bound; `μ(f)/2` when absent.
    pub d: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon_step: 1.0,
            window: None,
            tol_w: 1e-4,
            t_max: 500.0,
            obstacle_tol: 1e-12,
            scheme: SchemeName::PolicyIteration,
            probe: None,
            d: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    /// Rates of the resolvent potentials to write.
    pub alphas: Vec<f64>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self { alphas: vec![0.5, 0.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub dt: f64,
    /// Paths per ensemble.
    pub n: usize,
    /// Horizon of the main ensemble.
    #[serde(alias = "T")]
    pub t: f64,
    pub seed: u64,
    pub x0: f64,
    /// Time-average checkpoints; `[t/4, t/2, t]` when empty.
    pub lln_times: Vec<f64>,
    pub ld_times: Vec<f64>,
    /// Starting points for the deviation frequencies; the worst case is
    /// written. `[x0]` when empty.
    pub ld_starts: Vec<f64>,
    pub ld_epsilon: f64,
    pub tv_starts: Vec<f64>,
    pub tv_times: Vec<f64>,
    /// Slacks of the `τ_ε` rules to evaluate.
    pub epsilons: Vec<f64>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            n: 1000,
            t: 20.0,
            seed: 2024,
            x0: 0.0,
            lln_times: Vec::new(),
            ld_times: vec![5.0, 10.0, 20.0, 40.0],
            ld_starts: Vec::new(),
            ld_epsilon: 0.2,
            tv_starts: vec![1.0, 2.0, 3.0],
            tv_times: (0..=10).map(|k| 1.0 + 0.5 * k as f64).collect(),
            epsilons: vec![0.05, 0.1, 0.2],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Supermartingale checkpoints; five points on `(0, simulation.t]`
    /// when empty.
    pub checkpoints: Vec<f64>,
    /// Complementarity tolerance; `10 tol_w` when absent.
    pub tol_c: Option<f64>,
    /// Gaussian bump `[centre, width, amplitude]` subtracted from `w`
    /// before checking, to confirm the checks can fail.
    pub fault: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "runs".into() }
    }
}

/// Refinement stops here.
const MAX_INTERVALS: usize = 1 << 20;

fn zero_expr() -> String {
    "0".into()
}

/// Parsed reward expressions.
#[derive(Debug, Clone)]
pub struct RewardExprs {
    pub f: Expr,
    pub g: Expr,
    pub r: Expr,
}

/// A resolved config together with the objects it describes.
pub struct Problem {
    pub config: RunConfig,
    pub model: DiffusionModel,
    pub grid: Grid,
    pub rewards: RewardSpec,
    pub exprs: RewardExprs,
    pub solver: SolverConfig,
    /// Interval count in the config file when the grid had to be refined
    /// to keep the scheme monotone.
    pub refined_from: Option<usize>,
}

fn parse_field(field: &str, src: &str) -> Result<Expr, CliError> {
    Expr::parse(src).map_err(|source| CliError::Expression {
        field: field.to_string(),
        source,
    })
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Fills in every default and builds the model, grid, rewards and solver
    /// settings.
    pub fn resolve(mut self) -> Result<Problem, CliError> {
        let (lo, hi) = (self.grid.x_lo, self.grid.x_hi);
        let model = self.resolve_model(lo, hi)?;
        let mut refined_from = None;
        let grid = loop {
            let grid = Grid::new(lo, hi, self.grid.n)?;
            if build_generator(&model, &grid)?.first_non_monotone().is_none() {
                break grid;
            }
            if self.grid.n >= MAX_INTERVALS {
                return Err(CliError::Config(format!(
                    "scheme is not monotone even with {} intervals",
                    self.grid.n
                )));
            }
            refined_from.get_or_insert(self.grid.n);
            self.grid.n *= 2;
        };

        let exprs = RewardExprs {
            f: parse_field("rewards.f", &self.rewards.f)?,
            g: parse_field("rewards.g", &self.rewards.g)?,
            r: parse_field("rewards.r", &self.rewards.r)?,
        };
        let rewards = RewardSpec::new(exprs.f.to_fn(), exprs.g.to_fn(), exprs.r.to_fn(), &grid)?;

        let defaults = SolverConfig::for_domain(lo, hi);
        let s = &mut self.solver;
        let window = *s.window.get_or_insert([defaults.window.0, defaults.window.1]);
        let probe = *s.probe.get_or_insert(defaults.probe);
        let solver = SolverConfig {
            dt: s.dt,
            horizon_step: s.horizon_step,
            window: (window[0], window[1]),
            tol_w: s.tol_w,
            t_max: s.t_max,
            obstacle_tol: s.obstacle_tol,
            scheme: match s.scheme {
                SchemeName::PolicyIteration => ObstacleScheme::PolicyIteration,
                SchemeName::Projected => ObstacleScheme::Projected,
            },
            probe,
            keep_slabs: false,
        };
        solver.validate(&grid)?;

        let sim = &mut self.simulation;
        if !(sim.dt > 0.0 && sim.t > 0.0 && sim.n > 0) {
            return Err(CliError::Config("simulation needs dt > 0, t > 0 and n > 0".into()));
        }
        if sim.ld_starts.is_empty() {
            sim.ld_starts = vec![sim.x0];
        }
        if sim.lln_times.is_empty() {
            sim.lln_times = vec![sim.t / 4.0, sim.t / 2.0, sim.t];
        }
        if self.verify.checkpoints.is_empty() {
            self.verify.checkpoints = (1..=5).map(|k| sim.t * k as f64 / 5.0).collect();
        }
        self.verify.tol_c.get_or_insert(10.0 * solver.tol_w);

        Ok(Problem {
            config: self,
            model,
            grid,
            rewards,
            exprs,
            solver,
            refined_from,
        })
    }

    fn resolve_model(&mut self, lo: f64, hi: f64) -> Result<DiffusionModel, CliError> {
        let m = &mut self.model;
        if m.drift.is_some() || m.volatility.is_some() {
            if m.name.is_some() || m.theta.is_some() || m.mean.is_some() || m.a.is_some() || m.sigma.is_some() {
                return Err(CliError::Config(
                    "model: give either a named family or drift/volatility expressions, not both".into(),
                ));
            }
            let (Some(b), Some(s)) = (&m.drift, &m.volatility) else {
                return Err(CliError::Config("model: drift and volatility must both be given".into()));
            };
            let b = parse_field("model.drift", b)?;
            let s = parse_field("model.volatility", s)?;
            let label = format!("dX = ({}) dt + ({}) dW", b.source(), s.source());
            return Ok(DiffusionModel::new(label, b.to_fn(), s.to_fn(), lo, hi)?);
        }
        let name = m.name.get_or_insert_with(|| "ou".into()).clone();
        match name.as_str() {
            "ou" | "ornstein-uhlenbeck" => {
                if m.a.is_some() {
                    return Err(CliError::Config("model: 'a' is a double-well parameter".into()));
                }
                let theta = *m.theta.get_or_insert(1.0);
                let mean = *m.mean.get_or_insert(0.0);
                let sigma = *m.sigma.get_or_insert(std::f64::consts::SQRT_2);
                Ok(DiffusionModel::ornstein_uhlenbeck(theta, mean, sigma, lo, hi)?)
            }
            "double-well" => {
                if m.theta.is_some() || m.mean.is_some() {
                    return Err(CliError::Config("model: 'theta' and 'mean' are OU parameters".into()));
                }
                let a = *m.a.get_or_insert(1.0);
                let sigma = *m.sigma.get_or_insert(1.0);
                Ok(DiffusionModel::double_well(a, sigma, lo, hi)?)
            }
            other => Err(CliError::Config(format!(
                "model: unknown name '{other}' (expected 'ou' or 'double-well')"
            ))),
        }
    }
}
