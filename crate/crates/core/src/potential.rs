//! Zero-potential `q` (`𝒜q = −(f − μ(f))`), resolvent potentials
//! `q_α` (`(α − 𝒜)q_α = f − μ(f)`) and the discounted potential `q_r`
//! (`(r − 𝒜)q_r = f − μ(f)`) on the grid.
//!
//! The zero-potential system is singular (constants span the null space of
//! the reflecting generator). The right-hand side is made exactly solvable
//! against the discrete chain's own stationary law; the resulting shift,
//! `π(f − μ(f))`, is the compatibility defect between that law and the
//! quadrature measure and shows up as a constant in the Poisson residual.
//! It vanishes as `O(Δx²)` and exactly for symmetric problems.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::generator::{build_generator, Generator};
use crate::grid::Grid;
use crate::measure::InvariantMeasure;
use crate::model::DiffusionModel;
use crate::rewards::RewardSpec;
use crate::simulator::{observe_stops, PathEnsemble, StopSpec, StoppingRule};
use crate::stats::Estimate;
use crate::tridiag::{self, TridiagonalLu};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PotentialKind {
    ZeroPotential,
    Resolvent(f64),
    Discounted,
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialFunction {
    #[serde(skip)]
    pub grid: Grid,
    pub values: Vec<f64>,
    pub kind: PotentialKind,
    /// `μ(f)` used to centre the running reward.
    pub mu_f: f64,
    /// Max interior residual of the defining equation with `f − μ(f)`.
    pub residual: f64,
    /// Constant subtracted so that `μ(q) = 0` (zero-potential only).
    pub centering: f64,
    /// `π(f − μ(f))` for the discrete stationary law `π` (zero-potential
    /// only; 0 otherwise).
    pub compatibility_defect: f64,
    /// `A = min q` over the grid, and where it is attained.
    pub lower_bound: f64,
    pub argmin: usize,
}

impl PotentialFunction {
    fn finish(grid: &Grid, values: Vec<f64>, kind: PotentialKind, mu_f: f64, residual: f64, centering: f64, defect: f64) -> Self {
        let (argmin, lower_bound) = values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
        Self {
            grid: grid.clone(),
            values,
            kind,
            mu_f,
            residual,
            centering,
            compatibility_defect: defect,
            lower_bound,
            argmin,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.values, x)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The potential as a function of the state (linear interpolation).
    pub fn as_fn(&self) -> ScalarFn {
        let grid = self.grid.clone();
        let values = self.values.clone();
        ScalarFn::new("q", move |x| grid.interpolate(&values, x))
    }
}

fn centred(f: &ScalarFn, grid: &Grid, measure: &InvariantMeasure) -> Result<(Vec<f64>, f64)> {
    if measure.grid() != grid {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: measure.grid().len(),
        });
    }
    if let Some(c) = f.as_constant() {
        return Ok((vec![0.0; grid.len()], c));
    }
    let fs = f.sample(grid.nodes());
    let mu_f = measure.integrate(&fs)?;
    Ok((fs.into_iter().map(|v| v - mu_f).collect(), mu_f))
}

fn interior_max(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values
        .enumerate()
        .filter(|(i, _)| *i > 0 && *i + 1 < n)
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

/// Solves the Poisson equation with reflecting rows and centres the
/// solution so that `μ(q) = 0`.
pub fn solve_zero_potential(
    model: &DiffusionModel,
    grid: &Grid,
    f: &ScalarFn,
    measure: &InvariantMeasure,
) -> Result<PotentialFunction> {
    let (f_hat, mu_f) = centred(f, grid, measure)?;
    let gen = build_generator(model, grid)?;
    gen.check_monotone(grid)?;
    let n = grid.len();
    if f_hat.iter().all(|v| *v == 0.0) {
        return Ok(PotentialFunction::finish(grid, vec![0.0; n], PotentialKind::ZeroPotential, mu_f, 0.0, 0.0, 0.0));
    }
    let pi = gen.discrete_stationary()?;
    let defect: f64 = pi.iter().zip(&f_hat).map(|(p, v)| p * v).sum();
    // pin q = 0 at the mode of π, where the chain spends most time
    let pin = pi
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0;
    let mut lower = gen.lower.clone();
    let mut diag = gen.diag.clone();
    let mut upper = gen.upper.clone();
    let mut rhs: Vec<f64> = f_hat.iter().map(|v| -(v - defect)).collect();
    lower[pin] = 0.0;
    upper[pin] = 0.0;
    diag[pin] = 1.0;
    rhs[pin] = 0.0;
    let mut q = tridiag::solve(&lower, &diag, &upper, &rhs)?;
    let centering = measure.integrate(&q)?;
    q.iter_mut().for_each(|v| *v -= centering);
    let aq = gen.apply(&q);
    let residual = interior_max(aq.iter().zip(&f_hat).map(|(a, b)| a + b), n);
    Ok(PotentialFunction::finish(grid, q, PotentialKind::ZeroPotential, mu_f, residual, centering, defect))
}

fn solve_with_rates(
    gen: &Generator,
    grid: &Grid,
    f_hat: &[f64],
    rates: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let lu: TridiagonalLu = gen.shifted_lu(0.0, rates, 1.0)?;
    let mut q = f_hat.to_vec();
    lu.solve_in_place(&mut q);
    let aq = gen.apply(&q);
    let residual = interior_max(
        (0..grid.len()).map(|i| rates[i] * q[i] - aq[i] - f_hat[i]),
        grid.len(),
    );
    Ok((q, residual))
}

/// `q_α(x) = E^x ∫_0^∞ e^{−αs} (f − μ(f))(X_s) ds` via `(α − 𝒜)q_α = f − μ(f)`.
pub fn solve_resolvent(
    model: &DiffusionModel,
    grid: &Grid,
    f: &ScalarFn,
    measure: &InvariantMeasure,
    alpha: f64,
) -> Result<PotentialFunction> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("resolvent rate must be positive, got {alpha}")));
    }
    let (f_hat, mu_f) = centred(f, grid, measure)?;
    let gen = build_generator(model, grid)?;
    gen.check_monotone(grid)?;
    let rates = vec![alpha; grid.len()];
    let (q, residual) = solve_with_rates(&gen, grid, &f_hat, &rates)?;
    Ok(PotentialFunction::finish(grid, q, PotentialKind::Resolvent(alpha), mu_f, residual, 0.0, 0.0))
}

/// `(r − 𝒜)q_r = f − μ(f)`; dispatches to [`solve_zero_potential`] when
/// `r` vanishes on the grid.
pub fn solve_discounted_potential(
    model: &DiffusionModel,
    grid: &Grid,
    f: &ScalarFn,
    r: &ScalarFn,
    measure: &InvariantMeasure,
) -> Result<PotentialFunction> {
    let rates = r.sample(grid.nodes());
    if let Some((i, v)) = rates.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::Parameter(format!("discount rate {v} at x = {}", grid.nodes()[i])));
    }
    if rates.iter().all(|v| *v == 0.0) {
        return solve_zero_potential(model, grid, f, measure);
    }
    let (f_hat, mu_f) = centred(f, grid, measure)?;
    let gen = build_generator(model, grid)?;
    gen.check_monotone(grid)?;
    let (q, residual) = solve_with_rates(&gen, grid, &f_hat, &rates)?;
    Ok(PotentialFunction::finish(grid, q, PotentialKind::Discounted, mu_f, residual, 0.0, 0.0))
}

/// Cross-check route for the zero-potential: `∫_0^{T} P_s(f − μ(f)) ds`
/// by implicit stepping of the backward equation `∂_s u = 𝒜u`, then
/// centred. Independent of the Poisson solve apart from the generator.
pub fn zero_potential_by_time_integration(
    model: &DiffusionModel,
    grid: &Grid,
    f: &ScalarFn,
    measure: &InvariantMeasure,
    t_max: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && dt > 0.0) {
        return Err(Error::Parameter("t_max and dt must be positive".into()));
    }
    let (f_hat, _) = centred(f, grid, measure)?;
    let gen = build_generator(model, grid)?;
    let zeros = vec![0.0; grid.len()];
    let lu = gen.shifted_lu(1.0, &zeros, dt)?;
    let steps = (t_max / dt).round() as usize;
    let mut u = f_hat;
    let mut acc = vec![0.0; grid.len()];
    // trapezoid in time on the implicit-Euler iterates
    for k in 0..=steps {
        let w = if k == 0 || k == steps { 0.5 * dt } else { dt };
        acc.iter_mut().zip(&u).for_each(|(a, v)| *a += w * v);
        if k < steps {
            lu.solve_in_place(&mut u);
        }
    }
    let c = measure.integrate(&acc)?;
    acc.iter_mut().for_each(|v| *v -= c);
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleRow {
    pub label: String,
    /// `E^x[∫_0^σ e^{−α} f̂ ds + e^{−α_σ} q(X_σ)]`
    pub estimate: Estimate,
    pub target: f64,
    pub pass: bool,
}

/// Numerical evidence for the potential assumptions.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub mu_f: f64,
    /// `μ(f) < 0`
    pub negative_mean: Verdict,
    pub lower_bound: f64,
    pub argmin_x: f64,
    pub argmin_on_boundary: bool,
    /// Grid mask of `L = {f ≤ μ(f)}`.
    pub level_set: Vec<bool>,
    pub level_set_touches_boundary: bool,
    /// `q` bounded below (interior minimum with an interior level set).
    pub bounded_below: Verdict,
    pub martingale: Vec<MartingaleRow>,
    pub martingale_identity: Verdict,
    /// `q` increases toward both truncation boundaries (evidence only).
    pub grows_at_both_ends: bool,
}

impl AssumptionReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("mu(f) = {:.6e}\n", self.mu_f));
        s.push_str(&format!("[{:?}] mu(f) < 0\n", self.negative_mean));
        s.push_str(&format!(
            "[{:?}] q bounded below: A = {:.6e} at x = {:.4}{}; L-set {}\n",
            self.bounded_below,
            self.lower_bound,
            self.argmin_x,
            if self.argmin_on_boundary { " (on boundary: enlarge domain)" } else { "" },
            if self.level_set_touches_boundary { "touches boundary" } else { "interior" },
        ));
        s.push_str(&format!("[{:?}] martingale identity\n", self.martingale_identity));
        for row in &self.martingale {
            let (lo, hi) = row.estimate.ci99();
            s.push_str(&format!(
                "    {}: estimate {:.6} [{:.6}, {:.6}] vs q(x0) = {:.6} -> {}\n",
                row.label,
                row.estimate.mean,
                lo,
                hi,
                row.target,
                if row.pass { "PASS" } else { "FAIL" }
            ));
        }
        s.push_str(&format!("q grows toward both ends: {}\n", self.grows_at_both_ends));
        s
    }
}

/// Checks the potential hypotheses numerically. `stops` lists the bounded
/// stopping times (fixed times, or rules capped at a time) for the
/// martingale identity; the ensemble supplies the paths and start point.
pub fn verify_c_assumptions(
    potential: &PotentialFunction,
    rewards: &RewardSpec,
    ensemble: &PathEnsemble,
    stops: &[(String, StopSpec<'_>)],
) -> Result<AssumptionReport> {
    let grid = &potential.grid;
    let n = grid.len();
    let fs = rewards.running.sample(grid.nodes());
    let mu_f = potential.mu_f;
    let level_set: Vec<bool> = fs.iter().map(|v| *v <= mu_f).collect();
    let level_set_touches_boundary = level_set[0] || level_set[n - 1];
    let argmin_on_boundary = grid.is_boundary(potential.argmin);
    let bounded_below = if argmin_on_boundary || level_set_touches_boundary {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let negative_mean = if mu_f < 0.0 { Verdict::Pass } else { Verdict::Fail };

    let discount = match potential.kind {
        PotentialKind::ZeroPotential => ScalarFn::zero(),
        PotentialKind::Resolvent(a) => ScalarFn::constant(a),
        PotentialKind::Discounted => rewards.discount.clone(),
    };
    let probe = RewardSpec::new(rewards.running.shifted(mu_f), ScalarFn::zero(), discount, grid)?;
    let target = potential.eval(ensemble.spec.x0);
    let mut martingale = Vec::new();
    for (label, stop) in stops {
        let cap = match *stop {
            StopSpec::Fixed(t) | StopSpec::RuleCapped(_, t) => t,
            StopSpec::Zero => 0.0,
            StopSpec::Rule(_) => {
                return Err(Error::Parameter(format!("stopping time '{label}' must be bounded")))
            }
        };
        ensemble_time_ok(ensemble, cap)?;
        let vals: Vec<f64> = ensemble.map_paths(|i| {
            let o = observe_stops(ensemble.walker(i, &probe), std::slice::from_ref(stop), cap)[0];
            o.integral + o.discount() * potential.eval(o.x)
        });
        let estimate = Estimate::from_samples(&vals);
        martingale.push(MartingaleRow {
            label: label.clone(),
            pass: estimate.contains99(target),
            estimate,
            target,
        });
    }
    let martingale_identity = if martingale.is_empty() {
        Verdict::Inconclusive
    } else if martingale.iter().all(|r| r.pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let q = &potential.values;
    let c = grid.nearest(0.5 * (grid.lo() + grid.hi()));
    let grows_at_both_ends = q[n - 1] > q[c] && q[0] > q[c];
    Ok(AssumptionReport {
        mu_f,
        negative_mean,
        lower_bound: potential.lower_bound,
        argmin_x: grid.nodes()[potential.argmin],
        argmin_on_boundary,
        level_set,
        level_set_touches_boundary,
        bounded_below,
        martingale,
        martingale_identity,
        grows_at_both_ends,
    })
}

fn ensemble_time_ok(ensemble: &PathEnsemble, t: f64) -> Result<()> {
    if t > ensemble.spec.horizon * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "stopping bound {t} exceeds ensemble horizon {}",
            ensemble.spec.horizon
        )));
    }
    Ok(())
}

/// Convenience: rule-based bounded stop.
pub fn rule_stop(rule: &StoppingRule, cap: f64) -> StopSpec<'_> {
    StopSpec::RuleCapped(rule, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::stationary_density;

    fn ou() -> (DiffusionModel, Grid, InvariantMeasure) {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -8.0, 8.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 1600).unwrap();
        let mu = stationary_density(&m, &g).unwrap();
        (m, g, mu)
    }

    fn rel_err_on(g: &Grid, q: &[f64], exact: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let idx = g.window(a, b);
        let scale = idx.clone().map(|i| exact(g.nodes()[i]).abs()).fold(0.0, f64::max);
        idx.map(|i| (q[i] - exact(g.nodes()[i])).abs()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn constant_reward_has_zero_potential() {
        let (m, g, mu) = ou();
        let q = solve_zero_potential(&m, &g, &ScalarFn::constant(-0.3), &mu).unwrap();
        assert!(q.values.iter().all(|v| *v == 0.0));
        let qa = solve_resolvent(&m, &g, &ScalarFn::constant(2.0), &mu, 0.5).unwrap();
        assert!(qa.values.iter().all(|v| *v == 0.0));
        let r = ScalarFn::new("r", |x: f64| 0.5 * (1.0 + x.tanh()));
        let qr = solve_discounted_potential(&m, &g, &ScalarFn::constant(1.0), &r, &mu).unwrap();
        assert!(qr.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_reward_potential_is_x_over_theta() {
        for theta in [1.0, 2.0] {
            let m = DiffusionModel::ornstein_uhlenbeck(theta, 0.0, 2f64.sqrt(), -8.0, 8.0).unwrap();
            let g = Grid::new(-8.0, 8.0, 1600).unwrap();
            let mu = stationary_density(&m, &g).unwrap();
            let q = solve_zero_potential(&m, &g, &ScalarFn::new("x", |x| x), &mu).unwrap();
            let err = rel_err_on(&g, &q.values, |x| x / theta, -3.0, 3.0);
            assert!(err <= 0.01, "theta {theta}: rel err {err}");
            assert!(q.residual <= 1e-8 + q.compatibility_defect.abs());
            assert!(mu.integrate(&q.values).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn tanh_potential_is_odd() {
        let (m, g, mu) = ou();
        let q = solve_zero_potential(&m, &g, &ScalarFn::new("f", |x: f64| x.tanh() - 0.5), &mu).unwrap();
        let n = g.len();
        for i in 0..n {
            assert!((q.values[i] + q.values[n - 1 - i]).abs() < 1e-8);
        }
        assert!((q.mu_f + 0.5).abs() < 1e-6);
    }

    #[test]
    fn centering_invariance() {
        let (m, g, mu) = ou();
        let f = ScalarFn::new("f", |x: f64| x.tanh() + 0.2 * x.sin());
        let q1 = solve_zero_potential(&m, &g, &f, &mu).unwrap();
        let q2 = solve_zero_potential(&m, &g, &f.shifted(-3.0), &mu).unwrap();
        for (a, b) in q1.values.iter().zip(&q2.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn resolvent_matches_closed_form() {
        let (m, g, mu) = ou();
        for alpha in [0.5, 0.1] {
            let q = solve_resolvent(&m, &g, &ScalarFn::new("x", |x| x), &mu, alpha).unwrap();
            let err = rel_err_on(&g, &q.values, |x| x / (1.0 + alpha), -3.0, 3.0);
            assert!(err <= 0.01, "alpha {alpha}: {err}");
            let scale = q.sup_norm().max(1.0);
            assert!(q.residual <= 1e-10 * scale * 1e4, "residual {}", q.residual);
        }
        assert!(solve_resolvent(&m, &g, &ScalarFn::new("x", |x| x), &mu, 0.0).is_err());
    }

    #[test]
    fn resolvent_converges_to_zero_potential() {
        let (m, g, mu) = ou();
        let f = ScalarFn::new("x", |x| x);
        let q = solve_zero_potential(&m, &g, &f, &mu).unwrap();
        let win = g.window(-3.0, 3.0);
        let gap = |alpha: f64| {
            let qa = solve_resolvent(&m, &g, &f, &mu, alpha).unwrap();
            win.clone().map(|i| (qa.values[i] - q.values[i]).abs()).fold(0.0, f64::max)
        };
        let gaps: Vec<f64> = [1.0, 0.1, 0.01, 0.001].iter().map(|&a| gap(a)).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[3] <= 0.02 * q.sup_norm());
        // |q_α − q| at fixed x is x α/(θ(θ+α))
        let x = 2.0;
        let i = g.nearest(x);
        let at = |alpha: f64| {
            let qa = solve_resolvent(&m, &g, &f, &mu, alpha).unwrap();
            (qa.values[i] - q.values[i]).abs()
        };
        let observed = at(0.2) / at(0.05);
        let predicted = (0.2 / 1.2) / (0.05 / 1.05);
        assert!((observed / predicted - 1.0).abs() < 0.2);
    }

    #[test]
    fn constant_rate_discount_equals_resolvent() {
        let (m, g, mu) = ou();
        let f = ScalarFn::new("f", |x: f64| x.tanh() - 0.5 + 0.1 * x);
        let a = solve_resolvent(&m, &g, &f, &mu, 0.3).unwrap();
        let b = solve_discounted_potential(&m, &g, &f, &ScalarFn::constant(0.3), &mu).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn discounted_residual() {
        let (m, g, mu) = ou();
        let r = ScalarFn::new("r", |x: f64| 0.5 * (1.0 + x.tanh()));
        let q = solve_discounted_potential(&m, &g, &ScalarFn::new("x", |x| x), &r, &mu).unwrap();
        assert!(q.residual <= 1e-8, "{}", q.residual);
        assert_eq!(q.kind, PotentialKind::Discounted);
        let z = solve_discounted_potential(&m, &g, &ScalarFn::new("x", |x| x), &ScalarFn::zero(), &mu).unwrap();
        assert_eq!(z.kind, PotentialKind::ZeroPotential);
    }

    #[test]
    fn time_integration_route_agrees() {
        let (m, g, mu) = ou();
        let f = ScalarFn::new("f", |x: f64| x.tanh() - 0.5);
        let q = solve_zero_potential(&m, &g, &f, &mu).unwrap();
        // TV decays like e^{−t}: tail beyond 20 is ~1e-9 ‖f‖
        let qt = zero_potential_by_time_integration(&m, &g, &f, &mu, 20.0, 0.01).unwrap();
        let win = g.window(-3.0, 3.0);
        let err = win.map(|i| (q.values[i] - qt[i]).abs()).fold(0.0, f64::max);
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn discounted_potential_matches_simulation() {
        let (m, g, mu) = ou();
        let r = ScalarFn::new("r", |x: f64| 0.5 * (1.0 + x.tanh()));
        let f = ScalarFn::new("x", |x| x);
        let q = solve_discounted_potential(&m, &g, &f, &r, &mu).unwrap();
        let rewards = RewardSpec::new(f.shifted(q.mu_f), ScalarFn::zero(), r, &g).unwrap();
        let e = crate::simulator::simulate(&m, &rewards, 0.0, 60.0, 0.01, 4000, 77).unwrap();
        let ev = crate::simulator::evaluate_rule(&e, &rewards, &StoppingRule::empty(), 60.0).unwrap();
        assert!(ev.payoff.contains99(q.eval(0.0)), "{:?} vs {}", ev.payoff, q.eval(0.0));
    }

    #[test]
    fn constant_reward_assumption_report() {
        let (m, g, mu) = ou();
        let f = ScalarFn::constant(-0.3);
        let q = solve_zero_potential(&m, &g, &f, &mu).unwrap();
        let rewards = RewardSpec::undiscounted(f, ScalarFn::zero(), &g).unwrap();
        let e = crate::simulator::simulate(&m, &rewards, 0.0, 5.0, 0.01, 200, 3).unwrap();
        let rep = verify_c_assumptions(&q, &rewards, &e, &[("sigma = 5".into(), StopSpec::Fixed(5.0))]).unwrap();
        assert_eq!(rep.negative_mean, Verdict::Pass);
        assert!(rep.level_set.iter().all(|b| *b));
        assert!(rep.level_set_touches_boundary);
        assert_eq!(rep.lower_bound, 0.0);
        assert_eq!(rep.bounded_below, Verdict::Inconclusive);
        assert_eq!(rep.martingale_identity, Verdict::Pass);
    }

    #[test]
    fn tanh_assumption_report() {
        let (m, g, mu) = ou();
        let f = ScalarFn::new("f", |x: f64| x.tanh() - 0.5);
        let q = solve_zero_potential(&m, &g, &f, &mu).unwrap();
        let rewards = RewardSpec::undiscounted(f, ScalarFn::new("atan", f64::atan), &g).unwrap();
        let e = crate::simulator::simulate(&m, &rewards, 0.0, 5.0, 0.01, 4000, 5).unwrap();
        let rule = StoppingRule::threshold_above(&g, 1.0);
        let stops = [
            ("sigma = 5".to_string(), StopSpec::Fixed(5.0)),
            ("sigma = 1".to_string(), StopSpec::Fixed(1.0)),
            ("x >= 1 capped at 5".to_string(), rule_stop(&rule, 5.0)),
        ];
        let rep = verify_c_assumptions(&q, &rewards, &e, &stops).unwrap();
        assert_eq!(rep.negative_mean, Verdict::Pass);
        // L = {f ≤ μ(f)} = {tanh ≤ 0}
        for (&x, &inside) in g.nodes().iter().zip(&rep.level_set) {
            if x.abs() > 1e-9 {
                assert_eq!(inside, x < 0.0, "x = {x}");
            }
        }
        assert!(rep.level_set_touches_boundary);
        // q grows like log|x| toward −∞, so its minimum sits on the left end
        assert!(rep.argmin_on_boundary);
        assert_eq!(rep.bounded_below, Verdict::Inconclusive);
        assert_eq!(rep.martingale_identity, Verdict::Pass, "{}", rep.to_text());
        assert!(verify_c_assumptions(&q, &rewards, &e, &[("unbounded".into(), StopSpec::Rule(&rule))]).is_err());
    }

    #[test]
    fn interior_level_set_supports_lower_bound() {
        // f = x² − 2 has μ(f) = −1 and L = {|x| ≤ 1}
        let (m, g, mu) = ou();
        let f = ScalarFn::new("x^2 - 2", |x| x * x - 2.0);
        let q = solve_zero_potential(&m, &g, &f, &mu).unwrap();
        let rewards = RewardSpec::undiscounted(f, ScalarFn::zero(), &g).unwrap();
        let e = crate::simulator::simulate(&m, &rewards, 0.0, 1.0, 0.01, 1000, 9).unwrap();
        let rep = verify_c_assumptions(&q, &rewards, &e, &[("sigma = 1".into(), StopSpec::Fixed(1.0))]).unwrap();
        assert!(!rep.level_set_touches_boundary);
        assert!(!rep.argmin_on_boundary);
        assert_eq!(rep.bounded_below, Verdict::Pass);
        assert!(rep.grows_at_both_ends);
        assert!(rep.argmin_x.abs() < 0.05);
    }
}
