//! The subcommands. Each writes its artifacts into a [`RunDir`] and returns
//! an exit code.

use std::cell::OnceCell;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use vstop::simulator::{Averaging, DecayRate, LargeDeviationTable, SupermartingaleReport};
use vstop::stopping::{default_d, Regime};
use vstop::{
    bellman_inequality_check, dichotomy_experiment, ergodicity_profile, evaluate_rule, gamma_and_m,
    inject_bump, large_deviation_estimate, simulate, solve_discounted_potential, solve_infinite_horizon_with,
    solve_resolvent, solve_zero_potential, stationary_density, stopping_rule, supermartingale_check, time_average,
    verify_c_assumptions, DichotomyConfig, Estimate, InfiniteHorizonSolution, InvariantMeasure, KdeSettings,
    LargeDeviationConfig, PotentialFunction, ScalarFn, StopPair, StopSpec, ValueSurface, VerifyTolerances, Z99,
};

use crate::artifacts::{num, RunDir};
use crate::config::Problem;
use crate::error::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
/// The horizon ladder did not settle and the stationary mean of `f` is
/// positive: the value is infinite.
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;
/// The horizon ladder did not settle although nothing predicts divergence.
pub const EXIT_NOT_CONVERGED: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Potential,
    Verify,
    Simulate,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Potential => "potential",
            Command::Verify => "verify",
            Command::Simulate => "simulate",
            Command::Report => "report",
        }
    }
}

pub struct Outcome {
    pub code: i32,
    pub dir: PathBuf,
    pub summary: String,
}

fn status_name(code: i32) -> &'static str {
    match code {
        EXIT_OK => "ok",
        EXIT_DIVERGED => "diverged",
        EXIT_VERIFY_FAILED => "verification-failed",
        EXIT_NOT_CONVERGED => "not-converged",
        _ => "error",
    }
}

/// Shared state of one invocation; the infinite-horizon solve is done at
/// most once.
struct Session<'a> {
    p: &'a Problem,
    measure: InvariantMeasure,
    solution: OnceCell<InfiniteHorizonSolution>,
    surface_path: Option<&'a Path>,
}

impl<'a> Session<'a> {
    fn solution(&self) -> Result<&InfiniteHorizonSolution, CliError> {
        if let Some(s) = self.solution.get() {
            return Ok(s);
        }
        let s = solve_infinite_horizon_with(&self.p.model, &self.p.grid, &self.p.rewards, &self.p.solver, &self.measure)?;
        Ok(self.solution.get_or_init(|| s))
    }

    fn not_converged_code(&self) -> Result<i32, CliError> {
        let s = self.solution()?;
        Ok(if s.converged() {
            EXIT_OK
        } else if s.regime == Regime::DivergenceExpected {
            EXIT_DIVERGED
        } else {
            EXIT_NOT_CONVERGED
        })
    }
}

pub fn run(problem: &Problem, command: Command, out: &Path, surface: Option<&Path>) -> Result<Outcome, CliError> {
    let measure = stationary_density(&problem.model, &problem.grid)?;
    let session = Session {
        p: problem,
        measure,
        solution: OnceCell::new(),
        surface_path: surface,
    };
    let mut dir = RunDir::create(out, command.name(), &problem.config)?;
    let (code, summary) = match command {
        Command::Solve => solve(&session, &mut dir)?,
        Command::Potential => potential(&session, &mut dir)?,
        Command::Verify => verify(&session, &mut dir)?,
        Command::Simulate => simulate_cmd(&session, &mut dir)?,
        Command::Report => report(&session, &mut dir)?,
    };
    let summary = format!("run {} ({})\n{summary}", dir.short_hash(), status_name(code));
    let dir = dir.finish(&problem.config, status_name(code), code)?;
    Ok(Outcome { code, dir, summary })
}

fn bool01(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn estimate_row(t: f64, e: &Estimate) -> Vec<String> {
    let (lo, hi) = e.ci99();
    vec![num(t), num(e.mean), num(lo), num(hi)]
}

fn xy_rows<'v>(x: &'v [f64], y: &'v [f64]) -> impl Iterator<Item = Vec<String>> + 'v {
    x.iter().zip(y).map(|(a, b)| vec![num(*a), num(*b)])
}

fn solve(s: &Session<'_>, dir: &mut RunDir) -> Result<(i32, String), CliError> {
    let p = s.p;
    let sol = s.solution()?;
    let w = &sol.surface;
    let x = p.grid.nodes();
    dir.write_csv(
        "w.csv",
        &["x", "w", "g", "mask"],
        (0..x.len()).map(|i| vec![num(x[i]), num(w.values[i]), num(w.obstacle[i]), bool01(w.mask[i])]),
    )?;
    dir.write_csv(
        "convergence.csv",
        &["T", "cauchy_diff", "probe"],
        w.history.iter().map(|h| vec![num(h.t), num(h.cauchy_diff), num(h.probe)]),
    )?;
    dir.write_csv(
        "mask.csv",
        &["x", "mask"],
        x.iter().zip(&w.mask).map(|(a, m)| vec![num(*a), bool01(*m)]),
    )?;

    let mut text = sol.summary();
    text.push_str(&grid_note(s));
    let _ = writeln!(text, "probe x = {}: w = {:.6}", p.solver.probe, w.eval(p.solver.probe));
    let _ = writeln!(text, "sup |w| = {:.6}, sup g = {:.6}", w.sup_norm(), p.rewards.norms.g);
    let switches = w.free_boundary();
    if switches.is_empty() {
        let all = w.mask.first().copied().unwrap_or(false);
        let _ = writeln!(text, "stopping region: {}", if all { "whole grid" } else { "empty" });
    } else {
        let _ = writeln!(text, "free boundary between nodes: {switches:?}");
    }

    if sol.converged() {
        let d = p.config.solver.d.or_else(|| default_d(sol.mu_f));
        match d {
            Some(d) => match bound(s, d) {
                Ok(cert) => {
                    dir.write_csv(
                        "bound.csv",
                        &["x", "gamma", "M"],
                        (0..x.len()).map(|i| vec![num(x[i]), num(cert.gamma[i]), num(cert.m[i])]),
                    )?;
                    let _ = writeln!(
                        text,
                        "stopping-time bound: d = {d}, gamma from {:?}, M({}) = {:.4}",
                        cert.source,
                        p.solver.probe,
                        cert.m_at(p.solver.probe)
                    );
                    if let Some(e) = cert.route_excess {
                        let _ = writeln!(text, "sup over window of gamma_dp - (q - min q) = {e:.3e}");
                    }
                }
                Err(e) => {
                    let _ = writeln!(text, "stopping-time bound: not available ({e})");
                }
            },
            None => {
                let _ = writeln!(text, "stopping-time bound: not available (needs mu(f) < 0 or solver.d)");
            }
        }
    }

    let code = s.not_converged_code()?;
    if code == EXIT_DIVERGED {
        let _ = writeln!(text, "result: diverged (mu(f) > 0 with no discounting; never stopping is optimal)");
    } else if code == EXIT_NOT_CONVERGED {
        let _ = writeln!(text, "result: horizon ladder not settled by t_max");
    }
    dir.write_text("solve.txt", &text)?;
    Ok((code, text))
}

fn grid_note(s: &Session<'_>) -> String {
    let p = s.p;
    let mut text = String::new();
    if let Some(n) = p.refined_from {
        let _ = writeln!(
            text,
            "grid refined from {n} to {} intervals to keep the scheme monotone",
            p.config.grid.n
        );
    }
    let (l, r) = s.measure.boundary_mass();
    let verdict = if s.measure.truncation_ok() { "ok" } else { "too large, enlarge the domain" };
    let _ = writeln!(text, "invariant mass in the outer cells: {l:.1e} (left), {r:.1e} (right): {verdict}");
    text
}

fn bound(s: &Session<'_>, d: f64) -> Result<vstop::BoundCertificate, CliError> {
    let p = s.p;
    let q = if p.rewards.is_undiscounted() {
        let q = solve_zero_potential(&p.model, &p.grid, &p.rewards.running, &s.measure)?;
        (q.mu_f < d).then_some(q)
    } else {
        None
    };
    Ok(gamma_and_m(&p.model, &p.grid, &p.rewards, d, &p.solver, &s.measure, q.as_ref())?)
}

fn potential_rows(q: &PotentialFunction) -> impl Iterator<Item = Vec<String>> + '_ {
    xy_rows(q.grid.nodes(), &q.values)
}

fn potential(s: &Session<'_>, dir: &mut RunDir) -> Result<(i32, String), CliError> {
    let p = s.p;
    let f = &p.rewards.running;
    let q = solve_zero_potential(&p.model, &p.grid, f, &s.measure)?;
    dir.write_csv("q.csv", &["x", "q"], potential_rows(&q))?;
    let mut text = grid_note(s);
    let _ = writeln!(text, "mu(f) = {:.6e}", q.mu_f);
    let _ = writeln!(
        text,
        "zero-potential: residual {:.3e}, compatibility defect {:.3e}, min q = {:.6} at x = {}",
        q.residual,
        q.compatibility_defect,
        q.lower_bound,
        p.grid.nodes()[q.argmin]
    );
    for &alpha in &p.config.potential.alphas {
        let qa = solve_resolvent(&p.model, &p.grid, f, &s.measure, alpha)?;
        dir.write_csv(&format!("q_alpha_{}.csv", num(alpha)), &["x", "q"], potential_rows(&qa))?;
        let gap = qa.values.iter().zip(&q.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let _ = writeln!(text, "resolvent alpha = {alpha}: residual {:.3e}, sup |q_alpha - q| = {gap:.4}", qa.residual);
    }
    if !p.rewards.is_undiscounted() {
        let qr = solve_discounted_potential(&p.model, &p.grid, f, &p.rewards.discount, &s.measure)?;
        dir.write_csv("q_r.csv", &["x", "q"], potential_rows(&qr))?;
        let _ = writeln!(text, "discounted potential: residual {:.3e}", qr.residual);
    }

    let sim = &p.config.simulation;
    let e = simulate(&p.model, &p.rewards, sim.x0, sim.t, sim.dt, sim.n, sim.seed)?;
    let stops = [
        (format!("sigma = {}", sim.t / 2.0), StopSpec::Fixed(sim.t / 2.0)),
        (format!("sigma = {}", sim.t), StopSpec::Fixed(sim.t)),
    ];
    match verify_c_assumptions(&q, &p.rewards, &e, &stops) {
        Ok(rep) => dir.write_text("assumptions.txt", &rep.to_text())?,
        Err(err) => {
            let _ = writeln!(text, "assumption report: not available ({err})");
        }
    }
    dir.write_text("potential.txt", &text)?;
    Ok((EXIT_OK, text))
}

fn load_surface(s: &Session<'_>, path: &Path) -> Result<ValueSurface, CliError> {
    let p = s.p;
    let fail = |message: String| CliError::Surface {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["x", "w", "g", "mask"] {
        return Err(fail(format!("expected header x,w,g,mask, found {}", header.join(","))));
    }
    let mut values = Vec::with_capacity(p.grid.len());
    let mut mask = Vec::with_capacity(p.grid.len());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64, CliError> {
            rec[k].parse::<f64>().map_err(|_| fail(format!("row {}: bad number '{}'", i + 1, &rec[k])))
        };
        let (x, w, g) = (field(0)?, field(1)?, field(2)?);
        let Some(&node) = p.grid.nodes().get(i) else {
            return Err(fail(format!("more rows than the {} grid nodes", p.grid.len())));
        };
        if (x - node).abs() > 1e-9 * (1.0 + node.abs()) {
            return Err(fail(format!("row {}: x = {x} but the config grid has {node}", i + 1)));
        }
        let g_cfg = p.rewards.terminal.eval(node);
        if (g - g_cfg).abs() > 1e-12 * (1.0 + g_cfg.abs()) {
            return Err(fail(format!("row {}: g = {g} but the config gives {g_cfg}", i + 1)));
        }
        values.push(w);
        mask.push(&rec[3] == "1");
    }
    if values.len() != p.grid.len() {
        return Err(fail(format!("{} rows for {} grid nodes", values.len(), p.grid.len())));
    }
    Ok(ValueSurface {
        grid: p.grid.clone(),
        obstacle: p.rewards.terminal.sample(p.grid.nodes()),
        values,
        horizon: f64::NAN,
        history: Vec::new(),
        mask,
        window: p.solver.window,
        converged: true,
        slabs: Vec::new(),
    })
}

fn supermartingale_rows(r: &SupermartingaleReport) -> Vec<Vec<String>> {
    r.rows.iter().map(|row| estimate_row(row.t, &row.value)).collect()
}

fn verify(s: &Session<'_>, dir: &mut RunDir) -> Result<(i32, String), CliError> {
    let p = s.p;
    let mut text = String::new();
    let surface = match s.surface_path {
        Some(path) => {
            let _ = writeln!(text, "surface: {}", path.display());
            load_surface(s, path)?
        }
        None => {
            let code = s.not_converged_code()?;
            if code != EXIT_OK {
                let _ = writeln!(text, "{}", s.solution()?.summary());
                let _ = writeln!(text, "verification needs a converged value function");
                dir.write_text("verify.txt", &text)?;
                return Ok((code, text));
            }
            let _ = writeln!(text, "surface: solved in this run");
            s.solution()?.surface.clone()
        }
    };
    let v = &p.config.verify;
    let surface = match v.fault {
        Some([centre, width, amplitude]) => {
            let _ = writeln!(text, "fault injected: bump at {centre}, width {width}, lowering w by {amplitude}");
            inject_bump(&surface, centre, width, amplitude)
        }
        None => surface,
    };

    let mut tol = VerifyTolerances::from_solver(&p.solver);
    if let Some(t) = v.tol_c {
        tol.tol_c = t;
    }
    let vi = vstop::vi_residual(&p.model, &p.rewards, &surface, tol)?;
    dir.write_csv(
        "complementarity.csv",
        &["x", "rho", "delta", "class"],
        (0..vi.x.len()).map(|i| vec![num(vi.x[i]), num(vi.rho[i]), num(vi.delta[i]), vi.class[i].as_str().to_string()]),
    )?;
    let _ = writeln!(text, "\n== complementarity ==\n{}", vi.to_text());

    let sim = &p.config.simulation;
    let horizon = v.checkpoints.iter().cloned().fold(sim.t, f64::max);
    let e = simulate(&p.model, &p.rewards, sim.x0, horizon, sim.dt, sim.n, sim.seed)?;
    let star = stopping_rule(&surface, 0.0)?;
    let free = supermartingale_check(&e, &p.rewards, &p.grid, &surface.values, &v.checkpoints, None)?;
    let stopped = supermartingale_check(&e, &p.rewards, &p.grid, &surface.values, &v.checkpoints, Some(&star))?;
    let header = ["t", "mean", "ci_lo", "ci_hi"];
    dir.write_csv("supermartingale.csv", &header, supermartingale_rows(&free))?;
    dir.write_csv("supermartingale_stopped.csv", &header, supermartingale_rows(&stopped))?;
    let _ = writeln!(
        text,
        "== supermartingale (x0 = {}, {} paths) ==\nE[Z_t] nonincreasing: {}\nE[Z_(t ^ tau*)] constant: {}\n",
        sim.x0, sim.n, free.nonincreasing, stopped.constant
    );

    let t = sim.t;
    let pairs = vec![
        (
            format!("sigma = tau* ^ {t}, tau = 0"),
            StopPair { sigma: StopSpec::RuleCapped(&star, t), sigma_cap: t, tau: StopSpec::Zero },
        ),
        (
            format!("sigma = {t}, tau = tau*"),
            StopPair { sigma: StopSpec::Fixed(t), sigma_cap: t, tau: StopSpec::Rule(&star) },
        ),
        (
            format!("sigma = {t}, tau = {}", t / 2.0),
            StopPair { sigma: StopSpec::Fixed(t), sigma_cap: t, tau: StopSpec::Fixed(t / 2.0) },
        ),
        (
            format!("sigma = tau* ^ {t}, tau = {}", t / 10.0),
            StopPair { sigma: StopSpec::RuleCapped(&star, t), sigma_cap: t, tau: StopSpec::Fixed(t / 10.0) },
        ),
    ];
    let bellman = bellman_inequality_check(&p.rewards, &surface, &e, &pairs)?;
    let _ = writeln!(text, "== Bellman inequality ==\n{}", bellman.to_text());

    let mut pass = vi.pass && free.nonincreasing && stopped.constant && bellman.pass;
    let mu_r = s.measure.integrate(&p.rewards.discount.sample(p.grid.nodes()))?;
    if mu_r > 0.0 {
        let cfg = DichotomyConfig {
            x0: sim.x0,
            paths: sim.n,
            ld_paths: sim.n,
            dt: sim.dt,
            cap: sim.t,
            seed: sim.seed,
            ..DichotomyConfig::default()
        };
        match dichotomy_experiment(&p.model, &p.grid, &p.rewards, &s.measure, &p.solver, &cfg) {
            Ok(rep) => {
                pass &= rep.value_matches_payoff;
                dir.write_text("dichotomy.txt", &rep.to_text())?;
                let _ = writeln!(text, "== dichotomy ==\nvalue matches capped payoff: {}", rep.value_matches_payoff);
            }
            Err(vstop::Error::NotApplicable(why)) => {
                let _ = writeln!(text, "== dichotomy ==\nnot applicable: {why}");
            }
            Err(e) => return Err(e.into()),
        }
    }
    let _ = writeln!(text, "\nverdict: {}", if pass { "PASS" } else { "FAIL" });
    dir.write_text("verify.txt", &text)?;
    Ok((if pass { EXIT_OK } else { EXIT_VERIFY_FAILED }, text))
}

fn ld_rows(t: &LargeDeviationTable) -> Vec<Vec<String>> {
    t.rows.iter().map(|r| vec![num(r.t), num(r.freq)]).collect()
}

/// Deviation tables from several starting points and their pointwise
/// maximum.
struct WorstCase {
    starts: Vec<(f64, LargeDeviationTable)>,
    worst: LargeDeviationTable,
}

impl WorstCase {
    fn describe(&self) -> String {
        let mut text = String::new();
        for (x0, t) in &self.starts {
            let _ = writeln!(
                text,
                "x0 = {x0}: frequencies {:?}, strictly decreasing at 99%: {}, fitted rate {:?}",
                t.rows.iter().map(|r| r.freq).collect::<Vec<_>>(),
                t.strictly_decreasing(Z99),
                t.rate.rate()
            );
        }
        let _ = writeln!(
            text,
            "worst case: frequencies {:?}, strictly decreasing at 99%: {}, fitted rate {:?}",
            self.worst.rows.iter().map(|r| r.freq).collect::<Vec<_>>(),
            self.worst.strictly_decreasing(Z99),
            self.worst.rate.rate()
        );
        text
    }
}

fn worst_case(
    starts: &[f64],
    estimate: impl Fn(f64, u64) -> vstop::Result<LargeDeviationTable>,
) -> Result<WorstCase, CliError> {
    let mut tables = Vec::with_capacity(starts.len());
    for (k, &x0) in starts.iter().enumerate() {
        tables.push((x0, estimate(x0, k as u64)?));
    }
    let mut worst = tables[0].1.clone();
    for (_, t) in &tables[1..] {
        for (w, r) in worst.rows.iter_mut().zip(&t.rows) {
            if r.freq > w.freq {
                w.freq = r.freq;
                w.exceedances = r.exceedances;
                w.zero_observed = r.zero_observed;
            }
            w.sup_freq = w.sup_freq.max(r.sup_freq);
        }
    }
    let times: Vec<f64> = worst.rows.iter().map(|r| r.t).collect();
    let freqs: Vec<f64> = worst.rows.iter().map(|r| r.freq).collect();
    let sups: Vec<f64> = worst.rows.iter().map(|r| r.sup_freq).collect();
    worst.rate = DecayRate::fit(&times, &freqs);
    worst.sup_rate = DecayRate::fit(&times, &sups);
    Ok(WorstCase { starts: tables, worst })
}

fn simulate_cmd(s: &Session<'_>, dir: &mut RunDir) -> Result<(i32, String), CliError> {
    let p = s.p;
    let sim = &p.config.simulation;
    let mut text = String::new();
    dir.write_csv("density.csv", &["x", "value"], xy_rows(p.grid.nodes(), s.measure.density()))?;

    let f = &p.rewards.running;
    let mu_f = s.measure.integrate(&f.sample(p.grid.nodes()))?;
    let lln_horizon = sim.lln_times.iter().cloned().fold(0.0, f64::max);
    let e = simulate(&p.model, &p.rewards, sim.x0, lln_horizon, sim.dt, sim.n, sim.seed)?;
    let rows = time_average(&e, |x| f.eval(x), &sim.lln_times)?;
    dir.write_csv(
        "lln.csv",
        &["t", "mean", "ci_lo", "ci_hi"],
        rows.iter().map(|r| estimate_row(r.t, &r.estimate)),
    )?;
    let _ = writeln!(text, "== time average of f (mu(f) = {mu_f:.6}) ==");
    for r in &rows {
        let (lo, hi) = r.estimate.ci99();
        let _ = writeln!(text, "t = {}: {:.6} [{lo:.6}, {hi:.6}]", r.t, r.estimate.mean);
    }

    let ld = |phi: ScalarFn, target: f64, x0: f64, seed: u64| {
        large_deviation_estimate(
            &p.model,
            &p.rewards,
            &LargeDeviationConfig {
                phi,
                target,
                epsilon: sim.ld_epsilon,
                x0,
                times: sim.ld_times.clone(),
                paths: sim.n,
                seed,
                dt: sim.dt,
                averaging: Averaging::Plain,
            },
        )
    };
    let table = worst_case(&sim.ld_starts, |x0, k| ld(f.clone(), mu_f, x0, sim.seed.wrapping_add(1 + 16 * k)))?;
    dir.write_csv("ld.csv", &["t", "freq"], ld_rows(&table.worst))?;
    let _ = writeln!(text, "\n== P(|avg f - mu(f)| > {}) ==", sim.ld_epsilon);
    text.push_str(&table.describe());
    if !p.rewards.is_undiscounted() {
        let r = &p.rewards.discount;
        let mu_r = s.measure.integrate(&r.sample(p.grid.nodes()))?;
        let table = worst_case(&sim.ld_starts, |x0, k| ld(r.clone(), mu_r, x0, sim.seed.wrapping_add(2 + 16 * k)))?;
        dir.write_csv("ld_r.csv", &["t", "freq"], ld_rows(&table.worst))?;
        let _ = writeln!(text, "\n== P(|avg r - mu(r)| > {}) ==", sim.ld_epsilon);
        text.push_str(&table.describe());
    }

    let kde = KdeSettings {
        paths: sim.n,
        dt: sim.dt,
        seed: sim.seed.wrapping_add(3),
    };
    let profile = ergodicity_profile(&p.model, &p.grid, &sim.tv_starts, &sim.tv_times, kde)?;
    dir.write_csv(
        "tv.csv",
        &["t", "x", "tv"],
        profile.rows().into_iter().map(|(t, x, tv)| vec![num(t), num(x), num(tv)]),
    )?;
    let _ = writeln!(
        text,
        "\n== total variation to mu ({:?}) ==\nslopes {:?}\nR^2 {:?}",
        profile.method, profile.slopes, profile.r_squared
    );

    let code = s.not_converged_code()?;
    if code == EXIT_OK {
        let surface = &s.solution()?.surface;
        let e = simulate(&p.model, &p.rewards, sim.x0, sim.t, sim.dt, sim.n, sim.seed.wrapping_add(4))?;
        let mut rows = Vec::new();
        let _ = writeln!(text, "\n== stopping rules from x0 = {} (w(x0) = {:.6}) ==", sim.x0, surface.eval(sim.x0));
        for eps in std::iter::once(0.0).chain(sim.epsilons.iter().cloned()) {
            let rule = stopping_rule(surface, eps)?;
            let ev = evaluate_rule(&e, &p.rewards, &rule, sim.t)?;
            let (lo, hi) = ev.payoff.ci99();
            let _ = writeln!(
                text,
                "{}: payoff {:.6} [{lo:.6}, {hi:.6}], mean stop time {:.4}, unstopped {:.4}",
                rule.tag, ev.payoff.mean, ev.stop_time.mean, ev.unstopped_fraction
            );
            rows.push(vec![
                num(eps),
                num(ev.payoff.mean),
                num(lo),
                num(hi),
                num(ev.stop_time.mean),
                num(ev.unstopped_fraction),
            ]);
        }
        dir.write_csv(
            "rules.csv",
            &["epsilon", "payoff", "ci_lo", "ci_hi", "stop_time", "unstopped"],
            rows,
        )?;
    } else {
        let _ = writeln!(text, "\nstopping rules: skipped, the value function did not converge");
    }
    dir.write_text("simulate.txt", &text)?;
    Ok((EXIT_OK, text))
}

fn report(s: &Session<'_>, dir: &mut RunDir) -> Result<(i32, String), CliError> {
    let (solve_code, solve_text) = solve(s, dir)?;
    let (_, potential_text) = potential(s, dir)?;
    let (verify_code, verify_text) = verify(s, dir)?;
    let (_, simulate_text) = simulate_cmd(s, dir)?;
    let text = format!(
        "# solve\n\n{solve_text}\n# potential\n\n{potential_text}\n# verify\n\n{verify_text}\n# simulate\n\n{simulate_text}"
    );
    dir.write_text("report.txt", &text)?;
    let code = if solve_code != EXIT_OK { solve_code } else { verify_code };
    Ok((code, text))
}
