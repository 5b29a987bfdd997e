use proptest::prelude::*;

use super::*;
use crate::func::ScalarFn;
use crate::potential::solve_zero_potential;

fn ou(intervals: usize) -> (DiffusionModel, Grid, SolverConfig) {
    let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -8.0, 8.0).unwrap();
    let g = Grid::new(-8.0, 8.0, intervals).unwrap();
    let c = SolverConfig::for_domain(-8.0, 8.0);
    (m, g, c)
}

fn atan() -> ScalarFn {
    ScalarFn::new("arctan(x)", f64::atan)
}

fn tanh_arctan(g: &Grid) -> RewardSpec {
    RewardSpec::undiscounted(ScalarFn::new("tanh(x) - 0.5", |x: f64| x.tanh() - 0.5), atan(), g).unwrap()
}

#[test]
fn zero_horizon_is_the_obstacle() {
    let (m, g, c) = ou(400);
    let r = tanh_arctan(&g);
    let s = solve_finite_horizon(&m, &g, &r, 0.0, &c).unwrap();
    assert_eq!(s.values, r.terminal.sample(g.nodes()));
    assert!(s.mask.iter().all(|b| *b));
    assert!(solve_finite_horizon(&m, &g, &r, -1.0, &c).is_err());
}

#[test]
fn constant_obstacle_is_preserved() {
    let (m, g, c) = ou(400);
    let r = RewardSpec::undiscounted(ScalarFn::zero(), ScalarFn::constant(0.7), &g).unwrap();
    for t in [0.5, 3.0, 10.0] {
        let s = solve_finite_horizon(&m, &g, &r, t, &c).unwrap();
        assert!(s.values.iter().all(|v| (v - 0.7).abs() < 1e-12));
    }
}

#[test]
fn unit_reward_collects_the_horizon() {
    let (m, g, c) = ou(400);
    let r = RewardSpec::undiscounted(ScalarFn::constant(1.0), ScalarFn::zero(), &g).unwrap();
    for t in [1.0, 5.0, 20.0] {
        let s = solve_finite_horizon(&m, &g, &r, t, &c).unwrap();
        for i in 1..g.len() - 1 {
            assert!((s.values[i] - t).abs() <= 0.01 * t, "T {t}: {}", s.values[i]);
        }
        assert!(s.mask[1..g.len() - 1].iter().all(|b| !b));
    }
}

#[test]
fn non_monotone_grid_is_rejected() {
    let m = DiffusionModel::ornstein_uhlenbeck(5.0, 0.0, 0.1, -8.0, 8.0).unwrap();
    let g = Grid::new(-8.0, 8.0, 100).unwrap();
    let c = SolverConfig::for_domain(-8.0, 8.0);
    let r = tanh_arctan(&g);
    assert!(matches!(
        solve_finite_horizon(&m, &g, &r, 1.0, &c),
        Err(Error::NonMonotoneScheme { .. })
    ));
}

#[test]
fn config_validation() {
    let (_, g, c) = ou(400);
    let mut bad = c.clone();
    bad.window = (-9.0, 1.0);
    assert!(bad.validate(&g).is_err());
    let mut bad = c.clone();
    bad.tol_w = 0.0;
    assert!(bad.validate(&g).is_err());
    assert!(c.validate(&g).is_ok());
}

#[test]
fn unit_reward_diverges_linearly() {
    let (m, g, mut c) = ou(400);
    c.t_max = 60.0;
    let r = RewardSpec::undiscounted(ScalarFn::constant(1.0), ScalarFn::zero(), &g).unwrap();
    let sol = solve_infinite_horizon(&m, &g, &r, &c).unwrap();
    assert_eq!(sol.status, ConvergenceStatus::NotConverged);
    assert_eq!(sol.regime, Regime::DivergenceExpected);
    assert_eq!(sol.surface.history.len(), 60);
    let slope = sol.probe_slope.unwrap().slope;
    assert!((slope - 1.0).abs() < 0.1, "{slope}");
}

#[test]
fn tanh_arctan_converges_with_interior_stopping() {
    let (m, g, c) = ou(800);
    let r = tanh_arctan(&g);
    let sol = solve_infinite_horizon(&m, &g, &r, &c).unwrap();
    assert!(sol.converged(), "{}", sol.summary());
    assert_eq!(sol.regime, Regime::VanishingDiscount);
    let s = &sol.surface;
    assert!(s.values.iter().zip(&s.obstacle).all(|(w, g)| w >= g));
    assert!(s.mask_hits(-4.0, 4.0));
    assert!(!s.free_boundary().is_empty());
    assert!(sol.decay_rate().unwrap() > 0.0);
}

#[test]
fn stopping_rules_are_nested() {
    let (m, g, c) = ou(400);
    let r = tanh_arctan(&g);
    let s = solve_infinite_horizon(&m, &g, &r, &c).unwrap().surface;
    let whole = stopping_rule(&s, s.max_gap()).unwrap();
    assert!(whole.mask(&g).iter().all(|b| *b));
    let eps = [0.0, 0.05, 0.1, 0.2, 0.5];
    let masks: Vec<Vec<bool>> = eps.iter().map(|&e| stopping_rule(&s, e).unwrap().mask(&g)).collect();
    for pair in masks.windows(2) {
        assert!(pair[0].iter().zip(&pair[1]).all(|(a, b)| !a || *b));
    }
    assert!(stopping_rule(&s, -0.1).is_err());
}

#[test]
fn gamma_vanishes_for_constant_reward() {
    let (m, g, c) = ou(400);
    let mu = stationary_density(&m, &g).unwrap();
    let d = -0.3;
    let r = RewardSpec::undiscounted(ScalarFn::constant(d), atan(), &g).unwrap();
    let cert = gamma_and_m(&m, &g, &r, d, &c, &mu, None).unwrap();
    assert!(cert.gamma.iter().all(|v| *v == 0.0));
    let expected = (2.0 * 8f64.atan() + 1.0) / 0.3;
    assert!(cert.m.iter().all(|v| (v - expected).abs() < 1e-12));
    assert!(gamma_and_m(&m, &g, &r, 0.1, &c, &mu, None).is_err());
}

#[test]
fn gamma_routes_are_ordered() {
    let (m, g, c) = ou(800);
    let mu = stationary_density(&m, &g).unwrap();
    let r = tanh_arctan(&g);
    let q = solve_zero_potential(&m, &g, &r.running, &mu).unwrap();
    let d = default_d(q.mu_f).unwrap();
    assert!((d + 0.25).abs() < 1e-6);
    let cert = gamma_and_m(&m, &g, &r, d, &c, &mu, Some(&q)).unwrap();
    assert_eq!(cert.source, GammaRoute::Both);
    assert!(cert.routes_consistent(10.0 * c.tol_w).unwrap(), "{:?}", cert.route_excess);
    assert!(cert.gamma.iter().all(|v| *v >= 0.0));
    for (gm, m) in cert.gamma.iter().zip(&cert.m) {
        assert!((m - (gm + 2.0 * r.norms.g + 1.0) / 0.25).abs() < 1e-9);
    }
    // w ≤ ‖f‖ M + ‖g‖
    let w = solve_infinite_horizon_with(&m, &g, &r, &c, &mu).unwrap().surface;
    for (wi, mi) in w.values.iter().zip(&cert.m) {
        assert!(*wi <= r.norms.f * mi + r.norms.g);
    }
    // d outside (μ(f), 0) is refused on the potential route
    assert!(gamma_and_m(&m, &g, &r, -0.6, &c, &mu, Some(&q)).is_err());
}

#[test]
fn transformation_is_identity_for_constant_reward() {
    let (m, g, c) = ou(400);
    let mu = stationary_density(&m, &g).unwrap();
    let r = RewardSpec::undiscounted(ScalarFn::constant(-0.2), atan(), &g).unwrap();
    let w = solve_infinite_horizon_with(&m, &g, &r, &c, &mu).unwrap().surface;
    let q = solve_zero_potential(&m, &g, &r.running, &mu).unwrap();
    let rep = transformed_problem(&m, &r, &w, &q, &mu, &c, (-2.0, 2.0)).unwrap();
    assert!(rep.discrepancy <= 1e-10, "{}", rep.discrepancy);
    assert!(rep.mask_disagreements.is_empty());
}

#[test]
fn transformation_matches_direct_solve() {
    let (m, g, c) = ou(800);
    let mu = stationary_density(&m, &g).unwrap();
    let r = tanh_arctan(&g);
    let w = solve_infinite_horizon_with(&m, &g, &r, &c, &mu).unwrap().surface;
    let q = solve_zero_potential(&m, &g, &r.running, &mu).unwrap();
    let rep = transformed_problem(&m, &r, &w, &q, &mu, &c, (-2.0, 2.0)).unwrap();
    assert!(rep.relative_discrepancy() <= 0.02, "{}", rep.relative_discrepancy());
    assert!(rep.mask_disagreements.is_empty(), "{:?}", rep.mask_disagreements);
    let disc = RewardSpec::new(r.running.clone(), atan(), ScalarFn::constant(0.1), &g).unwrap();
    assert!(matches!(
        transformed_problem(&m, &disc, &w, &q, &mu, &c, (-2.0, 2.0)),
        Err(Error::NotApplicable(_))
    ));
}

#[test]
fn immediate_stopping_masks_are_full() {
    let (m, g, c) = ou(400);
    let r = RewardSpec::undiscounted(ScalarFn::constant(-10.0), atan(), &g).unwrap();
    let ladder = tau_t_limit_check(&m, &g, &r, &c, &[1.0, 5.0, 20.0]).unwrap();
    assert!(ladder.masks.iter().all(|mk| mk.iter().all(|b| *b)));
    assert!(ladder.nonincreasing && ladder.stabilised);
}

#[test]
fn masks_shrink_with_horizon() {
    let (m, g, c) = ou(400);
    let r = tanh_arctan(&g);
    let ladder = tau_t_limit_check(&m, &g, &r, &c, &[1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 80.0]).unwrap();
    assert!(ladder.nonincreasing);
    assert!(ladder.stabilised, "{:?}", ladder.counts());

    let zero = RewardSpec::undiscounted(ScalarFn::zero(), atan(), &g).unwrap();
    let ladder = tau_t_limit_check(&m, &g, &zero, &c, &[0.5, 2.0, 10.0, 50.0]).unwrap();
    assert!(ladder.nonincreasing);
    let counts = ladder.counts_in(&g, -2.0, 2.0);
    assert!(counts[0] > 0);
    assert_eq!(*counts.last().unwrap(), 0, "{counts:?}");
}

#[test]
fn horizon_ladder_keeps_slabs_monotone() {
    let (m, g, mut c) = ou(400);
    c.keep_slabs = true;
    let r = tanh_arctan(&g);
    let sol = solve_infinite_horizon(&m, &g, &r, &c).unwrap();
    let slabs = &sol.surface.slabs;
    assert_eq!(slabs.len(), sol.surface.history.len());
    for pair in slabs.windows(2) {
        assert!(pair[1].1.iter().zip(&pair[0].1).all(|(b, a)| *b >= *a - 1e-13));
    }
}

fn small() -> (DiffusionModel, Grid, SolverConfig) {
    let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 1.0, -4.0, 4.0).unwrap();
    let g = Grid::new(-4.0, 4.0, 80).unwrap();
    let mut c = SolverConfig::for_domain(-4.0, 4.0);
    c.dt = 0.05;
    (m, g, c)
}

fn reward(a: f64, b: f64) -> ScalarFn {
    ScalarFn::new("a tanh + b", move |x: f64| a * x.tanh() + b)
}

fn terminal(k: f64) -> ScalarFn {
    ScalarFn::new("k arctan", move |x: f64| k * x.atan())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn obstacle_dominance(a in -1.0..1.0f64, b in -1.0..1.0f64, k in -2.0..2.0f64, t in 0.1..10.0f64) {
        let (m, g, c) = small();
        let r = RewardSpec::undiscounted(reward(a, b), terminal(k), &g).unwrap();
        let s = solve_finite_horizon(&m, &g, &r, t, &c).unwrap();
        prop_assert!(s.values.iter().zip(&s.obstacle).all(|(w, g)| w >= g));
    }

    #[test]
    fn horizon_monotonicity(a in -1.0..1.0f64, b in -1.0..1.0f64, k in -2.0..2.0f64, t in 0.5..5.0f64, extra in 0.5..5.0f64) {
        let (m, g, c) = small();
        let r = RewardSpec::undiscounted(reward(a, b), terminal(k), &g).unwrap();
        // same step on both horizons
        let mut st = HorizonStepper::new(&m, &g, &r, c.dt).unwrap();
        st.advance((t / c.dt) as usize);
        let early = st.values().to_vec();
        st.advance((extra / c.dt) as usize);
        prop_assert!(st.values().iter().zip(&early).all(|(l, e)| *l >= *e - 1e-12));
    }

    #[test]
    fn discount_monotonicity(b in 0.0..1.0f64, k in -2.0..2.0f64, r0 in 0.0..1.0f64, bump in 0.0..1.0f64) {
        let (m, g, c) = small();
        let f = ScalarFn::new("f", move |x: f64| b * (1.0 + x.tanh()));
        let low = RewardSpec::new(f.clone(), terminal(k), ScalarFn::constant(r0), &g).unwrap();
        let high = RewardSpec::new(
            f,
            terminal(k),
            ScalarFn::new("r'", move |x: f64| r0 + bump * (1.0 + x.sin()) * 0.5),
            &g,
        ).unwrap();
        let wl = solve_finite_horizon(&m, &g, &low, 5.0, &c).unwrap();
        let wh = solve_finite_horizon(&m, &g, &high, 5.0, &c).unwrap();
        // f ≥ 0 and g of either sign: more discount only shrinks the positive part
        let gpos = k.abs() < 1e-12 || wl.obstacle.iter().all(|v| *v >= 0.0);
        if gpos {
            prop_assert!(wh.values.iter().zip(&wl.values).all(|(h, l)| *h <= *l + 1e-12));
        }
        // with g ≡ 0 and f ≥ 0 the comparison is unconditional
        let low0 = low.with_terminal(ScalarFn::zero(), &g).unwrap();
        let high0 = high.with_terminal(ScalarFn::zero(), &g).unwrap();
        let wl = solve_finite_horizon(&m, &g, &low0, 5.0, &c).unwrap();
        let wh = solve_finite_horizon(&m, &g, &high0, 5.0, &c).unwrap();
        prop_assert!(wh.values.iter().zip(&wl.values).all(|(h, l)| *h <= *l + 1e-12));
    }

    #[test]
    fn dominance_transfer(a in -1.0..1.0f64, b in -1.0..1.0f64, drop in 0.0..1.0f64, k in -2.0..2.0f64) {
        let (m, g, c) = small();
        let hi = RewardSpec::undiscounted(reward(a, b), terminal(k), &g).unwrap();
        let lo_f = ScalarFn::new("f'", move |x: f64| a * x.tanh() + b - drop * (1.0 + x.cos()) * 0.5);
        let lo = RewardSpec::undiscounted(lo_f, terminal(k), &g).unwrap();
        let wh = solve_finite_horizon(&m, &g, &hi, 5.0, &c).unwrap();
        let wl = solve_finite_horizon(&m, &g, &lo, 5.0, &c).unwrap();
        prop_assert!(wl.values.iter().zip(&wh.values).all(|(l, h)| *l <= *h + 1e-12));
    }
}

#[test]
fn projected_and_complementarity_schemes_agree() {
    let (m, g, c) = ou(800);
    let r = tanh_arctan(&g);
    let pi = solve_infinite_horizon(&m, &g, &r, &c).unwrap().surface;
    let mut cp = c.clone();
    cp.scheme = ObstacleScheme::Projected;
    let pr = solve_infinite_horizon(&m, &g, &r, &cp).unwrap().surface;
    let gap = pi.values.iter().zip(&pr.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 5e-3, "{gap}");
    // projection can only stop earlier
    assert!(pi.values.iter().zip(&pr.values).all(|(a, b)| *a >= *b - 1e-12));
}
