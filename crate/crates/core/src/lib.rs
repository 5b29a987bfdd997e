//! Infinite-horizon optimal stopping for ergodic one-dimensional diffusions
//! whose discount rate may vanish.
//!
//! The crate solves
//!
//! ```text
//! w(x) = sup_τ limsup_{T→∞} E^x[ ∫_0^{τ∧T} e^{−α_s} f(X_s) ds + e^{−α_{τ∧T}} g(X_{τ∧T}) ],
//! α_t = ∫_0^t r(X_s) ds,  r ≥ 0,
//! ```
//!
//! on a truncated grid by growing the horizon of a finite-horizon dynamic
//! programme, and checks the result against Monte Carlo simulation, the
//! zero-potential (Poisson equation) machinery and the discrete
//! variational inequality.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ergodicity;
pub mod error;
pub mod func;
pub mod generator;
pub mod grid;
pub mod hitting;
pub mod measure;
pub mod model;
pub mod potential;
pub mod rewards;
pub mod simulator;
pub mod stats;
pub mod stopping;
pub mod tridiag;
pub mod verification;

pub use error::{Error, Result};
pub use func::ScalarFn;
pub use generator::{build_generator, Generator};
pub use grid::Grid;
pub use measure::{mu_integral, stationary_density, InvariantMeasure};
pub use model::{DiffusionModel, ModelKind};
pub use rewards::RewardSpec;
pub use ergodicity::{ergodicity_profile, gaussian_tv, ErgodicityProfile, KdeSettings};
pub use hitting::hitting_time_expectation;
pub use potential::{
    solve_discounted_potential, solve_resolvent, solve_zero_potential, verify_c_assumptions,
    AssumptionReport, PotentialFunction, PotentialKind, Verdict,
};
pub use simulator::{
    evaluate_rule, large_deviation_estimate, simulate, simulate_recorded, supermartingale_check,
    time_average, EnsembleSpec, LargeDeviationConfig, PathEnsemble, StopSpec, StoppingRule,
};
pub use stats::{Estimate, Z99, Z99_ONE_SIDED};
pub use stopping::{
    gamma_and_m, solve_finite_horizon, solve_infinite_horizon, solve_infinite_horizon_with, stopping_rule,
    transformed_problem,
    tau_t_limit_check, BoundCertificate, InfiniteHorizonSolution, ObstacleScheme, SolverConfig,
    ValueSurface,
};
pub use verification::{
    bellman_inequality_check, dichotomy_experiment, inject_bump, vi_residual, BellmanReport,
    ComplementarityReport, DichotomyConfig, DichotomyReport, StopPair, VerifyTolerances,
};
