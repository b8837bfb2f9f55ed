//! Multi-index and multilevel Monte Carlo estimators for semilinear parabolic
//! SPDEs discretised in the eigenbasis of the linear operator and advanced in
//! time with the exponential integrator.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] describes a problem instance (spectrum, noise, drift, initial
//!   condition, horizon and quantity of interest).
//! * [`noise`] samples the exact per-mode Ornstein–Uhlenbeck integrals on the
//!   finest grid and aggregates them onto coarser grids, so that every coupled
//!   solve of one Monte Carlo sample sees the same Brownian path.
//! * [`solver`] runs the exponential integrator and forms the coupled
//!   differences used by the estimators.
//! * [`estimator`] builds index sets and sample allocations and runs MIMC,
//!   reduced-samples MIMC and MLMC.
//! * [`harness`] reproduces the numerical experiments: rate surfaces,
//!   dominating-surface fits, cost/error sweeps and reference solutions.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod model;
pub mod noise;
pub mod par;
pub mod rng;
pub mod solver;
pub mod transform;
pub mod validate;

pub use error::{Error, Result};
pub use estimator::{
    allocate_samples, build_index_set, cost_model, mlmc_params, run_mimc, run_mlmc,
    variance_model, Allocation, EstimatorOutput, IndexSet, LevelRule, LevelSpec, MlmcParams,
    RateParams, RunOptions, VarianceModel,
};
pub use model::{
    eigenvalue, noise_coefficients, phi1_factor, semigroup_factor, DriftKind, DriftSpec,
    InitSpec, NoiseSpec, ProblemSpec, QoIForm, QoIFunctional, QoISpec, SpectrumSpec, ZetaRule,
};
pub use noise::{aggregate_pair, coarsen, ou_variance, sample_lattice, NoiseLattice};
pub use rng::StreamKey;
pub use solver::{
    double_difference, drift_coefficients, pair_difference, solve, step, Grids, QoIValue,
    SolveResult, State,
};
