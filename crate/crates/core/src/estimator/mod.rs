//! Index sets, variance and cost models, sample allocation and the MIMC /
//! MLMC estimators.

mod allocation;
mod index_set;
mod mlmc;
mod rates;
mod run;

pub use allocation::{allocate_samples, optimal_counts, Allocation};
pub use index_set::{build_index_set, IndexSet, LevelRule, LevelSpec};
pub use mlmc::{mlmc_params, MlmcParams};
pub use rates::{cost_model, variance_model, RateParams, VarianceModel};
pub use run::{run_mimc, run_mlmc, sample_index, Accumulator, EstimatorOutput, IndexStats, Method, RunOptions};

/// Ceiling that ignores round-off of a few ulps above an integer.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}
