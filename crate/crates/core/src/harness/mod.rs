//! Experiment drivers: rate surfaces, dominating-surface fits, cost/error
//! sweeps, references and the files they produce.

pub mod config;
pub mod fit;
pub mod io;
pub mod presets;
pub mod reference;
pub mod surface;
pub mod sweep;

pub use config::{ExperimentConfig, ProblemConfig, RateConfig, SurfaceConfig};
pub use fit::{fit_dominating_surface, least_squares_line, SurfaceFit};
pub use presets::Preset;
pub use reference::{compute_reference, is_zero_mean, Reference, ReferenceMode};
pub use surface::{estimate_rate_surface, RateSurface, SurfacePoint};
pub use sweep::{cost_error_sweep, cost_slope, run_method, SweepFailure, SweepOutcome, SweepRecord, SweepSpec};
