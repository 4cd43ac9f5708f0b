//! Physical-space randomization: partitions of unity, Gaussian-modulated
//! data, weighted linear norms and ensemble statistics.

mod partition;
mod run;
mod sampling;
mod weighted;

pub use partition::{
    build_partition, localization_check, Bump, LocalizationCheck, PartitionOfUnity, SmoothBump,
};
pub use run::{ensemble_run, EnsembleConfig, EnsembleReport, SampleOutcome, SampleStatus};
pub use sampling::{
    cell_gaussian, derive_seed, exact_moment_constant, expected_mass, gaussian_moment_check,
    sample_random_data, MomentCheck, RandomDataSample, Randomization,
};
pub use weighted::{
    log_time_grid, log_weight, weighted_linear_norm, WeightedNorm, WeightedNormParams, LOG_GUARD,
};
