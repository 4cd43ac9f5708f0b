use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::{build_partition, PartitionOfUnity, SmoothBump};
use super::sampling::{sample_random_data, Randomization};
use super::weighted::{weighted_linear_norm, WeightedNorm, WeightedNormParams};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::observables::{
    fit_decay, hs_norm, weighted_envelope, DecayFit, FitWindow, ObservableSeries,
};
use crate::scattering::NonlinearPartLinf;
use crate::solver::{
    basic_observables, evolve, prepare_initial, BoundaryShell, Observable, SolverConfig,
};
use crate::spectral::ComplexField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_samples: usize,
    pub master_seed: u64,
    /// Partition lattice spacing `h`.
    pub lattice_spacing: f64,
    pub randomization: Randomization,
    /// Tail thresholds as multiples of the ensemble median.
    pub lambda_multiples: Vec<f64>,
    /// Optional weighted linear norm per sample, on the given time grid.
    pub weighted_norm: Option<(WeightedNormParams, Vec<f64>)>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_samples: 64,
            master_seed: 0,
            lattice_spacing: 1.0,
            randomization: Randomization::Gaussian,
            lambda_multiples: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            weighted_norm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "kebab-case")]
pub enum SampleStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: u64,
    pub seed: u64,
    pub status: SampleStatus,
    /// `sup_{0 < t <= H} t^{3/2} ||u_nl(t)||_inf`.
    pub sup_statistic: f64,
    pub validity_horizon: f64,
    /// `||u0^omega||_{H^1}`.
    pub h1: f64,
    /// Fit of `||u_nl(t)||_inf` on `[H/2, H]`, when one could be made.
    pub fit: Option<DecayFit>,
    pub weighted: Option<WeightedNorm>,
    #[serde(skip)]
    pub series: Vec<ObservableSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub n_samples: usize,
    pub failed: usize,
    pub master_seed: u64,
    pub samples: Vec<SampleOutcome>,
    pub median: f64,
    pub lambda_grid: Vec<f64>,
    /// Empirical `P(statistic > lambda)` over successful samples.
    pub tail: Vec<f64>,
    pub h1_median: f64,
    pub h1_lambda_grid: Vec<f64>,
    pub h1_tail: Vec<f64>,
    pub weighted_median: Option<f64>,
    /// Interquartile range over median of the weighted norms.
    pub weighted_spread: Option<f64>,
}

/// Runs `n_samples` randomized trajectories in parallel and aggregates their
/// statistics in sample order.
pub fn ensemble_run(
    u0: &ComplexField,
    model: &ModelSpec,
    solver: &SolverConfig,
    config: &EnsembleConfig,
) -> Result<EnsembleReport> {
    if config.n_samples == 0 {
        return Err(Error::InvalidArgument(
            "ensemble needs at least one sample".into(),
        ));
    }
    let partition = build_partition(
        u0.grid(),
        config.lattice_spacing,
        &SmoothBump::for_spacing(config.lattice_spacing),
    )?;
    let samples: Vec<SampleOutcome> = (0..config.n_samples as u64)
        .into_par_iter()
        .map(|index| run_sample(u0, model, solver, config, &partition, index))
        .collect();
    Ok(aggregate(config, samples))
}

fn run_sample(
    u0: &ComplexField,
    model: &ModelSpec,
    solver: &SolverConfig,
    config: &EnsembleConfig,
    partition: &PartitionOfUnity,
    index: u64,
) -> SampleOutcome {
    let mut outcome = SampleOutcome {
        index,
        seed: 0,
        status: SampleStatus::Ok,
        sup_statistic: f64::NAN,
        validity_horizon: f64::NAN,
        h1: f64::NAN,
        fit: None,
        weighted: None,
        series: Vec::new(),
    };
    if let Err(e) = fill_sample(u0, model, solver, config, partition, &mut outcome) {
        outcome.status = SampleStatus::Failed(e.to_string());
    }
    outcome
}

fn fill_sample(
    u0: &ComplexField,
    model: &ModelSpec,
    solver: &SolverConfig,
    config: &EnsembleConfig,
    partition: &PartitionOfUnity,
    outcome: &mut SampleOutcome,
) -> Result<()> {
    let sample = sample_random_data(
        u0,
        partition,
        config.master_seed,
        outcome.index,
        config.randomization,
    )?;
    outcome.seed = sample.seed;
    outcome.h1 = hs_norm(&sample.field, 1.0)?;
    let initial = prepare_initial(&sample.field, model, solver)?;
    let mut observables: Vec<Box<dyn Observable>> = basic_observables();
    observables.push(Box::new(NonlinearPartLinf::new(&initial, model)?));
    let traj = evolve(&sample.field, model, solver, &observables)?;
    let horizon = traj.validity_horizon;
    let unl = traj.require_series("unl_linf")?;
    outcome.sup_statistic = weighted_envelope(unl, 1.5).at(horizon).unwrap_or(0.0);
    outcome.validity_horizon = horizon;
    outcome.fit = FitWindow::new(0.5 * horizon, horizon)
        .and_then(|w| fit_decay(unl, w))
        .ok();
    if let Some((params, t_grid)) = &config.weighted_norm {
        let shell = BoundaryShell::new(
            traj.grid,
            solver.boundary_shell_fraction,
            solver.boundary_mass_tol,
        )?;
        outcome.weighted = Some(weighted_linear_norm(
            &sample.field,
            &model.with_sign(crate::model::Sign::Off),
            *params,
            t_grid,
            Some(&shell),
        )?);
    }
    outcome.series = traj.series;
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn tail(values: &[f64], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&l| {
            if values.is_empty() {
                0.0
            } else {
                values.iter().filter(|&&v| v > l).count() as f64 / values.len() as f64
            }
        })
        .collect()
}

fn aggregate(config: &EnsembleConfig, samples: Vec<SampleOutcome>) -> EnsembleReport {
    let ok: Vec<&SampleOutcome> = samples
        .iter()
        .filter(|s| s.status == SampleStatus::Ok)
        .collect();
    let stats: Vec<f64> = ok.iter().map(|s| s.sup_statistic).collect();
    let h1: Vec<f64> = ok.iter().map(|s| s.h1).collect();
    let med = median(&mut stats.clone());
    let h1_med = median(&mut h1.clone());
    let lambda_grid: Vec<f64> = config.lambda_multiples.iter().map(|m| m * med).collect();
    let h1_lambda_grid: Vec<f64> = config.lambda_multiples.iter().map(|m| m * h1_med).collect();
    let mut weighted: Vec<f64> = ok
        .iter()
        .filter_map(|s| s.weighted.map(|w| w.value))
        .collect();
    let (weighted_median, weighted_spread) = if weighted.is_empty() {
        (None, None)
    } else {
        let m = median(&mut weighted);
        let iqr = quantile(&weighted, 0.75) - quantile(&weighted, 0.25);
        (Some(m), Some(iqr / m))
    };
    EnsembleReport {
        n_samples: samples.len(),
        failed: samples.len() - ok.len(),
        master_seed: config.master_seed,
        tail: tail(&stats, &lambda_grid),
        h1_tail: tail(&h1, &h1_lambda_grid),
        median: med,
        lambda_grid,
        h1_median: h1_med,
        h1_lambda_grid,
        weighted_median,
        weighted_spread,
        samples,
    }
}
