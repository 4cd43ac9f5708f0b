//! Exact free evolution `exp(-i t omega(D))` and the linear decay experiment.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::observables::{fit_decay, lp_norm, DecayFit, FitWindow, ObservableSeries};
use crate::solver::{BoundaryShell, SolverConfig};
use crate::spectral::{with_transform, ComplexField, Grid, SpectralField};

/// Free flow on a fixed grid with `omega` tabulated per transform slot.
///
/// Phases are `t * omega` evaluated afresh for every call, never accumulated.
#[derive(Debug, Clone)]
pub struct FreePropagator {
    grid: Grid,
    omega: Vec<f64>,
}

impl FreePropagator {
    pub fn new(grid: Grid, model: &ModelSpec) -> Self {
        let omega = grid
            .wavenumber_sq()
            .into_iter()
            .map(|k| model.symbol.omega(k))
            .collect();
        Self { grid, omega }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn evolve_spectrum_in_place(&self, coefficients: &mut [Complex64], t: f64) {
        if t == 0.0 {
            return;
        }
        for (c, &w) in coefficients.iter_mut().zip(&self.omega) {
            *c *= Complex64::from_polar(1.0, -t * w);
        }
    }

    pub fn evolve_spectrum(&self, spec: &SpectralField, t: f64) -> Result<SpectralField> {
        if *spec.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut c = spec.coefficients().to_vec();
        self.evolve_spectrum_in_place(&mut c, t);
        SpectralField::new(self.grid, c)
    }

    pub fn evolve(&self, u0: &ComplexField, t: f64) -> Result<ComplexField> {
        if *u0.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if !u0.is_finite() {
            return Err(Error::NonFinite { time: None });
        }
        if t == 0.0 {
            return Ok(u0.clone());
        }
        let mut data = u0.values().to_vec();
        with_transform(&self.grid, |ft| {
            ft.forward_in_place(&mut data);
            self.evolve_spectrum_in_place(&mut data, t);
            ft.inverse_in_place(&mut data);
        });
        ComplexField::new(self.grid, data)
    }
}

/// `exp(-i t omega(D)) u0`.
pub fn free_evolve(u0: &ComplexField, t: f64, model: &ModelSpec) -> Result<ComplexField> {
    FreePropagator::new(*u0.grid(), model).evolve(u0, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearDecayOptions {
    pub boundary_shell_fraction: f64,
    pub boundary_mass_tol: f64,
    /// Left end of the fit window; the right end is the validity horizon.
    pub fit_t_min: f64,
}

impl Default for LinearDecayOptions {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            boundary_shell_fraction: solver.boundary_shell_fraction,
            boundary_mass_tol: solver.boundary_mass_tol,
            fit_t_min: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearDecayReport {
    /// `||exp(-i t omega(D)) u0||_{L^p}` at every requested time.
    pub series: ObservableSeries,
    /// Whether each sample lies past the validity horizon.
    pub past_horizon: Vec<bool>,
    pub validity_horizon: f64,
    /// Fit over `[fit_t_min, horizon]`, or why it could not be made.
    pub fit: std::result::Result<DecayFit, String>,
}

/// Measures `L^p` decay of the free flow at `t_samples` and fits the rate on
/// the part of the schedule inside the validity horizon.
pub fn linear_decay_experiment(
    u0: &ComplexField,
    model: &ModelSpec,
    t_samples: &[f64],
    p: f64,
    options: LinearDecayOptions,
) -> Result<LinearDecayReport> {
    if t_samples.is_empty() || t_samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "t_samples must be non-empty and strictly increasing".into(),
        ));
    }
    let shell = BoundaryShell::new(
        *u0.grid(),
        options.boundary_shell_fraction,
        options.boundary_mass_tol,
    )?;
    let prop = FreePropagator::new(*u0.grid(), model);
    let mut values = Vec::with_capacity(t_samples.len());
    let mut past = Vec::with_capacity(t_samples.len());
    let mut horizon = None;
    for &t in t_samples {
        let u = prop.evolve(u0, t)?;
        if horizon.is_none() && shell.exceeded(&u) {
            horizon = Some(t);
        }
        past.push(horizon.is_some_and(|h| t > h));
        values.push(lp_norm(&u, p)?);
    }
    let validity_horizon = horizon.unwrap_or(*t_samples.last().unwrap());
    let name = if p.is_infinite() {
        "linf".to_string()
    } else {
        format!("l{p}")
    };
    let series =
        ObservableSeries::new(name, t_samples.to_vec(), values)?.with_horizon(validity_horizon);
    let fit = FitWindow::new(options.fit_t_min, validity_horizon)
        .and_then(|w| fit_decay(&series, w))
        .map_err(|e| e.to_string());
    Ok(LinearDecayReport {
        series,
        past_horizon: past,
        validity_horizon,
        fit,
    })
}
