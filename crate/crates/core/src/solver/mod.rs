//! Strang-split time integration of `i u_t - omega(D) u = mu |u|^{p-1} u` on
//! the periodic box, with conservation tracking and a validity-horizon monitor.

mod horizon;
mod observe;
mod snapshot;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use horizon::BoundaryShell;
pub use observe::{
    basic_observables, standard_observables, Energy, H1Norm, HdotHalf, LpNorm, Mass, Observable,
    PseudoConformal, Sample, STANDARD_COLUMNS,
};
pub use snapshot::{read_snapshots, write_snapshots, SnapshotHeader, SnapshotStore};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::observables::{lp_power, ObservableSeries};
use crate::spectral::{
    dealias_mask, ComplexField, DealiasMask, FourierTransform, Grid, SpectralField,
};

/// Name of the boundary-shell mass fraction series every trajectory records.
pub const SHELL_SERIES: &str = "shell_mass";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub dealias_ratio: f64,
    /// Store a snapshot every this many steps (step 0 included).
    pub snapshot_stride: usize,
    /// Evaluate observables every this many steps (and at the final step).
    pub sample_stride: usize,
    pub boundary_shell_fraction: f64,
    pub boundary_mass_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 1.0,
            dealias_ratio: 2.0 / 3.0,
            snapshot_stride: 10,
            sample_stride: 1,
            boundary_shell_fraction: 0.1,
            boundary_mass_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dt must lie in (0, 1) (got {})",
                self.dt
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_end must be positive (got {})",
                self.t_end
            )));
        }
        if !(self.dealias_ratio > 0.0 && self.dealias_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dealias ratio must lie in (0, 1] (got {})",
                self.dealias_ratio
            )));
        }
        if self.snapshot_stride == 0 || self.sample_stride == 0 {
            return Err(Error::InvalidArgument(
                "snapshot and sample strides must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (rounded to the nearest step).
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

/// Mass and energy of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedPair {
    pub mass: f64,
    /// `1/2 int omega(xi)|u^|^2 + mu/(p+1) int |u|^{p+1}`; for the Schrodinger
    /// symbol the first term is `1/2 int |grad u|^2`.
    pub energy: f64,
}

impl ConservedPair {
    /// Bound on `||u||_{H^1}^2 = mass + ||grad u||^2` implied by a defocusing
    /// Schrodinger energy.
    pub fn h1_sq_bound(&self) -> f64 {
        self.mass + 2.0 * self.energy
    }
}

pub fn conserved(u: &ComplexField, model: &ModelSpec) -> Result<ConservedPair> {
    let spec = crate::spectral::to_spectral(u)?;
    let xi_sq = u.grid().wavenumber_sq();
    Ok(conserved_with_spectrum(u, &spec, &xi_sq, model))
}

pub(crate) fn conserved_with_spectrum(
    u: &ComplexField,
    spec: &SpectralField,
    xi_sq: &[f64],
    model: &ModelSpec,
) -> ConservedPair {
    let kinetic = 0.5
        * spec
            .coefficients()
            .iter()
            .zip(xi_sq)
            .map(|(c, &k)| model.symbol.omega(k) * c.norm_sqr())
            .sum::<f64>()
        * u.grid().volume();
    let p = model.power as f64;
    let potential = if model.is_linear() {
        0.0
    } else {
        model.mu() / (p + 1.0) * lp_power(u, p + 1.0)
    };
    ConservedPair {
        mass: lp_power(u, 2.0),
        energy: kinetic + potential,
    }
}

/// Exact flow of `i u_t = mu |u|^{p-1} u` over `dt`; `|u|` is invariant.
pub fn nonlinear_substep(u: &ComplexField, dt: f64, model: &ModelSpec) -> ComplexField {
    let mut out = u.clone();
    nonlinear_in_place(out.values_mut(), dt, model);
    out
}

fn nonlinear_in_place(values: &mut [Complex64], dt: f64, model: &ModelSpec) {
    let mu = model.mu();
    if mu == 0.0 {
        return;
    }
    let half_power = (model.power - 1) / 2;
    for v in values.iter_mut() {
        let rho = v.norm_sqr().powi(half_power as i32);
        *v *= Complex64::from_polar(1.0, -mu * rho * dt);
    }
}

/// Strang splitting state machine.
///
/// The state is kept in spectral form between steps; the physical field is
/// materialized on demand. Nonlinear models cost two transforms per step plus
/// one per materialization; linear models are exact phase rotations.
pub struct Stepper {
    model: ModelSpec,
    dt: f64,
    ft: FourierTransform,
    xi_sq: Vec<f64>,
    half_phase: Vec<Complex64>,
    full_phase: Vec<Complex64>,
    mask: DealiasMask,
    field: ComplexField,
    spectrum: SpectralField,
    field_current: bool,
    steps: u64,
}

impl Stepper {
    pub fn new(u: &ComplexField, model: &ModelSpec, dt: f64, dealias_ratio: f64) -> Result<Self> {
        model.validate()?;
        if !u.is_finite() {
            return Err(Error::NonFinite { time: Some(0.0) });
        }
        let grid = *u.grid();
        let mut ft = FourierTransform::new(grid);
        let xi_sq = grid.wavenumber_sq();
        let phases = |tau: f64| -> Vec<Complex64> {
            xi_sq
                .iter()
                .map(|&k| Complex64::from_polar(1.0, -tau * model.symbol.omega(k)))
                .collect()
        };
        let half_phase = phases(0.5 * dt);
        let full_phase = phases(dt);
        let spectrum = ft.to_spectral(u)?;
        Ok(Self {
            model: *model,
            dt,
            xi_sq,
            half_phase,
            full_phase,
            mask: dealias_mask(&grid, dealias_ratio)?,
            field: u.clone(),
            spectrum,
            field_current: true,
            steps: 0,
            ft,
        })
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    pub fn spectrum(&self) -> &SpectralField {
        &self.spectrum
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    /// Physical field at the current time.
    pub fn field(&mut self) -> &ComplexField {
        if !self.field_current {
            let values = self.field.values_mut();
            values.copy_from_slice(self.spectrum.coefficients());
            self.ft.inverse_in_place(values);
            self.field_current = true;
        }
        &self.field
    }

    /// Field and spectrum at the current time.
    pub fn state(&mut self) -> (&ComplexField, &SpectralField) {
        self.field();
        (&self.field, &self.spectrum)
    }

    fn parts(&self) -> (&ComplexField, &SpectralField, &[f64]) {
        debug_assert!(self.field_current);
        (&self.field, &self.spectrum, &self.xi_sq)
    }

    /// One step `L(dt/2) N(dt) L(dt/2)`, dealiasing after the nonlinear part.
    pub fn advance(&mut self) -> Result<()> {
        if self.model.is_linear() {
            for (c, ph) in self
                .spectrum
                .coefficients_mut()
                .iter_mut()
                .zip(&self.full_phase)
            {
                *c *= ph;
            }
        } else {
            let coeffs = self.spectrum.coefficients_mut();
            for (c, ph) in coeffs.iter_mut().zip(&self.half_phase) {
                *c *= ph;
            }
            let values = self.field.values_mut();
            values.copy_from_slice(coeffs);
            self.ft.inverse_in_place(values);
            nonlinear_in_place(values, self.dt, &self.model);
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Instability {
                    time: self.time() + self.dt,
                });
            }
            coeffs.copy_from_slice(values);
            self.ft.forward_in_place(coeffs);
            self.mask.apply(coeffs);
            for (c, ph) in coeffs.iter_mut().zip(&self.half_phase) {
                *c *= ph;
            }
        }
        self.field_current = false;
        self.steps += 1;
        Ok(())
    }
}

/// Single Strang step of size `dt` (negative `dt` steps backwards).
pub fn strang_step(
    u: &ComplexField,
    dt: f64,
    model: &ModelSpec,
    config: &SolverConfig,
) -> Result<ComplexField> {
    let mut stepper = Stepper::new(u, model, dt, config.dealias_ratio)?;
    stepper.advance()?;
    Ok(stepper.field().clone())
}

/// Data actually evolved: nonlinear runs start from the dealiased projection
/// of `u0`, so every later state lives in the same band.
pub fn prepare_initial(
    u0: &ComplexField,
    model: &ModelSpec,
    config: &SolverConfig,
) -> Result<ComplexField> {
    if model.is_linear() {
        return Ok(u0.clone());
    }
    let mask = dealias_mask(u0.grid(), config.dealias_ratio)?;
    if mask.is_all_ones() {
        return Ok(u0.clone());
    }
    let mut ft = FourierTransform::new(*u0.grid());
    let mut data = u0.values().to_vec();
    ft.forward_in_place(&mut data);
    mask.apply(&mut data);
    ft.inverse_in_place(&mut data);
    ComplexField::new(*u0.grid(), data)
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub field: ComplexField,
}

/// Result of [`evolve`]: sampled observables, strided snapshots and the
/// validity horizon.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub model: ModelSpec,
    pub config: SolverConfig,
    /// The state at `t = 0` that was actually evolved.
    pub initial: ComplexField,
    pub times: Vec<f64>,
    pub series: Vec<ObservableSeries>,
    pub snapshots: Vec<Snapshot>,
    /// First sample time at which the boundary shell held more than the
    /// tolerated mass fraction, or `t_end`.
    pub validity_horizon: f64,
    pub horizon_reached: bool,
}

impl Trajectory {
    pub fn series(&self, name: &str) -> Option<&ObservableSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn require_series(&self, name: &str) -> Result<&ObservableSeries> {
        self.series(name)
            .ok_or_else(|| Error::InvalidArgument(format!("trajectory has no '{name}' series")))
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Snapshot at time `t` (matched to within a thousandth of a step).
    pub fn snapshot_at(&self, t: f64) -> Option<&ComplexField> {
        let tol = 1e-3 * self.config.dt;
        self.snapshots
            .iter()
            .find(|s| (s.time - t).abs() <= tol)
            .map(|s| &s.field)
    }

    pub fn snapshot_spacing(&self) -> f64 {
        self.config.snapshot_stride as f64 * self.config.dt
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// Integrates `u0` to `config.t_end`.
///
/// Observables are evaluated at `t = 0`, every `sample_stride` steps and at
/// the final step. Runs whose boundary shell fills before `t_end` complete
/// normally but log a warning; analyses must stay below the horizon.
pub fn evolve(
    u0: &ComplexField,
    model: &ModelSpec,
    config: &SolverConfig,
    observables: &[Box<dyn Observable>],
) -> Result<Trajectory> {
    config.validate()?;
    model.validate()?;
    let grid = *u0.grid();
    let initial = prepare_initial(u0, model, config)?;
    let shell = BoundaryShell::new(
        grid,
        config.boundary_shell_fraction,
        config.boundary_mass_tol,
    )?;
    let initial_fraction = shell.mass_fraction(&initial);
    if initial_fraction > shell.tolerance() {
        return Err(Error::InvalidArgument(format!(
            "initial data holds {initial_fraction:.3e} of its mass in the boundary shell \
             (tolerance {:.1e}); enlarge the box",
            shell.tolerance()
        )));
    }

    let mut stepper = Stepper::new(&initial, model, config.dt, config.dealias_ratio)?;
    let steps = config.steps();
    let mut times = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); observables.len()];
    let mut shell_values = Vec::new();
    let mut snapshots = Vec::new();
    let mut horizon = None;

    for k in 0..=steps {
        if k > 0 {
            stepper.advance()?;
        }
        let sample_now = k % config.sample_stride == 0 || k == steps;
        let snap_now = k % config.snapshot_stride == 0;
        if !(sample_now || snap_now) {
            continue;
        }
        let t = stepper.time();
        stepper.field();
        let (field, spectrum, xi_sq) = stepper.parts();
        if !field.is_finite() {
            return Err(Error::Instability { time: t });
        }
        if snap_now {
            snapshots.push(Snapshot {
                time: t,
                field: field.clone(),
            });
        }
        if !sample_now {
            continue;
        }
        let fraction = shell.mass_fraction(field);
        if horizon.is_none() && fraction > shell.tolerance() {
            horizon = Some(t);
        }
        let sample = Sample {
            t,
            field,
            spectrum,
            xi_sq,
            model,
        };
        for (obs, out) in observables.iter().zip(values.iter_mut()) {
            out.push(obs.measure(&sample));
        }
        shell_values.push(fraction);
        times.push(t);
    }

    let t_end = *times.last().expect("at least one sample");
    let validity_horizon = horizon.unwrap_or(t_end);
    if horizon.is_some() {
        log::warn!(
            "validity horizon {validity_horizon:.3} reached before t_end {t_end:.3}; \
             later samples are flagged"
        );
    }
    let mut series = Vec::with_capacity(observables.len() + 1);
    for (obs, vals) in observables.iter().zip(values) {
        series.push(
            ObservableSeries::new(obs.name(), times.clone(), vals)?.with_horizon(validity_horizon),
        );
    }
    series.push(
        ObservableSeries::new(SHELL_SERIES, times.clone(), shell_values)?
            .with_horizon(validity_horizon),
    );
    Ok(Trajectory {
        grid,
        model: *model,
        config: *config,
        initial,
        times,
        series,
        snapshots,
        validity_horizon,
        horizon_reached: horizon.is_some(),
    })
}
