//! Scattering states, scattering rates, spacetime tails and the windowed
//! Duhamel decomposition, all computed from a stored [`Trajectory`].

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{
    fit_decay, hdot_norm, hs_norm, DecayEnvelope, DecayFit, FitWindow, ObservableSeries,
};
use crate::propagator::FreePropagator;
use crate::solver::{Observable, Sample, Trajectory};
use crate::spectral::{dealias_mask, with_transform, ComplexField};

fn snapshot(trajectory: &Trajectory, t: f64) -> Result<&ComplexField> {
    if t > trajectory.validity_horizon + 1e-9 {
        return Err(Error::BeyondHorizon {
            requested: t,
            horizon: trajectory.validity_horizon,
        });
    }
    trajectory
        .snapshot_at(t)
        .ok_or_else(|| Error::InvalidArgument(format!("no snapshot stored at t = {t}")))
}

/// `||u(t) - exp(-i t omega(D)) u(0)||_inf` measured during evolution; costs
/// one inverse transform per sample.
pub struct NonlinearPartLinf {
    coefficients: Vec<Complex64>,
    omega: Vec<f64>,
}

impl NonlinearPartLinf {
    /// `initial` must be the state the solver actually evolves (see
    /// [`crate::solver::prepare_initial`]).
    pub fn new(initial: &ComplexField, model: &crate::model::ModelSpec) -> Result<Self> {
        let grid = *initial.grid();
        let mut coefficients = initial.values().to_vec();
        with_transform(&grid, |ft| ft.forward_in_place(&mut coefficients));
        let omega = grid
            .wavenumber_sq()
            .into_iter()
            .map(|k| model.symbol.omega(k))
            .collect();
        Ok(Self {
            coefficients,
            omega,
        })
    }
}

impl Observable for NonlinearPartLinf {
    fn name(&self) -> &str {
        "unl_linf"
    }

    fn measure(&self, s: &Sample<'_>) -> f64 {
        let mut free: Vec<Complex64> = self
            .coefficients
            .iter()
            .zip(&self.omega)
            .map(|(c, &w)| c * Complex64::from_polar(1.0, -s.t * w))
            .collect();
        with_transform(s.field.grid(), |ft| ft.inverse_in_place(&mut free));
        s.field
            .values()
            .iter()
            .zip(&free)
            .map(|(u, l)| (u - l).norm())
            .fold(0.0, f64::max)
    }
}

/// Nonlinear part `u(t) - exp(-i t omega(D)) u(0)`.
pub fn u_nl(trajectory: &Trajectory, t: f64) -> Result<ComplexField> {
    let u = snapshot(trajectory, t)?;
    let free =
        FreePropagator::new(trajectory.grid, &trajectory.model).evolve(&trajectory.initial, t)?;
    u.sub(&free)
}

#[derive(Debug, Clone)]
pub struct ScatteringState {
    pub u_plus: ComplexField,
    pub extraction_time: f64,
    /// `||u+_T - u+_{T_prev}||_{H^{1/2}}` at the accepted `T`.
    pub cauchy_gap: f64,
    /// `(T, gap to the previous T)` for every candidate after the first.
    pub gaps: Vec<(f64, f64)>,
    /// Set for linear runs, where `u+ = u(0)` holds exactly.
    pub exact: bool,
}

/// `u+_T = exp(i T omega(D)) u(T)` for each `T` in `t_list`; accepts the
/// largest `T` whose gap to its predecessor is at most `tolerance`.
pub fn extract_scattering_state(
    trajectory: &Trajectory,
    t_list: &[f64],
    tolerance: f64,
) -> Result<ScatteringState> {
    if t_list.len() < 2 || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "need at least two strictly increasing extraction times".into(),
        ));
    }
    if trajectory.model.is_linear() {
        return Ok(ScatteringState {
            u_plus: trajectory.initial.clone(),
            extraction_time: 0.0,
            cauchy_gap: 0.0,
            gaps: Vec::new(),
            exact: true,
        });
    }
    let prop = FreePropagator::new(trajectory.grid, &trajectory.model);
    let mut states = Vec::with_capacity(t_list.len());
    for &t in t_list {
        states.push(prop.evolve(snapshot(trajectory, t)?, -t)?);
    }
    let mut gaps = Vec::with_capacity(t_list.len() - 1);
    for k in 1..states.len() {
        gaps.push((t_list[k], hs_norm(&states[k].sub(&states[k - 1])?, 0.5)?));
    }
    let accepted = gaps.iter().rposition(|&(_, g)| g <= tolerance);
    match accepted {
        Some(k) => Ok(ScatteringState {
            u_plus: states.swap_remove(k + 1),
            extraction_time: gaps[k].0,
            cauchy_gap: gaps[k].1,
            gaps,
            exact: false,
        }),
        None => {
            let decreasing = gaps.windows(2).all(|w| w[1].1 < w[0].1);
            let detail = gaps
                .iter()
                .map(|(t, g)| format!("T={t}: {g:.3e}"))
                .collect::<Vec<_>>()
                .join(", ");
            Err(Error::NonConvergence(if decreasing {
                format!("gaps decrease but stay above {tolerance:.1e} ({detail})")
            } else {
                format!(
                    "Cauchy gaps do not decrease ({detail}); the box may be too small or the data too large"
                )
            }))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringRate {
    /// `||u(t) - exp(-i t omega(D)) u+||_{H^{1/2}-dot}` at snapshot times.
    pub series: ObservableSeries,
    pub fit: Option<DecayFit>,
    /// The series vanishes identically (linear run).
    pub exact: bool,
}

/// Default fit window for rates measured against a state extracted at the
/// horizon: `[1, H/2]`, away from the extraction time where the difference is
/// forced to zero.
pub fn default_rate_window(trajectory: &Trajectory) -> Result<FitWindow> {
    FitWindow::new(1.0, 0.5 * trajectory.validity_horizon)
}

pub fn scattering_rate(
    trajectory: &Trajectory,
    state: &ScatteringState,
    window: FitWindow,
) -> Result<ScatteringRate> {
    let prop = FreePropagator::new(trajectory.grid, &trajectory.model);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for snap in &trajectory.snapshots {
        if snap.time > trajectory.validity_horizon {
            break;
        }
        let free = prop.evolve(&state.u_plus, snap.time)?;
        times.push(snap.time);
        values.push(hdot_norm(&snap.field.sub(&free)?, 0.5)?);
    }
    let series = ObservableSeries::new("scattering_gap", times, values)?
        .with_horizon(trajectory.validity_horizon);
    let scale = state.u_plus.mass().sqrt().max(f64::MIN_POSITIVE);
    let exact = state.exact || series.values.iter().all(|&v| v <= 1e-12 * scale);
    let fit = if exact {
        None
    } else {
        Some(fit_decay(&series, window)?)
    };
    Ok(ScatteringRate { series, fit, exact })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeTail {
    /// `||u||_{L^5_{t,x}([s, inf))}` per `s`.
    pub series: ObservableSeries,
    /// Share of each tail integral supplied by the extrapolation past the
    /// horizon.
    pub truncation_proxy: Vec<f64>,
    /// Some proxy exceeds 10%.
    pub truncation_flag: bool,
    /// Power law fitted to `||u(t)||_{L^5}^5` on `[H/2, H]`.
    pub integrand_fit: Option<DecayFit>,
    pub fit: Option<DecayFit>,
}

/// Tail norms from the `l5` series: trapezoid up to the horizon plus the
/// analytic integral of a power law fitted to the integrand on `[H/2, H]`.
pub fn spacetime_tail(trajectory: &Trajectory, s_list: &[f64]) -> Result<SpacetimeTail> {
    let l5 = trajectory.require_series("l5")?;
    let horizon = trajectory.validity_horizon;
    if s_list.is_empty()
        || s_list.windows(2).any(|w| w[1] <= w[0])
        || s_list.iter().any(|&s| !(s >= 0.0 && s < horizon))
    {
        return Err(Error::InvalidArgument(format!(
            "tail start times must increase and lie in [0, {horizon})"
        )));
    }
    let integrand = l5.map("l5_5th", |_, v| v.powi(5));
    let zero = integrand.values.iter().all(|&v| v == 0.0);
    let integrand_fit = if zero {
        None
    } else {
        Some(fit_decay(
            &integrand,
            FitWindow::new(0.5 * horizon, horizon)?,
        )?)
    };
    let extrapolated = match integrand_fit {
        None => 0.0,
        Some(f) if f.exponent > 1.0 => {
            f.constant() * horizon.powf(1.0 - f.exponent) / (f.exponent - 1.0)
        }
        Some(_) => f64::INFINITY,
    };
    let pts: Vec<(f64, f64)> = integrand.window(0.0, horizon).collect();
    let mut tails = Vec::with_capacity(s_list.len());
    let mut proxy = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let inside = trapezoid_from(&pts, s);
        let total = inside + extrapolated;
        tails.push(total.powf(0.2));
        proxy.push(if total == 0.0 {
            0.0
        } else {
            extrapolated / total
        });
    }
    let series = ObservableSeries::new("l5_tail", s_list.to_vec(), tails)?;
    let fit = if zero || s_list.len() < crate::observables::MIN_FIT_SAMPLES || s_list[0] <= 0.0 {
        None
    } else {
        Some(fit_decay(
            &series,
            FitWindow::new(s_list[0], s_list[s_list.len() - 1])?,
        )?)
    };
    Ok(SpacetimeTail {
        truncation_flag: proxy.iter().any(|&p| p > 0.1),
        truncation_proxy: proxy,
        series,
        integrand_fit,
        fit,
    })
}

/// Trapezoid of sampled `(t, f)` over `[s, last]`, interpolating linearly at `s`.
fn trapezoid_from(pts: &[(f64, f64)], s: f64) -> f64 {
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let ((t0, f0), (t1, f1)) = (w[0], w[1]);
        if t1 <= s {
            continue;
        }
        if t0 >= s {
            acc += 0.5 * (t1 - t0) * (f0 + f1);
        } else {
            let fs = f0 + (f1 - f0) * (s - t0) / (t1 - t0);
            acc += 0.5 * (t1 - s) * (fs + f1);
        }
    }
    acc
}

/// `u(t) = exp(-i t omega) u0 + F1 + F2 + F3` with `F_i` the trapezoid
/// quadrature of `-i int exp(-i (t-s) omega) P N(u(s)) ds` over
/// `[0, M]`, `[M, t-M]` and `[t-M, t]`, where `P` is the dealias projection
/// used by the solver.
#[derive(Debug, Clone)]
pub struct DuhamelSplit {
    pub t: f64,
    /// Window parameter actually used (snapped to the snapshot grid).
    pub m: f64,
    pub f1: ComplexField,
    pub f2: ComplexField,
    pub f3: ComplexField,
    /// `||u(t) - (exp(-i t omega) u0 + F1 + F2 + F3)||_{L^2}`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuhamelRecord {
    pub t: f64,
    pub m: f64,
    pub f1_l2: f64,
    pub f2_l2: f64,
    pub f3_l2: f64,
    pub f1_linf: f64,
    pub f2_linf: f64,
    pub f3_linf: f64,
    pub residual: f64,
}

impl DuhamelSplit {
    pub fn sum(&self) -> ComplexField {
        let values = self
            .f1
            .values()
            .iter()
            .zip(self.f2.values())
            .zip(self.f3.values())
            .map(|((a, b), c)| a + b + c)
            .collect();
        ComplexField::new(*self.f1.grid(), values).expect("finite sum of finite fields")
    }

    pub fn record(&self) -> DuhamelRecord {
        DuhamelRecord {
            t: self.t,
            m: self.m,
            f1_l2: self.f1.mass().sqrt(),
            f2_l2: self.f2.mass().sqrt(),
            f3_l2: self.f3.mass().sqrt(),
            f1_linf: self.f1.max_abs(),
            f2_linf: self.f2.max_abs(),
            f3_linf: self.f3.max_abs(),
            residual: self.residual,
        }
    }

    /// `||F2||_inf <= A(t) t^{-3/2} / 2`, with `A` read from `envelope`.
    pub fn f2_absorbed(&self, envelope: &DecayEnvelope) -> Option<bool> {
        envelope
            .at(self.t)
            .map(|a| self.f2.max_abs() <= 0.5 * a * self.t.powf(-1.5))
    }
}

/// `min(t/2, m1^4)`: the window grows like the fourth power of the data size
/// but never beyond half the probe time.
pub fn default_window(t: f64, m1: f64) -> f64 {
    (0.5 * t).min(m1.powi(4))
}

pub fn duhamel_split(trajectory: &Trajectory, t: f64, m: f64) -> Result<DuhamelSplit> {
    let spacing = trajectory.snapshot_spacing();
    let nodes: Vec<&crate::solver::Snapshot> = trajectory
        .snapshots
        .iter()
        .filter(|s| s.time <= t + 1e-9 * spacing)
        .collect();
    let u_t = snapshot(trajectory, t)?;
    if nodes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "t = {t} needs at least two snapshot nodes"
        )));
    }
    if !(m > 0.0 && 2.0 * m <= t + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "window parameter must satisfy 0 < M <= t/2 (got M = {m}, t = {t})"
        )));
    }
    let steps_t = nodes.len() - 1;
    let steps_m = ((m / spacing).round() as usize).clamp(1, steps_t / 2);
    let m_used = steps_m as f64 * spacing;

    let grid = trajectory.grid;
    let model = &trajectory.model;
    let prop = FreePropagator::new(grid, model);
    let mask = dealias_mask(&grid, trajectory.config.dealias_ratio)?;
    let mu = model.mu();
    let half_power = ((model.power - 1) / 2) as i32;
    let mut acc = vec![vec![Complex64::default(); grid.len()]; 3];
    if mu != 0.0 {
        let mut buf = vec![Complex64::default(); grid.len()];
        for (k, node) in nodes.iter().enumerate() {
            for (b, v) in buf.iter_mut().zip(node.field.values()) {
                *b = mu * v.norm_sqr().powi(half_power) * v;
            }
            with_transform(&grid, |ft| ft.forward_in_place(&mut buf));
            mask.apply(&mut buf);
            prop.evolve_spectrum_in_place(&mut buf, t - node.time);
            let weight = |lo: usize, hi: usize| -> f64 {
                if k < lo || k > hi || lo == hi {
                    0.0
                } else if k == lo || k == hi {
                    0.5 * spacing
                } else {
                    spacing
                }
            };
            let ws = [
                weight(0, steps_m),
                weight(steps_m, steps_t - steps_m),
                weight(steps_t - steps_m, steps_t),
            ];
            for (a, w) in acc.iter_mut().zip(ws) {
                if w != 0.0 {
                    let factor = Complex64::new(0.0, -w);
                    for (x, b) in a.iter_mut().zip(&buf) {
                        *x += factor * b;
                    }
                }
            }
        }
        for a in acc.iter_mut() {
            with_transform(&grid, |ft| ft.inverse_in_place(a));
        }
    }
    let mut fields = acc
        .into_iter()
        .map(|v| ComplexField::new(grid, v))
        .collect::<Result<Vec<_>>>()?;
    let f3 = fields.pop().unwrap();
    let f2 = fields.pop().unwrap();
    let f1 = fields.pop().unwrap();
    let free = prop.evolve(&trajectory.initial, t)?;
    let residual = u_t
        .values()
        .iter()
        .zip(free.values())
        .zip(f1.values().iter().zip(f2.values()).zip(f3.values()))
        .map(|((u, l), ((a, b), c))| (u - l - a - b - c).norm_sqr())
        .sum::<f64>()
        * grid.cell_volume();
    Ok(DuhamelSplit {
        t,
        m: m_used,
        f1,
        f2,
        f3,
        residual: residual.sqrt(),
    })
}
