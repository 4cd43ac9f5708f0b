use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::observables::lp_norm;
use crate::propagator::FreePropagator;
use crate::solver::BoundaryShell;
use crate::spectral::ComplexField;

/// Largest log-magnitude any intermediate may reach.
pub const LOG_GUARD: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormParams {
    pub p: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for WeightedNormParams {
    fn default() -> Self {
        Self {
            p: 6.0,
            eps1: 0.2,
            eps2: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    /// `(int gamma(t)^{1/eps2} ||exp(-i t omega) u0||_p^{1/eps2} dt)^{eps2}`
    pub value: f64,
    /// Last time actually integrated to (the horizon or the end of the grid).
    pub t_max: f64,
    /// Share of the integral coming from the last decade `[t_max/10, t_max]`.
    pub truncation_proxy: f64,
}

/// `ln gamma(t)` for `gamma(t) = t^100 / (1 + t^100) * t^{d(1/2 - 1/p) - eps1}`.
pub fn log_weight(t: f64, dim: usize, params: &WeightedNormParams) -> Result<f64> {
    let lt = t.ln();
    let big = 100.0 * lt;
    if big.abs() > LOG_GUARD {
        return Err(Error::Overflow {
            value: big.abs(),
            limit: LOG_GUARD,
            context: format!("t^100 at t = {t}"),
        });
    }
    // ln(t^100 / (1 + t^100)) = -ln(1 + t^-100)
    let damping = if big > 0.0 {
        -(-big).exp().ln_1p()
    } else {
        big - big.exp().ln_1p()
    };
    let rate = dim as f64 * (0.5 - 1.0 / params.p) - params.eps1;
    Ok(damping + rate * lt)
}

pub fn weighted_linear_norm(
    u0: &ComplexField,
    model: &ModelSpec,
    params: WeightedNormParams,
    t_grid: &[f64],
    shell: Option<&BoundaryShell>,
) -> Result<WeightedNorm> {
    if !(params.p > 2.0 && params.p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "p must lie in (2, inf) (got {})",
            params.p
        )));
    }
    if !(params.eps1 > params.eps2 && params.eps2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need eps1 > eps2 > 0 (got {}, {})",
            params.eps1, params.eps2
        )));
    }
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(Error::InvalidArgument(
            "time grid must be positive and strictly increasing".into(),
        ));
    }
    let prop = FreePropagator::new(*u0.grid(), model);
    let dim = u0.grid().dim();
    let exponent = 1.0 / params.eps2;
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let u = prop.evolve(u0, t)?;
        if shell.is_some_and(|s| s.exceeded(&u)) {
            break;
        }
        let norm = lp_norm(&u, params.p)?;
        let value = if norm == 0.0 {
            0.0
        } else {
            let log = exponent * (log_weight(t, dim, &params)? + norm.ln());
            // large negative logs only underflow to 0
            if log > LOG_GUARD {
                return Err(Error::Overflow {
                    value: log,
                    limit: LOG_GUARD,
                    context: format!("weighted integrand at t = {t}"),
                });
            }
            log.exp()
        };
        samples.push((t, value));
    }
    if samples.len() < 2 {
        return Err(Error::BeyondHorizon {
            requested: t_grid[1],
            horizon: samples.first().map_or(0.0, |s| s.0),
        });
    }
    let t_max = samples[samples.len() - 1].0;
    let integral = trapezoid(&samples, f64::NEG_INFINITY);
    let last_decade = trapezoid(&samples, t_max / 10.0);
    Ok(WeightedNorm {
        value: integral.powf(params.eps2),
        t_max,
        truncation_proxy: if integral == 0.0 {
            0.0
        } else {
            last_decade / integral
        },
    })
}

fn trapezoid(samples: &[(f64, f64)], from: f64) -> f64 {
    samples
        .windows(2)
        .filter(|w| w[0].0 >= from)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Geometric time grid with `per_decade` points per decade on `[t_min, t_max]`.
pub fn log_time_grid(t_min: f64, t_max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (t_max / t_min).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n)
        .map(|k| t_min * (t_max / t_min).powf(k as f64 / n as f64))
        .collect()
}
