use serde::{Deserialize, Serialize};

use super::series::ObservableSeries;
use crate::error::{Error, Result};
use crate::solver::Trajectory;

/// Both sides of `||u||_{L^4_{t,x}}^4 <~ ||u||_{L^2}^2 sup_t |||D|^{1/2} u||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorawetzBound {
    /// Trapezoid integral of `||u(t)||_{L^4}^4` up to the horizon.
    pub spacetime_l4_4th: f64,
    /// `mass * sup_t ||u(t)||_{H^{1/2}-dot}^2` over the same window.
    pub bound: f64,
    pub t_max: f64,
}

impl MorawetzBound {
    pub fn ratio(&self) -> f64 {
        if self.bound == 0.0 {
            0.0
        } else {
            self.spacetime_l4_4th / self.bound
        }
    }
}

/// Accumulates the interaction-Morawetz pair from the `l4`, `mass` and
/// `h_half_dot` series of `trajectory`, stopping at its validity horizon.
pub fn morawetz_accumulate(trajectory: &Trajectory) -> Result<MorawetzBound> {
    let l4 = trajectory.require_series("l4")?;
    let mass = trajectory.require_series("mass")?;
    let hdot = trajectory.require_series("h_half_dot")?;
    let t_max = trajectory.validity_horizon;
    let integrand = l4.map("l4_4th", |_, v| v.powi(4));
    let spacetime = trapezoid(&integrand, t_max)?;
    let mass0 = mass.values.first().copied().unwrap_or(0.0);
    let sup = hdot
        .window(0.0, t_max)
        .map(|(_, v)| v * v)
        .fold(0.0, f64::max);
    Ok(MorawetzBound {
        spacetime_l4_4th: spacetime,
        bound: mass0 * sup,
        t_max,
    })
}

pub(crate) fn trapezoid(series: &ObservableSeries, t_max: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series.window(f64::NEG_INFINITY, t_max).collect();
    if pts.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { time: None });
    }
    Ok(pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum())
}
