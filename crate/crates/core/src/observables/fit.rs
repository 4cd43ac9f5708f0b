use serde::{Deserialize, Serialize};

use super::series::ObservableSeries;
use crate::error::{Error, Result};

/// Minimum number of samples a fit window must hold.
pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
}

impl FitWindow {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min) {
            return Err(Error::Fit(format!(
                "window must satisfy 0 < t_min < t_max (got [{t_min}, {t_max}])"
            )));
        }
        Ok(Self { t_min, t_max })
    }
}

/// Power law `value ~ exp(log_constant) * t^{-exponent}` fitted on log-log axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Decay exponent, the negated log-log slope (positive for decay).
    pub exponent: f64,
    pub log_constant: f64,
    pub r_squared: f64,
    /// First and last sample time actually used.
    pub window: [f64; 2],
    pub samples: usize,
}

impl DecayFit {
    pub fn constant(&self) -> f64 {
        self.log_constant.exp()
    }

    pub fn predict(&self, t: f64) -> f64 {
        (self.log_constant - self.exponent * t.ln()).exp()
    }
}

/// Least-squares fit of `ln value` against `ln t` over `window`.
pub fn fit_decay(series: &ObservableSeries, window: FitWindow) -> Result<DecayFit> {
    if let Some(h) = series.valid_until {
        if window.t_max > h {
            return Err(Error::Fit(format!(
                "window [{}, {}] of '{}' crosses the validity horizon {h}",
                window.t_min, window.t_max, series.name
            )));
        }
    }
    let points: Vec<(f64, f64)> = series.window(window.t_min, window.t_max).collect();
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "'{}' has {} samples in [{}, {}], need at least {MIN_FIT_SAMPLES}",
            series.name,
            points.len(),
            window.t_min,
            window.t_max
        )));
    }
    if let Some(&(t, v)) = points.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!(
            "'{}' has non-positive value {v} at t = {t}",
            series.name
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    Ok(least_squares(
        &xs,
        &ys,
        [points[0].0, points[points.len() - 1].0],
    ))
}

fn least_squares(xs: &[f64], ys: &[f64], window: [f64; 2]) -> DecayFit {
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        let dy = y - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    DecayFit {
        exponent: -slope,
        log_constant: intercept,
        r_squared,
        window,
        samples: xs.len(),
    }
}
