use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named scalar time series.
///
/// `valid_until`, when set, is the validity horizon of the run the series came
/// from; fits refuse windows that extend past it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub valid_until: Option<f64>,
}

impl ObservableSeries {
    pub fn new(name: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "series has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "series times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            times,
            values,
            valid_until: None,
        })
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.valid_until = Some(horizon);
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples with `t_min <= t <= t_max`.
    pub fn window(&self, t_min: f64, t_max: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.values)
            .filter(move |(&t, _)| t >= t_min && t <= t_max)
            .map(|(&t, &v)| (t, v))
    }

    pub fn map(&self, name: impl Into<String>, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            name: name.into(),
            times: self.times.clone(),
            values: self
                .times
                .iter()
                .zip(&self.values)
                .map(|(&t, &v)| f(t, v))
                .collect(),
            valid_until: self.valid_until,
        }
    }
}

/// Running supremum `A(t) = sup_{tau <= t} tau^{3/2} ||u(tau)||_inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DecayEnvelope {
    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Value at the latest sample time `<= t`.
    pub fn at(&self, t: f64) -> Option<f64> {
        let idx = self.times.partition_point(|&s| s <= t);
        idx.checked_sub(1).map(|i| self.values[i])
    }
}

/// Builds the envelope from an `L^inf` series. Samples at `t <= 0` are skipped
/// (the weight vanishes there).
pub fn decay_envelope(linf: &ObservableSeries) -> DecayEnvelope {
    weighted_envelope(linf, 1.5)
}

/// Running supremum of `t^weight * value`.
pub fn weighted_envelope(series: &ObservableSeries, weight: f64) -> DecayEnvelope {
    let mut times = Vec::with_capacity(series.len());
    let mut values = Vec::with_capacity(series.len());
    let mut running = f64::NEG_INFINITY;
    for (&t, &v) in series.times.iter().zip(&series.values) {
        if t <= 0.0 {
            continue;
        }
        running = running.max(t.powf(weight) * v);
        times.push(t);
        values.push(running);
    }
    DecayEnvelope { times, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, ts: &[f64]) -> ObservableSeries {
        ObservableSeries::new("s", ts.to_vec(), ts.iter().map(|&t| f(t)).collect()).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn exact_rate_gives_flat_envelope() {
        let s = series(|t| t.powf(-1.5), &grid(0.5, 20.0, 50));
        let env = decay_envelope(&s);
        assert!(env.values.iter().all(|&a| (a - 1.0).abs() < 1e-12));
    }

    #[test]
    fn faster_decay_freezes_at_first_sample() {
        let s = series(|t| t.powi(-2), &grid(1.0, 10.0, 40));
        let env = decay_envelope(&s);
        assert!(env.values.iter().all(|&a| (a - 1.0).abs() < 1e-15));
    }

    #[test]
    fn skips_time_zero() {
        let s = series(|t| 1.0 / (1.0 + t), &grid(0.0, 4.0, 9));
        let env = decay_envelope(&s);
        assert_eq!(env.times.len(), 8);
        assert_eq!(env.at(0.1), None);
        assert!(env.at(1.2).is_some());
    }

    #[test]
    fn rejects_unsorted_times() {
        assert!(ObservableSeries::new("x", vec![1.0, 0.5], vec![1.0, 1.0]).is_err());
        assert!(ObservableSeries::new("x", vec![1.0], vec![]).is_err());
    }
}
