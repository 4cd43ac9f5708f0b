use crate::model::ModelSpec;
use crate::observables::{lp_norm, lp_power, pseudoconformal_v_with_spectrum};
use crate::spectral::{ComplexField, SpectralField};

use super::conserved_with_spectrum;

/// State handed to observables at a sample time.
pub struct Sample<'a> {
    pub t: f64,
    pub field: &'a ComplexField,
    pub spectrum: &'a SpectralField,
    /// `|xi|^2` per transform slot.
    pub xi_sq: &'a [f64],
    pub model: &'a ModelSpec,
}

impl Sample<'_> {
    /// `L^d sum w(|xi|^2) |c|^2`.
    pub fn spectral_norm_sqr(&self, weight: impl Fn(f64) -> f64) -> f64 {
        self.spectrum
            .coefficients()
            .iter()
            .zip(self.xi_sq)
            .map(|(c, &k)| weight(k) * c.norm_sqr())
            .sum::<f64>()
            * self.field.grid().volume()
    }
}

/// A scalar measured on the solution at every sample time.
pub trait Observable: Send + Sync {
    fn name(&self) -> &str;
    fn measure(&self, sample: &Sample<'_>) -> f64;
}

/// Column names of the standard observable set, in CSV order.
pub const STANDARD_COLUMNS: [&str; 11] = [
    "linf",
    "l2",
    "l3",
    "l4",
    "l5",
    "l6",
    "h_half_dot",
    "h1",
    "mass",
    "energy",
    "V_pc",
];

pub struct LpNorm {
    name: String,
    p: f64,
}

impl LpNorm {
    pub fn new(p: f64) -> Self {
        let name = if p.is_infinite() {
            "linf".to_string()
        } else {
            format!("l{p}")
        };
        Self { name, p }
    }
}

impl Observable for LpNorm {
    fn name(&self) -> &str {
        &self.name
    }

    fn measure(&self, s: &Sample<'_>) -> f64 {
        lp_norm(s.field, self.p).unwrap_or(f64::NAN)
    }
}

pub struct HdotHalf;

impl Observable for HdotHalf {
    fn name(&self) -> &str {
        "h_half_dot"
    }

    fn measure(&self, s: &Sample<'_>) -> f64 {
        s.spectral_norm_sqr(|k2| k2.sqrt()).sqrt()
    }
}

pub struct H1Norm;

impl Observable for H1Norm {
    fn name(&self) -> &str {
        "h1"
    }

    fn measure(&self, s: &Sample<'_>) -> f64 {
        s.spectral_norm_sqr(|k2| 1.0 + k2).sqrt()
    }
}

pub struct Mass;

impl Observable for Mass {
    fn name(&self) -> &str {
        "mass"
    }

    fn measure(&self, s: &Sample<'_>) -> f64 {
        lp_power(s.field, 2.0)
    }
}

pub struct Energy;

impl Observable for Energy {
    fn name(&self) -> &str {
        "energy"
    }

    fn measure(&self, s: &Sample<'_>) -> f64 {
        conserved_with_spectrum(s.field, s.spectrum, s.xi_sq, s.model).energy
    }
}

/// Pseudo-conformal functional `V(t)`; costs one inverse transform per axis.
pub struct PseudoConformal;

impl Observable for PseudoConformal {
    fn name(&self) -> &str {
        "V_pc"
    }

    fn measure(&self, s: &Sample<'_>) -> f64 {
        pseudoconformal_v_with_spectrum(s.field, s.spectrum, s.t, s.model.power)
    }
}

/// Observables behind [`STANDARD_COLUMNS`].
pub fn standard_observables() -> Vec<Box<dyn Observable>> {
    vec![
        Box::new(LpNorm::new(f64::INFINITY)),
        Box::new(LpNorm::new(2.0)),
        Box::new(LpNorm::new(3.0)),
        Box::new(LpNorm::new(4.0)),
        Box::new(LpNorm::new(5.0)),
        Box::new(LpNorm::new(6.0)),
        Box::new(HdotHalf),
        Box::new(H1Norm),
        Box::new(Mass),
        Box::new(Energy),
        Box::new(PseudoConformal),
    ]
}

/// Standard set without the (more expensive) pseudo-conformal functional.
pub fn basic_observables() -> Vec<Box<dyn Observable>> {
    let mut obs = standard_observables();
    obs.retain(|o| o.name() != "V_pc");
    obs
}
