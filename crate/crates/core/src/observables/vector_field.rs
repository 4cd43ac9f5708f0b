//! The Galilean vector field `J(t) = x + 2 i t grad` and the functionals
//! built from it.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::norms::{lp_norm, lp_power};
use crate::error::{Error, Result};
use crate::spectral::{to_spectral, with_transform, ComplexField, SpectralField};

/// Component `a` of `J(t) u = x_a u + 2 i t d_a u`.
///
/// Only meaningful while `u` is concentrated away from the box boundary,
/// where the centered coordinate is discontinuous.
pub fn j_field(u: &ComplexField, t: f64, axis: usize) -> Result<ComplexField> {
    if axis >= u.grid().dim() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for a {}-d grid",
            u.grid().dim()
        )));
    }
    let spec = to_spectral(u)?;
    Ok(j_component(u, &spec, t, axis))
}

fn j_component(u: &ComplexField, spec: &SpectralField, t: f64, axis: usize) -> ComplexField {
    let grid = *u.grid();
    let n = grid.points_per_axis();
    let stride = n.pow((grid.dim() - 1 - axis) as u32);
    let mut deriv: Vec<Complex64> = spec
        .coefficients()
        .iter()
        .enumerate()
        .map(|(slot, c)| c * Complex64::new(0.0, grid.wavenumber((slot / stride) % n)))
        .collect();
    with_transform(&grid, |ft| ft.inverse_in_place(&mut deriv));
    let two_it = Complex64::new(0.0, 2.0 * t);
    let values = u
        .values()
        .iter()
        .zip(&deriv)
        .enumerate()
        .map(|(flat, (v, d))| {
            let x = grid.coordinate((flat / stride) % n);
            v * x + two_it * d
        })
        .collect();
    ComplexField::from_raw(grid, values)
}

/// `||J(t) u||_{L^2}` summed over axes.
pub fn j_norm(u: &ComplexField, t: f64) -> Result<f64> {
    let spec = to_spectral(u)?;
    Ok(j_norm_with_spectrum(u, &spec, t))
}

pub fn j_norm_with_spectrum(u: &ComplexField, spec: &SpectralField, t: f64) -> f64 {
    (0..u.grid().dim())
        .map(|axis| {
            if t == 0.0 {
                weighted_coordinate_norm_sqr(u, axis)
            } else {
                j_component(u, spec, t, axis).mass()
            }
        })
        .sum::<f64>()
        .sqrt()
}

fn weighted_coordinate_norm_sqr(u: &ComplexField, axis: usize) -> f64 {
    let grid = u.grid();
    let n = grid.points_per_axis();
    let stride = n.pow((grid.dim() - 1 - axis) as u32);
    u.values()
        .iter()
        .enumerate()
        .map(|(flat, v)| v.norm_sqr() * grid.coordinate((flat / stride) % n).powi(2))
        .sum::<f64>()
        * grid.cell_volume()
}

/// Pseudo-conformal functional
/// `V(t) = ||J(t) u||^2 + 8/(p+1) t^2 ||u||_{p+1}^{p+1}`.
///
/// `V/2` and `V/8` are the two normalizations that appear in the literature.
pub fn pseudoconformal_v(u: &ComplexField, t: f64, p: u32) -> Result<f64> {
    let spec = to_spectral(u)?;
    Ok(pseudoconformal_v_with_spectrum(u, &spec, t, p))
}

pub fn pseudoconformal_v_with_spectrum(
    u: &ComplexField,
    spec: &SpectralField,
    t: f64,
    p: u32,
) -> f64 {
    let j = j_norm_with_spectrum(u, spec, t);
    let potential = lp_power(u, (p + 1) as f64);
    j * j + 8.0 / (p as f64 + 1.0) * t * t * potential
}

/// Predicted `dV/dt = 4t/(p+1) (4 - d(p-1)) ||u||_{p+1}^{p+1}` along a
/// defocusing solution.
pub fn pseudoconformal_rate(u: &ComplexField, t: f64, p: u32) -> f64 {
    let d = u.grid().dim() as f64;
    let p_f = p as f64;
    4.0 * t / (p_f + 1.0) * (4.0 - d * (p_f - 1.0)) * lp_power(u, p_f + 1.0)
}

/// Both sides of `||u||_{L^6} <~ t^{-1} ||J(t) u||_{L^2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L6Check {
    pub lhs: f64,
    pub rhs: f64,
}

impl L6Check {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

pub fn weighted_l6_check(u: &ComplexField, t: f64) -> Result<L6Check> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weighted L^6 check needs t > 0 (got {t})"
        )));
    }
    Ok(L6Check {
        lhs: lp_norm(u, 6.0)?,
        rhs: j_norm(u, t)? / t,
    })
}
