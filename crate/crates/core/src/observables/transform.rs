//! The pseudo-conformal (lens) transform.
//!
//! For `t > 0` and `s = -1/t`,
//!
//! ```text
//! v(y) = t^{d/2} u(t, t y) exp(-i t |y|^2 / 4)
//! ```
//!
//! which strips the outgoing chirp of `u` so that `|grad v| = |J(t) u| / 2`
//! after rescaling. The field is resampled by evaluating its trigonometric
//! interpolant at the dilated points; points that fall outside the box read 0.

use rustfft::num_complex::Complex64;

use super::norms::{hdot_norm_spectral, lp_power};
use crate::error::{Error, Result};
use crate::spectral::{dealias_mask, to_spectral, ComplexField, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    /// Band the output must stay inside.
    pub dealias_ratio: f64,
    /// Largest tolerated mass fraction outside that band, and largest
    /// tolerated mass fraction of the input lost to the dilation.
    pub tolerance: f64,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            dealias_ratio: 2.0 / 3.0,
            tolerance: 1e-6,
        }
    }
}

/// `(v, s)` with `s = -1/t`, using default options.
pub fn pseudoconformal_transform(u: &ComplexField, t: f64) -> Result<(ComplexField, f64)> {
    pseudoconformal_transform_with(u, t, TransformOptions::default())
}

pub fn pseudoconformal_transform_with(
    u: &ComplexField,
    t: f64,
    options: TransformOptions,
) -> Result<(ComplexField, f64)> {
    check_time(t)?;
    let grid = *u.grid();
    let lost = outside_fraction(u, grid.box_length() / (2.0 * t));
    if lost > options.tolerance {
        return Err(Error::InvalidArgument(format!(
            "rescaled support does not fit the box: {lost:.2e} of the mass lies beyond |x| = L/(2t)"
        )));
    }
    let d = grid.dim() as i32;
    let resampled = resample(u, t)?;
    let scale = t.powf(d as f64 / 2.0);
    let v = chirp(&resampled, scale, -t / 4.0);
    check_band(&v, options)?;
    Ok((v, -1.0 / t))
}

/// Inverse of [`pseudoconformal_transform`]:
/// `u(t, x) = t^{-d/2} v(x / t) exp(i |x|^2 / (4 t))` with `t = -1/s`.
pub fn inverse_pseudoconformal_transform(v: &ComplexField, s: f64) -> Result<ComplexField> {
    if !(s < 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "transformed time must be negative (got {s})"
        )));
    }
    let t = -1.0 / s;
    let d = v.grid().dim() as f64;
    let resampled = resample(v, 1.0 / t)?;
    Ok(chirp(&resampled, t.powf(-d / 2.0), 1.0 / (4.0 * t)))
}

/// Energy of the transformed field,
/// `1/2 ||grad v||^2 + (-s)^{(d(p-1)-4)/2} / (p+1) ||v||_{p+1}^{p+1}`,
/// which equals `V(t)/8` of the original solution.
pub fn pseudoconformal_energy(v: &ComplexField, s: f64, p: u32) -> Result<f64> {
    let d = v.grid().dim() as f64;
    let p_f = p as f64;
    let spec = to_spectral(v)?;
    let grad = hdot_norm_spectral(&spec, 1.0);
    let weight = (-s).powf((d * (p_f - 1.0) - 4.0) / 2.0);
    Ok(0.5 * grad * grad + weight / (p_f + 1.0) * lp_power(v, p_f + 1.0))
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "pseudo-conformal transform needs t > 0 (got {t})"
        )));
    }
    Ok(())
}

fn check_band(v: &ComplexField, options: TransformOptions) -> Result<()> {
    let mask = dealias_mask(v.grid(), options.dealias_ratio)?;
    let rejected = mask.rejected_fraction(&to_spectral(v)?);
    if rejected > options.tolerance {
        return Err(Error::InvalidArgument(format!(
            "transformed field puts {rejected:.2e} of its mass into the dealiased band"
        )));
    }
    Ok(())
}

/// Mass fraction at sites with some `|x_a| >= radius`.
fn outside_fraction(u: &ComplexField, radius: f64) -> f64 {
    let grid = u.grid();
    let total = u.mass();
    if total == 0.0 {
        return 0.0;
    }
    let outside: f64 = u
        .values()
        .iter()
        .enumerate()
        .filter(|(flat, _)| {
            grid.position(*flat)[..grid.dim()]
                .iter()
                .any(|x| x.abs() >= radius)
        })
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        * grid.cell_volume();
    outside / total
}

/// `out(x) = scale * g(x) * exp(i k |x|^2)`.
fn chirp(g: &ComplexField, scale: f64, k: f64) -> ComplexField {
    let grid = *g.grid();
    let r2 = grid.radius_sq();
    let values = g
        .values()
        .iter()
        .zip(&r2)
        .map(|(v, &r)| v * Complex64::from_polar(scale, k * r))
        .collect();
    ComplexField::from_raw(grid, values)
}

/// `g(y) = f(factor * y)` from the trigonometric interpolant of `f`, zero
/// where `factor * y` leaves `[-L/2, L/2)`.
fn resample(f: &ComplexField, factor: f64) -> Result<ComplexField> {
    let grid = *f.grid();
    let spec = to_spectral(f)?;
    let matrix = interpolation_matrix(&grid, factor);
    let n = grid.points_per_axis();
    let mut data = spec.into_coefficients();
    let mut line = vec![Complex64::default(); n];
    let mut out = vec![Complex64::default(); n];
    for axis in 0..grid.dim() {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                for (j, o) in out.iter_mut().enumerate() {
                    let row = &matrix[j * n..(j + 1) * n];
                    *o = row.iter().zip(&line).map(|(a, b)| a * b).sum();
                }
                for (j, o) in out.iter().enumerate() {
                    data[start + j * stride] = *o;
                }
            }
        }
    }
    ComplexField::new(grid, data)
}

/// Row `j` evaluates the 1-D Fourier series at `factor * y_j`; the Nyquist
/// mode is split symmetrically so the interpolant of real data stays real.
fn interpolation_matrix(grid: &Grid, factor: f64) -> Vec<Complex64> {
    let n = grid.points_per_axis();
    let half = grid.box_length() / 2.0;
    let mut m = vec![Complex64::default(); n * n];
    for j in 0..n {
        let x = factor * grid.coordinate(j);
        if !(x >= -half && x < half) {
            continue;
        }
        let shift = x + half;
        for k in 0..n {
            let xi = grid.wavenumber(k);
            m[j * n + k] = if k == n / 2 {
                Complex64::new((xi * shift).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, xi * shift)
            };
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_factor_resampling_is_identity() {
        let grid = Grid::new(2, 16, 8.0).unwrap();
        let u = ComplexField::gaussian(grid, 1.0, 1.0, [0.3, -0.2, 0.0]);
        let r = resample(&u, 1.0).unwrap();
        let err = r.sub(&u).unwrap().mass().sqrt();
        assert!(err < 1e-12);
    }

    #[test]
    fn resampling_matches_analytic_dilation() {
        let grid = Grid::new(1, 64, 20.0).unwrap();
        let u = ComplexField::from_fn(grid, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        let r = resample(&u, 0.5).unwrap();
        for (j, v) in r.values().iter().enumerate() {
            let y = 0.5 * grid.coordinate(j);
            assert!((v - Complex64::new((-y * y).exp(), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_times() {
        let grid = Grid::new(1, 16, 8.0).unwrap();
        let u = ComplexField::zeros(grid);
        assert!(pseudoconformal_transform(&u, 0.0).is_err());
        assert!(pseudoconformal_transform(&u, -1.0).is_err());
        assert!(inverse_pseudoconformal_transform(&u, 1.0).is_err());
    }

    #[test]
    fn wide_data_does_not_fit() {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        let u = ComplexField::gaussian(grid, 1.0, 2.0, [0.0; 3]);
        assert!(pseudoconformal_transform(&u, 4.0).is_err());
    }

    #[test]
    fn chirp_is_unimodular() {
        let grid = Grid::new(2, 8, 4.0).unwrap();
        let u = ComplexField::from_fn(grid, |_| Complex64::new(1.0, 0.0));
        let c = chirp(&u, 1.0, 0.7);
        assert!(c.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
    }
}
