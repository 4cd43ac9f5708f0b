use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{to_spectral, ComplexField, SpectralField};

/// Quadrature `L^p` norm; `p = f64::INFINITY` gives the grid supremum.
pub fn lp_norm(field: &ComplexField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "L^p norm needs p >= 1 (got {p})"
        )));
    }
    if p.is_infinite() {
        return Ok(field.max_abs());
    }
    Ok(lp_power(field, p).powf(1.0 / p))
}

/// `int |u|^p dx`.
pub fn lp_power(field: &ComplexField, p: f64) -> f64 {
    let dv = field.grid().cell_volume();
    let sum: f64 = if p == 2.0 {
        field.values().iter().map(|v| v.norm_sqr()).sum()
    } else if p == 4.0 {
        field.values().iter().map(|v| v.norm_sqr().powi(2)).sum()
    } else if p == 6.0 {
        field.values().iter().map(|v| v.norm_sqr().powi(3)).sum()
    } else {
        let half = 0.5 * p;
        field.values().iter().map(|v| v.norm_sqr().powf(half)).sum()
    };
    sum * dv
}

/// Inhomogeneous Sobolev norm with multiplier `(1 + |xi|^2)^{s/2}`.
pub fn hs_norm(field: &ComplexField, s: f64) -> Result<f64> {
    Ok(hs_norm_spectral(&to_spectral(field)?, s))
}

/// Homogeneous Sobolev norm with multiplier `|xi|^s` (zero mode contributes 0).
pub fn hdot_norm(field: &ComplexField, s: f64) -> Result<f64> {
    Ok(hdot_norm_spectral(&to_spectral(field)?, s))
}

pub fn hs_norm_spectral(spec: &SpectralField, s: f64) -> f64 {
    if s == 0.0 {
        return spec.l2_norm();
    }
    spec.weighted_norm_sqr(|k2| (1.0 + k2).powf(s)).sqrt()
}

pub fn hdot_norm_spectral(spec: &SpectralField, s: f64) -> f64 {
    if s == 0.0 {
        return spec.l2_norm();
    }
    spec.weighted_norm_sqr(|k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) })
        .sqrt()
}

/// Whether `(q, r)` is a Strichartz-admissible pair in dimension `dim`:
/// `2/q + d/r = d/2` with `2 <= q <= inf` and `r` in the matching range.
pub fn is_admissible(q: f64, r: f64, dim: usize) -> bool {
    let d = dim as f64;
    if !(q >= 2.0 && r >= 2.0) {
        return false;
    }
    let r_max = if dim > 2 {
        2.0 * d / (d - 2.0)
    } else {
        f64::INFINITY
    };
    if r > r_max || (dim == 2 && q == 2.0) {
        return false;
    }
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let inv_r = if r.is_infinite() { 0.0 } else { 1.0 / r };
    (2.0 * inv_q + d * inv_r - d / 2.0).abs() < 1e-12
}

/// Size functionals of initial data used to set the Duhamel window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataProfile {
    pub l1: f64,
    pub h1: f64,
    /// `||x u0||_{L^2}` with centered coordinates.
    pub x_l2: f64,
}

impl DataProfile {
    pub fn new(u0: &ComplexField) -> Result<Self> {
        let grid = u0.grid();
        let r2 = grid.radius_sq();
        let x_l2 = (u0
            .values()
            .iter()
            .zip(&r2)
            .map(|(v, r)| v.norm_sqr() * r)
            .sum::<f64>()
            * grid.cell_volume())
        .sqrt();
        Ok(Self {
            l1: lp_norm(u0, 1.0)?,
            h1: hs_norm(u0, 1.0)?,
            x_l2,
        })
    }

    /// `||u0||_{L^1} + (||u0||_{H^1} + 1)^2`.
    pub fn m1(&self) -> f64 {
        self.l1 + (self.h1 + 1.0).powi(2)
    }

    /// [`DataProfile::m1`] plus the variance term `||x u0||_{L^2}`.
    pub fn m1_with_variance(&self) -> f64 {
        self.m1() + self.x_l2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use rustfft::num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_norms() {
        let grid = Grid::new(3, 8, 2.0).unwrap();
        let c = Complex64::new(0.6, 0.8);
        let f = ComplexField::from_fn(grid, |_| c);
        let vol = grid.volume();
        for p in [1.0, 2.0, 3.0, 4.5, 6.0] {
            let expected = vol.powf(1.0 / p);
            assert!((lp_norm(&f, p).unwrap() - expected).abs() < 1e-12 * expected);
        }
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn plane_wave_sup_is_one() {
        let grid = Grid::new(2, 16, 3.0).unwrap();
        let f = ComplexField::plane_wave(grid, [1, 2, 0]);
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn l2_matches_parseval() {
        let grid = Grid::new(3, 16, 6.0).unwrap();
        let f = ComplexField::gaussian(grid, 1.3, 0.8, [0.5, 0.0, -0.3]);
        let phys = lp_norm(&f, 2.0).unwrap();
        let spec = hs_norm(&f, 0.0).unwrap();
        assert!((phys - spec).abs() < 1e-12 * phys);
    }

    #[test]
    fn plane_wave_homogeneous_norm() {
        let grid = Grid::new(1, 32, 2.0 * PI).unwrap();
        let f = ComplexField::plane_wave(grid, [3, 0, 0]);
        let l2 = lp_norm(&f, 2.0).unwrap();
        let h1 = hdot_norm(&f, 1.0).unwrap();
        assert!((h1 - 3.0 * l2).abs() < 1e-12 * h1);
    }

    #[test]
    fn sobolev_norm_monotone_in_s() {
        let grid = Grid::new(2, 16, 5.0).unwrap();
        let f = ComplexField::gaussian(grid, 1.0, 0.6, [0.0; 3]);
        let mut last = 0.0;
        for i in -4..=8 {
            let v = hs_norm(&f, i as f64 * 0.25).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn admissible_pairs() {
        assert!(is_admissible(f64::INFINITY, 2.0, 3));
        assert!(is_admissible(2.0, 6.0, 3));
        assert!(is_admissible(10.0 / 3.0, 10.0 / 3.0, 3));
        assert!(is_admissible(4.0, 3.0, 3));
        assert!(!is_admissible(4.0, 4.0, 3));
        assert!(!is_admissible(2.0, 8.0, 3));
    }
}
