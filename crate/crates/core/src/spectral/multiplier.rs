use rustfft::num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Multiplies every coefficient by `m(xi)`.
///
/// The wavevector passed to `m` has `dim` meaningful entries; the rest are 0.
pub fn apply_multiplier(
    spec: &SpectralField,
    m: impl Fn([f64; 3]) -> Complex64,
) -> Result<SpectralField> {
    let grid = *spec.grid();
    let mut out = Vec::with_capacity(grid.len());
    for (slot, c) in spec.coefficients().iter().enumerate() {
        let factor = m(grid.wavevector(slot));
        if !factor.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "multiplier is not finite at xi = {:?}",
                grid.wavevector(slot)
            )));
        }
        out.push(c * factor);
    }
    Ok(SpectralField::from_raw(grid, out))
}

/// Multiplier depending only on `|xi|^2`, applied in place.
pub fn apply_radial_in_place(spec: &mut SpectralField, m: impl Fn(f64) -> f64) {
    let k2 = spec.grid().wavenumber_sq();
    for (c, k) in spec.coefficients_mut().iter_mut().zip(k2) {
        *c *= m(k);
    }
}

/// Spectral partial derivative along `axis`.
pub fn derivative(spec: &SpectralField, axis: usize) -> Result<SpectralField> {
    if axis >= spec.grid().dim() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for a {}-d grid",
            spec.grid().dim()
        )));
    }
    apply_multiplier(spec, |xi| Complex64::new(0.0, xi[axis]))
}

/// Spectral Laplacian, multiplier `-|xi|^2`.
pub fn laplacian(spec: &SpectralField) -> SpectralField {
    let mut out = spec.clone();
    apply_radial_in_place(&mut out, |k2| -k2);
    out
}

/// 0/1 mask keeping modes with every `|m_a| <= ratio * n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DealiasMask {
    grid: Grid,
    keep: Vec<bool>,
}

impl DealiasMask {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn keeps(&self, slot: usize) -> bool {
        self.keep[slot]
    }

    pub fn kept_count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn is_all_ones(&self) -> bool {
        self.keep.iter().all(|&k| k)
    }

    /// Largest kept `|m|` along an axis.
    pub fn cutoff(&self) -> i64 {
        let n = self.grid.points_per_axis();
        (0..n)
            .filter(|&j| self.keep[self.grid.ravel([j, 0, 0])])
            .map(|j| self.grid.mode_index(j).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn apply(&self, coefficients: &mut [Complex64]) {
        for (c, &k) in coefficients.iter_mut().zip(&self.keep) {
            if !k {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// The mask as a spectral field with 0/1 coefficients.
    pub fn to_field(&self) -> SpectralField {
        let coefficients = self
            .keep
            .iter()
            .map(|&k| Complex64::new(if k { 1.0 } else { 0.0 }, 0.0))
            .collect();
        SpectralField::from_raw(self.grid, coefficients)
    }

    /// Fraction of `L^2` mass carried by masked-out modes.
    pub fn rejected_fraction(&self, spec: &SpectralField) -> f64 {
        let (mut out, mut total) = (0.0, 0.0);
        for (c, &k) in spec.coefficients().iter().zip(&self.keep) {
            let w = c.norm_sqr();
            total += w;
            if !k {
                out += w;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            out / total
        }
    }
}

pub fn dealias_mask(grid: &Grid, ratio: f64) -> Result<DealiasMask> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "dealias ratio must lie in (0, 1] (got {ratio})"
        )));
    }
    let half = grid.points_per_axis() as f64 / 2.0;
    // a small relative slack keeps ratio = 2/3, n = 6 style products exact
    let limit = (ratio * half * (1.0 + 1e-12)).floor() as i64;
    let axis_keep: Vec<bool> = grid
        .mode_indices()
        .iter()
        .map(|m| m.abs() <= limit)
        .collect();
    let keep = (0..grid.len())
        .map(|slot| {
            let idx = grid.unravel(slot);
            (0..grid.dim()).all(|a| axis_keep[idx[a]])
        })
        .collect();
    Ok(DealiasMask { grid: *grid, keep })
}
