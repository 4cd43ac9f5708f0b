use rustfft::num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Complex amplitudes on the lattice sites of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Fourier coefficients of a field, one per transform slot.
///
/// Coefficients follow the mean convention `c_m = N^{-d} sum_j u_j e^{-2 pi i j.m/N}`,
/// so a constant field `c` has the single coefficient `c` at the zero mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time: None });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f` at every lattice position (trailing unused coordinates are 0).
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self { grid, values }
    }

    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
    pub fn gaussian(grid: Grid, amplitude: f64, width: f64, center: [f64; 3]) -> Self {
        let inv = 0.5 / (width * width);
        Self::from_fn(grid, |x| {
            let r2: f64 = (0..grid.dim()).map(|a| (x[a] - center[a]).powi(2)).sum();
            Complex64::new(amplitude * (-inv * r2).exp(), 0.0)
        })
    }

    /// On-grid plane wave `exp(i xi.x)` with `xi = (2 pi / L) * modes`.
    pub fn plane_wave(grid: Grid, modes: [i64; 3]) -> Self {
        let unit = grid.wavenumber_unit();
        Self::from_fn(grid, |x| {
            let phase: f64 = (0..grid.dim()).map(|a| unit * modes[a] as f64 * x[a]).sum();
            Complex64::from_polar(1.0, phase)
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product with a real weight sampled on the same grid.
    pub fn weighted(&self, weight: &[f64]) -> Self {
        debug_assert_eq!(weight.len(), self.values.len());
        Self {
            grid: self.grid,
            values: self.values.iter().zip(weight).map(|(v, w)| v * w).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `int |u|^2 dx` as a Riemann sum.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl SpectralField {
    pub fn new(grid: Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coefficients.len()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub(crate) fn from_raw(grid: Grid, coefficients: Vec<Complex64>) -> Self {
        debug_assert_eq!(coefficients.len(), grid.len());
        Self { grid, coefficients }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coefficients: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coefficients
    }

    /// Coefficient at integer mode `m` (per axis, in `[-n/2, n/2)`).
    pub fn at_mode(&self, modes: [i64; 3]) -> Complex64 {
        let n = self.grid.points_per_axis() as i64;
        let mut idx = [0usize; 3];
        for axis in 0..self.grid.dim() {
            idx[axis] = modes[axis].rem_euclid(n) as usize;
        }
        self.coefficients[self.grid.ravel(idx)]
    }

    /// L^2 norm from the coefficients: `(L^d sum |c_m|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.weighted_norm_sqr(|_| 1.0)).sqrt()
    }

    /// `L^d sum_m w(|xi_m|^2) |c_m|^2`.
    pub fn weighted_norm_sqr(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let k2 = self.grid.wavenumber_sq();
        self.coefficients
            .iter()
            .zip(&k2)
            .map(|(c, &k)| weight(k) * c.norm_sqr())
            .sum::<f64>()
            * self.grid.volume()
    }
}
