use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{ComplexField, SpectralField};
use super::grid::Grid;
use crate::error::{Error, Result};

/// Lines gathered per batch when transforming a strided axis.
const TILE: usize = 16;

/// Multidimensional DFT over a cubic grid, built from 1-D kernels.
///
/// Contiguous (last) axes are transformed in place; strided axes are
/// gathered in tiles of [`TILE`] lines into a contiguous buffer, transformed
/// as a batch and scattered back. The algorithm does not depend on the
/// thread count, so results are bitwise reproducible.
pub struct FourierTransform {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    lines: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FourierTransform {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.points_per_axis();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid,
            forward,
            inverse,
            lines: vec![Complex64::new(0.0, 0.0); TILE * n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// In-place forward transform carrying the `1/N^d` factor.
    pub fn forward_in_place(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.grid.len());
        let fft = Arc::clone(&self.forward);
        self.transform_all_axes(data, fft.as_ref());
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// In-place inverse transform (no normalization factor).
    pub fn inverse_in_place(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.grid.len());
        let fft = Arc::clone(&self.inverse);
        self.transform_all_axes(data, fft.as_ref());
    }

    pub fn to_spectral(&mut self, field: &ComplexField) -> Result<SpectralField> {
        self.check_grid(field.grid())?;
        let mut data = field.values().to_vec();
        self.forward_in_place(&mut data);
        Ok(SpectralField::from_raw(self.grid, data))
    }

    pub fn to_physical(&mut self, spec: &SpectralField) -> Result<ComplexField> {
        self.check_grid(spec.grid())?;
        let mut data = spec.coefficients().to_vec();
        self.inverse_in_place(&mut data);
        Ok(ComplexField::from_raw(self.grid, data))
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if *grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn transform_all_axes(&mut self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.grid.points_per_axis();
        let dim = self.grid.dim();
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut self.scratch);
                continue;
            }
            let block = n * stride;
            for chunk in data.chunks_exact_mut(block) {
                let mut r0 = 0;
                while r0 < stride {
                    let width = TILE.min(stride - r0);
                    let lines = &mut self.lines[..width * n];
                    for k in 0..n {
                        let row = &chunk[k * stride + r0..k * stride + r0 + width];
                        for (l, v) in row.iter().enumerate() {
                            lines[l * n + k] = *v;
                        }
                    }
                    fft.process_with_scratch(lines, &mut self.scratch);
                    for k in 0..n {
                        let row = &mut chunk[k * stride + r0..k * stride + r0 + width];
                        for (l, v) in row.iter_mut().enumerate() {
                            *v = lines[l * n + k];
                        }
                    }
                    r0 += width;
                }
            }
        }
    }
}

thread_local! {
    static TRANSFORMS: RefCell<HashMap<(usize, usize), FourierTransform>> =
        RefCell::new(HashMap::new());
}

/// Runs `f` with a cached per-thread transform for `grid`'s shape.
pub fn with_transform<R>(grid: &Grid, f: impl FnOnce(&mut FourierTransform) -> R) -> R {
    TRANSFORMS.with(|cell| {
        let mut cache = cell.borrow_mut();
        let key = (grid.dim(), grid.points_per_axis());
        let ft = cache
            .entry(key)
            .or_insert_with(|| FourierTransform::new(*grid));
        // the kernels only depend on the shape; box length may differ
        ft.grid = *grid;
        f(ft)
    })
}

/// Forward transform with the mean (`1/N^d`) normalization.
pub fn to_spectral(field: &ComplexField) -> Result<SpectralField> {
    if !field.is_finite() {
        return Err(Error::NonFinite { time: None });
    }
    with_transform(field.grid(), |ft| ft.to_spectral(field))
}

/// Inverse of [`to_spectral`].
pub fn to_physical(spec: &SpectralField) -> Result<ComplexField> {
    if spec.coefficients().iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite { time: None });
    }
    with_transform(spec.grid(), |ft| ft.to_physical(spec))
}
