use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic cubic lattice with centered physical coordinates.
///
/// Site `j` along an axis sits at `x_j = -L/2 + j*dx`, so the origin is a
/// lattice point. Values are stored row-major with the last axis fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3 (got {dim})"
            )));
        }
        if points_per_axis < 4 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 4 (got {points_per_axis})"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive and finite (got {box_length})"
            )));
        }
        Ok(Self {
            dim,
            points_per_axis,
            box_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    /// Total number of lattice sites, `n^d`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Quadrature weight of one site, `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of site `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points_per_axis)
            .map(|j| self.coordinate(j))
            .collect()
    }

    /// Integer mode index of transform slot `j`, in `[-n/2, n/2)`.
    pub fn mode_index(&self, j: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn mode_indices(&self) -> Vec<i64> {
        (0..self.points_per_axis)
            .map(|j| self.mode_index(j))
            .collect()
    }

    /// Fundamental wavenumber `2*pi/L`.
    pub fn wavenumber_unit(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        self.wavenumber_unit() * self.mode_index(j) as f64
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points_per_axis)
            .map(|j| self.wavenumber(j))
            .collect()
    }

    /// Splits a flat index into per-axis indices (unused trailing axes are 0).
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut out = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn ravel(&self, idx: [usize; 3]) -> usize {
        let n = self.points_per_axis;
        idx[..self.dim].iter().fold(0, |acc, &i| acc * n + i)
    }

    /// Physical position of a flat site index (unused trailing axes are 0).
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// Wavevector of a flat transform slot (unused trailing axes are 0).
    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut k = [0.0; 3];
        for axis in 0..self.dim {
            k[axis] = self.wavenumber(idx[axis]);
        }
        k
    }

    /// `|xi|^2` for every transform slot, built from integer mode indices.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        let unit_sq = self.wavenumber_unit().powi(2);
        let m: Vec<f64> = self
            .mode_indices()
            .iter()
            .map(|&m| (m * m) as f64)
            .collect();
        let mut out = Vec::with_capacity(self.len());
        match self.dim {
            1 => out.extend(m.iter().map(|&a| a * unit_sq)),
            2 => {
                for &a in &m {
                    out.extend(m.iter().map(|&b| (a + b) * unit_sq));
                }
            }
            _ => {
                for &a in &m {
                    for &b in &m {
                        out.extend(m.iter().map(|&c| (a + b + c) * unit_sq));
                    }
                }
            }
        }
        out
    }

    /// `|x|^2` for every lattice site.
    pub fn radius_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.position(i).iter().map(|x| x * x).sum())
            .collect()
    }
}

/// Builds a validated [`Grid`].
pub fn make_grid(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Grid> {
    Grid::new(dim, points_per_axis, box_length)
}
