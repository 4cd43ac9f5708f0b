use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::observables::hs_norm;
use crate::spectral::{ComplexField, Grid};

/// Nonnegative profile whose translates are normalized into a partition.
pub trait Bump: Send + Sync {
    /// Value at the offset `x` from the lattice point (first `dim` entries).
    fn value(&self, x: &[f64]) -> f64;
    /// Radius of the closed ball outside which `value` vanishes.
    fn support_radius(&self) -> f64;
}

/// `exp(-1 / (1 - |x/R|^2))` inside the ball of radius `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothBump {
    pub radius: f64,
}

impl SmoothBump {
    /// Radius `1.5 h`.
    pub fn for_spacing(h: f64) -> Self {
        Self { radius: 1.5 * h }
    }
}

impl Bump for SmoothBump {
    fn value(&self, x: &[f64]) -> f64 {
        let q = x.iter().map(|v| v * v).sum::<f64>() / (self.radius * self.radius);
        if q < 1.0 {
            (-1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    }

    fn support_radius(&self) -> f64 {
        self.radius
    }
}

/// `phi_n = psi(x - n h) / sum_m psi(x - m h)` on a periodic lattice of
/// spacing `h`, stored sparsely piece by piece.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    grid: Grid,
    spacing: f64,
    cells_per_axis: usize,
    offsets: Vec<usize>,
    sites: Vec<u32>,
    weights: Vec<f64>,
}

/// Builds the normalized partition. Lattice points sit at `-L/2 + i h`;
/// distances use the periodic minimum image.
pub fn build_partition(grid: &Grid, h: f64, psi: &dyn Bump) -> Result<PartitionOfUnity> {
    let length = grid.box_length();
    let ratio = length / h;
    let cells = ratio.round();
    if !(h > 0.0) || (ratio - cells).abs() > 1e-9 * ratio || cells < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "lattice spacing {h} must divide the box length {length}"
        )));
    }
    let radius = psi.support_radius();
    if !(radius > 0.5 * h && radius < 2.0 * h) {
        return Err(Error::InvalidArgument(format!(
            "bump support radius {radius} must lie in (h/2, 2h) = ({}, {})",
            0.5 * h,
            2.0 * h
        )));
    }
    if !(psi.value(&[0.0; 3][..grid.dim()]) > 0.0) {
        return Err(Error::InvalidArgument("bump must be positive at 0".into()));
    }
    let cells = cells as usize;
    let dim = grid.dim();
    let n = grid.points_per_axis();
    let dx = grid.spacing();
    let reach = (radius / dx).ceil() as i64;
    let pieces = cells.pow(dim as u32);

    let mut offsets = Vec::with_capacity(pieces + 1);
    let mut sites = Vec::new();
    let mut raw = Vec::new();
    offsets.push(0);
    let mut offset_vec = [0.0f64; 3];
    for piece in 0..pieces {
        let center = cell_center(piece, cells, dim, h, length);
        // nearest grid index to the center along each axis
        let base: Vec<i64> = (0..dim)
            .map(|a| ((center[a] + 0.5 * length) / dx).round() as i64)
            .collect();
        let span = (2 * reach + 1) as usize;
        let count = span.pow(dim as u32);
        let mut local = Vec::with_capacity(count);
        for k in 0..count {
            let mut rest = k;
            let mut idx = [0usize; 3];
            for a in (0..dim).rev() {
                let step = (rest % span) as i64 - reach;
                rest /= span;
                let j = (base[a] + step).rem_euclid(n as i64) as usize;
                idx[a] = j;
                offset_vec[a] = min_image(grid.coordinate(j) - center[a], length);
            }
            let w = psi.value(&offset_vec[..dim]);
            if w > 0.0 {
                local.push((ravel(&idx[..dim], n) as u32, w));
            }
        }
        local.sort_unstable_by_key(|&(s, _)| s);
        local.dedup_by_key(|&mut (s, _)| s);
        for (s, w) in local {
            sites.push(s);
            raw.push(w);
        }
        offsets.push(sites.len());
    }

    let mut denom = vec![0.0; grid.len()];
    for (&s, &w) in sites.iter().zip(&raw) {
        denom[s as usize] += w;
    }
    if let Some(site) = denom.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "bump translates leave grid site {site} uncovered"
        )));
    }
    let weights = sites
        .iter()
        .zip(&raw)
        .map(|(&s, &w)| w / denom[s as usize])
        .collect();
    Ok(PartitionOfUnity {
        grid: *grid,
        spacing: h,
        cells_per_axis: cells,
        offsets,
        sites,
        weights,
    })
}

fn ravel(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &j| acc * n + j)
}

fn cell_center(piece: usize, cells: usize, dim: usize, h: f64, length: f64) -> [f64; 3] {
    let mut c = [0.0; 3];
    let mut rest = piece;
    for a in (0..dim).rev() {
        c[a] = -0.5 * length + (rest % cells) as f64 * h;
        rest /= cells;
    }
    c
}

fn min_image(d: f64, length: f64) -> f64 {
    d - length * (d / length).round()
}

impl PartitionOfUnity {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Number of pieces, `(L/h)^d`.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sites and weights of piece `n`.
    pub fn piece(&self, n: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[n]..self.offsets[n + 1];
        self.sites[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&s, &w)| (s as usize, w))
    }

    /// `sum_n c_n phi_n(x)` per site.
    pub fn combine(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (n, &c) in coefficients.iter().enumerate().take(self.len()) {
            for (s, w) in self.piece(n) {
                out[s] += c * w;
            }
        }
        out
    }

    /// `sum_n phi_n(x)`, identically 1 up to rounding.
    pub fn total(&self) -> Vec<f64> {
        self.combine(&vec![1.0; self.len()])
    }

    /// `sum_n phi_n(x)^2`.
    pub fn sum_of_squares(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (&s, &w) in self.sites.iter().zip(&self.weights) {
            out[s as usize] += w * w;
        }
        out
    }

    /// `phi_n f`.
    pub fn localize(&self, n: usize, f: &ComplexField) -> ComplexField {
        let mut values = vec![Complex64::default(); self.grid.len()];
        for (s, w) in self.piece(n) {
            values[s] = f.values()[s] * w;
        }
        ComplexField::new(self.grid, values).expect("finite localization of a finite field")
    }
}

/// Both sides of `||f||_{H^s}^2 <= C sum_n ||phi_n f||_{H^s}^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl LocalizationCheck {
    /// Smallest constant making the inequality hold for this field.
    pub fn constant(&self) -> f64 {
        self.lhs / self.rhs
    }
}

pub fn localization_check(
    f: &ComplexField,
    partition: &PartitionOfUnity,
    s: f64,
) -> Result<LocalizationCheck> {
    if f.grid() != partition.grid() {
        return Err(Error::GridMismatch);
    }
    let lhs = hs_norm(f, s)?.powi(2);
    let mut rhs = 0.0;
    for n in 0..partition.len() {
        rhs += hs_norm(&partition.localize(n, f), s)?.powi(2);
    }
    Ok(LocalizationCheck { lhs, rhs })
}
