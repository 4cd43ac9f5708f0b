use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Grid};

/// The outermost layers of the periodic box, used to decide how long the
/// torus still behaves like free space.
///
/// `fraction` of each axis is treated as shell, split evenly between its two
/// ends (at least one layer per end). A site belongs to the shell when any of
/// its indices does.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryShell {
    grid: Grid,
    layers: usize,
    tolerance: f64,
}

impl BoundaryShell {
    pub fn new(grid: Grid, fraction: f64, tolerance: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "boundary shell fraction must lie in (0, 1) (got {fraction})"
            )));
        }
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "boundary mass tolerance must lie in (0, 1) (got {tolerance})"
            )));
        }
        let n = grid.points_per_axis();
        let layers = ((fraction * n as f64 / 2.0).round() as usize).clamp(1, n / 2 - 1);
        Ok(Self {
            grid,
            layers,
            tolerance,
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Smallest `|x_a|` counted as shell along an axis.
    pub fn inner_radius(&self) -> f64 {
        let n = self.grid.points_per_axis();
        self.grid.coordinate(n - self.layers)
    }

    fn axis_in_shell(&self, j: usize) -> bool {
        let n = self.grid.points_per_axis();
        j < self.layers || j >= n - self.layers
    }

    /// Share of the total mass held by shell sites (0 for the zero field).
    pub fn mass_fraction(&self, field: &ComplexField) -> f64 {
        let n = self.grid.points_per_axis();
        let dim = self.grid.dim();
        let shell: Vec<bool> = (0..n).map(|j| self.axis_in_shell(j)).collect();
        let (mut outer, mut total) = (0.0, 0.0);
        for (flat, v) in field.values().iter().enumerate() {
            let w = v.norm_sqr();
            total += w;
            let mut rest = flat;
            let mut hit = false;
            for _ in 0..dim {
                hit |= shell[rest % n];
                rest /= n;
            }
            if hit {
                outer += w;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn exceeded(&self, field: &ComplexField) -> bool {
        self.mass_fraction(field) > self.tolerance
    }
}
