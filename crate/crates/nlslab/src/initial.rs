use std::fs::File;
use std::io::BufReader;

use nlslab_core::solver::read_snapshots;
use nlslab_core::{ComplexField, Grid};

use crate::config::InitialData;
use crate::error::{HarnessError, Result};

/// Realizes an initial-data descriptor on `grid`.
pub fn build_initial(data: &InitialData, grid: Grid) -> Result<ComplexField> {
    match data {
        InitialData::Gaussian {
            amplitude,
            width,
            center,
        } => Ok(ComplexField::gaussian(grid, *amplitude, *width, *center)),
        InitialData::PlaneModulated {
            amplitude,
            width,
            center,
            modes,
        } => {
            let envelope = ComplexField::gaussian(grid, *amplitude, *width, *center);
            let wave = ComplexField::plane_wave(grid, *modes);
            let values = envelope
                .values()
                .iter()
                .zip(wave.values())
                .map(|(a, b)| a * b)
                .collect();
            Ok(ComplexField::new(grid, values)?)
        }
        InitialData::File { path } => {
            let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
            let store = read_snapshots(BufReader::new(file))?;
            if store.header.grid != grid {
                return Err(HarnessError::Config(vec![format!(
                    "initial.path: snapshot grid {:?} differs from the configured grid {:?}",
                    store.header.grid, grid
                )]));
            }
            let last = store.snapshots.into_iter().last().ok_or_else(|| {
                HarnessError::Config(vec![format!("initial.path: {path} holds no snapshots")])
            })?;
            Ok(last.field)
        }
    }
}
