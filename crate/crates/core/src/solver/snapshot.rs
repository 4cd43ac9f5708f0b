//! Binary snapshot container.
//!
//! All integers and floats are little-endian:
//!
//! | field            | type      | notes                                   |
//! |------------------|-----------|-----------------------------------------|
//! | magic            | `[u8; 8]` | `b"NLSSNAP\0"`                          |
//! | version          | `u32`     | currently 1                             |
//! | dim              | `u32`     | 1, 2 or 3                               |
//! | points_per_axis  | `u32`     |                                         |
//! | box_length       | `f64`     |                                         |
//! | symbol           | `u8`      | 0 Schrodinger, 1 biharmonic, 2 fractional |
//! | alpha            | `f64`     | fractional order, 0 otherwise           |
//! | power            | `u32`     | nonlinearity exponent `p`               |
//! | sign             | `i32`     | 0 off, 1 defocusing                     |
//! | dt               | `f64`     |                                         |
//! | stride           | `u32`     | steps between snapshots                 |
//! | seed             | `u64`     | 0 when the run is deterministic         |
//! | count            | `u64`     | number of snapshots                     |
//!
//! followed by `count` records of one `f64` time and `n^dim` pairs of `f64`
//! (real, imaginary) in row-major site order, last axis fastest.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rustfft::num_complex::Complex64;

use super::Snapshot;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Sign, Symbol};
use crate::spectral::{ComplexField, Grid};

const MAGIC: [u8; 8] = *b"NLSSNAP\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub grid: Grid,
    pub model: ModelSpec,
    pub dt: f64,
    pub stride: u32,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SnapshotStore {
    pub header: SnapshotHeader,
    pub snapshots: Vec<Snapshot>,
}

pub fn write_snapshots<W: Write>(
    mut out: W,
    header: &SnapshotHeader,
    snapshots: &[Snapshot],
) -> Result<()> {
    out.write_all(&MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u32::<LittleEndian>(header.grid.dim() as u32)?;
    out.write_u32::<LittleEndian>(header.grid.points_per_axis() as u32)?;
    out.write_f64::<LittleEndian>(header.grid.box_length())?;
    let (code, alpha) = match header.model.symbol {
        Symbol::Schrodinger => (0u8, 0.0),
        Symbol::Biharmonic => (1, 0.0),
        Symbol::Fractional { alpha } => (2, alpha),
    };
    out.write_u8(code)?;
    out.write_f64::<LittleEndian>(alpha)?;
    out.write_u32::<LittleEndian>(header.model.power)?;
    out.write_i32::<LittleEndian>(match header.model.sign {
        Sign::Off => 0,
        Sign::Defocusing => 1,
    })?;
    out.write_f64::<LittleEndian>(header.dt)?;
    out.write_u32::<LittleEndian>(header.stride)?;
    out.write_u64::<LittleEndian>(header.seed)?;
    out.write_u64::<LittleEndian>(snapshots.len() as u64)?;
    for snap in snapshots {
        if *snap.field.grid() != header.grid {
            return Err(Error::GridMismatch);
        }
        out.write_f64::<LittleEndian>(snap.time)?;
        for v in snap.field.values() {
            out.write_f64::<LittleEndian>(v.re)?;
            out.write_f64::<LittleEndian>(v.im)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshots<R: Read>(mut input: R) -> Result<SnapshotStore> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = input.read_u32::<LittleEndian>()? as usize;
    let n = input.read_u32::<LittleEndian>()? as usize;
    let length = input.read_f64::<LittleEndian>()?;
    let grid = Grid::new(dim, n, length)?;
    let code = input.read_u8()?;
    let alpha = input.read_f64::<LittleEndian>()?;
    let symbol = match code {
        0 => Symbol::Schrodinger,
        1 => Symbol::Biharmonic,
        2 => Symbol::Fractional { alpha },
        other => return Err(Error::Format(format!("unknown symbol code {other}"))),
    };
    let power = input.read_u32::<LittleEndian>()?;
    let sign = match input.read_i32::<LittleEndian>()? {
        0 => Sign::Off,
        1 => Sign::Defocusing,
        other => return Err(Error::Format(format!("unknown sign {other}"))),
    };
    let model = ModelSpec::new(symbol, power, sign)?;
    let dt = input.read_f64::<LittleEndian>()?;
    let stride = input.read_u32::<LittleEndian>()?;
    let seed = input.read_u64::<LittleEndian>()?;
    let count = input.read_u64::<LittleEndian>()? as usize;
    let mut snapshots = Vec::with_capacity(count);
    for _ in 0..count {
        let time = input.read_f64::<LittleEndian>()?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = input.read_f64::<LittleEndian>()?;
            let im = input.read_f64::<LittleEndian>()?;
            values.push(Complex64::new(re, im));
        }
        snapshots.push(Snapshot {
            time,
            field: ComplexField::new(grid, values)?,
        });
    }
    Ok(SnapshotStore {
        header: SnapshotHeader {
            grid,
            model,
            dt,
            stride,
            seed,
        },
        snapshots,
    })
}
