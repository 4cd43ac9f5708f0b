//! Periodic lattice, physical/spectral transforms and Fourier multipliers.

mod field;
mod fourier;
mod grid;
mod multiplier;

pub use field::{ComplexField, SpectralField};
pub use fourier::{to_physical, to_spectral, with_transform, FourierTransform};
pub use grid::{make_grid, Grid};
pub use multiplier::{
    apply_multiplier, apply_radial_in_place, dealias_mask, derivative, laplacian, DealiasMask,
};
