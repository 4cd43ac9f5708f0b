//! Pseudospectral laboratory for defocusing nonlinear Schrodinger equations
//! on a periodic box: free and nonlinear evolution, decay observables,
//! scattering diagnostics and randomized-data ensembles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod model;
pub mod observables;
pub mod propagator;
pub mod scattering;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{dispersion_phase, ModelSpec, Sign, Symbol};
pub use propagator::{free_evolve, linear_decay_experiment, FreePropagator};
pub use spectral::{ComplexField, Grid, SpectralField};
