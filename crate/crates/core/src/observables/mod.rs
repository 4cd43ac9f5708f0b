//! Norms, decay envelopes, vector-field functionals and power-law fits.

mod fit;
mod morawetz;
mod norms;
mod series;
mod transform;
mod vector_field;

pub use fit::{fit_decay, DecayFit, FitWindow, MIN_FIT_SAMPLES};
pub use morawetz::{morawetz_accumulate, MorawetzBound};
pub use norms::{
    hdot_norm, hdot_norm_spectral, hs_norm, hs_norm_spectral, is_admissible, lp_norm, lp_power,
    DataProfile,
};
pub use series::{decay_envelope, weighted_envelope, DecayEnvelope, ObservableSeries};
pub use transform::{
    inverse_pseudoconformal_transform, pseudoconformal_energy, pseudoconformal_transform,
    pseudoconformal_transform_with, TransformOptions,
};
pub use vector_field::{
    j_field, j_norm, j_norm_with_spectrum, pseudoconformal_rate, pseudoconformal_v,
    pseudoconformal_v_with_spectrum, weighted_l6_check, L6Check,
};
