//! Multimode Gaussian-state model of beam displacement sensing with a split
//! photodetector and squeezed light in the flipped transverse mode.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod grid;
pub mod metrology;
pub mod modes;
pub mod oracle;
pub mod spectrum;
pub mod state;

pub use num_complex;

pub use detection::{
    back_solve_efficiency, detector_mask, linearize, noise_budget, split_statistics, ChainFactor, Channel,
    DetectorGeometry, DetectorMask, MeasurementStats, NoiseBudget,
};
pub use error::{Error, Result};
pub use grid::Grid;
pub use metrology::{displacement_signal, eom_displacement, snr, solve_flux, sql_gaussian, sql_general, SnrResult, SqlResult};
pub use modes::{
    decompose, displace_profile, gram_schmidt_extend, half_overlaps, make_flipped_mode, make_gaussian_mode,
    make_hermite_gauss_mode, HalfOverlaps, ModeBasis, ModeProfile,
};
pub use oracle::{fock_squeezed_variance, mc_variance, OracleReport};
pub use spectrum::{spectrum_synthesis, SpectrumSettings, SpectrumTrace};
pub use state::{db, variance_from_db, GaussianState, SqueezerSpec};
