//! Reconstruction of sparse multiband signals from sub-Nyquist random
//! samples.
//!
//! The library works on real frames of even length `L` with the grid Nyquist
//! rate normalized to 1.0. Random sampling keeps `m` of the `L` samples
//! (rate `lambda = m/L`); in the frequency domain this attenuates the
//! spectrum by `lambda` and buries it in a flat sampling-noise floor whose
//! statistics are predictable and testable ([`sampling`]). Reconstruction
//! ([`recovery`]) peels the signal out of that floor iteratively, either
//! through a known spectral support or by adaptive hard thresholding, with a
//! hybrid variant that never relinquishes a bin once admitted. [`siggen`]
//! synthesizes the test signals, [`metrics`] scores reconstructions, and
//! [`experiments`] runs seeded Monte Carlo sweeps over rate grids.

pub mod error;
pub mod experiments;
pub mod frames;
pub mod io;
pub mod metrics;
pub mod recovery;
pub mod sampling;
pub mod seed;
pub mod siggen;

pub use error::{Error, Result};
pub use frames::{
    forward_transform, frame_power, inverse_transform, support_of, Frame, Spectrum, SupportSet,
};
pub use metrics::{evaluate, snr_db, EvalReport};
pub use recovery::{
    hybrid_imat_recover, imat_recover, known_support_recover, Algorithm, RecoveryConfig,
    RecoveryTrace, Schedule,
};
pub use sampling::{apply_mask, gen_mask, Mask, NoiseStats};
pub use siggen::{
    add_awgn, gen_fm_multiband, gen_multiband, measure_landau, random_band_plan, BandPlan,
    RfSignalSpec,
};
