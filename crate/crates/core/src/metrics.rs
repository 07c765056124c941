//! Reconstruction quality: SNR, the perfect-reconstruction predicate, and
//! support precision/recall.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{forward_transform, frame_power, support_of, Frame, Spectrum, SupportSet};

/// SNR at or above this value counts as a perfect reconstruction.
pub const PERFECT_SNR_DB: f64 = 100.0;

/// SNR reported when the error power underflows to zero.
pub const SNR_CAP_DB: f64 = 300.0;

/// Quality summary of one reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub snr_db: f64,
    pub perfect: bool,
    pub support_precision: f64,
    pub support_recall: f64,
    pub residual_power: f64,
}

/// `10 log10(P_ref / P_err)` over the full frame; equal frames report the
/// cap value.
pub fn snr_db(reference: &Frame, estimate: &Frame) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            got: estimate.len(),
        });
    }
    let p_ref = frame_power(reference);
    if p_ref <= 0.0 {
        return Err(Error::ZeroPower("SNR needs a nonzero reference".into()));
    }
    let p_err = error_power(reference, estimate);
    if p_err == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok(10.0 * (p_ref / p_err).log10())
}

fn error_power(reference: &Frame, estimate: &Frame) -> f64 {
    reference
        .samples()
        .iter()
        .zip(estimate.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64
}

/// Support tolerance tied to the reference scale: `1e-6` of its peak bin.
pub fn default_support_tol(reference_spectrum: &Spectrum) -> f64 {
    1e-6 * reference_spectrum.max_magnitude()
}

/// Full evaluation against the reference and its true support. An empty
/// estimated support counts as precision 1 (no false positives).
pub fn evaluate(
    reference: &Frame,
    true_support: &SupportSet,
    estimate: &Frame,
    support_tol: f64,
) -> Result<EvalReport> {
    let snr = snr_db(reference, estimate)?;
    let estimated = support_of(&forward_transform(estimate), support_tol)?;
    let matched = estimated.intersection_count(true_support);
    let precision = if estimated.is_empty() {
        1.0
    } else {
        matched as f64 / estimated.len() as f64
    };
    let recall = if true_support.is_empty() {
        1.0
    } else {
        true_support.intersection_count(&estimated) as f64 / true_support.len() as f64
    };
    Ok(EvalReport {
        snr_db: snr,
        perfect: snr >= PERFECT_SNR_DB,
        support_precision: precision,
        support_recall: recall,
        residual_power: error_power(reference, estimate),
    })
}
