//! Iterative reconstruction from randomly sampled frames.
//!
//! All three algorithms share one loop. Starting from the spectrum of the
//! sampled frame, each iteration selects spectral content from the residual,
//! rescales it by `1/lambda` to undo the expected masking attenuation,
//! accumulates it into the running estimate, and subtracts the re-masked
//! image of the selected content from the residual. The residual spectrum is
//! therefore always the transform of `mask .* (x - estimate)`, and its power
//! is the convergence observable recorded in the trace.
//!
//! The selection step is what distinguishes the algorithms:
//!
//! - known support: zero every bin outside the given support set;
//! - adaptive thresholding: zero bins with `|E[k]| < thr` (ties are kept);
//! - hybrid: as above, but bins already present in the accumulator survive
//!   regardless of the current threshold.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{forward_transform, Frame, Spectrum, SupportSet};
use crate::metrics;
use crate::sampling::Mask;

/// Residual growth beyond this multiple of its initial value aborts the run.
const DIVERGENCE_FACTOR: f64 = 1e6;

/// Threshold schedule for the adaptive-thresholding algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Residual-driven: `alpha * ||S||_2 / sqrt(L/2)` each iteration.
    Adaptive,
    /// Geometric decay `thr0 * decay^(iter-1)` in the iteration number.
    Exponential { thr0: f64, decay: f64 },
}

/// Reconstruction parameters shared by all algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    /// Confidence multiplier on the adaptive threshold.
    pub alpha: f64,
    pub max_iters: usize,
    /// Relaxation applied to each accumulated update; 1.0 is the plain
    /// iteration, values in (0, 2] trade stability against speed.
    pub gamma: f64,
    pub schedule: Schedule,
    /// Replace on-mask output samples with the originals after the final
    /// iteration.
    pub overwrite_samples: bool,
    /// Stop once the relative change of the residual power falls below this.
    pub stop_rel_residual: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            alpha: 2.5,
            max_iters: 500,
            gamma: 1.0,
            schedule: Schedule::Adaptive,
            overwrite_samples: false,
            stop_rel_residual: 1e-12,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Config {
                field: "alpha",
                reason: format!("must be > 0, got {}", self.alpha),
            });
        }
        if self.max_iters < 1 {
            return Err(Error::Config {
                field: "max_iters",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.gamma > 0.0 && self.gamma <= 2.0) {
            return Err(Error::Config {
                field: "gamma",
                reason: format!("must lie in (0, 2], got {}", self.gamma),
            });
        }
        if let Schedule::Exponential { thr0, decay } = self.schedule {
            if !(thr0 >= 0.0) {
                return Err(Error::Config {
                    field: "schedule.thr0",
                    reason: format!("must be >= 0, got {thr0}"),
                });
            }
            if !(decay > 0.0 && decay < 1.0) {
                return Err(Error::Config {
                    field: "schedule.decay",
                    reason: format!("must lie in (0, 1), got {decay}"),
                });
            }
        }
        if !(self.stop_rel_residual >= 0.0) {
            return Err(Error::Config {
                field: "stop_rel_residual",
                reason: format!("must be >= 0, got {}", self.stop_rel_residual),
            });
        }
        Ok(())
    }
}

/// Which reconstruction algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Imat,
    KnownSupport,
    Hybrid,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imat" => Ok(Algorithm::Imat),
            "known-support" | "known" => Ok(Algorithm::KnownSupport),
            "hybrid" => Ok(Algorithm::Hybrid),
            other => Err(Error::InvalidArgument {
                field: "algorithm",
                reason: format!("unknown algorithm `{other}` (imat | known-support | hybrid)"),
            }),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Algorithm::Imat => "imat",
            Algorithm::KnownSupport => "known-support",
            Algorithm::Hybrid => "hybrid",
        };
        f.write_str(name)
    }
}

/// One iteration record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Threshold applied this iteration (0 for the known-support filter).
    pub threshold: f64,
    /// Mean-square power of the masked residual consumed this iteration.
    pub residual_power: f64,
    /// Nonzero bins in the accumulated spectrum after the update.
    pub support_size: usize,
    /// Estimate quality against a reference, when one was supplied.
    pub snr_db: Option<f64>,
}

/// Per-iteration convergence log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTrace {
    pub records: Vec<TraceRecord>,
}

impl RecoveryTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn iterations_used(&self) -> usize {
        self.records.len()
    }
}

/// Adaptive threshold `alpha * ||S||_2 / sqrt(L/2)`.
pub fn compute_adaptive_threshold(residual_spectrum: &Spectrum, alpha: f64) -> f64 {
    alpha * residual_spectrum.l2_norm() / (residual_spectrum.len() as f64 / 2.0).sqrt()
}

/// Evaluate a schedule at a 1-based iteration number.
pub fn threshold_schedule_value(
    schedule: &Schedule,
    iter: usize,
    residual_spectrum: &Spectrum,
    alpha: f64,
) -> f64 {
    match *schedule {
        Schedule::Adaptive => compute_adaptive_threshold(residual_spectrum, alpha),
        Schedule::Exponential { thr0, decay } => thr0 * decay.powi(iter as i32 - 1),
    }
}

/// Keep bins with magnitude `>= thr`, zero the rest. Conjugate pairs share a
/// magnitude, so symmetry survives untouched.
pub fn hard_threshold(spectrum: &Spectrum, thr: f64) -> Spectrum {
    let coeffs = spectrum
        .coeffs()
        .iter()
        .map(|&c| {
            if c.norm() >= thr {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Spectrum::new(coeffs)
}

/// Adaptive-thresholding reconstruction.
pub fn imat_recover(
    sampled: &Frame,
    mask: &Mask,
    config: &RecoveryConfig,
) -> Result<(Frame, RecoveryTrace)> {
    recover(Algorithm::Imat, sampled, mask, None, config, None)
}

/// Reconstruction with the true spectral support as the selection filter.
pub fn known_support_recover(
    sampled: &Frame,
    mask: &Mask,
    support: &SupportSet,
    config: &RecoveryConfig,
) -> Result<(Frame, RecoveryTrace)> {
    recover(Algorithm::KnownSupport, sampled, mask, Some(support), config, None)
}

/// Adaptive thresholding that permanently retains any bin once accumulated.
pub fn hybrid_imat_recover(
    sampled: &Frame,
    mask: &Mask,
    config: &RecoveryConfig,
) -> Result<(Frame, RecoveryTrace)> {
    recover(Algorithm::Hybrid, sampled, mask, None, config, None)
}

/// Shared engine behind the three algorithm entry points. Supplying a
/// `reference` fills the per-iteration SNR column of the trace.
pub fn recover(
    algorithm: Algorithm,
    sampled: &Frame,
    mask: &Mask,
    support: Option<&SupportSet>,
    config: &RecoveryConfig,
    reference: Option<&Frame>,
) -> Result<(Frame, RecoveryTrace)> {
    config.validate()?;
    let l = sampled.len();
    if mask.len() != l {
        return Err(Error::LengthMismatch {
            expected: l,
            got: mask.len(),
        });
    }
    if mask.ones() == 0 {
        return Err(Error::EmptyMask);
    }
    if let Some((n, _)) = sampled
        .samples()
        .iter()
        .enumerate()
        .find(|(n, x)| !mask.is_sampled(*n) && **x != 0.0)
    {
        return Err(Error::InvalidArgument {
            field: "sampled",
            reason: format!("nonzero sample at unmasked index {n}"),
        });
    }
    let support = match algorithm {
        Algorithm::KnownSupport => {
            let s = support.ok_or(Error::EmptySupport)?;
            if s.is_empty() {
                return Err(Error::EmptySupport);
            }
            if s.frame_len() != l {
                return Err(Error::LengthMismatch {
                    expected: l,
                    got: s.frame_len(),
                });
            }
            Some(s)
        }
        _ => None,
    };

    let lambda = mask.ones() as f64 / l as f64;
    let scale = config.gamma / lambda;
    let power_norm = 1.0 / (l as f64 * l as f64);

    let mut residual: Vec<Complex64> = forward_transform(sampled).into_coeffs();
    let mut accumulator = vec![Complex64::new(0.0, 0.0); l];
    let mut selected = vec![Complex64::new(0.0, 0.0); l];
    let mut time_buf = vec![Complex64::new(0.0, 0.0); l];
    let fft_fwd = crate::frames::plan_forward(l);
    let fft_inv = crate::frames::plan_inverse(l);

    let mut trace = RecoveryTrace::default();
    let mut initial_power = None;
    let mut prev_power: Option<f64> = None;

    for iter in 1..=config.max_iters {
        let residual_power = residual.iter().map(|c| c.norm_sqr()).sum::<f64>() * power_norm;
        if !residual_power.is_finite() {
            return Err(Error::Divergence {
                iter,
                residual_power,
                trace,
            });
        }

        let threshold = match algorithm {
            Algorithm::KnownSupport => 0.0,
            _ => {
                let view = Spectrum::new(residual.clone());
                threshold_schedule_value(&config.schedule, iter, &view, config.alpha)
            }
        };

        // Select and rescale residual content.
        for (k, (dst, &src)) in selected.iter_mut().zip(residual.iter()).enumerate() {
            let keep = match algorithm {
                Algorithm::KnownSupport => support.map(|s| s.contains(k)).unwrap_or(false),
                Algorithm::Imat => src.norm() >= threshold,
                Algorithm::Hybrid => {
                    src.norm() >= threshold || accumulator[k] != Complex64::new(0.0, 0.0)
                }
            };
            *dst = if keep {
                src * scale
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        for (acc, &upd) in accumulator.iter_mut().zip(selected.iter()) {
            *acc += upd;
        }
        debug_assert!(
            Spectrum::new(accumulator.clone()).hermitian_deviation() < 1e-6,
            "accumulator lost conjugate symmetry"
        );

        let support_size = accumulator
            .iter()
            .filter(|c| **c != Complex64::new(0.0, 0.0))
            .count();
        let snr_db = match reference {
            Some(reference) => {
                let estimate = spectrum_to_frame(&accumulator, l)?;
                Some(metrics::snr_db(reference, &estimate)?)
            }
            None => None,
        };
        trace.records.push(TraceRecord {
            iter,
            threshold,
            residual_power,
            support_size,
            snr_db,
        });

        match initial_power {
            None => initial_power = Some(residual_power),
            Some(p0) => {
                if p0 > 0.0 && residual_power > DIVERGENCE_FACTOR * p0 {
                    return Err(Error::Divergence {
                        iter,
                        residual_power,
                        trace,
                    });
                }
            }
        }
        if let Some(prev) = prev_power {
            let stop = if prev == 0.0 {
                residual_power == 0.0
            } else {
                (residual_power - prev).abs() / prev < config.stop_rel_residual
            };
            if stop {
                break;
            }
        }
        prev_power = Some(residual_power);

        // Subtract the re-masked image of the selected content.
        time_buf.copy_from_slice(&selected);
        fft_inv.process(&mut time_buf);
        let inv_l = 1.0 / l as f64;
        for (n, c) in time_buf.iter_mut().enumerate() {
            *c = if mask.is_sampled(n) {
                *c * inv_l
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        fft_fwd.process(&mut time_buf);
        for (r, &u) in residual.iter_mut().zip(time_buf.iter()) {
            *r -= u;
        }
    }

    let mut estimate = spectrum_to_frame(&accumulator, l)?;
    if config.overwrite_samples {
        let mut samples = estimate.into_samples();
        for (n, s) in samples.iter_mut().enumerate() {
            if mask.is_sampled(n) {
                *s = sampled.samples()[n];
            }
        }
        estimate = Frame::new(samples)?;
    }
    Ok((estimate, trace))
}

/// Inverse-transform an accumulator without the symmetry gate; the
/// accumulator is symmetric by construction and may carry rounding residue.
fn spectrum_to_frame(coeffs: &[Complex64], l: usize) -> Result<Frame> {
    let mut buf = coeffs.to_vec();
    crate::frames::plan_inverse(l).process(&mut buf);
    let inv_l = 1.0 / l as f64;
    Frame::new(buf.iter().map(|c| c.re * inv_l).collect())
}
