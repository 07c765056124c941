//! Random sampling masks, the sampling operator, and Monte Carlo checks of
//! the noise statistics that random sampling induces on the spectrum.
//!
//! Masks select `m` distinct grid indices uniformly at random (a binary
//! indicator, not i.i.d. continuous instants) with realized rate
//! `lambda = m / L`. Randomly sampling a signal scales its spectrum by
//! `lambda` in expectation and adds a white spectral noise term; the exact
//! per-bin variance of that noise for a without-replacement mask is
//!
//! `Var N[k] = lambda (1 - lambda) [ (L/(L-1)) sum x[n]^2 - |X[k]|^2/(L-1) ]`
//!
//! which off-support reduces to `lambda (1-lambda) (L/(L-1)) sum x[n]^2`.
//! The i.i.d. large-`m` limit of the same quantity is `lambda * sum x[n]^2`;
//! both predictions are reported side by side, and the without-replacement
//! value is the one acceptance checks target.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{forward_transform, frame_power, support_of, Frame};
use crate::seed::mix_seed;

/// Number of index bands used by the variance-flatness metric. Averaging
/// within bands keeps single-bin estimator noise out of the flatness figure,
/// so the metric responds to spectral structure rather than trial count.
const FLATNESS_BANDS: usize = 16;

/// Binary sampling indicator of length `L` with exactly `m` ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    indicator: Vec<bool>,
    ones: usize,
}

impl Mask {
    /// Build from an indicator vector.
    pub fn from_indicator(indicator: Vec<bool>) -> Self {
        let ones = indicator.iter().filter(|b| **b).count();
        Self { indicator, ones }
    }

    pub fn len(&self) -> usize {
        self.indicator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicator.is_empty()
    }

    /// Number of ones, `m`.
    pub fn ones(&self) -> usize {
        self.ones
    }

    /// Realized sampling rate `m / L`.
    pub fn rate(&self) -> f64 {
        self.ones as f64 / self.indicator.len() as f64
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn is_sampled(&self, n: usize) -> bool {
        self.indicator[n]
    }

    /// Sampled indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indicator
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(n, _)| n)
    }
}

/// Draw a mask with exactly `m` ones at positions uniform without
/// replacement; deterministic per seed.
///
/// The mask is the prefix of a seeded permutation of the grid, so for a fixed
/// seed the sample sets are nested in `m`: raising the rate only ever adds
/// sampling instants. Rate searches rely on this to keep success monotone in
/// the rate on a fixed trial.
pub fn gen_mask(l: usize, m: usize, seed: u64) -> Result<Mask> {
    if m > l {
        return Err(Error::Mask(format!("m={m} exceeds L={l}")));
    }
    let mut order: Vec<usize> = (0..l).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut indicator = vec![false; l];
    for &n in &order[..m] {
        indicator[n] = true;
    }
    Ok(Mask {
        indicator,
        ones: m,
    })
}

/// Zero the samples the mask does not select.
pub fn apply_mask(frame: &Frame, mask: &Mask) -> Result<Frame> {
    if frame.len() != mask.len() {
        return Err(Error::LengthMismatch {
            expected: mask.len(),
            got: frame.len(),
        });
    }
    let samples = frame
        .samples()
        .iter()
        .zip(mask.indicator())
        .map(|(&x, &keep)| if keep { x } else { 0.0 })
        .collect();
    Frame::new(samples)
}

/// Monte Carlo noise statistics, empirical alongside both predictions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseStats {
    pub trials: usize,
    /// Mean over bins of the magnitude of the per-bin trial mean; near zero
    /// when the noise is unbiased.
    pub empirical_mean_bias: f64,
    /// Per-bin noise variance pooled over bins and trials.
    pub empirical_noise_variance: f64,
    /// Largest relative deviation of band-averaged per-bin variance from the
    /// pooled mean; small values mean the noise is spectrally flat.
    pub variance_flatness: f64,
    /// i.i.d. (large-m limit) prediction for the pooled variance.
    pub predicted_variance_continuous: f64,
    /// Exact without-replacement prediction; the primary reference value.
    pub predicted_variance_discrete: f64,
    /// Mean DC bin value over trials (mask spectra only; equals `m`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dc_bin: Option<f64>,
}

fn flatness_over_bins(per_bin_var: &[(usize, f64)], pooled: f64) -> f64 {
    if per_bin_var.is_empty() || pooled <= 0.0 {
        return 0.0;
    }
    let bands = FLATNESS_BANDS.min(per_bin_var.len());
    let chunk = per_bin_var.len().div_ceil(bands);
    per_bin_var
        .chunks(chunk)
        .map(|band| {
            let mean = band.iter().map(|(_, v)| v).sum::<f64>() / band.len() as f64;
            (mean / pooled - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Statistics of the mask spectrum `Psi[k] = sum_{n in mask} exp(-j2pi nk/L)`
/// over seeded trials: DC carries exactly `m`, every other bin is zero-mean
/// with a variance that is flat across bins.
pub fn comb_spectrum_stats(l: usize, m: usize, trials: usize, seed: u64) -> Result<NoiseStats> {
    if trials < 10 {
        return Err(Error::InvalidArgument {
            field: "trials",
            reason: format!("need at least 10, got {trials}"),
        });
    }
    if l < 2 || l % 2 != 0 {
        return Err(Error::Mask(format!("L must be even and >= 2, got {l}")));
    }
    if m > l {
        return Err(Error::Mask(format!("m={m} exceeds L={l}")));
    }

    let mut sum = vec![num_complex::Complex64::new(0.0, 0.0); l];
    let mut sum_sq = vec![0.0f64; l];
    let mut dc_total = 0.0;
    for t in 0..trials {
        let mask = gen_mask(l, m, mix_seed(&[seed, t as u64]))?;
        let comb = Frame::new(
            mask.indicator()
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        )?;
        let spec = forward_transform(&comb);
        dc_total += spec.coeffs()[0].re;
        for (k, c) in spec.coeffs().iter().enumerate() {
            sum[k] += c;
            sum_sq[k] += c.norm_sqr();
        }
    }

    let t = trials as f64;
    let per_bin: Vec<(usize, f64)> = (1..l)
        .map(|k| {
            let mean = sum[k] / t;
            (k, sum_sq[k] / t - mean.norm_sqr())
        })
        .collect();
    let pooled = per_bin.iter().map(|(_, v)| v).sum::<f64>() / per_bin.len() as f64;
    let bias = (1..l).map(|k| (sum[k] / t).norm()).sum::<f64>() / (l - 1) as f64;

    let lambda = m as f64 / l as f64;
    let lf = l as f64;
    Ok(NoiseStats {
        trials,
        empirical_mean_bias: bias,
        empirical_noise_variance: pooled,
        variance_flatness: flatness_over_bins(&per_bin, pooled),
        predicted_variance_continuous: lambda * lf,
        predicted_variance_discrete: lambda * (1.0 - lambda) * lf * lf / (lf - 1.0),
        dc_bin: Some(dc_total / t),
    })
}

/// Per-bin variance of the sampling noise `N[k] = Xs[k] - (m/L) X[k]`,
/// pooled over the bins outside the signal support to keep signal leakage
/// out of the estimate.
pub fn sampling_noise_stats(frame: &Frame, m: usize, trials: usize, seed: u64) -> Result<NoiseStats> {
    if trials < 10 {
        return Err(Error::InvalidArgument {
            field: "trials",
            reason: format!("need at least 10, got {trials}"),
        });
    }
    let l = frame.len();
    if m > l {
        return Err(Error::Mask(format!("m={m} exceeds L={l}")));
    }
    let lambda = m as f64 / l as f64;
    let reference = forward_transform(frame);
    let support = support_of(&reference, 1e-9 * reference.max_magnitude())?;
    let off_support: Vec<usize> = (0..l).filter(|k| !support.contains(*k)).collect();
    if off_support.is_empty() {
        return Err(Error::InvalidArgument {
            field: "frame",
            reason: "signal occupies every bin; no off-support bins to pool".into(),
        });
    }

    let mut sum = vec![num_complex::Complex64::new(0.0, 0.0); off_support.len()];
    let mut sum_sq = vec![0.0f64; off_support.len()];
    for t in 0..trials {
        let mask = gen_mask(l, m, mix_seed(&[seed, t as u64]))?;
        let sampled = forward_transform(&apply_mask(frame, &mask)?);
        for (i, &k) in off_support.iter().enumerate() {
            let n = sampled.coeffs()[k] - reference.coeffs()[k] * lambda;
            sum[i] += n;
            sum_sq[i] += n.norm_sqr();
        }
    }

    let t = trials as f64;
    let per_bin: Vec<(usize, f64)> = off_support
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, sum_sq[i] / t - (sum[i] / t).norm_sqr()))
        .collect();
    let pooled = per_bin.iter().map(|(_, v)| v).sum::<f64>() / per_bin.len() as f64;
    let bias = sum.iter().map(|s| (s / t).norm()).sum::<f64>() / sum.len() as f64;

    let sum_sq_samples = frame_power(frame) * l as f64;
    let lf = l as f64;
    Ok(NoiseStats {
        trials,
        empirical_mean_bias: bias,
        empirical_noise_variance: pooled,
        variance_flatness: flatness_over_bins(&per_bin, pooled),
        predicted_variance_continuous: lambda * sum_sq_samples,
        predicted_variance_discrete: lambda * (1.0 - lambda) * (lf / (lf - 1.0)) * sum_sq_samples,
        dc_bin: None,
    })
}

/// Compare the frequency average of `|N[k]|^2` from one mask realization to
/// the ensemble variance; returns the relative gap (0 when both vanish).
/// Small values support treating the noise as ergodic.
pub fn ergodicity_check(frame: &Frame, m: usize, seed: u64) -> Result<f64> {
    let ensemble = sampling_noise_stats(frame, m, 200, mix_seed(&[seed, 1]))?;
    let l = frame.len();
    let lambda = m as f64 / l as f64;
    let reference = forward_transform(frame);
    let support = support_of(&reference, 1e-9 * reference.max_magnitude())?;

    let mask = gen_mask(l, m, mix_seed(&[seed, 2]))?;
    let sampled = forward_transform(&apply_mask(frame, &mask)?);
    let (total, count) = (0..l)
        .filter(|k| !support.contains(*k))
        .map(|k| (sampled.coeffs()[k] - reference.coeffs()[k] * lambda).norm_sqr())
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    let freq_avg = total / count as f64;

    if ensemble.empirical_noise_variance == 0.0 {
        return Ok(0.0);
    }
    Ok((freq_avg - ensemble.empirical_noise_variance).abs() / ensemble.empirical_noise_variance)
}
