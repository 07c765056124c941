//! Test-signal synthesis: sparse multiband frames with a controlled occupied
//! bandwidth, FM-style multi-carrier RF frames, and additive Gaussian noise.
//!
//! Band plans live on the positive-frequency half `[1, L/2)`; DC and the
//! `L/2` bin are excluded so every occupied bin has a distinct conjugate
//! mirror. Generated frames are real, unit power, and deterministic per seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{forward_transform, frame_power, inverse_transform, Frame, Spectrum, SupportSet};

/// Disjoint `(start_bin, width_bins)` bands on the positive-frequency half.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandPlan {
    pub bands: Vec<(usize, usize)>,
}

impl BandPlan {
    pub fn new(bands: Vec<(usize, usize)>) -> Self {
        Self { bands }
    }

    /// Check disjointness and the `[1, L/2)` range for a given frame length.
    pub fn validate(&self, frame_len: usize) -> Result<()> {
        if frame_len < 4 || frame_len % 2 != 0 {
            return Err(Error::BandPlan(format!(
                "frame length must be even and >= 4, got {frame_len}"
            )));
        }
        if self.bands.is_empty() {
            return Err(Error::BandPlan("plan has no bands".into()));
        }
        let half = frame_len / 2;
        let mut sorted = self.bands.clone();
        sorted.sort_unstable();
        let mut prev_end = 0usize;
        for &(start, width) in &sorted {
            if width == 0 {
                return Err(Error::BandPlan(format!("zero-width band at bin {start}")));
            }
            if start < 1 || start + width > half {
                return Err(Error::BandPlan(format!(
                    "band ({start}, {width}) leaves [1, {half})"
                )));
            }
            if start < prev_end {
                return Err(Error::BandPlan(format!(
                    "band at bin {start} overlaps the previous band"
                )));
            }
            prev_end = start + width;
        }
        Ok(())
    }

    /// Occupied positive-half bins.
    pub fn positive_bins(&self) -> impl Iterator<Item = usize> + '_ {
        let mut sorted = self.bands.clone();
        sorted.sort_unstable();
        sorted
            .into_iter()
            .flat_map(|(start, width)| start..start + width)
    }

    /// Support set including the mirror bins.
    pub fn support_set(&self, frame_len: usize) -> Result<SupportSet> {
        self.validate(frame_len)?;
        SupportSet::from_bins(frame_len, self.positive_bins())
    }

    /// Fraction of the grid the support covers (both halves).
    pub fn landau_fraction(&self, frame_len: usize) -> f64 {
        let total: usize = self.bands.iter().map(|&(_, w)| w).sum();
        2.0 * total as f64 / frame_len as f64
    }
}

/// One FM carrier: `amplitude * cos(2 pi carrier n / L + index * sin(2 pi message n / L))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64, f64)", into = "(usize, usize, f64, f64)")]
pub struct FmCarrier {
    pub carrier_bin: usize,
    pub message_bin: usize,
    pub modulation_index: f64,
    pub amplitude: f64,
}

impl From<(usize, usize, f64, f64)> for FmCarrier {
    fn from(t: (usize, usize, f64, f64)) -> Self {
        Self {
            carrier_bin: t.0,
            message_bin: t.1,
            modulation_index: t.2,
            amplitude: t.3,
        }
    }
}

impl From<FmCarrier> for (usize, usize, f64, f64) {
    fn from(c: FmCarrier) -> Self {
        (c.carrier_bin, c.message_bin, c.modulation_index, c.amplitude)
    }
}

/// Multi-carrier FM signal description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfSignalSpec {
    pub carriers: Vec<FmCarrier>,
}

impl RfSignalSpec {
    pub fn validate(&self, frame_len: usize) -> Result<()> {
        if self.carriers.is_empty() {
            return Err(Error::RfSpec("no carriers".into()));
        }
        let half = frame_len / 2;
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.carriers {
            if !seen.insert(c.carrier_bin) {
                return Err(Error::RfSpec(format!(
                    "duplicate carrier bin {}",
                    c.carrier_bin
                )));
            }
            if c.message_bin == 0 {
                return Err(Error::RfSpec("message bin must be >= 1".into()));
            }
            if !c.modulation_index.is_finite() || c.modulation_index < 0.0 {
                return Err(Error::RfSpec(format!(
                    "modulation index must be finite and >= 0, got {}",
                    c.modulation_index
                )));
            }
            if !c.amplitude.is_finite() || c.amplitude == 0.0 {
                return Err(Error::RfSpec("amplitude must be finite and nonzero".into()));
            }
            // Carson-rule sideband footprint must stay inside [1, L/2).
            let footprint = ((c.modulation_index + 1.0) * c.message_bin as f64).ceil() as usize;
            if c.carrier_bin <= footprint || c.carrier_bin + footprint >= half {
                return Err(Error::RfSpec(format!(
                    "carrier {} with footprint +-{} leaves [1, {})",
                    c.carrier_bin, footprint, half
                )));
            }
        }
        Ok(())
    }
}

/// Synthesize a sparse multiband frame: seeded complex Gaussian coefficients
/// on the plan's bins (mirrored for a real signal), unit power.
pub fn gen_multiband(l: usize, plan: &BandPlan, seed: u64) -> Result<(Frame, SupportSet)> {
    plan.validate(l)?;
    let support = plan.support_set(l)?;
    let mut coeffs = vec![num_complex::Complex64::new(0.0, 0.0); l];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in plan.positive_bins() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        coeffs[k] = num_complex::Complex64::new(re, im);
        coeffs[l - k] = coeffs[k].conj();
    }
    let frame = inverse_transform(&Spectrum::new(coeffs))?;
    let power = frame_power(&frame);
    if power <= 0.0 {
        return Err(Error::ZeroPower(
            "generated frame has zero power; cannot normalize".into(),
        ));
    }
    let scale = 1.0 / power.sqrt();
    let frame = Frame::new(frame.samples().iter().map(|x| x * scale).collect())?;
    Ok((frame, support))
}

/// Draw a plan of `n_bands` disjoint bands of near-equal width totaling
/// `round(landau_fraction * L / 2)` positive-half bins, placed uniformly
/// among the feasible arrangements with at least one empty bin between
/// bands; deterministic per seed.
pub fn random_band_plan(l: usize, landau_fraction: f64, n_bands: usize, seed: u64) -> Result<BandPlan> {
    if !(0.0..1.0).contains(&landau_fraction) || landau_fraction == 0.0 {
        return Err(Error::BandPlan(format!(
            "landau fraction must lie in (0, 1), got {landau_fraction}"
        )));
    }
    if n_bands == 0 {
        return Err(Error::BandPlan("need at least one band".into()));
    }
    if l < 4 || l % 2 != 0 {
        return Err(Error::BandPlan(format!(
            "frame length must be even and >= 4, got {l}"
        )));
    }
    let half = l / 2;
    let total = (landau_fraction * half as f64).round() as usize;
    if total < n_bands {
        return Err(Error::Packing(format!(
            "{total} occupied bins cannot fill {n_bands} nonempty bands"
        )));
    }
    let slots = half - 1; // usable bins 1 ..= L/2 - 1
    let footprint = total + (n_bands - 1);
    if footprint > slots {
        return Err(Error::Packing(format!(
            "{n_bands} bands of {total} bins with gaps need {footprint} slots, have {slots}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Near-equal widths; the remainder bins go to a random subset of bands.
    let base = total / n_bands;
    let extra = total % n_bands;
    let mut widths = vec![base; n_bands];
    let mut order: Vec<usize> = (0..n_bands).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(extra) {
        widths[i] += 1;
    }

    // Distribute the leftover slack uniformly over the n_bands + 1 gaps
    // (stars and bars: bar positions drawn without replacement).
    let slack = slots - footprint;
    let mut bars: Vec<usize> = rand::seq::index::sample(&mut rng, slack + n_bands, n_bands).into_vec();
    bars.sort_unstable();
    let mut gaps = Vec::with_capacity(n_bands + 1);
    let mut prev = 0usize;
    for (i, &b) in bars.iter().enumerate() {
        gaps.push(b - prev);
        prev = b + 1;
        let _ = i;
    }
    gaps.push(slack + n_bands - prev);

    let mut bands = Vec::with_capacity(n_bands);
    let mut cursor = 1 + gaps[0];
    for (i, &w) in widths.iter().enumerate() {
        bands.push((cursor, w));
        cursor += w + 1 + gaps[i + 1];
    }
    let plan = BandPlan::new(bands);
    plan.validate(l)?;
    Ok(plan)
}

/// Sum of FM carriers, normalized to unit power.
pub fn gen_fm_multiband(l: usize, spec: &RfSignalSpec) -> Result<Frame> {
    if l < 4 || l % 2 != 0 {
        return Err(Error::RfSpec(format!(
            "frame length must be even and >= 4, got {l}"
        )));
    }
    spec.validate(l)?;
    let lf = l as f64;
    let tau = 2.0 * std::f64::consts::PI;
    let samples: Vec<f64> = (0..l)
        .map(|n| {
            spec.carriers
                .iter()
                .map(|c| {
                    let phase = tau * c.carrier_bin as f64 * n as f64 / lf
                        + c.modulation_index * (tau * c.message_bin as f64 * n as f64 / lf).sin();
                    c.amplitude * phase.cos()
                })
                .sum()
        })
        .collect();
    let frame = Frame::new(samples)?;
    let power = frame_power(&frame);
    if power <= 0.0 {
        return Err(Error::ZeroPower("FM frame has zero power".into()));
    }
    let scale = 1.0 / power.sqrt();
    Frame::new(frame.samples().iter().map(|x| x * scale).collect())
}

/// Add seeded white Gaussian noise at the requested SNR.
pub fn add_awgn(frame: &Frame, snr_db: f64, seed: u64) -> Result<Frame> {
    let power = frame_power(frame);
    if power <= 0.0 {
        return Err(Error::ZeroPower("cannot set an SNR on a zero-power frame".into()));
    }
    let noise_power = power / 10f64.powf(snr_db / 10.0);
    let sigma = noise_power.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = frame
        .samples()
        .iter()
        .map(|&x| {
            let n: f64 = rng.sample(StandardNormal);
            x + sigma * n
        })
        .collect();
    Frame::new(samples)
}

/// Smallest number of spectrum bins, taken in decreasing `|X[k]|^2` order,
/// whose energy reaches `energy_fraction` of the total, divided by `L`.
pub fn measure_landau(frame: &Frame, energy_fraction: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&energy_fraction) || energy_fraction == 0.0 {
        return Err(Error::InvalidArgument {
            field: "energy_fraction",
            reason: format!("must lie in (0, 1), got {energy_fraction}"),
        });
    }
    let spectrum = forward_transform(frame);
    let mut energies: Vec<f64> = spectrum.coeffs().iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroPower("zero frame has no occupied bandwidth".into()));
    }
    energies.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let target = energy_fraction * total;
    let mut acc = 0.0;
    let mut count = 0usize;
    for e in energies {
        acc += e;
        count += 1;
        if acc >= target {
            break;
        }
    }
    Ok(count as f64 / frame.len() as f64)
}
