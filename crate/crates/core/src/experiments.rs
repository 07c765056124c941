//! Seeded Monte Carlo experiments: recovery-rate sweeps over (occupied
//! bandwidth, sampling rate) grids, bisection search for the minimum
//! sampling rate, the noisy-RF denoising run, and sampling-noise
//! verification.
//!
//! Every trial derives its own sub-seed from the base seed and its grid
//! indices, so trials are independent of execution order and worker count,
//! and extending a grid never perturbs existing trials. Sweep rows are
//! merged in deterministic key order before any aggregation, which keeps
//! rerun outputs byte-identical.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::forward_transform;
use crate::metrics::{self, PERFECT_SNR_DB};
use crate::recovery::{recover, Algorithm, RecoveryConfig};
use crate::sampling::{
    apply_mask, comb_spectrum_stats, gen_mask, sampling_noise_stats, NoiseStats,
};
use crate::seed::mix_seed;
use crate::siggen::{add_awgn, gen_fm_multiband, gen_multiband, measure_landau, random_band_plan, FmCarrier, RfSignalSpec};

/// Bisection resolution of the minimum-rate search, in normalized rate.
pub const MIN_RATE_RESOLUTION: f64 = 0.005;

/// Input SNR of the received signal in the noisy-RF experiment.
pub const NOISY_RF_INPUT_SNR_DB: f64 = 14.0;

/// Energy fraction used when measuring the occupied bandwidth of RF frames.
pub const RF_LANDAU_ENERGY_FRACTION: f64 = 0.99;

/// Grid description for a recovery sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub frame_len: usize,
    pub landau_fractions: Vec<f64>,
    pub algorithm: Algorithm,
    pub rates: Vec<f64>,
    pub trials_per_point: usize,
    pub success_fraction: f64,
    pub config: RecoveryConfig,
    pub base_seed: u64,
    /// Noise added to the signal before sampling; `None` runs noiseless.
    pub input_snr_db: Option<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 4 || self.frame_len % 2 != 0 {
            return Err(Error::InvalidArgument {
                field: "frame_len",
                reason: format!("must be even and >= 4, got {}", self.frame_len),
            });
        }
        if self.landau_fractions.is_empty()
            || self
                .landau_fractions
                .iter()
                .any(|f| !(*f > 0.0 && *f < 1.0))
        {
            return Err(Error::InvalidArgument {
                field: "landau_fractions",
                reason: "need a non-empty list of values in (0, 1)".into(),
            });
        }
        if self.rates.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(Error::InvalidArgument {
                field: "rates",
                reason: "rates must lie in (0, 1]".into(),
            });
        }
        if self.trials_per_point == 0 {
            return Err(Error::InvalidArgument {
                field: "trials_per_point",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.success_fraction > 0.0 && self.success_fraction <= 1.0) {
            return Err(Error::InvalidArgument {
                field: "success_fraction",
                reason: format!("must lie in (0, 1], got {}", self.success_fraction),
            });
        }
        self.config.validate()
    }
}

/// One executed trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub landau_fraction: f64,
    pub rate: f64,
    pub trial: usize,
    pub seed: u64,
    /// NaN marks a trial whose recovery failed outright (divergence).
    pub snr_db: f64,
    pub iterations_used: usize,
    pub perfect: bool,
}

/// Per-(landau, rate) aggregate, recomputable from the rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub landau_fraction: f64,
    pub rate: f64,
    pub success_rate: f64,
    /// Mean over trials with a finite SNR; NaN when none have one.
    pub mean_snr_db: f64,
}

/// Rows plus aggregates of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepResult {
    /// Group rows by (landau, rate) in row order and average them.
    pub fn aggregate(rows: &[TrialRow]) -> Vec<Aggregate> {
        let mut out: Vec<Aggregate> = Vec::new();
        let mut groups: Vec<((u64, u64), Vec<&TrialRow>)> = Vec::new();
        for row in rows {
            let key = (row.landau_fraction.to_bits(), row.rate.to_bits());
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(row),
                None => groups.push((key, vec![row])),
            }
        }
        for (_, group) in groups {
            let n = group.len() as f64;
            let successes = group.iter().filter(|r| r.perfect).count() as f64;
            let finite: Vec<f64> = group
                .iter()
                .map(|r| r.snr_db)
                .filter(|s| s.is_finite())
                .collect();
            let mean = if finite.is_empty() {
                f64::NAN
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            };
            out.push(Aggregate {
                landau_fraction: group[0].landau_fraction,
                rate: group[0].rate,
                success_rate: successes / n,
                mean_snr_db: mean,
            });
        }
        out
    }
}

/// Minimum-rate search outcome for one occupied-bandwidth point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinRateResult {
    pub landau_fraction: f64,
    pub min_rate: f64,
    /// `min_rate / landau_fraction`.
    pub ratio: f64,
    /// True when no rate up to 1.0 met the success criterion.
    pub saturated: bool,
    /// False when a probed higher rate failed after a lower one succeeded;
    /// shared per-trial randomness makes that an anomaly worth reporting.
    pub monotone: bool,
}

fn trial_seed(base_seed: u64, landau_key: u64, rate_key: u64, trial: usize) -> u64 {
    mix_seed(&[base_seed, landau_key, rate_key, trial as u64])
}

/// Run one synthetic-signal trial. Recovery failures are reported as a row
/// with NaN SNR rather than an error.
#[allow(clippy::too_many_arguments)]
fn run_trial(
    frame_len: usize,
    landau_fraction: f64,
    rate: f64,
    trial: usize,
    seed: u64,
    algorithm: Algorithm,
    config: &RecoveryConfig,
    input_snr_db: Option<f64>,
) -> TrialRow {
    let failed = |iterations: usize| TrialRow {
        landau_fraction,
        rate,
        trial,
        seed,
        snr_db: f64::NAN,
        iterations_used: iterations,
        perfect: false,
    };

    let n_bands = 1 + (mix_seed(&[seed, 10]) % 3) as usize;
    let plan = match random_band_plan(frame_len, landau_fraction, n_bands, mix_seed(&[seed, 11])) {
        Ok(p) => p,
        Err(_) => return failed(0),
    };
    let (reference, support) = match gen_multiband(frame_len, &plan, mix_seed(&[seed, 12])) {
        Ok(v) => v,
        Err(_) => return failed(0),
    };
    let input = match input_snr_db {
        Some(snr) => match add_awgn(&reference, snr, mix_seed(&[seed, 13])) {
            Ok(f) => f,
            Err(_) => return failed(0),
        },
        None => reference.clone(),
    };
    let m = ((rate * frame_len as f64).round() as usize).min(frame_len);
    let mask = match gen_mask(frame_len, m, mix_seed(&[seed, 14])) {
        Ok(m) => m,
        Err(_) => return failed(0),
    };
    let sampled = match apply_mask(&input, &mask) {
        Ok(s) => s,
        Err(_) => return failed(0),
    };

    let sup = match algorithm {
        Algorithm::KnownSupport => Some(&support),
        _ => None,
    };
    match recover(algorithm, &sampled, &mask, sup, config, None) {
        Ok((estimate, trace)) => {
            let tol = metrics::default_support_tol(&forward_transform(&reference));
            match metrics::evaluate(&reference, &support, &estimate, tol) {
                Ok(report) => TrialRow {
                    landau_fraction,
                    rate,
                    trial,
                    seed,
                    snr_db: report.snr_db,
                    iterations_used: trace.iterations_used(),
                    perfect: report.perfect,
                },
                Err(_) => failed(trace.iterations_used()),
            }
        }
        Err(e) => failed(e.trace().map(|t| t.iterations_used()).unwrap_or(0)),
    }
}

/// Run the full (landau, rate, trial) grid; deterministic per base seed.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    if spec.rates.is_empty() {
        return Err(Error::InvalidArgument {
            field: "rates",
            reason: "explicit rate grid required for a sweep".into(),
        });
    }
    let mut jobs = Vec::new();
    for (li, &landau) in spec.landau_fractions.iter().enumerate() {
        for (ri, &rate) in spec.rates.iter().enumerate() {
            for trial in 0..spec.trials_per_point {
                jobs.push((li, ri, trial, landau, rate));
            }
        }
    }
    let mut rows: Vec<((usize, usize, usize), TrialRow)> = jobs
        .into_par_iter()
        .map(|(li, ri, trial, landau, rate)| {
            let seed = trial_seed(spec.base_seed, li as u64, ri as u64, trial);
            let row = run_trial(
                spec.frame_len,
                landau,
                rate,
                trial,
                seed,
                spec.algorithm,
                &spec.config,
                spec.input_snr_db,
            );
            ((li, ri, trial), row)
        })
        .collect();
    rows.sort_by_key(|(key, _)| *key);
    let rows: Vec<TrialRow> = rows.into_iter().map(|(_, r)| r).collect();
    let aggregates = SweepResult::aggregate(&rows);
    Ok(SweepResult { rows, aggregates })
}

/// Bisection for the smallest rate at which the success criterion holds.
///
/// Each probed rate reuses the identical per-trial signal and mask seeds;
/// masks are nested in the rate, so success is monotone in the rate on a
/// fixed trial set up to algorithmic pathologies, which are flagged rather
/// than hidden.
pub fn min_rate_search(spec: &SweepSpec, landau_fraction: f64) -> Result<MinRateResult> {
    spec.validate()?;
    if !(landau_fraction > 0.0 && landau_fraction < 1.0) {
        return Err(Error::InvalidArgument {
            field: "landau_fraction",
            reason: format!("must lie in (0, 1), got {landau_fraction}"),
        });
    }
    let landau_key = landau_fraction.to_bits();
    let needed = (spec.success_fraction * spec.trials_per_point as f64).ceil() as usize;

    let evaluate_rate = |rate: f64| -> bool {
        let successes = (0..spec.trials_per_point)
            .into_par_iter()
            .filter(|&trial| {
                // Rate is deliberately left out of the seed so every probe
                // sees the same signals and nested masks.
                let seed = trial_seed(spec.base_seed, landau_key, 0, trial);
                let row = run_trial(
                    spec.frame_len,
                    landau_fraction,
                    rate,
                    trial,
                    seed,
                    spec.algorithm,
                    &spec.config,
                    spec.input_snr_db,
                );
                row.snr_db.is_finite() && row.snr_db >= PERFECT_SNR_DB
            })
            .count();
        successes >= needed
    };

    let mut probes: Vec<(f64, bool)> = Vec::new();
    let probe = |rate: f64, probes: &mut Vec<(f64, bool)>| -> bool {
        let ok = evaluate_rate(rate);
        probes.push((rate, ok));
        ok
    };

    if !probe(1.0, &mut probes) {
        return Ok(MinRateResult {
            landau_fraction,
            min_rate: 1.0,
            ratio: 1.0 / landau_fraction,
            saturated: true,
            monotone: true,
        });
    }
    let mut lo = landau_fraction;
    let mut hi = 1.0;
    if probe(lo, &mut probes) {
        hi = lo;
    } else {
        while hi - lo > MIN_RATE_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if probe(mid, &mut probes) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    probes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let monotone = probes.windows(2).all(|w| !w[0].1 || w[1].1);

    Ok(MinRateResult {
        landau_fraction,
        min_rate: hi,
        ratio: hi / landau_fraction,
        saturated: false,
        monotone,
    })
}

/// Multi-carrier FM description used by the noisy-RF experiment: eight
/// carriers spread over the band, each with a narrow sinusoidal message,
/// occupying roughly 4% of the grid.
pub fn default_rf_spec() -> RfSignalSpec {
    let carriers = [260, 510, 770, 1030, 1290, 1550, 1790, 1980]
        .iter()
        .map(|&carrier_bin| FmCarrier {
            carrier_bin,
            message_bin: 2,
            modulation_index: 4.0,
            amplitude: 1.0,
        })
        .collect();
    RfSignalSpec { carriers }
}

/// Noisy-RF denoising run: sample the 14 dB received signal at each rate and
/// reconstruct with the hybrid algorithm, scoring SNR against the clean
/// frame.
pub fn run_fig6(
    frame_len: usize,
    spec: &RfSignalSpec,
    rates: &[f64],
    trials: usize,
    base_seed: u64,
    config: &RecoveryConfig,
) -> Result<(f64, SweepResult)> {
    if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::InvalidArgument {
            field: "rates",
            reason: "rates must be non-empty and lie in (0, 1]".into(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument {
            field: "trials",
            reason: "must be >= 1".into(),
        });
    }
    config.validate()?;
    let clean = gen_fm_multiband(frame_len, spec)?;
    let measured_landau = measure_landau(&clean, RF_LANDAU_ENERGY_FRACTION)?;

    let mut jobs = Vec::new();
    for (ri, &rate) in rates.iter().enumerate() {
        for trial in 0..trials {
            jobs.push((ri, trial, rate));
        }
    }
    let mut rows: Vec<((usize, usize), TrialRow)> = jobs
        .into_par_iter()
        .map(|(ri, trial, rate)| {
            let seed = trial_seed(base_seed, 0, ri as u64, trial);
            let failed = TrialRow {
                landau_fraction: measured_landau,
                rate,
                trial,
                seed,
                snr_db: f64::NAN,
                iterations_used: 0,
                perfect: false,
            };
            let row = (|| -> Result<TrialRow> {
                let received = add_awgn(&clean, NOISY_RF_INPUT_SNR_DB, mix_seed(&[seed, 13]))?;
                let m = ((rate * frame_len as f64).round() as usize).min(frame_len);
                let mask = gen_mask(frame_len, m, mix_seed(&[seed, 14]))?;
                let sampled = apply_mask(&received, &mask)?;
                let (estimate, trace) =
                    recover(Algorithm::Hybrid, &sampled, &mask, None, config, None)?;
                let snr_db = metrics::snr_db(&clean, &estimate)?;
                Ok(TrialRow {
                    landau_fraction: measured_landau,
                    rate,
                    trial,
                    seed,
                    snr_db,
                    iterations_used: trace.iterations_used(),
                    perfect: snr_db >= PERFECT_SNR_DB,
                })
            })()
            .unwrap_or(failed);
            ((ri, trial), row)
        })
        .collect();
    rows.sort_by_key(|(key, _)| *key);
    let rows: Vec<TrialRow> = rows.into_iter().map(|(_, r)| r).collect();
    let aggregates = SweepResult::aggregate(&rows);
    Ok((measured_landau, SweepResult { rows, aggregates }))
}

/// Sampling-noise verification point: mask-spectrum statistics next to
/// signal sampling-noise statistics at one rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseVerificationPoint {
    pub rate: f64,
    pub comb: NoiseStats,
    pub sampling: NoiseStats,
}

/// Monte Carlo statistics across a rate grid on a fresh multiband signal.
pub fn run_noise_verification(
    frame_len: usize,
    landau_fraction: f64,
    rates: &[f64],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<NoiseVerificationPoint>> {
    if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::InvalidArgument {
            field: "rates",
            reason: "rates must be non-empty and lie in (0, 1]".into(),
        });
    }
    let n_bands = 1 + (mix_seed(&[base_seed, 10]) % 3) as usize;
    let plan = random_band_plan(frame_len, landau_fraction, n_bands, mix_seed(&[base_seed, 11]))?;
    let (frame, _) = gen_multiband(frame_len, &plan, mix_seed(&[base_seed, 12]))?;

    rates
        .iter()
        .enumerate()
        .map(|(ri, &rate)| {
            let m = ((rate * frame_len as f64).round() as usize).min(frame_len);
            Ok(NoiseVerificationPoint {
                rate,
                comb: comb_spectrum_stats(frame_len, m, trials, mix_seed(&[base_seed, ri as u64, 1]))?,
                sampling: sampling_noise_stats(&frame, m, trials, mix_seed(&[base_seed, ri as u64, 2]))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_spec(algorithm: Algorithm) -> SweepSpec {
        SweepSpec {
            frame_len: 512,
            landau_fractions: vec![0.04],
            algorithm,
            rates: vec![1.0],
            trials_per_point: 4,
            success_fraction: 0.9,
            config: RecoveryConfig::default(),
            base_seed: 1,
            input_snr_db: None,
        }
    }

    #[test]
    fn full_rate_always_succeeds() {
        for alg in [Algorithm::Imat, Algorithm::KnownSupport, Algorithm::Hybrid] {
            let result = run_sweep(&quick_spec(alg)).unwrap();
            assert_eq!(result.rows.len(), 4);
            for agg in &result.aggregates {
                assert_eq!(agg.success_rate, 1.0, "{alg}");
            }
        }
    }

    #[test]
    fn sub_landau_rate_fails_known_support() {
        let mut spec = quick_spec(Algorithm::KnownSupport);
        spec.frame_len = 1024;
        spec.landau_fractions = vec![0.1];
        spec.rates = vec![0.05];
        spec.trials_per_point = 8;
        let result = run_sweep(&spec).unwrap();
        let agg = &result.aggregates[0];
        assert!(agg.success_rate <= 0.25, "success {}", agg.success_rate);
    }

    #[test]
    fn sweep_is_deterministic_across_thread_counts() {
        let spec = SweepSpec {
            frame_len: 512,
            landau_fractions: vec![0.02, 0.05],
            algorithm: Algorithm::Imat,
            rates: vec![0.2, 0.5],
            trials_per_point: 3,
            success_fraction: 0.9,
            config: RecoveryConfig::default(),
            base_seed: 9,
            input_snr_db: None,
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec).unwrap());
        // Bitwise comparison, NaN-free here by construction.
        assert_eq!(single, multi);
    }

    #[test]
    fn adding_grid_points_preserves_existing_trials() {
        let mut spec = quick_spec(Algorithm::Imat);
        spec.rates = vec![0.5];
        let narrow = run_sweep(&spec).unwrap();
        spec.rates = vec![0.5, 1.0];
        let wide = run_sweep(&spec).unwrap();
        for (a, b) in narrow.rows.iter().zip(wide.rows.iter().filter(|r| r.rate == 0.5)) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn min_rate_search_basics() {
        let mut spec = quick_spec(Algorithm::KnownSupport);
        spec.frame_len = 1024;
        spec.trials_per_point = 6;
        let result = min_rate_search(&spec, 0.04).unwrap();
        assert!(!result.saturated);
        assert!(result.monotone, "non-monotone probe pattern");
        assert!(result.min_rate >= 0.04 && result.min_rate <= 1.0);
        assert!((result.ratio - result.min_rate / 0.04).abs() < 1e-12);
    }

    #[test]
    fn default_rf_spec_occupies_a_few_percent() {
        let spec = default_rf_spec();
        let frame = gen_fm_multiband(4096, &spec).unwrap();
        let landau = measure_landau(&frame, RF_LANDAU_ENERGY_FRACTION).unwrap();
        assert!(
            (0.03..=0.05).contains(&landau),
            "measured landau {landau:.4}"
        );
    }

    #[test]
    fn noise_verification_tracks_rate_curve() {
        let points =
            run_noise_verification(1024, 0.05, &[0.1, 0.3, 0.5, 1.0], 40, 3).unwrap();
        assert_eq!(points.len(), 4);
        // Variance follows lambda (1 - lambda): rises toward 0.5, vanishes
        // at full sampling.
        assert!(points[1].sampling.empirical_noise_variance > points[0].sampling.empirical_noise_variance);
        assert!(points[3].sampling.empirical_noise_variance < 1e-12);
        for p in &points[..3] {
            let ratio = p.sampling.empirical_noise_variance / p.sampling.predicted_variance_discrete;
            assert!((ratio - 1.0).abs() < 0.15, "rate {}: ratio {ratio:.3}", p.rate);
        }
    }
}
