//! Core signal containers and the spectral-transform contract.
//!
//! A [`Frame`] is a real-valued sample vector of even length `L`; index `n`
//! corresponds to time `n/L` of one frame period, so the grid Nyquist rate is
//! normalized to 1.0. A [`Spectrum`] holds the unnormalized forward transform
//! `X[k] = sum_n x[n] exp(-j 2 pi n k / L)`; the inverse applies the `1/L`
//! factor. Under this convention, masking a fraction `lambda = m/L` of the
//! time samples scales the expected spectrum by exactly `lambda`, so the
//! recovery iterations can use the literal `1/lambda` correction.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance for the conjugate-symmetry check on spectra.
///
/// Deviations are measured against the largest bin magnitude; exceeding the
/// tolerance is an error, never a silent re-symmetrization.
pub const HERMITIAN_REL_TOL: f64 = 1e-9;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Real-valued time-domain sample vector on the oversampled grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    samples: Vec<f64>,
}

impl Frame {
    /// Wrap a sample vector, enforcing even length `>= 2` and finite entries.
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidFrame(format!(
                "length must be >= 2, got {}",
                samples.len()
            )));
        }
        if samples.len() % 2 != 0 {
            return Err(Error::InvalidFrame(format!(
                "length must be even, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidFrame(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Mean-square power, `(1/L) * sum x[n]^2`.
    pub fn power(&self) -> f64 {
        frame_power(self)
    }
}

/// Complex frequency-coefficient vector of a [`Frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Euclidean norm of the coefficient vector.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest relative deviation from conjugate symmetry, measured against
    /// the peak bin magnitude. Zero spectra are trivially symmetric.
    pub fn hermitian_deviation(&self) -> f64 {
        let l = self.coeffs.len();
        let peak = self.max_magnitude();
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for k in 0..=l / 2 {
            let mirror = (l - k) % l;
            let d = (self.coeffs[k] - self.coeffs[mirror].conj()).norm();
            worst = worst.max(d / peak);
        }
        worst
    }
}

/// Set of frequency-bin indices, closed under `k -> (L - k) mod L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    frame_len: usize,
    bins: BTreeSet<usize>,
}

impl SupportSet {
    /// Build a support set over a length-`L` grid, inserting the conjugate
    /// mirror of every given bin so closure holds by construction.
    pub fn from_bins<I: IntoIterator<Item = usize>>(frame_len: usize, bins: I) -> Result<Self> {
        let mut set = BTreeSet::new();
        for k in bins {
            if k >= frame_len {
                return Err(Error::InvalidArgument {
                    field: "bins",
                    reason: format!("bin {k} out of range for L={frame_len}"),
                });
            }
            set.insert(k);
            set.insert((frame_len - k) % frame_len);
        }
        Ok(Self { frame_len, bins: set })
    }

    pub fn empty(frame_len: usize) -> Self {
        Self {
            frame_len,
            bins: BTreeSet::new(),
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn contains(&self, bin: usize) -> bool {
        self.bins.contains(&bin)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bins.iter().copied()
    }

    /// Fraction of the grid covered by the support, `|bins| / L`.
    pub fn landau_fraction(&self) -> f64 {
        self.bins.len() as f64 / self.frame_len as f64
    }

    pub fn intersection_count(&self, other: &SupportSet) -> usize {
        self.bins.iter().filter(|k| other.contains(**k)).count()
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.bins.iter().all(|k| other.contains(*k))
    }
}

/// Unnormalized forward transform of a frame.
pub fn forward_transform(frame: &Frame) -> Spectrum {
    let mut buf: Vec<Complex64> = frame
        .samples()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    plan_forward(buf.len()).process(&mut buf);
    Spectrum::new(buf)
}

/// Inverse transform with the `1/L` factor; the imaginary residue left by a
/// (tolerably) symmetric spectrum is discarded.
pub fn inverse_transform(spectrum: &Spectrum) -> Result<Frame> {
    let l = spectrum.len();
    if l < 2 || l % 2 != 0 {
        return Err(Error::InvalidFrame(format!(
            "spectrum length must be even and >= 2, got {l}"
        )));
    }
    let peak = spectrum.max_magnitude();
    if peak > 0.0 {
        for k in 0..=l / 2 {
            let mirror = (l - k) % l;
            let d = (spectrum.coeffs()[k] - spectrum.coeffs()[mirror].conj()).norm();
            if d > HERMITIAN_REL_TOL * peak {
                return Err(Error::SymmetryViolation {
                    bin: k,
                    deviation: d / peak,
                });
            }
        }
    }
    let mut buf = spectrum.coeffs().to_vec();
    plan_inverse(l).process(&mut buf);
    let scale = 1.0 / l as f64;
    Frame::new(buf.iter().map(|c| c.re * scale).collect())
}

/// Bins whose magnitude strictly exceeds `tol`.
pub fn support_of(spectrum: &Spectrum, tol: f64) -> Result<SupportSet> {
    if tol < 0.0 || !tol.is_finite() {
        return Err(Error::InvalidArgument {
            field: "tol",
            reason: format!("must be finite and >= 0, got {tol}"),
        });
    }
    let bins = spectrum
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > tol)
        .map(|(k, _)| k);
    SupportSet::from_bins(spectrum.len(), bins)
}

/// Mean-square power of a frame, `(1/L) * sum x[n]^2`.
pub fn frame_power(frame: &Frame) -> f64 {
    frame.samples().iter().map(|x| x * x).sum::<f64>() / frame.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Independent O(L^2) summation oracle for the forward transform.
    fn naive_dft(samples: &[f64]) -> Vec<Complex64> {
        let l = samples.len();
        (0..l)
            .map(|k| {
                (0..l)
                    .map(|n| {
                        let angle = -2.0 * PI * (n as f64) * (k as f64) / (l as f64);
                        Complex64::new(angle.cos(), angle.sin()) * samples[n]
                    })
                    .sum()
            })
            .collect()
    }

    fn random_frame(l: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Frame::new((0..l).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_frames() {
        assert!(Frame::new(vec![]).is_err());
        assert!(Frame::new(vec![1.0]).is_err());
        assert!(Frame::new(vec![1.0, 2.0, 3.0]).is_err());
        assert!(Frame::new(vec![1.0, f64::NAN]).is_err());
        assert!(Frame::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(Frame::new(vec![0.0, 0.0]).is_ok());
    }

    #[test]
    fn forward_zero_frame() {
        let f = Frame::new(vec![0.0; 8]).unwrap();
        let s = forward_transform(&f);
        assert!(s.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn forward_unit_impulse() {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let s = forward_transform(&Frame::new(v).unwrap());
        for c in s.coeffs() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_cosine_matches_direct_summation() {
        // x[n] = cos(2 pi 3 n / 16): bins 3 and 13 hold 8, all others 0.
        let l = 16;
        let f = Frame::new(
            (0..l)
                .map(|n| (2.0 * PI * 3.0 * n as f64 / l as f64).cos())
                .collect(),
        )
        .unwrap();
        let s = forward_transform(&f);
        let oracle = naive_dft(f.samples());
        for (a, b) in s.coeffs().iter().zip(oracle.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
        for (k, c) in s.coeffs().iter().enumerate() {
            let expected = if k == 3 || k == 13 { 8.0 } else { 0.0 };
            assert!(
                (c - Complex64::new(expected, 0.0)).norm() < 1e-9,
                "bin {k}: {c}"
            );
        }
    }

    #[test]
    fn forward_matches_direct_summation_on_random_frames() {
        for seed in 0..4 {
            let f = random_frame(24, seed);
            let s = forward_transform(&f);
            let oracle = naive_dft(f.samples());
            for (a, b) in s.coeffs().iter().zip(oracle.iter()) {
                assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn inverse_zero_and_flat() {
        let zero = Spectrum::new(vec![Complex64::new(0.0, 0.0); 8]);
        let f = inverse_transform(&zero).unwrap();
        assert!(f.samples().iter().all(|&x| x == 0.0));

        let flat = Spectrum::new(vec![Complex64::new(1.0, 0.0); 8]);
        let f = inverse_transform(&flat).unwrap();
        assert!((f.samples()[0] - 1.0).abs() < 1e-12);
        for &x in &f.samples()[1..] {
            assert!(x.abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_seeded_frames() {
        // 100 seeded frames over the three sizes; relative error must stay
        // below 1e-12.
        let mut worst = 0.0f64;
        for (i, &l) in [64usize, 256, 1024].iter().cycle().take(100).enumerate() {
            let f = random_frame(l, i as u64);
            let back = inverse_transform(&forward_transform(&f)).unwrap();
            let scale = f
                .samples()
                .iter()
                .map(|x| x.abs())
                .fold(f64::MIN_POSITIVE, f64::max);
            for (a, b) in f.samples().iter().zip(back.samples()) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        assert!(worst < 1e-12, "max relative round-trip error {worst:.3e}");
    }

    #[test]
    fn inverse_rejects_asymmetric_spectrum() {
        let mut coeffs = forward_transform(&random_frame(16, 9)).into_coeffs();
        coeffs[3] += Complex64::new(0.5, 0.5);
        let err = inverse_transform(&Spectrum::new(coeffs)).unwrap_err();
        assert!(matches!(err, Error::SymmetryViolation { .. }));
    }

    #[test]
    fn support_of_cases() {
        let zero = Spectrum::new(vec![Complex64::new(0.0, 0.0); 8]);
        assert!(support_of(&zero, 0.0).unwrap().is_empty());

        let l = 16;
        let f = Frame::new(
            (0..l)
                .map(|n| (2.0 * PI * 3.0 * n as f64 / l as f64).cos())
                .collect(),
        )
        .unwrap();
        let s = forward_transform(&f);
        let sup = support_of(&s, 1e-6).unwrap();
        assert_eq!(sup.iter().collect::<Vec<_>>(), vec![3, 13]);
        assert!((sup.landau_fraction() - 2.0 / 16.0).abs() < 1e-15);

        // Strict inequality: tol at the max magnitude empties the set.
        let sup = support_of(&s, s.max_magnitude()).unwrap();
        assert!(sup.is_empty());

        assert!(support_of(&s, -1.0).is_err());
    }

    #[test]
    fn frame_power_cases() {
        assert_eq!(frame_power(&Frame::new(vec![0.0; 8]).unwrap()), 0.0);
        assert_eq!(frame_power(&Frame::new(vec![2.0; 10]).unwrap()), 4.0);
        let l = 16;
        let f = Frame::new(
            (0..l)
                .map(|n| (2.0 * PI * 3.0 * n as f64 / l as f64).cos())
                .collect(),
        )
        .unwrap();
        assert!((frame_power(&f) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn support_set_closure_and_bounds() {
        let s = SupportSet::from_bins(16, [3usize, 5]).unwrap();
        assert!(s.contains(13) && s.contains(11));
        assert_eq!(s.len(), 4);
        // DC and L/2 are self-paired.
        let s = SupportSet::from_bins(16, [0usize, 8]).unwrap();
        assert_eq!(s.len(), 2);
        assert!(SupportSet::from_bins(16, [16usize]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(seed in 0u64..500, size_idx in 0usize..3) {
            let l = [64usize, 256, 1024][size_idx];
            let f = random_frame(l, seed);
            let s = forward_transform(&f);

            // Parseval under the unnormalized-forward convention.
            let spectral = s.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()
                / (l as f64 * l as f64);
            let direct = frame_power(&f);
            prop_assert!((spectral - direct).abs() <= 1e-9 * direct.max(1e-300));

            // Bin-by-bin conjugate symmetry of a real frame's spectrum.
            prop_assert!(s.hermitian_deviation() <= 1e-12);

            // Conjugate closure of the extracted support.
            let sup = support_of(&s, 0.25 * s.max_magnitude()).unwrap();
            for k in sup.iter() {
                prop_assert!(sup.contains((l - k) % l));
            }

            let back = inverse_transform(&s).unwrap();
            let scale = f.samples().iter().map(|x| x.abs()).fold(f64::MIN_POSITIVE, f64::max);
            for (a, b) in f.samples().iter().zip(back.samples()) {
                prop_assert!((a - b).abs() / scale < 1e-12);
            }
        }
    }
}
