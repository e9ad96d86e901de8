//! Handcrafted per-channel features: time-domain statistics plus spectral
//! shape and octave-band energy ratios.
//!
//! Thirteen features per channel, in fixed order: RMS, peak, crest factor,
//! variance, skewness, excess kurtosis, spectral centroid, normalized
//! spectral entropy, and five octave-band energy ratios. The bands come from
//! recursive half-band splitting of the spectrum down from Nyquist (at
//! 48 kHz: 0-1.5, 1.5-3, 3-6, 6-12 and 12-24 kHz), standing in for a
//! wavelet-style energy decomposition. The same feature set feeds both the
//! hybrid classifier's handcrafted branch and the feature-MLP baseline.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Result, WeldmonError};

/// Features produced by [`extract_features`], in output order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "rms",
    "peak",
    "crest_factor",
    "variance",
    "skewness",
    "excess_kurtosis",
    "spectral_centroid_hz",
    "spectral_entropy",
    "band_ratio_0",
    "band_ratio_1",
    "band_ratio_2",
    "band_ratio_3",
    "band_ratio_4",
];

pub const FEATURE_COUNT: usize = 13;
const N_BANDS: usize = 5;
const MIN_INPUT_LEN: usize = 64;
const MAX_SPECTRUM_WINDOW: usize = 1024;

/// Octave band edges for `sample_rate`: recursive halving down from Nyquist.
/// Returns `N_BANDS + 1` ascending edges starting at 0.
pub fn band_edges_hz(sample_rate: f64) -> [f64; N_BANDS + 1] {
    let nyquist = sample_rate / 2.0;
    let mut edges = [0.0; N_BANDS + 1];
    edges[N_BANDS] = nyquist;
    for i in (1..N_BANDS).rev() {
        edges[i] = edges[i + 1] / 2.0;
    }
    edges
}

/// Mean magnitude spectrum over non-overlapping Hann windows. The window is
/// the largest power of two not exceeding `MAX_SPECTRUM_WINDOW` or the input
/// length, so short inputs still produce a usable spectrum.
fn mean_magnitude_spectrum(samples: &[f64]) -> (Vec<f64>, usize) {
    let window_len = MAX_SPECTRUM_WINDOW.min(samples.len().next_power_of_two() / 2).max(
        // next_power_of_two()/2 underestimates when len is itself a power of two
        if samples.len().is_power_of_two() { samples.len().min(MAX_SPECTRUM_WINDOW) } else { 1 },
    );
    let hann: Vec<f64> = (0..window_len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / window_len as f64).cos()))
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(window_len);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    let mut frame = vec![Complex::default(); window_len];

    let n_bins = window_len / 2 + 1;
    let mut mean = vec![0.0f64; n_bins];
    let n_chunks = samples.len() / window_len;
    for chunk in 0..n_chunks {
        let start = chunk * window_len;
        for (j, slot) in frame.iter_mut().enumerate() {
            *slot = Complex::new(samples[start + j] * hann[j], 0.0);
        }
        fft.process_with_scratch(&mut frame, &mut scratch);
        for (bin, value) in frame[..n_bins].iter().enumerate() {
            mean[bin] += value.norm();
        }
    }
    for v in mean.iter_mut() {
        *v /= n_chunks as f64;
    }
    (mean, window_len)
}

/// Extracts the 13 features from one channel. Degenerate inputs (all zero,
/// constant) produce defined fallbacks, never NaN.
pub fn extract_features(samples: &[f64], sample_rate: f64) -> Result<[f64; FEATURE_COUNT]> {
    if samples.len() < MIN_INPUT_LEN {
        return Err(WeldmonError::InputTooShort(format!(
            "{} samples < minimum {MIN_INPUT_LEN}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;

    let mean = samples.iter().sum::<f64>() / n;
    let rms = (samples.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let peak = samples.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let crest = if rms > 0.0 { peak / rms } else { 0.0 };

    let (mut m2, mut m3, mut m4) = (0.0f64, 0.0f64, 0.0f64);
    for &v in samples {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // Constant inputs leave rounding residue in m2 that would explode the
    // standardized moments; clamp it to an exact zero.
    if m2 <= mean * mean * 1e-20 {
        m2 = 0.0;
    }
    let variance = m2;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };

    let (spectrum, window_len) = mean_magnitude_spectrum(samples);
    let bin_hz = sample_rate / window_len as f64;
    let mag_total: f64 = spectrum.iter().sum();
    let centroid = if mag_total > 0.0 {
        spectrum
            .iter()
            .enumerate()
            .map(|(bin, &m)| bin as f64 * bin_hz * m)
            .sum::<f64>()
            / mag_total
    } else {
        0.0
    };

    let power: Vec<f64> = spectrum.iter().map(|m| m * m).collect();
    let power_total: f64 = power.iter().sum();
    let entropy = if power_total > 0.0 {
        let h: f64 = power
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| {
                let q = p / power_total;
                -q * q.ln()
            })
            .sum();
        h / (power.len() as f64).ln()
    } else {
        0.0
    };

    let edges = band_edges_hz(sample_rate);
    let mut bands = [0.0f64; N_BANDS];
    for (bin, &p) in power.iter().enumerate() {
        let f = bin as f64 * bin_hz;
        for b in 0..N_BANDS {
            let upper_inclusive = b == N_BANDS - 1;
            if f >= edges[b] && (f < edges[b + 1] || (upper_inclusive && f <= edges[b + 1])) {
                bands[b] += p;
                break;
            }
        }
    }
    if power_total > 0.0 {
        for b in bands.iter_mut() {
            *b /= power_total;
        }
    } else {
        bands = [1.0 / N_BANDS as f64; N_BANDS];
    }

    Ok([
        rms, peak, crest, variance, skewness, kurtosis, centroid, entropy, bands[0], bands[1],
        bands[2], bands[3], bands[4],
    ])
}

/// Per-feature z-score statistics fitted on training data only.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Fits per-feature mean and (population) standard deviation.
pub fn fit_normalizer(train_features: &[Vec<f64>]) -> Result<Normalizer> {
    if train_features.len() < 2 {
        return Err(WeldmonError::TooFewSamples(format!(
            "normalizer needs >= 2 samples, got {}",
            train_features.len()
        )));
    }
    let dim = train_features[0].len();
    if train_features.iter().any(|f| f.len() != dim) {
        return Err(WeldmonError::ShapeMismatch("feature vectors differ in length".into()));
    }
    let n = train_features.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for f in train_features {
        for (m, &v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut std = vec![0.0f64; dim];
    for f in train_features {
        for ((s, &v), &m) in std.iter_mut().zip(f).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n).sqrt();
    }
    Ok(Normalizer { mean, std })
}

/// Standardizes one feature vector; zero-std features pass through unscaled.
pub fn apply_normalizer(stats: &Normalizer, features: &[f64]) -> Result<Vec<f64>> {
    if features.len() != stats.mean.len() {
        return Err(WeldmonError::ShapeMismatch(format!(
            "feature vector has {} entries, normalizer expects {}",
            features.len(),
            stats.mean.len()
        )));
    }
    Ok(features
        .iter()
        .zip(stats.mean.iter().zip(&stats.std))
        .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { v - m })
        .collect())
}
