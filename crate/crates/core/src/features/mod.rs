//! Per-window, per-channel feature extraction.
//!
//! Every channel yields [`N_FEATURES`] values in a fixed order:
//!
//! | index | feature |
//! |-------|---------|
//! | 0 | mean absolute amplitude |
//! | 1-2 | sample entropy, m = 2, 3 |
//! | 3-17 | permutation entropy, order 3..=7 x delay 1..=3 (order-major) |
//! | 18 | Shannon entropy of a 20-bin amplitude histogram |
//! | 19-23 | Renyi entropy, alpha = 0.5, 2, 3, 4, 5 |
//! | 24-28 | Tsallis entropy, q = 0.5, 2, 3, 4, 5 |
//! | 29-31 | Shannon, Renyi(2), Tsallis(2) of the 6-band power distribution |
//! | 32-33 | approximate entropy, m = 2, 3 |
//! | 34 | SVD entropy |
//! | 35 | normalized spectral entropy |
//! | 36 | Fisher information |
//! | 37 | Katz fractal dimension |
//! | 38-43 | relative power: low, delta, theta, alpha, beta, gamma |
//! | 44 | total power in 0-45 Hz |
//! | 45 | 90 % spectral edge frequency |

pub mod calibration;
pub mod entropy;
pub mod spectral;

use serde::Serialize;

use crate::error::{Error, Result};

pub use calibration::{Calibration, DiscretizedFeatures};
pub use spectral::{frequency_bank, welch_psd, FrequencyBank, Psd};

/// Features per channel.
pub const N_FEATURES: usize = 46;
/// Entries of the entropy bank.
pub const N_ENTROPY: usize = 37;
/// Entries of the frequency bank.
pub const N_FREQUENCY: usize = 8;

/// Default window length in seconds.
pub const DEFAULT_WINDOW_SECONDS: f64 = 8.0;
/// Default window step in seconds.
pub const DEFAULT_STEP_SECONDS: f64 = 1.0;
/// Default sampling rate in Hz.
pub const DEFAULT_FS: f64 = 256.0;

/// Ordered feature names, matching the column order of [`FeatureMatrix`].
pub fn feature_names() -> Vec<String> {
    let mut names = vec!["mean_amplitude".to_string()];
    for m in entropy::SAMPLE_ENTROPY_ORDERS {
        names.push(format!("sample_entropy_m{m}"));
    }
    for order in entropy::PERMUTATION_ORDERS {
        for delay in entropy::PERMUTATION_DELAYS {
            names.push(format!("permutation_entropy_o{order}_d{delay}"));
        }
    }
    names.push("shannon_hist".into());
    for a in entropy::RENYI_ALPHAS {
        names.push(format!("renyi_hist_a{a}"));
    }
    for q in entropy::TSALLIS_QS {
        names.push(format!("tsallis_hist_q{q}"));
    }
    names.push("shannon_bands".into());
    names.push("renyi_bands_a2".into());
    names.push("tsallis_bands_q2".into());
    for m in entropy::SAMPLE_ENTROPY_ORDERS {
        names.push(format!("approximate_entropy_m{m}"));
    }
    names.push("svd_entropy".into());
    names.push("spectral_entropy".into());
    names.push("fisher_information".into());
    names.push("katz_fd".into());
    for b in spectral::BAND_NAMES {
        names.push(format!("rel_power_{b}"));
    }
    names.push("total_power".into());
    names.push("spectral_edge_90".into());
    names
}

/// Multi-channel window of samples, channel-major.
#[derive(Clone, Copy, Debug)]
pub struct SignalWindow<'a> {
    pub channels: &'a [Vec<f64>],
    pub start: usize,
    pub len: usize,
    pub fs: f64,
}

impl<'a> SignalWindow<'a> {
    pub fn channel(&self, c: usize) -> &'a [f64] {
        &self.channels[c][self.start..self.start + self.len]
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }
}

/// Feature values of one window, `[channel][feature]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<[f64; N_FEATURES]>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<[f64; N_FEATURES]>) -> Result<Self> {
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Usage("feature values must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn n_channels(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, channel: usize, feature: usize) -> f64 {
        self.values[channel][feature]
    }

    pub fn channel(&self, channel: usize) -> &[f64; N_FEATURES] {
        &self.values[channel]
    }

    pub fn rows(&self) -> &[[f64; N_FEATURES]] {
        &self.values
    }
}

/// The 37-value entropy bank of one channel.
pub fn entropy_bank(x: &[f64], fs: f64) -> Result<[f64; N_ENTROPY]> {
    if x.is_empty() {
        return Err(Error::Usage("entropy bank of an empty window".into()));
    }
    let psd = welch_psd(x, fs)?;
    let bank = spectral::frequency_bank_from_psd(&psd);
    Ok(entropy_bank_with_psd(x, &psd, &bank))
}

fn entropy_bank_with_psd(x: &[f64], psd: &Psd, bank: &FrequencyBank) -> [f64; N_ENTROPY] {
    let mut out = [0.0; N_ENTROPY];
    let mut k = 0;
    let mut push = |v: f64| {
        out[k] = v;
        k += 1;
    };
    let (sampen, apen) = entropy::template_entropies(x);
    sampen.into_iter().for_each(&mut push);
    for order in entropy::PERMUTATION_ORDERS {
        for delay in entropy::PERMUTATION_DELAYS {
            push(entropy::permutation_entropy(x, order, delay));
        }
    }
    let hist = entropy::amplitude_histogram(x, entropy::HISTOGRAM_BINS);
    push(entropy::shannon(&hist));
    for a in entropy::RENYI_ALPHAS {
        push(entropy::renyi(&hist, a));
    }
    for q in entropy::TSALLIS_QS {
        push(entropy::tsallis(&hist, q));
    }
    push(entropy::shannon(&bank.relative));
    push(entropy::renyi(&bank.relative, 2.0));
    push(entropy::tsallis(&bank.relative, 2.0));
    apen.into_iter().for_each(&mut push);
    push(entropy::svd_entropy(x));
    push(entropy::spectral_entropy(&psd.density));
    push(entropy::fisher_information(x));
    push(entropy::katz_fd(x));
    debug_assert_eq!(k, N_ENTROPY);
    out
}

/// All 46 features of one channel.
pub fn channel_features(x: &[f64], fs: f64) -> Result<[f64; N_FEATURES]> {
    if x.is_empty() {
        return Err(Error::Usage("feature extraction on an empty window".into()));
    }
    let psd = welch_psd(x, fs)?;
    let bank = spectral::frequency_bank_from_psd(&psd);
    let entropies = entropy_bank_with_psd(x, &psd, &bank);
    let mut out = [0.0; N_FEATURES];
    out[0] = x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
    out[1..1 + N_ENTROPY].copy_from_slice(&entropies);
    out[1 + N_ENTROPY..].copy_from_slice(&bank.to_array());
    Ok(out)
}

/// Extracts the feature matrix of a window of `expected_len` samples.
pub fn extract_window_features(w: &SignalWindow<'_>, expected_len: usize) -> Result<FeatureMatrix> {
    if w.fs < 2.0 * spectral::MAX_FREQ_HZ {
        return Err(Error::Config(format!(
            "sampling rate {} Hz cannot resolve the {} Hz band edge",
            w.fs,
            spectral::MAX_FREQ_HZ
        )));
    }
    if w.len < expected_len || w.channels.iter().any(|c| c.len() < w.start + w.len) {
        return Err(Error::Ingest(format!(
            "window has {} samples, expected {expected_len}",
            w.len
        )));
    }
    let rows = (0..w.n_channels())
        .map(|c| channel_features(w.channel(c), w.fs))
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(rows)
}

/// Reproducibility manifest of the feature bank.
#[derive(Clone, Debug, Serialize)]
pub struct FeatureManifest {
    pub n_features: usize,
    pub names: Vec<String>,
    pub welch_segment_seconds: f64,
    pub welch_overlap: f64,
    pub welch_window: &'static str,
    pub bands_hz: Vec<(f64, f64)>,
    pub histogram_bins: usize,
    pub tolerance_factor: f64,
    pub window_seconds: f64,
    pub step_seconds: f64,
    pub levels: usize,
    pub calibration_percentiles: (f64, f64),
}

impl FeatureManifest {
    pub fn new(window_seconds: f64, step_seconds: f64, levels: usize) -> Self {
        Self {
            n_features: N_FEATURES,
            names: feature_names(),
            welch_segment_seconds: spectral::SEGMENT_SECONDS,
            welch_overlap: 0.5,
            welch_window: "hann",
            bands_hz: spectral::BANDS.to_vec(),
            histogram_bins: entropy::HISTOGRAM_BINS,
            tolerance_factor: entropy::R_FACTOR,
            window_seconds,
            step_seconds,
            levels,
            calibration_percentiles: (calibration::LOWER_PERCENTILE, calibration::UPPER_PERCENTILE),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
