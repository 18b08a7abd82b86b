//! Welch power spectral density and the frequency-domain feature bank.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Welch segment length in seconds.
pub const SEGMENT_SECONDS: f64 = 2.0;

/// Upper edge of the analysed band (gamma upper edge).
pub const MAX_FREQ_HZ: f64 = 45.0;

/// Band edges in Hz, in feature order: low, delta, theta, alpha, beta, gamma.
pub const BANDS: [(f64, f64); 6] = [
    (0.0, 0.5),
    (0.5, 4.0),
    (4.0, 8.0),
    (8.0, 12.0),
    (12.0, 30.0),
    (30.0, 45.0),
];

pub const BAND_NAMES: [&str; 6] = ["low", "delta", "theta", "alpha", "beta", "gamma"];

/// One-sided power spectral density.
#[derive(Clone, Debug)]
pub struct Psd {
    /// Bin centre frequencies in Hz.
    pub freqs: Vec<f64>,
    /// Power density per bin (signal units squared per Hz).
    pub density: Vec<f64>,
    /// Bin spacing in Hz.
    pub resolution: f64,
}

impl Psd {
    /// Integral of the density over all bins.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution
    }

    /// Integral over bins with `lo <= f < hi` (or `f <= hi` when `inclusive_hi`).
    pub fn band_power(&self, lo: f64, hi: f64, inclusive_hi: bool) -> f64 {
        self.freqs
            .iter()
            .zip(&self.density)
            .filter(|(&f, _)| f >= lo && (f < hi || (inclusive_hi && f <= hi)))
            .map(|(_, &p)| p)
            .sum::<f64>()
            * self.resolution
    }
}

/// Welch estimate with Hann-windowed segments of `SEGMENT_SECONDS` and 50 % overlap.
///
/// Each segment is mean-detrended. Signals shorter than one segment use a
/// single segment spanning the whole signal.
pub fn welch_psd(x: &[f64], fs: f64) -> Result<Psd> {
    if x.is_empty() {
        return Err(Error::Usage("empty signal".into()));
    }
    if fs <= 0.0 {
        return Err(Error::Usage(format!("invalid sampling rate {fs}")));
    }
    let nseg = ((SEGMENT_SECONDS * fs).round() as usize).clamp(1, x.len());
    let step = (nseg / 2).max(1);
    let window: Vec<f64> = if nseg == 1 {
        vec![1.0]
    } else {
        // periodic Hann, matching common PSD tooling
        (0..nseg)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nseg as f64).cos())
            .collect()
    };
    let win_power: f64 = window.iter().map(|w| w * w).sum();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nseg);
    let nbins = nseg / 2 + 1;
    let mut acc = vec![0.0; nbins];
    let mut buf = vec![Complex::new(0.0, 0.0); nseg];
    let mut segments = 0usize;
    let mut start = 0;
    while start + nseg <= x.len() {
        let seg = &x[start..start + nseg];
        let mean = seg.iter().sum::<f64>() / nseg as f64;
        for (b, (&s, &w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new((s - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let scale = 1.0 / (fs * win_power * segments as f64);
    let density: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || (nseg.is_multiple_of(2) && k == nseg / 2) {
                1.0
            } else {
                2.0
            };
            p * scale * one_sided
        })
        .collect();
    let resolution = fs / nseg as f64;
    let freqs = (0..nbins).map(|k| k as f64 * resolution).collect();
    Ok(Psd {
        freqs,
        density,
        resolution,
    })
}

/// Frequency-domain features of one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyBank {
    /// Band power over total power in [0, 45] Hz, ordered as [`BANDS`].
    pub relative: [f64; 6],
    /// Power in [0, 45] Hz.
    pub total_power: f64,
    /// Frequency below which 90 % of the [0, 45] Hz power lies.
    pub spectral_edge: f64,
}

impl FrequencyBank {
    pub fn to_array(&self) -> [f64; 8] {
        let r = &self.relative;
        [r[0], r[1], r[2], r[3], r[4], r[5], self.total_power, self.spectral_edge]
    }
}

pub(crate) fn frequency_bank_from_psd(psd: &Psd) -> FrequencyBank {
    let powers: Vec<f64> = BANDS
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| psd.band_power(lo, hi, i == BANDS.len() - 1))
        .collect();
    let total: f64 = powers.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return FrequencyBank {
            relative: [1.0 / 6.0; 6],
            total_power: 0.0,
            spectral_edge: 0.0,
        };
    }
    let mut relative = [0.0; 6];
    for (r, p) in relative.iter_mut().zip(&powers) {
        *r = p / total;
    }
    let target = 0.9 * total;
    let mut cumulative = 0.0;
    let mut spectral_edge = MAX_FREQ_HZ;
    for (&f, &p) in psd.freqs.iter().zip(&psd.density) {
        if f > MAX_FREQ_HZ {
            break;
        }
        cumulative += p * psd.resolution;
        if cumulative >= target {
            spectral_edge = f;
            break;
        }
    }
    FrequencyBank {
        relative,
        total_power: total,
        spectral_edge,
    }
}

/// Six relative band powers, total power and the 90 % spectral edge.
pub fn frequency_bank(x: &[f64], fs: f64) -> Result<FrequencyBank> {
    if fs < 2.0 * MAX_FREQ_HZ {
        return Err(Error::Config(format!(
            "sampling rate {fs} Hz cannot resolve the {MAX_FREQ_HZ} Hz band edge"
        )));
    }
    Ok(frequency_bank_from_psd(&welch_psd(x, fs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sine(freq: f64, fs: f64, seconds: f64) -> Vec<f64> {
        let n = (fs * seconds) as usize;
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn relative_powers_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..2048).map(|_| normal.sample(&mut rng)).collect();
        let bank = frequency_bank(&x, 256.0).unwrap();
        assert!((bank.relative.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(bank.total_power > 0.0);
    }

    #[test]
    fn delta_dominates_two_hz_sine() {
        let bank = frequency_bank(&sine(2.0, 256.0, 8.0), 256.0).unwrap();
        assert!(bank.relative[1] > 0.9, "{:?}", bank.relative);
    }

    #[test]
    fn alpha_dominates_ten_hz_sine() {
        let bank = frequency_bank(&sine(10.0, 256.0, 8.0), 256.0).unwrap();
        let max = bank.relative.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(bank.relative[3], max);
        assert!(bank.spectral_edge >= 9.0 && bank.spectral_edge <= 11.0);
    }

    #[test]
    fn zero_signal_degenerate_convention() {
        let bank = frequency_bank(&vec![0.0; 2048], 256.0).unwrap();
        assert_eq!(bank.relative, [1.0 / 6.0; 6]);
        assert_eq!(bank.total_power, 0.0);
    }

    #[test]
    fn low_sampling_rate_rejected() {
        assert!(frequency_bank(&[0.0; 100], 64.0).is_err());
    }

    #[test]
    fn welch_power_matches_variance_on_white_noise() {
        let normal = Normal::new(0.0, 3.0).unwrap();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..2048).map(|_| normal.sample(&mut rng)).collect();
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
            let p = welch_psd(&x, 256.0).unwrap().total_power();
            assert!((p - var).abs() / var < 0.10, "seed {seed}: {p} vs {var}");
        }
    }
}
