//! Synthetic subjects with planted signal regimes.
//!
//! Non-seizure time alternates between blocks of the non-seizure modes,
//! drawn with the modes' weights; seizure `i` uses seizure mode
//! `i % n_seizure_modes`. Each seizure gets its own recording, laid out as
//! non-seizure background, the seizure, and a short tail.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::MAX_CHUNK_SECONDS;
use super::{AnnotationRow, Recording, EXCLUSION_BEFORE_SECONDS};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Spectral and amplitude signature of one regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalMode {
    pub name: String,
    /// Dominant oscillation, Hz.
    pub freq_hz: f64,
    /// Oscillation amplitude, µV.
    pub amplitude: f64,
    /// Relative amplitude of the second harmonic.
    #[serde(default)]
    pub harmonic: f64,
    /// Standard deviation of the correlated background noise, µV.
    pub noise: f64,
    /// Relative share of non-seizure time (ignored for seizure modes).
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

impl SignalMode {
    pub fn new(name: &str, freq_hz: f64, amplitude: f64, harmonic: f64, noise: f64, weight: f64) -> Self {
        Self {
            name: name.into(),
            freq_hz,
            amplitude,
            harmonic,
            noise,
            weight,
        }
    }

    /// Built-in non-seizure regimes, most common first.
    pub fn nonseizure_palette() -> Vec<SignalMode> {
        vec![
            SignalMode::new("alpha", 10.0, 20.0, 0.0, 8.0, 0.6),
            SignalMode::new("theta", 6.0, 35.0, 0.2, 8.0, 0.25),
            SignalMode::new("beta", 18.0, 45.0, 0.0, 12.0, 0.15),
            SignalMode::new("delta-sleep", 1.5, 60.0, 0.0, 10.0, 0.1),
        ]
    }

    /// Built-in seizure regimes.
    pub fn seizure_palette() -> Vec<SignalMode> {
        vec![
            SignalMode::new("spike-wave", 3.0, 120.0, 0.6, 10.0, 1.0),
            SignalMode::new("fast", 24.0, 60.0, 0.1, 12.0, 1.0),
            SignalMode::new("rhythmic-theta", 5.0, 90.0, 0.3, 10.0, 1.0),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSubjectConfig {
    pub subject: String,
    pub n_channels: usize,
    pub fs: f64,
    pub n_seizures: usize,
    /// Non-seizure to seizure ratio the recordings must support.
    pub factor: u32,
    pub seizure_seconds: (f64, f64),
    /// Duration range of one non-seizure mode block.
    pub block_seconds: (f64, f64),
    pub nonseizure_modes: Vec<SignalMode>,
    pub seizure_modes: Vec<SignalMode>,
    pub seed: u64,
}

impl SyntheticSubjectConfig {
    /// Config using the first modes of the built-in palettes.
    pub fn with_modes(
        subject: &str,
        n_nonseizure_modes: usize,
        n_seizure_modes: usize,
        factor: u32,
        n_seizures: usize,
        seed: u64,
    ) -> Result<Self> {
        let ns = SignalMode::nonseizure_palette();
        let sz = SignalMode::seizure_palette();
        if n_nonseizure_modes == 0
            || n_nonseizure_modes > ns.len()
            || n_seizure_modes == 0
            || n_seizure_modes > sz.len()
        {
            return Err(Error::Config(format!(
                "mode counts must be in 1..={} (non-seizure) and 1..={} (seizure)",
                ns.len(),
                sz.len()
            )));
        }
        let cfg = Self {
            subject: subject.into(),
            n_channels: 4,
            fs: 128.0,
            n_seizures,
            factor,
            seizure_seconds: (30.0, 50.0),
            block_seconds: (20.0, 60.0),
            nonseizure_modes: ns[..n_nonseizure_modes].to_vec(),
            seizure_modes: sz[..n_seizure_modes].to_vec(),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic subject {}: {m}", self.subject)));
        if self.n_channels == 0 || self.n_seizures == 0 || self.factor == 0 {
            return bad("channels, seizures and factor must be positive");
        }
        if !(self.fs > 0.0) {
            return bad("sampling rate must be positive");
        }
        if self.nonseizure_modes.is_empty() || self.seizure_modes.is_empty() {
            return bad("at least one mode per class is required");
        }
        let (a, b) = self.seizure_seconds;
        let (c, d) = self.block_seconds;
        if !(a > 0.0 && a <= b && c > 0.0 && c <= d) {
            return bad("duration ranges must be positive and ordered");
        }
        if self.nonseizure_modes.iter().any(|m| !(m.weight > 0.0)) {
            return bad("non-seizure mode weights must be positive");
        }
        for m in self.nonseizure_modes.iter().chain(&self.seizure_modes) {
            if !(m.freq_hz > 0.0 && m.freq_hz < self.fs / 2.0) {
                return bad("mode frequency must lie below the Nyquist rate");
            }
        }
        Ok(())
    }
}

/// Generated recordings plus exact annotations.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSubject {
    pub recordings: Vec<Recording>,
    pub annotations: Vec<AnnotationRow>,
    /// Mode name for every second of every recording, for diagnostics.
    pub mode_timeline: Vec<Vec<String>>,
}

struct Generator<'a> {
    cfg: &'a SyntheticSubjectConfig,
    rng: ChaCha8Rng,
    gains: Vec<f64>,
    phases: Vec<f64>,
    noise: Vec<f64>,
}

impl Generator<'_> {
    const AR: f64 = 0.95;

    fn gauss(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Appends `n` samples of `mode` to every channel.
    fn emit(&mut self, mode: &SignalMode, n: usize, out: &mut [Vec<f64>]) {
        let fs = self.cfg.fs;
        let f = mode.freq_hz * (1.0 + 0.03 * self.gauss());
        let innov = (1.0 - Self::AR * Self::AR).sqrt();
        for (c, ch) in out.iter_mut().enumerate() {
            let phase2 = self.rng.random_range(0.0..2.0 * PI);
            for _ in 0..n {
                let t = ch.len() as f64 / fs;
                let arg = 2.0 * PI * f * t + self.phases[c];
                let osc = arg.sin() + mode.harmonic * (2.0 * arg + phase2).sin();
                self.noise[c] = Self::AR * self.noise[c] + innov * self.gauss();
                ch.push(self.gains[c] * mode.amplitude * osc + mode.noise * self.noise[c]);
            }
        }
    }

    fn pick_nonseizure(&mut self) -> usize {
        let total: f64 = self.cfg.nonseizure_modes.iter().map(|m| m.weight).sum();
        let mut u = self.rng.random_range(0.0..total);
        for (i, m) in self.cfg.nonseizure_modes.iter().enumerate() {
            if u < m.weight {
                return i;
            }
            u -= m.weight;
        }
        self.cfg.nonseizure_modes.len() - 1
    }

    fn background(&mut self, seconds: usize, out: &mut [Vec<f64>], timeline: &mut Vec<String>) {
        let mut left = seconds;
        while left > 0 {
            let (lo, hi) = self.cfg.block_seconds;
            let block = (self.rng.random_range(lo..=hi).round() as usize).clamp(1, left);
            let m = self.pick_nonseizure();
            let mode = self.cfg.nonseizure_modes[m].clone();
            self.emit(&mode, block * self.cfg.fs as usize, out);
            timeline.extend(std::iter::repeat_n(mode.name.clone(), block));
            left -= block;
        }
    }
}

/// Generates one recording per seizure. Deterministic in `cfg.seed`.
pub fn generate_synthetic_subject(cfg: &SyntheticSubjectConfig) -> Result<SyntheticSubject> {
    cfg.validate()?;
    if cfg.fs.fract() != 0.0 {
        return Err(Error::Config("synthetic sampling rate must be a whole number".into()));
    }
    let channels: Vec<String> = (0..cfg.n_channels).map(|c| format!("SYN{:02}", c + 1)).collect();
    let mut recordings = Vec::with_capacity(cfg.n_seizures);
    let mut annotations = Vec::with_capacity(cfg.n_seizures);
    let mut timelines = Vec::with_capacity(cfg.n_seizures);
    for i in 0..cfg.n_seizures {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[&cfg.subject, "synth", &i.to_string()]));
        let gains = (0..cfg.n_channels).map(|_| rng.random_range(0.8..1.2)).collect();
        let phases = (0..cfg.n_channels).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let mut g = Generator {
            cfg,
            rng,
            gains,
            phases,
            noise: vec![0.0; cfg.n_channels],
        };
        let (lo, hi) = cfg.seizure_seconds;
        let seizure = g.rng.random_range(lo..=hi).round().max(1.0) as usize;
        // twice the budget plus one maximal chunk, so random chunk placement
        // across recordings cannot run out of room; then the pre-onset buffer
        let pre = (cfg.factor as f64 * seizure as f64 * 2.0).ceil() as usize
            + MAX_CHUNK_SECONDS as usize
            + EXCLUSION_BEFORE_SECONDS as usize;
        let tail = 10;

        let mut samples = vec![Vec::new(); cfg.n_channels];
        let mut timeline = Vec::new();
        g.background(pre, &mut samples, &mut timeline);
        let mode = cfg.seizure_modes[i % cfg.seizure_modes.len()].clone();
        g.emit(&mode, seizure * cfg.fs as usize, &mut samples);
        timeline.extend(std::iter::repeat_n(mode.name.clone(), seizure));
        g.background(tail, &mut samples, &mut timeline);

        let name = format!("{}_{:02}", cfg.subject, i + 1);
        recordings.push(Recording::new(&cfg.subject, &name, channels.clone(), cfg.fs, samples)?);
        annotations.push(AnnotationRow {
            subject: cfg.subject.clone(),
            recording: name,
            onset: pre as f64,
            offset: (pre + seizure) as f64,
        });
        timelines.push(timeline);
    }
    Ok(SyntheticSubject {
        recordings,
        annotations,
        mode_timeline: timelines,
    })
}
