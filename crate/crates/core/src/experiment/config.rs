//! Experiment configuration (TOML).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DEFAULT_STEP_SECONDS, DEFAULT_WINDOW_SECONDS};
use crate::hdcore::{DEFAULT_DIM, DEFAULT_LEVELS};
use crate::inference::Smoothing;
use crate::ingest::SyntheticSubjectConfig;
use crate::reduction::{ReductionConfig, ReductionStrategy};

/// Model variants compared by the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "2C")]
    TwoClass,
    #[serde(rename = "MC")]
    MultiCentroid,
    #[serde(rename = "MCr")]
    Removal,
    #[serde(rename = "MCc")]
    Clustering,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::TwoClass,
        Variant::MultiCentroid,
        Variant::Removal,
        Variant::Clustering,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::TwoClass => "2C",
            Variant::MultiCentroid => "MC",
            Variant::Removal => "MCr",
            Variant::Clustering => "MCc",
        }
    }

    pub fn reduction(self) -> Option<ReductionStrategy> {
        match self {
            Variant::Removal => Some(ReductionStrategy::Removal),
            Variant::Clustering => Some(ReductionStrategy::Clustering),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?} (expected 2C, MC, MCr or MCc)")))
    }
}

/// Where subject files come from. Exactly one source must be set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Dataset manifest written by `prepare`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    /// Directory with one sub-directory of `.edf`/text recordings per subject.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recordings: Option<PathBuf>,
    /// Seizure annotation CSV for `recordings`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<PathBuf>,
    /// `"canonical"` for the built-in 18-channel montage, a path to a montage
    /// file, or absent to keep every channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montage: Option<String>,
    /// Synthetic subjects generated in memory.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synthetic: Vec<SyntheticSubjectConfig>,
    /// Restrict to these subjects (all when empty).
    #[serde(default)]
    pub subjects: Vec<String>,
    /// Non-seizure to seizure ratio: 1, 5 or 10.
    #[serde(default = "default_factor")]
    pub factor: u32,
}

fn default_factor() -> u32 {
    10
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            recordings: None,
            annotations: None,
            montage: None,
            synthetic: Vec::new(),
            subjects: Vec::new(),
            factor: default_factor(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    pub dim: usize,
    pub levels: usize,
    pub window_seconds: f64,
    pub step_seconds: f64,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            levels: DEFAULT_LEVELS,
            window_seconds: DEFAULT_WINDOW_SECONDS,
            step_seconds: DEFAULT_STEP_SECONDS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionSettings {
    pub step_fraction: f64,
    pub tolerance: f64,
}

impl Default for ReductionSettings {
    fn default() -> Self {
        let d = ReductionConfig::new(ReductionStrategy::Removal);
        Self {
            step_fraction: d.step_fraction,
            tolerance: d.tolerance,
        }
    }
}

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Output directory for reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
    /// Write every trained model next to the report.
    #[serde(default)]
    pub save_models: bool,
    /// Extra normalized distance a wrong-label prototype must win by before
    /// a new sub-class is founded.
    #[serde(default)]
    pub margin: f64,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub encoding: EncodingConfig,
    #[serde(default)]
    pub smoothing: Smoothing,
    #[serde(default)]
    pub reduction: ReductionSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            variants: default_variants(),
            output: None,
            threads: 0,
            save_models: false,
            margin: 0.0,
            data: DataConfig::default(),
            encoding: EncodingConfig::default(),
            smoothing: Smoothing::default(),
            reduction: ReductionSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative data paths are resolved against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut cfg.data.manifest);
        fix(&mut cfg.data.recordings);
        fix(&mut cfg.data.annotations);
        fix(&mut cfg.output);
        if let Some(m) = &cfg.data.montage {
            if m != "canonical" && Path::new(m).is_relative() {
                cfg.data.montage = Some(base.join(m).to_string_lossy().into_owned());
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn reduction_config(&self, strategy: ReductionStrategy) -> ReductionConfig {
        ReductionConfig {
            step_fraction: self.reduction.step_fraction,
            tolerance: self.reduction.tolerance,
            strategy,
            smoothing: self.smoothing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let e = &self.encoding;
        if e.dim < 64 || !e.dim.is_multiple_of(64) {
            return bad(format!("dim must be a positive multiple of 64, got {}", e.dim));
        }
        if e.levels < 2 || e.dim < 2 * (e.levels - 1) {
            return bad(format!("levels must be in 2..={} for dim {}", e.dim / 2 + 1, e.dim));
        }
        if !(e.window_seconds > 0.0 && e.step_seconds > 0.0 && e.step_seconds <= e.window_seconds) {
            return bad("window and step must be positive with step <= window".into());
        }
        if self.smoothing.window == 0 || self.smoothing.window.is_multiple_of(2) {
            return bad(format!("smoothing window must be odd, got {}", self.smoothing.window));
        }
        if self.variants.is_empty() {
            return bad("at least one variant is required".into());
        }
        let mut v = self.variants.clone();
        v.sort();
        v.dedup();
        if v.len() != self.variants.len() {
            return bad("variants must not repeat".into());
        }
        if !(self.margin >= 0.0 && self.margin < 1.0) {
            return bad(format!("margin must be in [0, 1), got {}", self.margin));
        }
        self.reduction_config(ReductionStrategy::Removal).validate()?;
        let d = &self.data;
        if ![1, 5, 10].contains(&d.factor) {
            return bad(format!("factor must be 1, 5 or 10, got {}", d.factor));
        }
        let sources = usize::from(d.manifest.is_some())
            + usize::from(d.recordings.is_some())
            + usize::from(!d.synthetic.is_empty());
        if sources != 1 {
            return bad("set exactly one of data.manifest, data.recordings or data.synthetic".into());
        }
        if d.recordings.is_some() && d.annotations.is_none() {
            return bad("data.recordings requires data.annotations".into());
        }
        for s in &d.synthetic {
            s.validate()?;
            if s.factor < d.factor {
                return bad(format!(
                    "synthetic subject {} is generated for factor {} but data.factor is {}",
                    s.subject, s.factor, d.factor
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
variants = ["2C", "MC"]

[data]
manifest = "data/manifest.json"
factor = 5

[encoding]
dim = 1024
levels = 10
window_seconds = 8
step_seconds = 1

[smoothing]
window = 5
mode = "centered"
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.variants, vec![Variant::TwoClass, Variant::MultiCentroid]);
        assert_eq!(cfg.data.factor, 5);
        assert_eq!(cfg.encoding.dim, 1024);
        assert_eq!(cfg.reduction, ReductionSettings::default());
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_invalid() {
        let with = |from: &str, to: &str| ExperimentConfig::from_toml(&MINIMAL.replace(from, to));
        assert!(with("dim = 1024", "dim = 1000").is_err());
        assert!(with("factor = 5", "factor = 3").is_err());
        assert!(with("window = 5", "window = 4").is_err());
        assert!(with("\"2C\", \"MC\"", "\"2C\", \"2C\"").is_err());
        assert!(with("\"2C\", \"MC\"", "\"3C\"").is_err());
        assert!(with("seed = 7", "seed = 7\nbogus = 1").is_err());
        assert!(with("manifest = \"data/manifest.json\"", "").is_err());
    }

    #[test]
    fn synthetic_factor_covers_data_factor() {
        let mut cfg = ExperimentConfig::default();
        cfg.data.synthetic = vec![crate::ingest::SyntheticSubjectConfig::with_modes("s", 1, 1, 5, 2, 0).unwrap()];
        assert!(cfg.validate().is_err());
        cfg.data.factor = 5;
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_sections_use_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "[data]\nmanifest = \"m.json\"\n[encoding]\ndim = 2048\n[smoothing]\nwindow = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.encoding.dim, 2048);
        assert_eq!(cfg.encoding.levels, 20);
        assert_eq!(cfg.encoding.window_seconds, 8.0);
        assert_eq!(cfg.smoothing.window, 3);
        assert_eq!(cfg.smoothing.mode, crate::inference::SmoothingMode::Causal);
        assert_eq!(cfg.reduction, ReductionSettings::default());
        assert!(ExperimentConfig::from_toml("[data]\nmanifest = \"m.json\"\n[encoding]\ndims = 2048\n").is_err());
    }

    #[test]
    fn variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
    }
}
