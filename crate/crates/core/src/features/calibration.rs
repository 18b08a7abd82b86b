//! Percentile normalization and discretization of features into levels.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, N_FEATURES};

pub const LOWER_PERCENTILE: f64 = 1.0;
pub const UPPER_PERCENTILE: f64 = 99.0;

/// Per-feature clamp bounds fitted on training windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Discretized levels, `[channel][feature]`, each in `[0, L)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscretizedFeatures {
    n_features: usize,
    levels: Vec<u16>,
}

impl DiscretizedFeatures {
    /// Builds from per-channel rows; all rows must have the same width.
    pub fn from_rows<R: AsRef<[u16]>>(rows: &[R]) -> Result<Self> {
        let n_features = rows.first().map_or(0, |r| r.as_ref().len());
        if n_features == 0 || rows.iter().any(|r| r.as_ref().len() != n_features) {
            return Err(Error::Usage(
                "discretized rows must be non-empty and equally wide".into(),
            ));
        }
        Ok(Self {
            n_features,
            levels: rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect(),
        })
    }

    pub fn n_channels(&self) -> usize {
        self.levels.len() / self.n_features
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn get(&self, channel: usize, feature: usize) -> usize {
        usize::from(self.levels[channel * self.n_features + feature])
    }

    pub fn row(&self, channel: usize) -> &[u16] {
        &self.levels[channel * self.n_features..(channel + 1) * self.n_features]
    }
}

/// Linear-interpolated percentile of sorted data (`p` in [0, 100]).
pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl Calibration {
    /// Fits 1st/99th percentile bounds per feature over all windows and channels.
    pub fn fit<'a, I>(train: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a FeatureMatrix>,
    {
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); N_FEATURES];
        for fm in train {
            for row in fm.rows() {
                for (col, &v) in columns.iter_mut().zip(row.iter()) {
                    col.push(v);
                }
            }
        }
        if columns[0].is_empty() {
            return Err(Error::Usage("calibration needs at least one training window".into()));
        }
        let mut lower = Vec::with_capacity(N_FEATURES);
        let mut upper = Vec::with_capacity(N_FEATURES);
        for col in &mut columns {
            col.sort_by(|a, b| a.total_cmp(b));
            lower.push(percentile_sorted(col, LOWER_PERCENTILE));
            upper.push(percentile_sorted(col, UPPER_PERCENTILE));
        }
        Ok(Self { lower, upper })
    }

    /// Level of value `v` of feature `f`: `clamp(floor((v - lo) / (hi - lo) * L), 0, L - 1)`;
    /// `floor(L / 2)` for features constant on the training set.
    pub fn level(&self, feature: usize, v: f64, levels: usize) -> usize {
        let lo = self.lower[feature];
        let hi = self.upper[feature];
        if !(hi > lo) {
            return levels / 2;
        }
        let scaled = ((v - lo) / (hi - lo) * levels as f64).floor();
        if scaled.is_nan() || scaled < 0.0 {
            0
        } else {
            (scaled as usize).min(levels - 1)
        }
    }

    pub fn discretize(&self, fm: &FeatureMatrix, levels: usize) -> DiscretizedFeatures {
        let levels = fm
            .rows()
            .iter()
            .flat_map(|row| {
                row.iter()
                    .enumerate()
                    .map(move |(f, &v)| self.level(f, v, levels) as u16)
            })
            .collect();
        DiscretizedFeatures {
            n_features: N_FEATURES,
            levels,
        }
    }

    pub(crate) fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&(self.lower.len() as u32).to_le_bytes())?;
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            w.write_all(&lo.to_le_bytes())?;
            w.write_all(&hi.to_le_bytes())?;
        }
        Ok(())
    }

    pub(crate) fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let trunc = |e: std::io::Error| Error::Ingest(format!("truncated calibration: {e}"));
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(trunc)?;
        let n = u32::from_le_bytes(b4) as usize;
        if n != N_FEATURES {
            return Err(Error::Ingest(format!(
                "calibration has {n} features, expected {N_FEATURES}"
            )));
        }
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut b8 = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut b8).map_err(trunc)?;
            lower.push(f64::from_le_bytes(b8));
            r.read_exact(&mut b8).map_err(trunc)?;
            upper.push(f64::from_le_bytes(b8));
        }
        Ok(Self { lower, upper })
    }
}
