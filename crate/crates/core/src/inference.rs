//! Window classification and label smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdcore::Hypervector;
use crate::metrics::ScoreSet;
use crate::training::{GlobalLabel, Model};

/// Default smoothing window in labels (seconds at a 1 s step).
pub const DEFAULT_SMOOTHING_WINDOW: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub label: GlobalLabel,
    pub subclass_id: u32,
    pub distance: f64,
}

/// Label of the nearest sub-class; equidistant prototypes resolve to
/// non-seizure, then to the lowest id.
pub fn classify_window(model: &Model, hv: &Hypervector) -> Result<Classification> {
    let n = model.nearest(hv, GlobalLabel::NonSeizure)?;
    Ok(Classification {
        label: n.label,
        subclass_id: n.id,
        distance: n.distance,
    })
}

pub fn classify_all(model: &Model, hvs: &[Hypervector]) -> Result<Vec<Classification>> {
    hvs.iter().map(|hv| classify_window(model, hv)).collect()
}

/// One label per window step.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSequence {
    pub labels: Vec<GlobalLabel>,
    /// Offset of the first label in seconds.
    pub start_time: f64,
}

impl LabelSequence {
    pub fn new(labels: Vec<GlobalLabel>) -> Self {
        Self {
            labels,
            start_time: 0.0,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Self::new(bits.iter().map(|&b| GlobalLabel::from_bool(b != 0)).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> impl Iterator<Item = bool> + '_ {
        self.labels.iter().map(|l| l.is_seizure())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingMode {
    /// Window `[t - w + 1, t]`, shortened at the start.
    #[default]
    Causal,
    /// Window `[t - w/2, t + w/2]`, clipped at both ends.
    Centered,
}

/// Majority vote over a sliding window of `window` labels; ties are non-seizure.
pub fn smooth_labels(seq: &LabelSequence, window: usize, mode: SmoothingMode) -> Result<LabelSequence> {
    if seq.is_empty() {
        return Err(Error::Usage("cannot smooth an empty label sequence".into()));
    }
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Usage(format!(
            "smoothing window must be odd and positive, got {window}"
        )));
    }
    let n = seq.len();
    // prefix[i] = positives in labels[..i]
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0usize);
    for p in seq.positives() {
        prefix.push(prefix.last().unwrap() + usize::from(p));
    }
    let labels = (0..n)
        .map(|t| {
            let (lo, hi) = match mode {
                SmoothingMode::Causal => ((t + 1).saturating_sub(window), t + 1),
                SmoothingMode::Centered => (t.saturating_sub(window / 2), (t + window / 2 + 1).min(n)),
            };
            let positives = prefix[hi] - prefix[lo];
            GlobalLabel::from_bool(2 * positives > hi - lo)
        })
        .collect();
    Ok(LabelSequence {
        labels,
        start_time: seq.start_time,
    })
}

/// Smoothing window and alignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Smoothing {
    pub window: usize,
    #[serde(default)]
    pub mode: SmoothingMode,
}

impl Default for Smoothing {
    fn default() -> Self {
        Self {
            window: DEFAULT_SMOOTHING_WINDOW,
            mode: SmoothingMode::Causal,
        }
    }
}

/// Encoded windows of one file with their reference labels, in time order.
#[derive(Clone, Debug, Default)]
pub struct EncodedFile {
    pub vectors: Vec<Hypervector>,
    pub labels: Vec<GlobalLabel>,
}

impl EncodedFile {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn stream(&self) -> impl Iterator<Item = (&Hypervector, GlobalLabel)> {
        self.vectors.iter().zip(self.labels.iter().copied())
    }
}

/// Raw and (optionally) smoothed predictions of one file.
pub fn predict_file(
    model: &Model,
    file: &EncodedFile,
    smoothing: Option<Smoothing>,
) -> Result<(Vec<Classification>, LabelSequence)> {
    let raw = classify_all(model, &file.vectors)?;
    let seq = LabelSequence::new(raw.iter().map(|c| c.label).collect());
    let out = match smoothing {
        Some(s) if !seq.is_empty() => smooth_labels(&seq, s.window, s.mode)?,
        _ => seq,
    };
    Ok((raw, out))
}

/// Scores a model on several files, pooling counts across files so that
/// episodes never span a file boundary.
pub fn evaluate_files(model: &Model, files: &[EncodedFile], smoothing: Option<Smoothing>) -> Result<ScoreSet> {
    let pairs = files
        .iter()
        .filter(|f| !f.is_empty())
        .map(|f| {
            let (_, pred) = predict_file(model, f, smoothing)?;
            let p: Vec<bool> = pred.positives().collect();
            let t: Vec<bool> = f.labels.iter().map(|l| l.is_seizure()).collect();
            Ok((p, t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreSet::pooled(&pairs))
}
