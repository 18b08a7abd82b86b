//! Recordings, annotations and dataset construction.
//!
//! Signals are read from EDF (continuous 16-bit subset) or from a simple
//! columnar text format, restricted to a montage, and cut into per-seizure
//! [`SubjectFile`]s with balanced amounts of non-seizure data.

mod annotations;
mod dataset;
mod edf;
mod montage;
mod synth;
mod text;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use annotations::{parse_chbmit_summary, read_annotations, write_annotations, AnnotationRow, SeizureAnnotation};
pub use dataset::{
    build_subject_files, exclusion_zone, load_dataset, materialize_from_disk, plan_subject_files,
    prepare_subject_from_disk, window_count, window_labels, DatasetManifest, FileManifest, Segment, SegmentKind,
    SubjectFile, EXCLUSION_AFTER_SECONDS, EXCLUSION_BEFORE_SECONDS, MIN_CHUNK_SECONDS,
};
pub use edf::{parse_edf, parse_edf_header, read_edf, read_edf_info, write_edf, EdfHeader, EdfSignalHeader};
pub use montage::{load_montage, normalize_channel_name, select_montage, CANONICAL_MONTAGE};
pub use synth::{generate_synthetic_subject, SignalMode, SyntheticSubject, SyntheticSubjectConfig};
pub use text::{read_text, write_text};

/// A continuous multi-channel recording in physical units.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    pub subject: String,
    /// Recording identifier used by the annotation file (file stem).
    pub name: String,
    pub channels: Vec<String>,
    pub fs: f64,
    /// Channel-major samples.
    pub samples: Vec<Vec<f64>>,
    pub source: Option<PathBuf>,
}

impl Recording {
    pub fn new(subject: &str, name: &str, channels: Vec<String>, fs: f64, samples: Vec<Vec<f64>>) -> Result<Self> {
        let rec = Self {
            subject: subject.to_string(),
            name: name.to_string(),
            channels,
            fs,
            samples,
            source: None,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::Ingest(format!(
                "{}: invalid sampling rate {}",
                self.name, self.fs
            )));
        }
        if self.channels.len() != self.samples.len() {
            return Err(Error::Ingest(format!(
                "{}: {} channel names for {} signals",
                self.name,
                self.channels.len(),
                self.samples.len()
            )));
        }
        let n = self.n_samples();
        if self.samples.iter().any(|c| c.len() != n) {
            return Err(Error::Ingest(format!("{}: channels differ in length", self.name)));
        }
        if self.samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Ingest(format!("{}: non-finite sample", self.name)));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn info(&self) -> RecordingInfo {
        RecordingInfo {
            subject: self.subject.clone(),
            name: self.name.clone(),
            channels: self.channels.clone(),
            fs: self.fs,
            n_samples: self.n_samples(),
            source: self.source.clone(),
        }
    }

    pub fn duration_seconds(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }

    pub fn seconds_to_sample(&self, t: f64) -> usize {
        ((t * self.fs).round().max(0.0) as usize).min(self.n_samples())
    }
}

/// Shape and origin of a recording, without its samples.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordingInfo {
    pub subject: String,
    pub name: String,
    pub channels: Vec<String>,
    pub fs: f64,
    pub n_samples: usize,
    pub source: Option<PathBuf>,
}

impl RecordingInfo {
    pub fn duration_seconds(&self) -> f64 {
        self.n_samples as f64 / self.fs
    }
}

fn is_edf(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("edf"))
}

/// Header-only read for EDF; text files are parsed in full.
pub fn read_recording_info(path: &Path, subject: &str) -> Result<RecordingInfo> {
    let mut info = if is_edf(path) {
        read_edf_info(path)?
    } else {
        read_text(path)?.info()
    };
    info.subject = subject.to_string();
    Ok(info)
}

/// Reads a recording, choosing the format by extension (`.edf` or text).
pub fn read_recording(path: &Path, subject: &str) -> Result<Recording> {
    let mut rec = if is_edf(path) {
        read_edf(path)?
    } else {
        read_text(path)?
    };
    rec.subject = subject.to_string();
    Ok(rec)
}

/// Stem of a path, used as the recording name.
pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
