//! Windowing, feature caching and encoding shared by the experiment and
//! the command-line tools.

use rayon::prelude::*;

use crate::encoder::EncoderContext;
use crate::error::{Error, Result};
use crate::features::{extract_window_features, Calibration, FeatureMatrix, SignalWindow};
use crate::hdcore::{BundleCounter, Hypervector};
use crate::inference::EncodedFile;
use crate::ingest::{window_count, window_labels, SubjectFile};
use crate::model_io::ModelFile;
use crate::training::GlobalLabel;

/// Feature matrices and reference labels of every window of one file.
#[derive(Clone, Debug)]
pub struct WindowedFile {
    /// Provenance tag of the source file.
    pub id: String,
    pub features: Vec<FeatureMatrix>,
    pub labels: Vec<GlobalLabel>,
}

impl WindowedFile {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Features of every window of a multi-channel signal, in time order.
pub fn signal_features(
    channels: &[Vec<f64>],
    fs: f64,
    window_seconds: f64,
    step_seconds: f64,
) -> Result<Vec<FeatureMatrix>> {
    let n = channels.first().map_or(0, Vec::len);
    let len = (window_seconds * fs).round() as usize;
    let step = ((step_seconds * fs).round() as usize).max(1);
    (0..window_count(n, fs, window_seconds, step_seconds))
        .into_par_iter()
        .map(|k| {
            let w = SignalWindow {
                channels,
                start: k * step,
                len,
                fs,
            };
            extract_window_features(&w, len)
        })
        .collect()
}

pub fn window_file(file: &SubjectFile, window_seconds: f64, step_seconds: f64) -> Result<WindowedFile> {
    let features = signal_features(&file.samples, file.fs, window_seconds, step_seconds)?;
    let labels = file.window_labels(window_seconds, step_seconds);
    if features.is_empty() {
        return Err(Error::Ingest(format!("{} is shorter than one window", file.id())));
    }
    Ok(WindowedFile {
        id: file.id(),
        features,
        labels,
    })
}

/// Windows with labels derived from seizure sample intervals.
pub fn window_signal(
    id: &str,
    channels: &[Vec<f64>],
    fs: f64,
    seizures: &[(usize, usize)],
    window_seconds: f64,
    step_seconds: f64,
) -> Result<WindowedFile> {
    let n = channels.first().map_or(0, Vec::len);
    Ok(WindowedFile {
        id: id.to_string(),
        features: signal_features(channels, fs, window_seconds, step_seconds)?,
        labels: window_labels(n, seizures, fs, window_seconds, step_seconds),
    })
}

/// Discretizes and encodes feature matrices in parallel; output order
/// follows input order.
pub fn encode_features(
    ctx: &EncoderContext,
    cal: &Calibration,
    levels: usize,
    features: &[FeatureMatrix],
) -> Result<Vec<Hypervector>> {
    features
        .par_iter()
        .map_init(
            || BundleCounter::new(ctx.dim()),
            |counter, fm| {
                let counter = counter.as_mut().map_err(|e| Error::Usage(e.to_string()))?;
                ctx.encode_with(&cal.discretize(fm, levels), counter)
            },
        )
        .collect()
}

pub fn encode_file(ctx: &EncoderContext, cal: &Calibration, levels: usize, file: &WindowedFile) -> Result<EncodedFile> {
    Ok(EncodedFile {
        vectors: encode_features(ctx, cal, levels, &file.features)?,
        labels: file.labels.clone(),
    })
}

/// Windows and encodes subject files with the encoder and calibration stored
/// in a model file.
pub fn encode_with_model(mf: &ModelFile, files: &[SubjectFile]) -> Result<Vec<EncodedFile>> {
    let h = &mf.header;
    let ctx = h.encoder()?;
    files
        .iter()
        .map(|f| {
            if f.channels.len() != h.n_channels || f.fs != h.fs {
                return Err(Error::Ingest(format!(
                    "{}: {} channels at {} Hz, model expects {} at {} Hz",
                    f.id(),
                    f.channels.len(),
                    f.fs,
                    h.n_channels,
                    h.fs
                )));
            }
            let w = window_file(f, h.window_seconds, h.step_seconds)?;
            encode_file(&ctx, &mf.calibration, h.levels, &w)
        })
        .collect()
}
