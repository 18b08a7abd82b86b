//! Cross-validation report and its CSV files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Variant};
use super::run::FoldResult;
use crate::error::{Error, Result};
use crate::features::FeatureManifest;
use crate::metrics::{aggregate_subject, Rates, ScoreSet};
use crate::model_io::ModelFile;
use crate::reduction::ReductionStep;
use crate::training::{GlobalLabel, Model};

/// Test score of one variant on one held-out file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub subject: String,
    pub fold: usize,
    pub file: String,
    pub variant: Variant,
    pub smoothed: bool,
    pub duration_tpr: f64,
    pub duration_ppv: f64,
    pub duration_f1: f64,
    pub episode_tpr: f64,
    pub episode_ppv: f64,
    pub episode_f1: f64,
    pub f1de_gmean: f64,
    pub seizure_subclasses: usize,
    pub nonseizure_subclasses: usize,
}

impl ScoreRow {
    pub(crate) fn new(
        subject: &str,
        fold: usize,
        file: &str,
        variant: Variant,
        smoothed: bool,
        s: &ScoreSet,
        model: &Model,
    ) -> Self {
        Self {
            subject: subject.to_string(),
            fold,
            file: file.to_string(),
            variant,
            smoothed,
            duration_tpr: s.duration.tpr,
            duration_ppv: s.duration.ppv,
            duration_f1: s.duration.f1,
            episode_tpr: s.episode.tpr,
            episode_ppv: s.episode.ppv,
            episode_f1: s.episode.f1,
            f1de_gmean: s.f1de_gmean,
            seizure_subclasses: model.count_for(GlobalLabel::Seizure),
            nonseizure_subclasses: model.count_for(GlobalLabel::NonSeizure),
        }
    }

    pub fn scores(&self) -> ScoreSet {
        ScoreSet {
            duration: Rates {
                tpr: self.duration_tpr,
                ppv: self.duration_ppv,
                f1: self.duration_f1,
            },
            episode: Rates {
                tpr: self.episode_tpr,
                ppv: self.episode_ppv,
                f1: self.episode_f1,
            },
            f1de_gmean: self.f1de_gmean,
        }
    }
}

/// One sub-class of a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubclassRow {
    pub subject: String,
    pub fold: usize,
    pub variant: Variant,
    pub label: GlobalLabel,
    pub subclass: u32,
    pub count: u32,
    /// Share of the label's absorbed windows held by this sub-class.
    pub data_fraction: f64,
}

impl SubclassRow {
    pub(crate) fn for_model(subject: &str, fold: usize, variant: Variant, model: &Model) -> Vec<Self> {
        let total = |label: GlobalLabel| -> u64 {
            model
                .subclasses()
                .iter()
                .filter(|s| s.label() == label)
                .map(|s| u64::from(s.count()))
                .sum()
        };
        let totals = [total(GlobalLabel::NonSeizure), total(GlobalLabel::Seizure)];
        model
            .subclasses()
            .iter()
            .map(|s| {
                let t = totals[usize::from(s.label().as_u8())];
                Self {
                    subject: subject.to_string(),
                    fold,
                    variant,
                    label: s.label(),
                    subclass: s.id(),
                    count: s.count(),
                    data_fraction: if t == 0 { 0.0 } else { f64::from(s.count()) / t as f64 },
                }
            })
            .collect()
    }
}

/// One step of a reduction run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub subject: String,
    pub fold: usize,
    pub strategy: String,
    pub step: usize,
    pub seizure_subclasses: usize,
    pub nonseizure_subclasses: usize,
    pub absorbed_windows: u64,
    pub train_f1de_gmean: f64,
    pub accepted: bool,
}

impl TraceRow {
    pub(crate) fn new(subject: &str, fold: usize, s: &ReductionStep) -> Self {
        Self {
            subject: subject.to_string(),
            fold,
            strategy: s.strategy.to_string(),
            step: s.step,
            seizure_subclasses: s.seizure_subclasses,
            nonseizure_subclasses: s.nonseizure_subclasses,
            absorbed_windows: s.absorbed_windows,
            train_f1de_gmean: s.train_f1de_gmean,
            accepted: s.accepted,
        }
    }
}

/// Fold average of one subject, variant and smoothing state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectRow {
    pub subject: String,
    pub variant: Variant,
    pub smoothed: bool,
    pub folds: usize,
    pub duration_f1: f64,
    pub episode_f1: f64,
    pub f1de_gmean: f64,
    pub duration_tpr: f64,
    pub duration_ppv: f64,
    pub episode_tpr: f64,
    pub episode_ppv: f64,
    pub seizure_subclasses: f64,
    pub nonseizure_subclasses: f64,
}

/// Average over subjects (each subject weighted equally).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub factor: u32,
    pub variant: Variant,
    pub smoothed: bool,
    pub subjects: usize,
    pub duration_f1: f64,
    pub episode_f1: f64,
    pub f1de_gmean: f64,
    pub duration_tpr: f64,
    pub duration_ppv: f64,
    pub episode_tpr: f64,
    pub episode_ppv: f64,
    pub seizure_subclasses: f64,
    pub nonseizure_subclasses: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    /// Config as run, in TOML.
    pub config: String,
    pub scores: Vec<ScoreRow>,
    pub subclasses: Vec<SubclassRow>,
    pub traces: Vec<TraceRow>,
    pub subjects: Vec<SubjectRow>,
    pub summary: Vec<SummaryRow>,
    pub warnings: Vec<String>,
    /// Trained models by name; only filled when `save_models` is set.
    pub models: Vec<(String, ModelFile)>,
    /// Feature extraction description written next to saved models.
    pub feature_manifest: Option<String>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Groups rows by key, preserving first-seen order.
fn groups<T, K: PartialEq>(rows: &[T], key: impl Fn(&T) -> K) -> Vec<(K, Vec<&T>)> {
    let mut out: Vec<(K, Vec<&T>)> = Vec::new();
    for r in rows {
        let k = key(r);
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r),
            None => out.push((k, vec![r])),
        }
    }
    out
}

/// Per-subject fold averages computed from score rows.
pub fn subject_rows(scores: &[ScoreRow]) -> Vec<SubjectRow> {
    groups(scores, |r| (r.subject.clone(), r.variant, r.smoothed))
        .into_iter()
        .map(|((subject, variant, smoothed), rows)| {
            let sets: Vec<ScoreSet> = rows.iter().map(|r| r.scores()).collect();
            let a = aggregate_subject(&sets).expect("group is non-empty");
            SubjectRow {
                subject,
                variant,
                smoothed,
                folds: rows.len(),
                duration_f1: a.duration.f1,
                episode_f1: a.episode.f1,
                f1de_gmean: a.f1de_gmean,
                duration_tpr: a.duration.tpr,
                duration_ppv: a.duration.ppv,
                episode_tpr: a.episode.tpr,
                episode_ppv: a.episode.ppv,
                seizure_subclasses: mean(rows.iter().map(|r| r.seizure_subclasses as f64)),
                nonseizure_subclasses: mean(rows.iter().map(|r| r.nonseizure_subclasses as f64)),
            }
        })
        .collect()
}

/// Averages of the per-subject rows, by variant and smoothing state.
pub fn summary_rows(factor: u32, subjects: &[SubjectRow]) -> Vec<SummaryRow> {
    let mut g = groups(subjects, |r| (r.variant, r.smoothed));
    g.sort_by_key(|((v, s), _)| (*v, *s));
    g.into_iter()
        .map(|((variant, smoothed), rows)| {
            let m = |f: fn(&SubjectRow) -> f64| mean(rows.iter().map(|r| f(r)));
            SummaryRow {
                factor,
                variant,
                smoothed,
                subjects: rows.len(),
                duration_f1: m(|r| r.duration_f1),
                episode_f1: m(|r| r.episode_f1),
                f1de_gmean: m(|r| r.f1de_gmean),
                duration_tpr: m(|r| r.duration_tpr),
                duration_ppv: m(|r| r.duration_ppv),
                episode_tpr: m(|r| r.episode_tpr),
                episode_ppv: m(|r| r.episode_ppv),
                seizure_subclasses: m(|r| r.seizure_subclasses),
                nonseizure_subclasses: m(|r| r.nonseizure_subclasses),
            }
        })
        .collect()
}

impl Report {
    pub(crate) fn assemble(cfg: &ExperimentConfig, factor: u32, folds: Vec<FoldResult>, warnings: Vec<String>) -> Self {
        let mut r = Report {
            config: cfg.to_toml(),
            warnings,
            ..Default::default()
        };
        for f in folds {
            r.scores.extend(f.scores);
            r.subclasses.extend(f.subclasses);
            r.traces.extend(f.traces);
            r.models.extend(f.models);
        }
        if cfg.save_models {
            let e = &cfg.encoding;
            r.feature_manifest = Some(FeatureManifest::new(e.window_seconds, e.step_seconds, e.levels).to_json());
        }
        r.subjects = subject_rows(&r.scores);
        r.summary = summary_rows(factor, &r.subjects);
        r
    }

    pub fn summary_for(&self, variant: Variant, smoothed: bool) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.variant == variant && s.smoothed == smoothed)
    }
}

const SCORE_HEADER: &[&str] = &[
    "subject",
    "fold",
    "file",
    "variant",
    "smoothed",
    "duration_tpr",
    "duration_ppv",
    "duration_f1",
    "episode_tpr",
    "episode_ppv",
    "episode_f1",
    "f1de_gmean",
    "seizure_subclasses",
    "nonseizure_subclasses",
];
const SUBCLASS_HEADER: &[&str] = &[
    "subject",
    "fold",
    "variant",
    "label",
    "subclass",
    "count",
    "data_fraction",
];
const TRACE_HEADER: &[&str] = &[
    "subject",
    "fold",
    "strategy",
    "step",
    "seizure_subclasses",
    "nonseizure_subclasses",
    "absorbed_windows",
    "train_f1de_gmean",
    "accepted",
];
const SUBJECT_HEADER: &[&str] = &[
    "subject",
    "variant",
    "smoothed",
    "folds",
    "duration_f1",
    "episode_f1",
    "f1de_gmean",
    "duration_tpr",
    "duration_ppv",
    "episode_tpr",
    "episode_ppv",
    "seizure_subclasses",
    "nonseizure_subclasses",
];
const SUMMARY_HEADER: &[&str] = &[
    "factor",
    "variant",
    "smoothed",
    "subjects",
    "duration_f1",
    "episode_f1",
    "f1de_gmean",
    "duration_tpr",
    "duration_ppv",
    "episode_tpr",
    "episode_ppv",
    "seizure_subclasses",
    "nonseizure_subclasses",
];

/// Writes rows under an explicit header so empty tables still get one.
fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads back a CSV written by [`emit_report`].
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))
}

/// Writes the report files into `dir` and returns their paths.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = |name: &str| dir.join(name);
    let mut out = Vec::new();
    write_csv(&p("scores.csv"), SCORE_HEADER, &report.scores)?;
    out.push(p("scores.csv"));
    write_csv(&p("subclasses.csv"), SUBCLASS_HEADER, &report.subclasses)?;
    out.push(p("subclasses.csv"));
    write_csv(&p("reduction_trace.csv"), TRACE_HEADER, &report.traces)?;
    out.push(p("reduction_trace.csv"));
    write_csv(&p("subjects.csv"), SUBJECT_HEADER, &report.subjects)?;
    out.push(p("subjects.csv"));
    write_csv(&p("summary.csv"), SUMMARY_HEADER, &report.summary)?;
    out.push(p("summary.csv"));
    let cfg = p("config.toml");
    fs::write(&cfg, &report.config).map_err(|e| Error::io(&cfg, e))?;
    out.push(cfg);
    let warn = p("warnings.txt");
    let mut text = report.warnings.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    fs::write(&warn, text).map_err(|e| Error::io(&warn, e))?;
    out.push(warn);
    if !report.models.is_empty() {
        let mdir = p("models");
        fs::create_dir_all(&mdir).map_err(|e| Error::io(&mdir, e))?;
        for (name, m) in &report.models {
            let path = mdir.join(format!("{name}.mchd"));
            m.save(&path)?;
            out.push(path);
        }
        if let Some(fm) = &report.feature_manifest {
            let path = mdir.join("features.json");
            fs::write(&path, fm).map_err(|e| Error::io(&path, e))?;
            out.push(path);
        }
    }
    Ok(out)
}
