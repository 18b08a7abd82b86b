//! Leave-one-seizure-out cross-validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use super::config::{ExperimentConfig, Variant};
use super::pipeline::{encode_file, window_file, WindowedFile};
use super::report::{Report, ScoreRow, SubclassRow, TraceRow};
use crate::encoder::EncoderContext;
use crate::error::{Error, Result};
use crate::features::{Calibration, N_FEATURES};
use crate::inference::{evaluate_files, EncodedFile};
use crate::ingest::{
    build_subject_files, generate_synthetic_subject, load_dataset, load_montage, prepare_subject_from_disk,
    read_annotations, SubjectFile, CANONICAL_MONTAGE,
};
use crate::metrics::ScoreSet;
use crate::model_io::{ModelFile, ModelHeader};
use crate::reduction::reduce;
use crate::seed::{derive_seed, fold_seed};
use crate::training::{train_multicentroid, train_two_class, GlobalLabel, Model, MultiCentroidOptions};

/// All subject files of one subject.
#[derive(Clone, Debug)]
pub struct SubjectData {
    pub subject: String,
    pub files: Vec<SubjectFile>,
}

/// Groups files by subject, keeping first-appearance order of subjects and
/// index order within a subject.
pub fn group_by_subject(files: Vec<SubjectFile>) -> Vec<SubjectData> {
    let mut out: Vec<SubjectData> = Vec::new();
    for f in files {
        match out.iter_mut().find(|s| s.subject == f.subject) {
            Some(s) => s.files.push(f),
            None => out.push(SubjectData {
                subject: f.subject.clone(),
                files: vec![f],
            }),
        }
    }
    for s in &mut out {
        s.files.sort_by_key(|f| f.index);
    }
    out
}

/// Resolves the montage setting to a channel list.
pub fn resolve_montage(setting: Option<&str>) -> Result<Option<Vec<String>>> {
    match setting {
        None | Some("all") => Ok(None),
        Some("canonical") => Ok(Some(CANONICAL_MONTAGE.iter().map(|s| s.to_string()).collect())),
        Some(path) => load_montage(Path::new(path)).map(Some),
    }
}

fn signal_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = p
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        let summary = p
            .file_stem()
            .and_then(|s| s.to_str())
            .is_some_and(|s| s.ends_with("-summary"));
        if p.is_file() && !summary && ["edf", "txt"].contains(&ext.as_str()) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Loads or generates the subject files named by the config.
pub fn load_subjects(cfg: &ExperimentConfig) -> Result<(Vec<SubjectData>, Vec<String>)> {
    let d = &cfg.data;
    let mut warnings = Vec::new();
    let mut subjects = if let Some(m) = &d.manifest {
        group_by_subject(load_dataset(m)?)
    } else if !d.synthetic.is_empty() {
        let mut out = Vec::new();
        for s in &d.synthetic {
            let gen = generate_synthetic_subject(s)?;
            let seed = derive_seed(cfg.seed, &[&s.subject, "files"]);
            let files = build_subject_files(&gen.recordings, &gen.annotations, d.factor, seed)?;
            out.push(SubjectData {
                subject: s.subject.clone(),
                files,
            });
        }
        out
    } else {
        let root = d.recordings.as_ref().expect("validated data source");
        let annotations = read_annotations(d.annotations.as_ref().expect("validated annotations"))?;
        let montage = resolve_montage(d.montage.as_deref())?;
        let mut names: Vec<String> = Vec::new();
        for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
            let p = entry.map_err(|e| Error::io(root, e))?.path();
            if p.is_dir() {
                names.push(p.file_name().unwrap().to_string_lossy().into_owned());
            }
        }
        names.sort();
        let mut out = Vec::new();
        for name in names {
            if !d.subjects.is_empty() && !d.subjects.contains(&name) {
                continue;
            }
            if !annotations.iter().any(|a| a.subject == name) {
                warnings.push(format!("subject {name}: no annotated seizures, skipped"));
                continue;
            }
            let paths = signal_files(&root.join(&name))?;
            let seed = derive_seed(cfg.seed, &[&name, "files"]);
            let (files, w) =
                prepare_subject_from_disk(&paths, &name, &annotations, montage.as_deref(), d.factor, seed)?;
            warnings.extend(w);
            out.push(SubjectData { subject: name, files });
        }
        out
    };
    if !d.subjects.is_empty() {
        subjects.retain(|s| d.subjects.contains(&s.subject));
    }
    Ok((subjects, warnings))
}

/// Trained models of one fold, in variant order.
struct FoldModels {
    models: Vec<(Variant, Model)>,
    traces: Vec<TraceRow>,
}

fn train_variants(
    cfg: &ExperimentConfig,
    ctx: &EncoderContext,
    train: &[EncodedFile],
    subject: &str,
    fold: usize,
) -> Result<FoldModels> {
    let stream = || train.iter().flat_map(EncodedFile::stream);
    let mut models = Vec::new();
    let mut traces = Vec::new();
    let needs_mc = cfg.variants.iter().any(|v| *v != Variant::TwoClass);
    let mc = if needs_mc {
        Some(train_multicentroid(
            stream(),
            ctx.tiebreak(),
            MultiCentroidOptions { margin: cfg.margin },
        )?)
    } else {
        None
    };
    for &v in &cfg.variants {
        let model = match v {
            Variant::TwoClass => train_two_class(stream(), ctx.tiebreak())?,
            Variant::MultiCentroid => mc.clone().expect("trained above"),
            Variant::Removal | Variant::Clustering => {
                let strategy = v.reduction().expect("reduction variant");
                let out = reduce(
                    mc.as_ref().expect("trained above"),
                    train,
                    &cfg.reduction_config(strategy),
                )?;
                if out.final_score < (1.0 - cfg.reduction.tolerance) * out.baseline_score - 1e-12 {
                    return Err(Error::Training(format!(
                        "{subject} fold {fold}: reduction broke its tolerance bound"
                    )));
                }
                traces.extend(out.trace.iter().map(|s| TraceRow::new(subject, fold, s)));
                out.model
            }
        };
        models.push((v, model));
    }
    Ok(FoldModels { models, traces })
}

fn model_header(cfg: &ExperimentConfig, first: &SubjectFile, item_seed: u64) -> ModelHeader {
    let enc = &cfg.encoding;
    ModelHeader {
        dim: enc.dim,
        levels: enc.levels,
        n_channels: first.channels.len(),
        n_features: N_FEATURES,
        item_seed,
        master_seed: cfg.seed,
        window_seconds: enc.window_seconds,
        step_seconds: enc.step_seconds,
        fs: first.fs,
        channel_names: first.channels.clone(),
    }
}

/// Trains one variant on all given files (reduction variants are reduced on
/// the same files). Returns the model and any reduction trace.
pub fn train_model(
    cfg: &ExperimentConfig,
    files: &[SubjectFile],
    variant: Variant,
    item_seed: u64,
) -> Result<(ModelFile, Vec<TraceRow>)> {
    let first = files.first().ok_or_else(|| Error::Usage("no training files".into()))?;
    check_subject(&first.subject, files)?;
    let enc = &cfg.encoding;
    let windowed = files
        .iter()
        .map(|f| window_file(f, enc.window_seconds, enc.step_seconds))
        .collect::<Result<Vec<_>>>()?;
    let cal = Calibration::fit(windowed.iter().flat_map(|w| w.features.iter()))?;
    let ctx = EncoderContext::generate(enc.dim, enc.levels, first.channels.len(), N_FEATURES, item_seed)?;
    let encoded = windowed
        .iter()
        .map(|w| encode_file(&ctx, &cal, enc.levels, w))
        .collect::<Result<Vec<_>>>()?;
    let one = ExperimentConfig {
        variants: vec![variant],
        ..cfg.clone()
    };
    let mut trained = train_variants(&one, &ctx, &encoded, &first.subject, 0)?;
    let (_, model) = trained.models.pop().expect("one variant");
    Ok((
        ModelFile {
            header: model_header(cfg, first, item_seed),
            calibration: cal,
            model,
        },
        trained.traces,
    ))
}

/// Outcome of one held-out file.
pub(crate) struct FoldResult {
    pub scores: Vec<ScoreRow>,
    pub subclasses: Vec<SubclassRow>,
    pub traces: Vec<TraceRow>,
    pub models: Vec<(String, ModelFile)>,
}

fn run_fold(
    cfg: &ExperimentConfig,
    subject: &SubjectData,
    windowed: &[WindowedFile],
    fold: usize,
) -> Result<FoldResult> {
    let test = &windowed[fold];
    let train: Vec<&WindowedFile> = windowed
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != fold)
        .map(|(_, w)| w)
        .collect();
    // no calibration, training or reduction input may come from the held-out file
    if train.iter().any(|w| w.id == test.id) {
        return Err(Error::Training(format!(
            "held-out file {} leaked into training",
            test.id
        )));
    }
    let enc = &cfg.encoding;
    let seed = fold_seed(cfg.seed, &subject.subject, fold);
    let cal = Calibration::fit(train.iter().flat_map(|w| w.features.iter()))?;
    let first = &subject.files[0];
    let ctx = EncoderContext::generate(enc.dim, enc.levels, first.channels.len(), N_FEATURES, seed)?;
    let train_enc = train
        .iter()
        .map(|w| encode_file(&ctx, &cal, enc.levels, w))
        .collect::<Result<Vec<_>>>()?;
    for label in GlobalLabel::ALL {
        if !train_enc.iter().any(|f| f.labels.contains(&label)) {
            return Err(Error::Training(format!(
                "{} fold {fold}: training files contain no {label} windows",
                subject.subject
            )));
        }
    }
    let test_enc = encode_file(&ctx, &cal, enc.levels, test)?;
    let trained = train_variants(cfg, &ctx, &train_enc, &subject.subject, fold)?;

    let mut scores = Vec::new();
    let mut subclasses = Vec::new();
    let mut models = Vec::new();
    for (variant, model) in &trained.models {
        for smoothed in [false, true] {
            let smoothing = smoothed.then_some(cfg.smoothing);
            let s: ScoreSet = evaluate_files(model, std::slice::from_ref(&test_enc), smoothing)?;
            scores.push(ScoreRow::new(
                &subject.subject,
                fold,
                &test.id,
                *variant,
                smoothed,
                &s,
                model,
            ));
        }
        subclasses.extend(SubclassRow::for_model(&subject.subject, fold, *variant, model));
        if cfg.save_models {
            let header = model_header(cfg, first, seed);
            let name = format!("{}_fold{:02}_{}", subject.subject, fold, variant.name());
            models.push((
                name,
                ModelFile {
                    header,
                    calibration: cal.clone(),
                    model: model.clone(),
                },
            ));
        }
    }
    Ok(FoldResult {
        scores,
        subclasses,
        traces: trained.traces,
        models,
    })
}

/// Checks that every subject file agrees on rate and channels.
fn check_subject(subject: &str, files: &[SubjectFile]) -> Result<()> {
    let first = &files[0];
    for f in files {
        if f.fs != first.fs || f.channels != first.channels {
            return Err(Error::Ingest(format!(
                "{subject}: files disagree on sampling rate or channels"
            )));
        }
    }
    Ok(())
}

/// Runs every fold of every subject and assembles the report.
///
/// Folds run concurrently on a pool of `cfg.threads` workers; results are
/// merged in (subject, fold) order so the report does not depend on the
/// thread count.
pub fn run_crossvalidation_on(cfg: &ExperimentConfig, subjects: &[SubjectData]) -> Result<Report> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let mut eligible = Vec::new();
    for s in subjects {
        if s.files.len() < 2 {
            let msg = format!(
                "subject {}: {} seizure file(s), at least 2 needed; skipped",
                s.subject,
                s.files.len()
            );
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        check_subject(&s.subject, &s.files)?;
        eligible.push(s);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let enc = cfg.encoding;
    let results = pool.install(|| -> Result<Vec<FoldResult>> {
        let windowed: Vec<Vec<WindowedFile>> = eligible
            .iter()
            .map(|s| {
                info!("{}: extracting features of {} files", s.subject, s.files.len());
                s.files
                    .iter()
                    .map(|f| window_file(f, enc.window_seconds, enc.step_seconds))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let tasks: Vec<(usize, usize)> = eligible
            .iter()
            .enumerate()
            .flat_map(|(si, s)| (0..s.files.len()).map(move |f| (si, f)))
            .collect();
        tasks
            .par_iter()
            .map(|&(si, fold)| {
                info!("{} fold {fold}", eligible[si].subject);
                run_fold(cfg, eligible[si], &windowed[si], fold)
            })
            .collect()
    })?;
    let factor = subjects
        .first()
        .and_then(|s| s.files.first())
        .map_or(cfg.data.factor, |f| f.factor);
    Ok(Report::assemble(cfg, factor, results, warnings))
}

/// Loads the configured data and runs [`run_crossvalidation_on`].
pub fn run_crossvalidation(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let (subjects, load_warnings) = load_subjects(cfg)?;
    let mut report = run_crossvalidation_on(cfg, &subjects)?;
    let mut warnings = load_warnings;
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok(report)
}

/// Per-label sub-class populations, most populated first.
pub fn subclass_shares(model: &Model) -> BTreeMap<GlobalLabel, Vec<(u32, f64)>> {
    let mut out = BTreeMap::new();
    for label in GlobalLabel::ALL {
        let subs: Vec<_> = model.subclasses().iter().filter(|s| s.label() == label).collect();
        let total: u64 = subs.iter().map(|s| u64::from(s.count())).sum();
        let mut v: Vec<(u32, f64)> = subs
            .iter()
            .map(|s| {
                (
                    s.id(),
                    if total == 0 {
                        0.0
                    } else {
                        f64::from(s.count()) / total as f64
                    },
                )
            })
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out.insert(label, v);
    }
    out
}
