//! `mchd`: synthetic data, dataset preparation, cross-validation and model
//! tools for multi-centroid HD seizure detection.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use mchd_core::experiment::{
    emit_report, encode_with_model, group_by_subject, load_subjects, run_crossvalidation, train_model, window_signal,
    ExperimentConfig, Report, SubjectData, Variant,
};
use mchd_core::features::FeatureManifest;
use mchd_core::inference::{evaluate_files, predict_file, EncodedFile};
use mchd_core::ingest::{
    generate_synthetic_subject, load_dataset, parse_chbmit_summary, read_annotations, read_recording, select_montage,
    write_annotations, write_edf, write_text, AnnotationRow, DatasetManifest, SyntheticSubjectConfig,
};
use mchd_core::metrics::ScoreSet;
use mchd_core::model_io::ModelFile;
use mchd_core::reduction::{reduce, ReductionStrategy};
use mchd_core::seed::derive_seed;
use mchd_core::{Error, GlobalLabel, Result};

#[derive(Parser, Debug)]
#[command(name = "mchd", version, about = "Multi-centroid hyperdimensional seizure detection")]
struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (or file, for commands writing a single model).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores); overrides the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic subjects as EDF or text recordings plus annotations.
    Synth(SynthArgs),
    /// Build per-seizure subject files from recordings and annotations.
    Prepare(PrepareArgs),
    /// Run leave-one-seizure-out cross-validation from the config file.
    Crossval,
    /// Train one model variant on a subject's files.
    Train(TrainArgs),
    /// Apply sub-class removal or clustering to a saved model.
    Reduce(ReduceArgs),
    /// Classify a recording or subject file with a saved model.
    Classify(ClassifyArgs),
    /// Print a model's sub-class statistics or a dataset manifest summary.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Edf,
    Text,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value = "synth01")]
    subject: String,
    #[arg(long, default_value_t = 3)]
    nonseizure_modes: usize,
    #[arg(long, default_value_t = 2)]
    seizure_modes: usize,
    #[arg(long, default_value_t = 6)]
    seizures: usize,
    #[arg(long, default_value_t = 10)]
    factor: u32,
    #[arg(long, default_value_t = 4)]
    channels: usize,
    #[arg(long, default_value_t = 128.0)]
    fs: f64,
    #[arg(long, value_enum, default_value_t = Format::Edf)]
    format: Format,
}

#[derive(Args, Debug)]
struct PrepareArgs {
    /// Directory with one sub-directory of recordings per subject.
    #[arg(long)]
    recordings: PathBuf,
    /// Seizure annotation CSV (subject,recording,onset,offset).
    #[arg(long, required_unless_present = "chbmit_summaries")]
    annotations: Option<PathBuf>,
    /// Read seizure times from each subject's `<subject>-summary.txt`
    /// (CHB-MIT layout) instead of an annotation CSV.
    #[arg(long, conflicts_with = "annotations")]
    chbmit_summaries: bool,
    /// `canonical`, `all` or a montage file.
    #[arg(long, default_value = "all")]
    montage: String,
    #[arg(long, default_value_t = 10)]
    factor: u32,
    /// Only these subjects.
    #[arg(long, value_delimiter = ',')]
    subjects: Vec<String>,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Dataset manifest from `prepare`; otherwise the config's data section.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Subject to use (required when the data holds several).
    #[arg(long)]
    subject: Option<String>,
    /// Leave out these file indices.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// 2C, MC, MCr or MCc.
    #[arg(long, default_value = "MC")]
    variant: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Strategy {
    Removal,
    Clustering,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = Strategy::Removal)]
    strategy: Strategy,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    step_fraction: Option<f64>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// EDF or text recording.
    input: Option<PathBuf>,
    /// Annotations for scoring `input`.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Dataset manifest, with `--file`, instead of a recording.
    #[arg(long, requires = "file")]
    manifest: Option<PathBuf>,
    /// Subject file id (`subject/index`) within `--manifest`.
    #[arg(long)]
    file: Option<String>,
    /// Report raw labels only.
    #[arg(long)]
    no_smooth: bool,
}

#[derive(Args, Debug)]
struct InspectArgs {
    /// Model file (.mchd) or dataset manifest (.json).
    path: PathBuf,
}

/// Global flags merged over the config file.
struct Settings {
    cfg: ExperimentConfig,
    has_config: bool,
    out: Option<PathBuf>,
}

impl Settings {
    fn from_cli(cli: &Cli) -> Result<Self> {
        let (mut cfg, has_config) = match &cli.config {
            Some(p) => {
                let cfg = ExperimentConfig::load(p).map_err(|e| match e {
                    Error::Io { path, source } => Error::Config(format!("{}: {source}", path.display())),
                    other => other,
                })?;
                (cfg, true)
            }
            None => (ExperimentConfig::default(), false),
        };
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(t) = cli.threads {
            cfg.threads = t;
        }
        Ok(Self {
            cfg,
            has_config,
            out: cli.out.clone(),
        })
    }

    fn out_dir(&self, default: &str) -> PathBuf {
        self.out
            .clone()
            .or_else(|| self.cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from(default))
    }
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::Io {
        path: p.to_path_buf(),
        source: e,
    })
}

fn io_err(p: &Path) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: p.to_path_buf(),
        source: e,
    }
}

fn synth(s: &Settings, a: &SynthArgs) -> Result<()> {
    let configs = if s.has_config && !s.cfg.data.synthetic.is_empty() {
        s.cfg.data.synthetic.clone()
    } else {
        let mut c = SyntheticSubjectConfig::with_modes(
            &a.subject,
            a.nonseizure_modes,
            a.seizure_modes,
            a.factor,
            a.seizures,
            s.cfg.seed,
        )?;
        c.n_channels = a.channels;
        c.fs = a.fs;
        vec![c]
    };
    let out = s.out_dir("synthetic");
    let mut annotations = Vec::new();
    for c in &configs {
        let subject = generate_synthetic_subject(c)?;
        let dir = out.join(&c.subject);
        create_dir(&dir)?;
        for rec in &subject.recordings {
            match a.format {
                Format::Edf => {
                    let path = dir.join(format!("{}.edf", rec.name));
                    let mut w = io::BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
                    write_edf(rec, false, &mut w)?;
                    w.flush().map_err(io_err(&path))?;
                }
                Format::Text => write_text(rec, &dir.join(format!("{}.txt", rec.name)))?,
            }
        }
        let modes = dir.join("modes.csv");
        let mut w = csv::Writer::from_path(&modes).map_err(|e| Error::Ingest(format!("{}: {e}", modes.display())))?;
        let csv_err = |e: csv::Error| Error::Ingest(format!("{}: {e}", modes.display()));
        w.write_record(["recording", "second", "mode"]).map_err(csv_err)?;
        for (rec, timeline) in subject.recordings.iter().zip(&subject.mode_timeline) {
            for (t, m) in timeline.iter().enumerate() {
                w.write_record([rec.name.as_str(), &t.to_string(), m])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(io_err(&modes))?;
        println!(
            "{}: {} recordings in {}",
            c.subject,
            subject.recordings.len(),
            dir.display()
        );
        annotations.extend(subject.annotations);
    }
    let path = out.join("annotations.csv");
    write_annotations(&annotations, &path)?;
    println!("annotations: {}", path.display());
    Ok(())
}

/// Collects annotations from `<root>/<subject>/<subject>-summary.txt`.
fn summary_annotations(root: &Path, only: &[String]) -> Result<Vec<AnnotationRow>> {
    let mut rows = Vec::new();
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let subject = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        if !only.is_empty() && !only.contains(&subject) {
            continue;
        }
        let path = dir.join(format!("{subject}-summary.txt"));
        if !path.exists() {
            warn!("{}: no summary file, subject skipped", path.display());
            continue;
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        rows.extend(parse_chbmit_summary(&text, &subject)?);
    }
    Ok(rows)
}

fn prepare(s: &Settings, a: &PrepareArgs) -> Result<()> {
    let mut cfg = s.cfg.clone();
    let root = fs::canonicalize(&a.recordings).map_err(io_err(&a.recordings))?;
    let out = s.out_dir("prepared");
    create_dir(&out)?;
    let annotations = match &a.annotations {
        Some(p) => p.clone(),
        None => {
            let rows = summary_annotations(&root, &a.subjects)?;
            let p = out.join("annotations.csv");
            write_annotations(&rows, &p)?;
            p
        }
    };
    cfg.data = Default::default();
    cfg.data.recordings = Some(root);
    cfg.data.annotations = Some(annotations);
    cfg.data.montage = Some(a.montage.clone());
    cfg.data.factor = a.factor;
    cfg.data.subjects = a.subjects.clone();
    cfg.validate()?;
    let (subjects, warnings) = load_subjects(&cfg)?;
    for w in &warnings {
        warn!("{w}");
        eprintln!("warning: {w}");
    }
    let files: Vec<_> = subjects.into_iter().flat_map(|s| s.files).collect();
    let path = out.join("manifest.json");
    DatasetManifest::new(cfg.seed, a.factor, &files).save(&path)?;
    let e = &cfg.encoding;
    let fpath = out.join("features.json");
    fs::write(
        &fpath,
        FeatureManifest::new(e.window_seconds, e.step_seconds, e.levels).to_json(),
    )
    .map_err(io_err(&fpath))?;
    for f in &files {
        println!(
            "{}\t{:.0} s\t{} segments",
            f.id(),
            f.duration_seconds(),
            f.segments.len()
        );
    }
    println!("manifest: {} ({} files)", path.display(), files.len());
    Ok(())
}

fn print_summary(report: &Report) {
    println!(
        "variant\tsmoothed\tsubjects\tF1 duration\tF1 episode\tF1DEgmean\tseizure sub-classes\tnon-seizure sub-classes"
    );
    for r in &report.summary {
        println!(
            "{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.2}\t{:.2}",
            r.variant,
            r.smoothed,
            r.subjects,
            r.duration_f1,
            r.episode_f1,
            r.f1de_gmean,
            r.seizure_subclasses,
            r.nonseizure_subclasses
        );
    }
}

fn crossval(s: &Settings) -> Result<()> {
    if !s.has_config {
        return Err(Error::Config("crossval needs --config".into()));
    }
    let out = s.out_dir("results");
    let report = run_crossvalidation(&s.cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    emit_report(&report, &out)?;
    print_summary(&report);
    println!("report: {}", out.display());
    Ok(())
}

fn data_subject(s: &Settings, d: &DataArgs) -> Result<SubjectData> {
    let subjects = match &d.manifest {
        Some(m) => group_by_subject(load_dataset(m)?),
        None if s.has_config => load_subjects(&s.cfg)?.0,
        None => return Err(Error::Config("no data: pass --manifest or --config".into())),
    };
    let mut subject = match &d.subject {
        Some(name) => subjects
            .into_iter()
            .find(|x| &x.subject == name)
            .ok_or_else(|| Error::Config(format!("subject {name} not found in the data")))?,
        None if subjects.len() == 1 => subjects.into_iter().next().expect("one subject"),
        None => {
            let names: Vec<_> = subjects.iter().map(|x| x.subject.as_str()).collect();
            return Err(Error::Config(format!("pick one of --subject {}", names.join(", "))));
        }
    };
    subject.files.retain(|f| !d.exclude.contains(&f.index));
    if subject.files.is_empty() {
        return Err(Error::Config(format!(
            "{}: no files left after --exclude",
            subject.subject
        )));
    }
    Ok(subject)
}

fn train(s: &Settings, a: &TrainArgs) -> Result<()> {
    let variant: Variant = a.variant.parse()?;
    let subject = data_subject(s, &a.data)?;
    let seed = derive_seed(s.cfg.seed, &[&subject.subject, "model"]);
    let (model, traces) = train_model(&s.cfg, &subject.files, variant, seed)?;
    let path = s
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}_{}.mchd", subject.subject, variant)));
    model.save(&path)?;
    for t in &traces {
        info!(
            "{} step {}: {:.4} accepted={}",
            t.strategy, t.step, t.train_f1de_gmean, t.accepted
        );
    }
    println!(
        "{} model on {} files: {} seizure / {} non-seizure sub-classes -> {}",
        variant,
        subject.files.len(),
        model.model.count_for(GlobalLabel::Seizure),
        model.model.count_for(GlobalLabel::NonSeizure),
        path.display()
    );
    Ok(())
}

fn reduce_cmd(s: &Settings, a: &ReduceArgs) -> Result<()> {
    let mf = ModelFile::load(&a.model)?;
    let subject = data_subject(s, &a.data)?;
    let encoded = encode_with_model(&mf, &subject.files)?;
    let strategy = match a.strategy {
        Strategy::Removal => ReductionStrategy::Removal,
        Strategy::Clustering => ReductionStrategy::Clustering,
    };
    let mut rc = s.cfg.reduction_config(strategy);
    if let Some(t) = a.tolerance {
        rc.tolerance = t;
    }
    if let Some(f) = a.step_fraction {
        rc.step_fraction = f;
    }
    let outcome = reduce(&mf.model, &encoded, &rc)?;
    let before = mf.model.len();
    println!("step\tseizure\tnon-seizure\twindows\tF1DEgmean\taccepted");
    for t in &outcome.trace {
        println!(
            "{}\t{}\t{}\t{}\t{:.4}\t{}",
            t.step, t.seizure_subclasses, t.nonseizure_subclasses, t.absorbed_windows, t.train_f1de_gmean, t.accepted
        );
    }
    let path = s.out.clone().unwrap_or_else(|| {
        let stem = a
            .model
            .file_stem()
            .map_or("model".into(), |x| x.to_string_lossy().into_owned());
        a.model.with_file_name(format!("{stem}_{strategy}.mchd"))
    });
    let reduced = ModelFile {
        model: outcome.model,
        ..mf
    };
    reduced.save(&path)?;
    println!(
        "{} -> {} sub-classes, training F1DEgmean {:.4} -> {:.4}: {}",
        before,
        reduced.model.len(),
        outcome.baseline_score,
        outcome.final_score,
        path.display()
    );
    Ok(())
}

fn classify_input(mf: &ModelFile, a: &ClassifyArgs) -> Result<(String, EncodedFile)> {
    if let (Some(m), Some(id)) = (&a.manifest, &a.file) {
        let files = load_dataset(m)?;
        let f = files
            .into_iter()
            .find(|f| &f.id() == id)
            .ok_or_else(|| Error::Config(format!("file {id} not in {}", m.display())))?;
        let enc = encode_with_model(mf, std::slice::from_ref(&f))?;
        return Ok((id.clone(), enc.into_iter().next().expect("one file")));
    }
    let input = a
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("classify needs a recording or --manifest with --file".into()))?;
    let rec = read_recording(input, "")?;
    let rec = select_montage(&rec, &mf.header.channel_names)?;
    if rec.fs != mf.header.fs {
        return Err(Error::Ingest(format!(
            "{}: sampled at {} Hz, model expects {} Hz",
            input.display(),
            rec.fs,
            mf.header.fs
        )));
    }
    let mut seizures = Vec::new();
    if let Some(p) = &a.annotations {
        for r in read_annotations(p)?.iter().filter(|r| r.recording == rec.name) {
            seizures.push((rec.seconds_to_sample(r.onset), rec.seconds_to_sample(r.offset)));
        }
    }
    let h = &mf.header;
    let w = window_signal(
        &rec.name,
        &rec.samples,
        rec.fs,
        &seizures,
        h.window_seconds,
        h.step_seconds,
    )?;
    let ctx = h.encoder()?;
    let enc = mchd_core::experiment::encode_file(&ctx, &mf.calibration, h.levels, &w)?;
    Ok((rec.name, enc))
}

fn classify(s: &Settings, a: &ClassifyArgs) -> Result<()> {
    let mf = ModelFile::load(&a.model)?;
    let (name, file) = classify_input(&mf, a)?;
    let smoothing = (!a.no_smooth).then_some(s.cfg.smoothing);
    let (raw, labels) = predict_file(&mf.model, &file, smoothing)?;
    let step = mf.header.step_seconds;

    let mut sink: Box<dyn Write> = match &s.out {
        Some(p) => Box::new(fs::File::create(p).map_err(io_err(p))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(&mut sink);
    let csv_err = |e: csv::Error| Error::Ingest(format!("writing predictions: {e}"));
    w.write_record([
        "window",
        "start_seconds",
        "subclass",
        "distance",
        "raw",
        "label",
        "reference",
    ])
    .map_err(csv_err)?;
    for (i, c) in raw.iter().enumerate() {
        w.write_record([
            i.to_string(),
            format!("{}", i as f64 * step),
            c.subclass_id.to_string(),
            format!("{:.6}", c.distance),
            c.label.to_string(),
            labels.labels[i].to_string(),
            file.labels[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Ingest(format!("writing predictions: {e}")))?;
    drop(w);

    if file.labels.iter().any(|l| l.is_seizure()) {
        let report = |tag: &str, sc: ScoreSet| {
            format!(
                "{name} {tag}: F1 duration {:.3}, F1 episode {:.3}, F1DEgmean {:.3}",
                sc.duration.f1, sc.episode.f1, sc.f1de_gmean
            )
        };
        let mut lines = vec![report(
            "raw",
            evaluate_files(&mf.model, std::slice::from_ref(&file), None)?,
        )];
        if let Some(sm) = smoothing {
            lines.push(report(
                "smoothed",
                evaluate_files(&mf.model, std::slice::from_ref(&file), Some(sm))?,
            ));
        }
        for l in lines {
            if s.out.is_some() {
                println!("{l}");
            } else {
                eprintln!("{l}");
            }
        }
    }
    Ok(())
}

fn inspect(a: &InspectArgs) -> Result<()> {
    let is_json = a.path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let text = fs::read_to_string(&a.path).map_err(io_err(&a.path))?;
        let m = DatasetManifest::from_json(&text)?;
        println!("dataset: factor {}, seed {}, {} files", m.factor, m.seed, m.files.len());
        println!("file\tchannels\tfs\tseconds\tsegments");
        for f in &m.files {
            println!(
                "{}/{}\t{}\t{}\t{:.0}\t{}",
                f.subject,
                f.index,
                f.channels.len(),
                f.fs,
                f.n_samples as f64 / f.fs,
                f.segments.len()
            );
        }
        return Ok(());
    }
    let mf = ModelFile::load(&a.path)?;
    let h = &mf.header;
    println!("kind: {:?}", mf.model.kind());
    println!(
        "dim {} levels {} channels {} features {}",
        h.dim, h.levels, h.n_channels, h.n_features
    );
    println!("window {} s step {} s at {} Hz", h.window_seconds, h.step_seconds, h.fs);
    println!("seeds: master {} item {}", h.master_seed, h.item_seed);
    println!("channels: {}", h.channel_names.join(" "));
    println!("label\tsubclass\tcount\tfraction");
    for label in GlobalLabel::ALL {
        let total: u64 = mf
            .model
            .subclasses()
            .iter()
            .filter(|x| x.label() == label)
            .map(|x| u64::from(x.count()))
            .sum();
        for sc in mf.model.subclasses().iter().filter(|x| x.label() == label) {
            let frac = if total == 0 {
                0.0
            } else {
                f64::from(sc.count()) / total as f64
            };
            println!("{}\t{}\t{}\t{:.4}", label, sc.id(), sc.count(), frac);
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let s = Settings::from_cli(cli)?;
    match &cli.command {
        Command::Synth(a) => synth(&s, a),
        Command::Prepare(a) => prepare(&s, a),
        Command::Crossval => crossval(&s),
        Command::Train(a) => train(&s, a),
        Command::Reduce(a) => reduce_cmd(&s, a),
        Command::Classify(a) => classify(&s, a),
        Command::Inspect(a) => inspect(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage mistakes count as configuration errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
