#![allow(clippy::field_reassign_with_default)]

use std::collections::BTreeMap;

use mchd_core::experiment::{
    emit_report, read_csv, run_crossvalidation, ExperimentConfig, ScoreRow, SubclassRow, SummaryRow, Variant,
};
use mchd_core::ingest::SyntheticSubjectConfig;
use mchd_core::model_io::ModelFile;

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 21;
    cfg.save_models = true;
    cfg.encoding.dim = 1024;
    cfg.encoding.window_seconds = 4.0;
    cfg.data.factor = 1;
    cfg.data.synthetic = vec![
        SyntheticSubjectConfig::with_modes("a", 2, 2, 1, 2, 21).unwrap(),
        SyntheticSubjectConfig::with_modes("b", 3, 1, 1, 3, 22).unwrap(),
    ];
    cfg
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

#[test]
fn written_tables_are_consistent() {
    let cfg = small_config();
    let report = run_crossvalidation(&cfg).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    emit_report(&report, tmp.path()).unwrap();

    let scores: Vec<ScoreRow> = read_csv(&tmp.path().join("scores.csv")).unwrap();
    assert_eq!(scores, report.scores);
    // 2 + 3 folds, 4 variants, raw and smoothed
    assert_eq!(scores.len(), 5 * 4 * 2);

    let subclasses: Vec<SubclassRow> = read_csv(&tmp.path().join("subclasses.csv")).unwrap();
    let mut shares: BTreeMap<_, f64> = BTreeMap::new();
    for r in &subclasses {
        *shares
            .entry((r.subject.clone(), r.fold, r.variant, r.label))
            .or_default() += r.data_fraction;
    }
    // every fold has both labels for every variant
    assert_eq!(shares.len(), 5 * 4 * 2);
    for (k, total) in shares {
        assert!((total - 1.0).abs() < 1e-9, "{k:?}: {total}");
    }

    // recompute the summary: folds averaged per subject, then subjects averaged
    let summary: Vec<SummaryRow> = read_csv(&tmp.path().join("summary.csv")).unwrap();
    assert_eq!(summary.len(), 4 * 2);
    for row in &summary {
        let mut per_subject: BTreeMap<&str, Vec<&ScoreRow>> = BTreeMap::new();
        for s in scores
            .iter()
            .filter(|s| s.variant == row.variant && s.smoothed == row.smoothed)
        {
            per_subject.entry(&s.subject).or_default().push(s);
        }
        assert_eq!(row.subjects, per_subject.len());
        let mean_of = |f: &dyn Fn(&ScoreRow) -> f64| {
            per_subject
                .values()
                .map(|rows| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64)
                .sum::<f64>()
                / per_subject.len() as f64
        };
        assert!(close(row.f1de_gmean, mean_of(&|r| r.f1de_gmean)), "{row:?}");
        assert!(close(row.duration_f1, mean_of(&|r| r.duration_f1)));
        assert!(close(row.episode_ppv, mean_of(&|r| r.episode_ppv)));
        assert!(close(row.seizure_subclasses, mean_of(&|r| r.seizure_subclasses as f64)));
        assert!(close(
            row.nonseizure_subclasses,
            mean_of(&|r| r.nonseizure_subclasses as f64)
        ));
    }

    // one model per subject, fold and variant
    let models: Vec<_> = std::fs::read_dir(tmp.path().join("models"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "mchd"))
        .collect();
    assert_eq!(models.len(), 5 * 4);
    for p in &models {
        let m = ModelFile::load(p).unwrap();
        assert_eq!(m.model.dim(), 1024);
    }
    assert!(tmp.path().join("models/features.json").exists());
}

#[test]
fn reductions_never_grow_the_model() {
    let mut cfg = small_config();
    cfg.save_models = false;
    let report = run_crossvalidation(&cfg).unwrap();
    let count = |v: Variant, r: &ScoreRow| -> Option<usize> {
        report
            .scores
            .iter()
            .find(|s| s.variant == v && s.subject == r.subject && s.fold == r.fold)
            .map(|s| s.seizure_subclasses + s.nonseizure_subclasses)
    };
    for r in report.scores.iter().filter(|r| r.variant == Variant::MultiCentroid) {
        let mc = count(Variant::MultiCentroid, r).unwrap();
        assert!(count(Variant::Removal, r).unwrap() <= mc);
        assert!(count(Variant::Clustering, r).unwrap() <= mc);
        assert_eq!(count(Variant::TwoClass, r).unwrap(), 2);
    }
}
