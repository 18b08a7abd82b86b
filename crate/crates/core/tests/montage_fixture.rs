//! A CHB-MIT shaped subject on disk: 23-channel EDF files with a repeated
//! `T8-P8` derivation, one recording missing a montage channel, and
//! seizures given by a summary file.

#![allow(clippy::field_reassign_with_default)]

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use mchd_core::experiment::{load_subjects, ExperimentConfig};
use mchd_core::ingest::{parse_chbmit_summary, write_annotations, write_edf, Recording, CANONICAL_MONTAGE};

const CHBMIT_ORDER: [&str; 23] = [
    "FP1-F7", "F7-T7", "T7-P7", "P7-O1", "FP1-F3", "F3-C3", "C3-P3", "P3-O1", "FP2-F4", "F4-C4", "C4-P4", "P4-O2",
    "FP2-F8", "F8-T8", "T8-P8-0", "P8-O2", "FZ-CZ", "CZ-PZ", "P7-T7", "T7-FT9", "FT9-FT10", "FT10-T8", "T8-P8-1",
];

const FS: f64 = 64.0;

/// Channel `k` sits at level `10 * k` plus a small oscillation, so the
/// source channel of any selected signal can be read off its mean.
fn write_recording(dir: &Path, name: &str, channels: &[&str], seconds: usize) {
    let n = seconds * FS as usize;
    let samples = (0..channels.len())
        .map(|k| (0..n).map(|i| 10.0 * k as f64 + (i as f64 * 0.3).sin()).collect())
        .collect();
    let rec = Recording::new(
        "chb90",
        name,
        channels.iter().map(|s| s.to_string()).collect(),
        FS,
        samples,
    )
    .unwrap();
    let mut w = BufWriter::new(File::create(dir.join(format!("{name}.edf"))).unwrap());
    write_edf(&rec, false, &mut w).unwrap();
}

const SUMMARY: &str = "\
Data Sampling Rate: 64 Hz

File Name: chb90_01.edf
File Start Time: 11:42:54
File End Time: 12:07:54
Number of Seizures in File: 1
Seizure Start Time: 300 seconds
Seizure End Time: 340 seconds

File Name: chb90_02.edf
Number of Seizures in File: 0

File Name: chb90_03.edf
Number of Seizures in File: 2
Seizure 1 Start Time: 200 seconds
Seizure 1 End Time: 236 seconds
Seizure 2 Start Time: 1300 seconds
Seizure 2 End Time: 1345 seconds

File Name: chb90_04.edf
Number of Seizures in File: 1
Seizure Start Time: 100 seconds
Seizure End Time: 150 seconds
";

#[test]
fn canonical_montage_from_edf() {
    let tmp = tempfile::tempdir().unwrap();
    let subj = tmp.path().join("chb90");
    fs::create_dir(&subj).unwrap();
    write_recording(&subj, "chb90_01", &CHBMIT_ORDER, 1500);
    write_recording(&subj, "chb90_02", &CHBMIT_ORDER, 600);
    write_recording(&subj, "chb90_03", &CHBMIT_ORDER, 1500);
    // no FZ-CZ: unusable under the canonical montage
    let partial: Vec<&str> = CHBMIT_ORDER.iter().copied().filter(|c| *c != "FZ-CZ").collect();
    write_recording(&subj, "chb90_04", &partial, 1200);
    fs::write(subj.join("chb90-summary.txt"), SUMMARY).unwrap();

    let rows = parse_chbmit_summary(SUMMARY, "chb90").unwrap();
    assert_eq!(rows.len(), 4);
    let annotations = tmp.path().join("annotations.csv");
    write_annotations(&rows, &annotations).unwrap();

    let mut cfg = ExperimentConfig::default();
    cfg.seed = 4;
    cfg.data.recordings = Some(tmp.path().to_path_buf());
    cfg.data.annotations = Some(annotations);
    cfg.data.montage = Some("canonical".into());
    cfg.data.factor = 1;
    cfg.validate().unwrap();
    let (subjects, warnings) = load_subjects(&cfg).unwrap();

    assert!(
        warnings.iter().any(|w| w.contains("chb90_04") && w.contains("FZ-CZ")),
        "{warnings:?}"
    );
    assert_eq!(subjects.len(), 1);
    let files = &subjects[0].files;
    // one file per seizure of the usable recordings
    assert_eq!(files.len(), 3);
    for f in files {
        assert_eq!(f.channels, CANONICAL_MONTAGE);
        assert_eq!(f.fs, FS);
        for (c, name) in CANONICAL_MONTAGE.iter().enumerate() {
            // the first T8-P8 copy is the one selected
            let source = CHBMIT_ORDER.iter().position(|s| s.starts_with(name)).unwrap();
            let mean = f.samples[c].iter().sum::<f64>() / f.samples[c].len() as f64;
            assert!(
                (mean - 10.0 * source as f64).abs() < 0.5,
                "{} {name}: mean {mean}",
                f.id()
            );
        }
        let seizure = f.seizure_intervals().iter().map(|(a, b)| b - a).sum::<usize>() as f64 / FS;
        let total = f.duration_seconds();
        assert!((36.0..=45.0).contains(&seizure), "{}: {seizure} s of seizure", f.id());
        assert!(
            (total - 2.0 * seizure).abs() < 1.0 + 1.0 / FS,
            "{}: {total} s total for {seizure} s seizure",
            f.id()
        );
    }
}
