//! Seizure annotation CSV: `subject,recording,onset,offset` (seconds).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub subject: String,
    pub recording: String,
    pub onset: f64,
    pub offset: f64,
}

/// One seizure interval within a recording, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeizureAnnotation {
    pub onset: f64,
    pub offset: f64,
}

impl SeizureAnnotation {
    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

/// Checks ordering and overlap per (subject, recording).
pub(crate) fn validate_rows(rows: &[AnnotationRow]) -> Result<()> {
    let mut by_rec: BTreeMap<(&str, &str), Vec<&AnnotationRow>> = BTreeMap::new();
    for r in rows {
        if !(r.onset >= 0.0 && r.onset < r.offset && r.offset.is_finite()) {
            return Err(Error::Ingest(format!(
                "annotation {}/{}: onset {} must precede offset {}",
                r.subject, r.recording, r.onset, r.offset
            )));
        }
        by_rec.entry((&r.subject, &r.recording)).or_default().push(r);
    }
    for ((s, rec), mut v) in by_rec {
        v.sort_by(|a, b| a.onset.total_cmp(&b.onset));
        for w in v.windows(2) {
            if w[1].onset < w[0].offset {
                return Err(Error::Ingest(format!(
                    "annotations {s}/{rec}: seizures at {} and {} overlap",
                    w[0].onset, w[1].onset
                )));
            }
        }
    }
    Ok(())
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<AnnotationRow>, _>>()
        .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
    validate_rows(&rows)?;
    Ok(rows)
}

pub fn write_annotations(rows: &[AnnotationRow], path: &Path) -> Result<()> {
    let err = |e: csv::Error| Error::Ingest(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(err)?;
    w.write_record(["subject", "recording", "onset", "offset"])
        .map_err(err)?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the seizure times of a CHB-MIT `chbNN-summary.txt` file.
///
/// Recognizes `File Name:` lines and `Seizure [k] Start Time: <s> seconds` /
/// `Seizure [k] End Time: <s> seconds` pairs; everything else is ignored.
pub fn parse_chbmit_summary(text: &str, subject: &str) -> Result<Vec<AnnotationRow>> {
    let mut rows = Vec::new();
    let mut recording: Option<String> = None;
    let mut onset: Option<f64> = None;
    for (no, line) in text.lines().enumerate() {
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let key = key.trim();
        let bad = || Error::Ingest(format!("summary line {}: cannot parse {line:?}", no + 1));
        if key == "File Name" {
            let name = value.trim();
            recording = Some(name.strip_suffix(".edf").unwrap_or(name).to_string());
            onset = None;
        } else if key.starts_with("Seizure") && (key.ends_with("Start Time") || key.ends_with("End Time")) {
            let t: f64 = value
                .split_whitespace()
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(bad)?;
            let rec = recording.clone().ok_or_else(bad)?;
            if key.ends_with("Start Time") {
                onset = Some(t);
            } else {
                let on = onset.take().ok_or_else(bad)?;
                rows.push(AnnotationRow {
                    subject: subject.to_string(),
                    recording: rec,
                    onset: on,
                    offset: t,
                });
            }
        }
    }
    validate_rows(&rows)?;
    Ok(rows)
}
