//! Per-seizure files with balanced non-seizure data, windowing, manifests.

use std::borrow::Cow;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::annotations::validate_rows;
use super::{
    normalize_channel_name, read_recording, read_recording_info, select_montage, AnnotationRow, Recording,
    RecordingInfo, SeizureAnnotation,
};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::training::GlobalLabel;

/// No non-seizure data within this many seconds before an onset.
pub const EXCLUSION_BEFORE_SECONDS: f64 = 60.0;
/// No non-seizure data within this many seconds after an offset.
pub const EXCLUSION_AFTER_SECONDS: f64 = 900.0;
/// Lower bound on a non-seizure chunk (unless the whole budget is smaller).
pub const MIN_CHUNK_SECONDS: f64 = 60.0;
/// Non-seizure budgets above this are split into several chunks.
pub(crate) const MAX_CHUNK_SECONDS: f64 = 300.0;

/// Interval around a seizure that non-seizure sampling must avoid, seconds.
pub fn exclusion_zone(a: &SeizureAnnotation) -> (f64, f64) {
    (a.onset - EXCLUSION_BEFORE_SECONDS, a.offset + EXCLUSION_AFTER_SECONDS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Seizure,
    NonSeizure,
}

/// A contiguous piece of a subject file and where it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub recording: String,
    /// Source file, when the recording was read from disk.
    pub source: Option<PathBuf>,
    /// First sample in the source recording.
    pub source_start: usize,
    /// First sample in the subject file.
    pub file_start: usize,
    pub len: usize,
}

/// One seizure plus `factor` times as much non-seizure data.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectFile {
    pub subject: String,
    pub index: usize,
    pub factor: u32,
    pub seed: u64,
    pub fs: f64,
    pub channels: Vec<String>,
    pub segments: Vec<Segment>,
    /// Channel-major samples.
    pub samples: Vec<Vec<f64>>,
}

impl SubjectFile {
    /// `"<subject>/<index>"`, the provenance tag of this file.
    pub fn id(&self) -> String {
        format!("{}/{}", self.subject, self.index)
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn duration_seconds(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }

    /// Seizure sample ranges `[start, end)` within the file.
    pub fn seizure_intervals(&self) -> Vec<(usize, usize)> {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Seizure)
            .map(|s| (s.file_start, s.file_start + s.len))
            .collect()
    }

    pub fn samples_of(&self, kind: SegmentKind) -> usize {
        self.segments.iter().filter(|s| s.kind == kind).map(|s| s.len).sum()
    }

    pub fn window_labels(&self, window_seconds: f64, step_seconds: f64) -> Vec<GlobalLabel> {
        window_labels(
            self.n_samples(),
            &self.seizure_intervals(),
            self.fs,
            window_seconds,
            step_seconds,
        )
    }

    pub fn manifest(&self) -> FileManifest {
        FileManifest {
            subject: self.subject.clone(),
            index: self.index,
            factor: self.factor,
            seed: self.seed,
            fs: self.fs,
            channels: self.channels.clone(),
            n_samples: self.n_samples(),
            segments: self.segments.clone(),
        }
    }
}

fn samples_of(seconds: f64, fs: f64) -> usize {
    (seconds * fs).round() as usize
}

/// Number of windows: `floor((n - wlen) / wstep) + 1`, or 0 if too short.
pub fn window_count(n_samples: usize, fs: f64, window_seconds: f64, step_seconds: f64) -> usize {
    let w = samples_of(window_seconds, fs);
    let s = samples_of(step_seconds, fs).max(1);
    if w == 0 || n_samples < w {
        0
    } else {
        (n_samples - w) / s + 1
    }
}

/// A window is seizure iff at least half of its samples lie in a seizure.
pub fn window_labels(
    n_samples: usize,
    seizures: &[(usize, usize)],
    fs: f64,
    window_seconds: f64,
    step_seconds: f64,
) -> Vec<GlobalLabel> {
    let w = samples_of(window_seconds, fs);
    let s = samples_of(step_seconds, fs).max(1);
    (0..window_count(n_samples, fs, window_seconds, step_seconds))
        .map(|k| {
            let (a, b) = (k * s, k * s + w);
            let inside: usize = seizures
                .iter()
                .map(|&(lo, hi)| hi.min(b).saturating_sub(lo.max(a)))
                .sum();
            GlobalLabel::from_bool(2 * inside >= w)
        })
        .collect()
}

/// Free sample ranges of one recording.
struct Free {
    rec: usize,
    ranges: Vec<(usize, usize)>,
}

impl Free {
    fn remove(&mut self, lo: usize, hi: usize) {
        let mut out = Vec::with_capacity(self.ranges.len() + 1);
        for &(a, b) in &self.ranges {
            if hi <= a || b <= lo {
                out.push((a, b));
                continue;
            }
            if a < lo {
                out.push((a, lo));
            }
            if hi < b {
                out.push((hi, b));
            }
        }
        self.ranges = out;
    }
}

/// Splits a budget into near-equal chunks of at most 300 s and at least
/// 60 s (one chunk when the budget itself is shorter).
fn chunk_lengths(total: usize, fs: f64) -> Vec<usize> {
    let max = samples_of(MAX_CHUNK_SECONDS, fs);
    let min = samples_of(MIN_CHUNK_SECONDS, fs);
    let mut k = total.div_ceil(max).max(1);
    if total / k < min {
        k = (total / min).max(1);
    }
    let base = total / k;
    let extra = total % k;
    (0..k).map(|i| base + usize::from(i < extra)).collect()
}

/// Plans one file per annotated seizure of a single subject, from
/// recording metadata only.
///
/// Non-seizure chunks are drawn uniformly among all positions that avoid
/// every exclusion zone and every chunk already used by this subject.
pub fn plan_subject_files(
    recordings: &[RecordingInfo],
    annotations: &[AnnotationRow],
    factor: u32,
    seed: u64,
) -> Result<Vec<FileManifest>> {
    if factor == 0 {
        return Err(Error::Config("balancing factor must be positive".into()));
    }
    let first = recordings
        .first()
        .ok_or_else(|| Error::Ingest("no recordings given".into()))?;
    let subject = first.subject.clone();
    for r in recordings {
        if r.subject != subject {
            return Err(Error::Ingest(format!(
                "recording {} belongs to subject {:?}, expected {subject:?}",
                r.name, r.subject
            )));
        }
        if r.fs != first.fs || r.channels != first.channels {
            return Err(Error::Ingest(format!(
                "recording {} differs from {} in sampling rate or channels; select a montage first",
                r.name, first.name
            )));
        }
    }
    let fs = first.fs;
    let rows: Vec<AnnotationRow> = annotations.iter().filter(|a| a.subject == subject).cloned().collect();
    validate_rows(&rows)?;

    let mut seizures: Vec<(usize, SeizureAnnotation)> = Vec::new();
    for a in &rows {
        let idx = recordings.iter().position(|r| r.name == a.recording).ok_or_else(|| {
            Error::Ingest(format!(
                "annotation refers to unknown recording {}/{}",
                a.subject, a.recording
            ))
        })?;
        if a.offset > recordings[idx].duration_seconds() + 1e-9 {
            return Err(Error::Ingest(format!(
                "seizure {}-{} s lies beyond the end of {} ({} s)",
                a.onset,
                a.offset,
                a.recording,
                recordings[idx].duration_seconds()
            )));
        }
        seizures.push((
            idx,
            SeizureAnnotation {
                onset: a.onset,
                offset: a.offset,
            },
        ));
    }
    seizures.sort_by(|a, b| {
        recordings[a.0]
            .name
            .cmp(&recordings[b.0].name)
            .then(a.1.onset.total_cmp(&b.1.onset))
    });

    let to_sample = |r: &RecordingInfo, t: f64| ((t * fs).round().max(0.0) as usize).min(r.n_samples);
    let mut free: Vec<Free> = recordings
        .iter()
        .enumerate()
        .map(|(i, r)| Free {
            rec: i,
            ranges: vec![(0, r.n_samples)],
        })
        .collect();
    for &(idx, a) in &seizures {
        let (lo, hi) = exclusion_zone(&a);
        let lo = (lo * fs).floor().max(0.0) as usize;
        let hi = (hi * fs).ceil().max(0.0) as usize;
        free[idx].remove(lo, hi);
    }

    let mut files = Vec::with_capacity(seizures.len());
    for (i, &(idx, a)) in seizures.iter().enumerate() {
        let rec = &recordings[idx];
        let file_seed = derive_seed(seed, &[&subject, &i.to_string()]);
        let mut rng = ChaCha8Rng::seed_from_u64(file_seed);
        let s_lo = to_sample(rec, a.onset);
        let s_hi = to_sample(rec, a.offset);
        let seizure = Segment {
            kind: SegmentKind::Seizure,
            recording: rec.name.clone(),
            source: rec.source.clone(),
            source_start: s_lo,
            file_start: 0,
            len: s_hi - s_lo,
        };

        let mut chunks = Vec::new();
        for len in chunk_lengths(factor as usize * seizure.len, fs) {
            let weight = |a: usize, b: usize| if b - a >= len { (b - a - len + 1) as u64 } else { 0 };
            let total: u64 = free
                .iter()
                .flat_map(|f| f.ranges.iter())
                .map(|&(a, b)| weight(a, b))
                .sum();
            if total == 0 {
                return Err(Error::Ingest(format!(
                    "subject {subject}: not enough eligible non-seizure data for seizure {i} \
                     ({} s needed in chunks of {} s)",
                    (factor as usize * seizure.len) as f64 / fs,
                    len as f64 / fs
                )));
            }
            let mut u = rng.random_range(0..total);
            let mut pick = None;
            'outer: for f in &free {
                for &(a, b) in &f.ranges {
                    let w = weight(a, b);
                    if u < w {
                        pick = Some((f.rec, a + u as usize));
                        break 'outer;
                    }
                    u -= w;
                }
            }
            let (ri, start) = pick.expect("weighted draw within total");
            free[ri].remove(start, start + len);
            chunks.push(Segment {
                kind: SegmentKind::NonSeizure,
                recording: recordings[ri].name.clone(),
                source: recordings[ri].source.clone(),
                source_start: start,
                file_start: 0,
                len,
            });
        }
        let slot = rng.random_range(0..=chunks.len());
        chunks.insert(slot, seizure);
        let mut pos = 0;
        for seg in &mut chunks {
            seg.file_start = pos;
            pos += seg.len;
        }
        files.push(FileManifest {
            subject: subject.clone(),
            index: i,
            factor,
            seed: file_seed,
            fs,
            channels: rec.channels.clone(),
            n_samples: pos,
            segments: chunks,
        });
    }
    Ok(files)
}

/// Fills planned files from recordings, loading each source once.
fn materialize<'a, F>(plans: Vec<FileManifest>, mut load: F) -> Result<Vec<SubjectFile>>
where
    F: FnMut(&Segment, &FileManifest) -> Result<Cow<'a, Recording>>,
{
    let mut out: Vec<SubjectFile> = plans
        .iter()
        .map(|fm| SubjectFile {
            subject: fm.subject.clone(),
            index: fm.index,
            factor: fm.factor,
            seed: fm.seed,
            fs: fm.fs,
            channels: fm.channels.clone(),
            segments: fm.segments.clone(),
            samples: vec![vec![0.0; fm.n_samples]; fm.channels.len()],
        })
        .collect();
    let key = |s: &Segment| (s.recording.clone(), s.source.clone());
    let mut sources: Vec<(String, Option<PathBuf>)> = Vec::new();
    for s in plans.iter().flat_map(|f| &f.segments) {
        if !sources.contains(&key(s)) {
            sources.push(key(s));
        }
    }
    for src in sources {
        let mut rec: Option<Cow<'a, Recording>> = None;
        for (fi, fm) in plans.iter().enumerate() {
            for seg in fm.segments.iter().filter(|s| key(s) == src) {
                if rec.is_none() {
                    rec = Some(load(seg, fm)?);
                }
                let r = rec.as_ref().unwrap();
                if seg.source_start + seg.len > r.n_samples() || r.channels.len() != fm.channels.len() {
                    return Err(Error::Ingest(format!(
                        "segment {}..{} of {} does not fit recording {} ({} samples, {} channels)",
                        seg.source_start,
                        seg.source_start + seg.len,
                        out[fi].id(),
                        r.name,
                        r.n_samples(),
                        r.channels.len()
                    )));
                }
                for (o, ch) in out[fi].samples.iter_mut().zip(&r.samples) {
                    o[seg.file_start..seg.file_start + seg.len]
                        .copy_from_slice(&ch[seg.source_start..seg.source_start + seg.len]);
                }
            }
        }
    }
    Ok(out)
}

/// Builds one file per annotated seizure of a single subject from
/// in-memory recordings.
pub fn build_subject_files(
    recordings: &[Recording],
    annotations: &[AnnotationRow],
    factor: u32,
    seed: u64,
) -> Result<Vec<SubjectFile>> {
    for r in recordings {
        r.validate()?;
    }
    let infos: Vec<RecordingInfo> = recordings.iter().map(Recording::info).collect();
    let plans = plan_subject_files(&infos, annotations, factor, seed)?;
    materialize(plans, |seg, _| {
        recordings
            .iter()
            .find(|r| r.name == seg.recording)
            .map(Cow::Borrowed)
            .ok_or_else(|| Error::Ingest(format!("unknown recording {}", seg.recording)))
    })
}

/// Reads the sources of planned files from disk, one recording at a time.
/// Relative source paths are resolved against `base`.
pub fn materialize_from_disk(plans: Vec<FileManifest>, base: &Path) -> Result<Vec<SubjectFile>> {
    materialize(plans, |seg, fm| {
        let src = seg
            .source
            .as_ref()
            .ok_or_else(|| Error::Ingest(format!("segment of {}/{} has no source file", fm.subject, fm.index)))?;
        let full = if src.is_absolute() { src.clone() } else { base.join(src) };
        let rec = read_recording(&full, &fm.subject)?;
        Ok(Cow::Owned(select_montage(&rec, &fm.channels)?))
    })
}

/// Prepares a subject's files from recordings on disk. Recordings lacking a
/// montage channel are skipped (with their seizures) and reported.
pub fn prepare_subject_from_disk(
    paths: &[PathBuf],
    subject: &str,
    annotations: &[AnnotationRow],
    montage: Option<&[String]>,
    factor: u32,
    seed: u64,
) -> Result<(Vec<SubjectFile>, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut infos = Vec::with_capacity(paths.len());
    for p in paths {
        let mut info = read_recording_info(p, subject)?;
        if let Some(m) = montage {
            let have: Vec<String> = info.channels.iter().map(|c| normalize_channel_name(c)).collect();
            let missing: Vec<&String> = m
                .iter()
                .filter(|c| !have.contains(&normalize_channel_name(c)))
                .collect();
            if !missing.is_empty() {
                warnings.push(format!(
                    "skipping {}: lacks montage channel {}",
                    p.display(),
                    missing[0]
                ));
                continue;
            }
            info.channels = m.iter().map(|c| normalize_channel_name(c)).collect();
        }
        infos.push(info);
    }
    let kept: Vec<AnnotationRow> = annotations
        .iter()
        .filter(|a| a.subject == subject)
        .filter(|a| {
            let ok = infos.iter().any(|i| i.name == a.recording);
            if !ok {
                warnings.push(format!(
                    "dropping seizure {}-{} s of {}/{}: recording unavailable",
                    a.onset, a.offset, a.subject, a.recording
                ));
            }
            ok
        })
        .cloned()
        .collect();
    if infos.is_empty() {
        return Err(Error::Ingest(format!("subject {subject}: no usable recordings")));
    }
    let plans = plan_subject_files(&infos, &kept, factor, seed)?;
    Ok((materialize_from_disk(plans, Path::new("."))?, warnings))
}

/// Description of one subject file without its samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileManifest {
    pub subject: String,
    pub index: usize,
    pub factor: u32,
    pub seed: u64,
    pub fs: f64,
    pub channels: Vec<String>,
    pub n_samples: usize,
    pub segments: Vec<Segment>,
}

/// Every subject file of a prepared dataset, with provenance and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub factor: u32,
    pub files: Vec<FileManifest>,
}

impl DatasetManifest {
    pub fn new(seed: u64, factor: u32, files: &[SubjectFile]) -> Self {
        Self {
            seed,
            factor,
            files: files.iter().map(SubjectFile::manifest).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Ingest(format!("dataset manifest: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Rebuilds the subject files of a manifest by re-reading their sources.
/// Relative source paths are resolved against the manifest's directory.
pub fn load_dataset(path: &Path) -> Result<Vec<SubjectFile>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = DatasetManifest::from_json(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    materialize_from_disk(manifest.files, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recording(name: &str, seconds: usize, fs: f64) -> Recording {
        let n = seconds * fs as usize;
        let samples = vec![(0..n).map(|i| i as f64).collect()];
        Recording::new("s", name, vec!["C".into()], fs, samples).unwrap()
    }

    fn ann(rec: &str, on: f64, off: f64) -> AnnotationRow {
        AnnotationRow {
            subject: "s".into(),
            recording: rec.into(),
            onset: on,
            offset: off,
        }
    }

    #[test]
    fn exclusion_zone_arithmetic() {
        let z = exclusion_zone(&SeizureAnnotation {
            onset: 1000.0,
            offset: 1060.0,
        });
        assert_eq!(z, (940.0, 1960.0));
    }

    #[test]
    fn window_count_and_labels() {
        assert_eq!(window_count(100 * 4, 4.0, 8.0, 1.0), 93);
        assert_eq!(window_count(7 * 4, 4.0, 8.0, 1.0), 0);
        // seizure covering seconds [10, 20) at fs = 1
        let l = window_labels(30, &[(10, 20)], 1.0, 8.0, 1.0);
        assert_eq!(l.len(), 23);
        let first = l.iter().position(|x| x.is_seizure()).unwrap();
        let last = l.iter().rposition(|x| x.is_seizure()).unwrap();
        // window k covers [k, k+8); needs >= 4 seizure seconds
        assert_eq!((first, last), (6, 16));
    }

    #[test]
    fn factor_ratio_and_exclusion() {
        let fs = 4.0;
        let recs = vec![recording("a", 4000, fs), recording("b", 4000, fs)];
        let anns = vec![
            ann("a", 1000.0, 1060.0),
            ann("b", 2000.0, 2030.0),
            ann("a", 3000.0, 3040.0),
        ];
        for factor in [1u32, 5, 10] {
            let files = build_subject_files(&recs, &anns, factor, 7).unwrap();
            assert_eq!(files.len(), 3);
            for f in &files {
                let s = f.samples_of(SegmentKind::Seizure);
                assert_eq!(f.samples_of(SegmentKind::NonSeizure), factor as usize * s);
                for seg in f.segments.iter().filter(|s| s.kind == SegmentKind::NonSeizure) {
                    let t0 = seg.source_start as f64 / fs;
                    let t1 = (seg.source_start + seg.len) as f64 / fs;
                    for a in anns.iter().filter(|a| a.recording == seg.recording) {
                        let (lo, hi) = exclusion_zone(&SeizureAnnotation {
                            onset: a.onset,
                            offset: a.offset,
                        });
                        assert!(t1 <= lo || t0 >= hi, "{t0}-{t1} intersects {lo}-{hi}");
                    }
                }
                // samples trace back to their source positions (source value == index)
                for seg in &f.segments {
                    let src = recs.iter().find(|r| r.name == seg.recording).unwrap();
                    assert_eq!(
                        &f.samples[0][seg.file_start..seg.file_start + seg.len],
                        &src.samples[0][seg.source_start..seg.source_start + seg.len]
                    );
                }
            }
        }
    }

    #[test]
    fn chunks_never_overlap_within_subject() {
        let recs = vec![recording("a", 6000, 2.0)];
        let anns = vec![ann("a", 100.0, 200.0), ann("a", 5000.0, 5100.0)];
        let files = build_subject_files(&recs, &anns, 5, 1).unwrap();
        let mut used: Vec<(usize, usize)> = files
            .iter()
            .flat_map(|f| f.segments.iter())
            .filter(|s| s.kind == SegmentKind::NonSeizure)
            .map(|s| (s.source_start, s.source_start + s.len))
            .collect();
        used.sort();
        for w in used.windows(2) {
            assert!(w[0].1 <= w[1].0);
        }
        for s in files.iter().flat_map(|f| f.segments.iter()) {
            assert!(s.kind == SegmentKind::Seizure || s.len as f64 / 2.0 >= MIN_CHUNK_SECONDS);
        }
    }

    #[test]
    fn insufficient_data_is_an_error() {
        let recs = vec![recording("a", 1200, 2.0)];
        let anns = vec![ann("a", 100.0, 200.0)];
        assert!(matches!(
            build_subject_files(&recs, &anns, 10, 1),
            Err(Error::Ingest(_))
        ));
    }

    #[test]
    fn deterministic() {
        let recs = vec![recording("a", 4000, 2.0)];
        let anns = vec![ann("a", 1000.0, 1060.0), ann("a", 3000.0, 3030.0)];
        assert_eq!(
            build_subject_files(&recs, &anns, 5, 3).unwrap(),
            build_subject_files(&recs, &anns, 5, 3).unwrap()
        );
    }
}
