//! Channel montage selection.

use std::fs;
use std::path::Path;

use super::Recording;
use crate::error::{Error, Result};

/// Longitudinal bipolar montage common to all CHB-MIT subjects.
pub const CANONICAL_MONTAGE: [&str; 18] = [
    "FP1-F7", "F7-T7", "T7-P7", "P7-O1", "FP1-F3", "F3-C3", "C3-P3", "P3-O1", "FP2-F4", "F4-C4", "C4-P4", "P4-O2",
    "FP2-F8", "F8-T8", "T8-P8", "P8-O2", "FZ-CZ", "CZ-PZ",
];

/// Upper-cases, trims and strips a trailing duplicate suffix such as
/// `"T8-P8-0"` (EDF files list repeated derivations that way).
pub fn normalize_channel_name(name: &str) -> String {
    let up = name.trim().to_ascii_uppercase();
    if let Some((head, tail)) = up.rsplit_once('-') {
        if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) && head.contains('-') {
            return head.to_string();
        }
    }
    up
}

/// Reads one channel name per line; blank lines and `#` comments are ignored.
pub fn load_montage(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let names: Vec<String> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    if names.is_empty() {
        return Err(Error::Config(format!("{}: montage lists no channels", path.display())));
    }
    Ok(names)
}

/// Restricts `rec` to `montage`, in montage order. The first channel whose
/// normalized name matches is used.
pub fn select_montage<S: AsRef<str>>(rec: &Recording, montage: &[S]) -> Result<Recording> {
    let normalized: Vec<String> = rec.channels.iter().map(|c| normalize_channel_name(c)).collect();
    let mut channels = Vec::with_capacity(montage.len());
    let mut samples = Vec::with_capacity(montage.len());
    for want in montage {
        let key = normalize_channel_name(want.as_ref());
        let idx = normalized.iter().position(|n| *n == key).ok_or_else(|| {
            Error::Ingest(format!(
                "recording {} lacks montage channel {}",
                rec.name,
                want.as_ref()
            ))
        })?;
        channels.push(key);
        samples.push(rec.samples[idx].clone());
    }
    Ok(Recording {
        channels,
        samples,
        ..rec.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(names: &[&str]) -> Recording {
        let samples = (0..names.len()).map(|i| vec![i as f64; 4]).collect();
        Recording::new("s", "r", names.iter().map(|s| s.to_string()).collect(), 256.0, samples).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_channel_name(" fp1-f7 "), "FP1-F7");
        assert_eq!(normalize_channel_name("T8-P8-0"), "T8-P8");
        assert_eq!(normalize_channel_name("T8-P8-1"), "T8-P8");
        assert_eq!(normalize_channel_name("ECG"), "ECG");
        assert_eq!(normalize_channel_name("-"), "-");
    }

    #[test]
    fn selects_in_canonical_order() {
        let mut names: Vec<&str> = CANONICAL_MONTAGE.iter().rev().copied().collect();
        names.insert(3, "ECG");
        names.push("VNS");
        let r = rec(&names);
        let out = select_montage(&r, &CANONICAL_MONTAGE).unwrap();
        assert_eq!(out.channels, CANONICAL_MONTAGE);
        assert_eq!(
            out.samples[0][0],
            r.samples[r.channels.iter().position(|c| c == "FP1-F7").unwrap()][0]
        );
        assert_eq!(select_montage(&out, &CANONICAL_MONTAGE).unwrap(), out);
    }

    #[test]
    fn missing_channel_is_named() {
        let r = rec(&CANONICAL_MONTAGE[1..]);
        let err = select_montage(&r, &CANONICAL_MONTAGE).unwrap_err();
        assert!(matches!(&err, Error::Ingest(m) if m.contains("FP1-F7")), "{err}");
    }
}
