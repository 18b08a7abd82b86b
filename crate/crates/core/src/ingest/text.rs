//! Columnar text signals.
//!
//! ```text
//! # fs=256
//! # channels=FP1-F7,F7-T7
//! 12.5,-3.0
//! 11.9,-2.7
//! ```
//!
//! One row per sample, one column per channel, values in microvolts.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{file_stem, Recording};
use crate::error::{Error, Result};

pub fn parse_text<R: BufRead>(r: R, name: &str) -> Result<Recording> {
    let mut fs = None;
    let mut channels: Option<Vec<String>> = None;
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            let h = h.trim();
            if let Some(v) = h.strip_prefix("fs=") {
                fs = Some(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Ingest(format!("{name}:{}: bad sampling rate {v:?}", lineno + 1)))?,
                );
            } else if let Some(v) = h.strip_prefix("channels=") {
                let names: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
                samples = vec![Vec::new(); names.len()];
                channels = Some(names);
            }
            continue;
        }
        let Some(names) = &channels else {
            return Err(Error::Ingest(format!(
                "{name}:{}: data before the channels header",
                lineno + 1
            )));
        };
        let mut n = 0;
        for (c, field) in line.split(',').enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Ingest(format!("{name}:{}: bad value {field:?}", lineno + 1)))?;
            samples
                .get_mut(c)
                .ok_or_else(|| Error::Ingest(format!("{name}:{}: too many columns", lineno + 1)))?
                .push(v);
            n += 1;
        }
        if n != names.len() {
            return Err(Error::Ingest(format!(
                "{name}:{}: {n} columns, expected {}",
                lineno + 1,
                names.len()
            )));
        }
    }
    let fs = fs.ok_or_else(|| Error::Ingest(format!("{name}: missing '# fs=' header")))?;
    let channels = channels.ok_or_else(|| Error::Ingest(format!("{name}: missing '# channels=' header")))?;
    Recording::new("", name, channels, fs, samples)
}

pub fn read_text(path: &Path) -> Result<Recording> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rec = parse_text(BufReader::new(f), &file_stem(path))?;
    rec.source = Some(path.to_path_buf());
    Ok(rec)
}

pub fn write_text(rec: &Recording, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "# fs={}", rec.fs).map_err(io)?;
    writeln!(w, "# channels={}", rec.channels.join(",")).map_err(io)?;
    let mut line = String::new();
    for i in 0..rec.n_samples() {
        line.clear();
        for (c, ch) in rec.samples.iter().enumerate() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&ch[i].to_string());
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}
