//! EDF reader for the continuous 16-bit subset, plus a writer for fixtures.
//!
//! Layout: a 256-byte fixed header, 256 bytes per signal of per-signal
//! header fields (stored field-major), then `n_records` data records each
//! holding `samples_per_record[s]` little-endian `i16` values per signal.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{file_stem, Recording, RecordingInfo};
use crate::error::{Error, Result};

const ANNOTATION_LABEL: &str = "EDF Annotations";

/// Per-signal header fields.
#[derive(Clone, Debug, PartialEq)]
pub struct EdfSignalHeader {
    pub label: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub samples_per_record: usize,
}

impl EdfSignalHeader {
    fn is_annotation(&self) -> bool {
        self.label.trim() == ANNOTATION_LABEL
    }

    /// Scale from physical units to microvolts.
    fn unit_scale(&self) -> f64 {
        match self.physical_dimension.trim() {
            "mV" => 1e3,
            "V" => 1e6,
            "nV" => 1e-3,
            _ => 1.0,
        }
    }

    pub fn to_physical(&self, digital: i16) -> f64 {
        let span_d = (self.digital_max - self.digital_min) as f64;
        let span_p = self.physical_max - self.physical_min;
        (digital as f64 - self.digital_min as f64) * span_p / span_d + self.physical_min
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn field(&mut self, len: usize, what: &str) -> Result<&'a str> {
        let start = self.pos;
        let bytes = self
            .data
            .get(start..start + len)
            .ok_or_else(|| Error::Ingest(format!("EDF header truncated reading {what} at byte {start}")))?;
        self.pos += len;
        std::str::from_utf8(bytes)
            .map(str::trim)
            .map_err(|_| Error::Ingest(format!("EDF {what} is not ASCII at byte {start}")))
    }

    fn number<T: std::str::FromStr>(&mut self, len: usize, what: &str) -> Result<T> {
        let start = self.pos;
        let s = self.field(len, what)?;
        s.parse()
            .map_err(|_| Error::Ingest(format!("EDF {what} {s:?} is not a number at byte {start}")))
    }
}

/// Parsed EDF header.
#[derive(Clone, Debug, PartialEq)]
pub struct EdfHeader {
    pub header_bytes: usize,
    /// Declared record count; -1 means unknown.
    pub n_records: i64,
    pub record_seconds: f64,
    pub signals: Vec<EdfSignalHeader>,
}

impl EdfHeader {
    /// Bytes of one data record.
    pub fn record_bytes(&self) -> usize {
        2 * self.signals.iter().map(|s| s.samples_per_record).sum::<usize>()
    }

    /// Indices of the data (non-annotation) signals.
    pub fn data_signals(&self) -> Vec<usize> {
        (0..self.signals.len())
            .filter(|&i| !self.signals[i].is_annotation())
            .collect()
    }

    /// Checks the data signals and returns their common samples per record.
    fn check_signals(&self) -> Result<usize> {
        let keep = self.data_signals();
        let ns = self.signals.len();
        let Some(&k0) = keep.first() else {
            return Err(Error::Ingest("EDF file has no data signals".into()));
        };
        let spr0 = self.signals[k0].samples_per_record;
        for &i in &keep {
            let s = &self.signals[i];
            if s.samples_per_record != spr0 {
                return Err(Error::Ingest(format!(
                    "signal {:?} has {} samples per record, expected {spr0}; mixed rates are not supported",
                    s.label, s.samples_per_record
                )));
            }
            if s.digital_max <= s.digital_min || s.physical_max == s.physical_min {
                let at = 256 + 104 * ns + 8 * i;
                return Err(Error::Ingest(format!(
                    "signal {:?} has a degenerate calibration range (near byte {at})",
                    s.label
                )));
            }
        }
        if spr0 == 0 {
            return Err(Error::Ingest("EDF data records are empty".into()));
        }
        Ok(spr0)
    }

    /// Number of complete records, checked against the file length.
    fn records_in(&self, file_len: usize) -> Result<usize> {
        if file_len < self.header_bytes {
            return Err(Error::Ingest(format!(
                "EDF header truncated: {} bytes declared, file has {file_len}",
                self.header_bytes
            )));
        }
        let record_bytes = self.record_bytes();
        let available = file_len - self.header_bytes;
        let n = if self.n_records < 0 {
            available / record_bytes
        } else {
            self.n_records as usize
        };
        if available < n * record_bytes {
            let complete = available / record_bytes;
            return Err(Error::Ingest(format!(
                "EDF data truncated: record {complete} starts at byte {} but the file has {file_len} bytes",
                self.header_bytes + complete * record_bytes
            )));
        }
        Ok(n)
    }
}

/// Parses the fixed and per-signal header from the start of a file.
pub fn parse_edf_header(data: &[u8]) -> Result<EdfHeader> {
    let mut c = Cursor { data, pos: 0 };
    let version = c.field(8, "version")?;
    if version != "0" {
        return Err(Error::Ingest(format!("unsupported EDF version {version:?} at byte 0")));
    }
    c.field(80, "patient id")?;
    c.field(80, "recording id")?;
    c.field(8, "start date")?;
    c.field(8, "start time")?;
    let header_bytes: usize = c.number(8, "header size")?;
    let reserved = c.field(44, "reserved")?;
    if reserved.starts_with("EDF+D") {
        return Err(Error::Ingest(
            "discontinuous EDF+D files are not supported (byte 192)".into(),
        ));
    }
    let n_records: i64 = c.number(8, "record count")?;
    let record_seconds: f64 = c.number(8, "record duration")?;
    let ns: usize = c.number(4, "signal count")?;
    if ns == 0 {
        return Err(Error::Ingest("EDF file declares no signals (byte 252)".into()));
    }
    if header_bytes != 256 * (ns + 1) {
        return Err(Error::Ingest(format!(
            "EDF header size {header_bytes} does not match {ns} signals (byte 184)"
        )));
    }
    if !(record_seconds > 0.0) {
        return Err(Error::Ingest(format!(
            "EDF record duration {record_seconds} must be positive (byte 244)"
        )));
    }

    let strings = |c: &mut Cursor, len: usize, what: &str| -> Result<Vec<String>> {
        (0..ns).map(|_| c.field(len, what).map(str::to_string)).collect()
    };
    let numbers_f = |c: &mut Cursor, what: &str| -> Result<Vec<f64>> { (0..ns).map(|_| c.number(8, what)).collect() };
    let numbers_i = |c: &mut Cursor, what: &str| -> Result<Vec<i32>> { (0..ns).map(|_| c.number(8, what)).collect() };

    let labels = strings(&mut c, 16, "signal label")?;
    strings(&mut c, 80, "transducer")?;
    let dims = strings(&mut c, 8, "physical dimension")?;
    let pmin = numbers_f(&mut c, "physical minimum")?;
    let pmax = numbers_f(&mut c, "physical maximum")?;
    let dmin = numbers_i(&mut c, "digital minimum")?;
    let dmax = numbers_i(&mut c, "digital maximum")?;
    strings(&mut c, 80, "prefiltering")?;
    let spr: Vec<usize> = (0..ns)
        .map(|_| c.number(8, "samples per record"))
        .collect::<Result<_>>()?;
    strings(&mut c, 32, "signal reserved")?;

    let signals = (0..ns)
        .map(|i| EdfSignalHeader {
            label: labels[i].clone(),
            physical_dimension: dims[i].clone(),
            physical_min: pmin[i],
            physical_max: pmax[i],
            digital_min: dmin[i],
            digital_max: dmax[i],
            samples_per_record: spr[i],
        })
        .collect();
    Ok(EdfHeader {
        header_bytes,
        n_records,
        record_seconds,
        signals,
    })
}

/// Parses an EDF byte buffer. Annotation signals are skipped.
pub fn parse_edf(data: &[u8], name: &str) -> Result<Recording> {
    let h = parse_edf_header(data)?;
    let spr0 = h.check_signals()?;
    let n_records = h.records_in(data.len())?;
    let record_bytes = h.record_bytes();
    let keep = h.data_signals();

    let mut samples: Vec<Vec<f64>> = keep.iter().map(|_| Vec::with_capacity(n_records * spr0)).collect();
    let mut offsets = Vec::with_capacity(h.signals.len());
    let mut acc = 0;
    for s in &h.signals {
        offsets.push(acc);
        acc += 2 * s.samples_per_record;
    }
    for r in 0..n_records {
        let base = h.header_bytes + r * record_bytes;
        for (out, &i) in samples.iter_mut().zip(&keep) {
            let s = &h.signals[i];
            let scale = s.unit_scale();
            let start = base + offsets[i];
            let raw = &data[start..start + 2 * s.samples_per_record];
            out.extend(
                raw.chunks_exact(2)
                    .map(|b| s.to_physical(i16::from_le_bytes([b[0], b[1]])) * scale),
            );
        }
    }

    let rec = Recording {
        subject: String::new(),
        name: name.to_string(),
        channels: keep.iter().map(|&i| h.signals[i].label.clone()).collect(),
        fs: spr0 as f64 / h.record_seconds,
        samples,
        source: None,
    };
    rec.validate()?;
    Ok(rec)
}

/// Reads only the header of an EDF file.
pub fn read_edf_info(path: &Path) -> Result<RecordingInfo> {
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let file_len = f.metadata().map_err(|e| Error::io(path, e))?.len() as usize;
    let mut head = vec![0u8; 256];
    f.read_exact(&mut head)
        .map_err(|_| Error::Ingest(format!("{}: EDF header truncated at byte 0", path.display())))?;
    let ns: usize = std::str::from_utf8(&head[252..256])
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Ingest(format!("{}: bad signal count at byte 252", path.display())))?;
    head.resize(256 * (ns + 1), 0);
    f.read_exact(&mut head[256..])
        .map_err(|_| Error::Ingest(format!("{}: EDF signal headers truncated at byte 256", path.display())))?;
    let h = parse_edf_header(&head)?;
    let spr0 = h.check_signals()?;
    let n_records = h.records_in(file_len)?;
    Ok(RecordingInfo {
        subject: String::new(),
        name: file_stem(path),
        channels: h.data_signals().iter().map(|&i| h.signals[i].label.clone()).collect(),
        fs: spr0 as f64 / h.record_seconds,
        n_samples: n_records * spr0,
        source: Some(path.to_path_buf()),
    })
}

pub fn read_edf(path: &Path) -> Result<Recording> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut rec = parse_edf(&data, &file_stem(path))?;
    rec.source = Some(path.to_path_buf());
    Ok(rec)
}

fn ascii(out: &mut Vec<u8>, s: &str, len: usize) {
    let mut b: Vec<u8> = s.bytes().take(len).collect();
    b.resize(len, b' ');
    out.extend_from_slice(&b);
}

/// Writes `rec` as EDF with one-second records. Each channel is quantized
/// to 16 bits over its own sample range. With `annotation_signal` an empty
/// "EDF Annotations" signal is appended, as EDF+ writers do.
pub fn write_edf<W: Write>(rec: &Recording, annotation_signal: bool, w: &mut W) -> Result<()> {
    rec.validate()?;
    let spr = rec.fs.round() as usize;
    if (rec.fs - spr as f64).abs() > 1e-9 || spr == 0 {
        return Err(Error::Usage(format!(
            "EDF writer needs an integer sampling rate, got {}",
            rec.fs
        )));
    }
    let n = rec.n_samples();
    if !n.is_multiple_of(spr) {
        return Err(Error::Usage(format!(
            "{n} samples is not a whole number of 1 s records"
        )));
    }
    let n_records = n / spr;
    let ns = rec.channels.len() + usize::from(annotation_signal);
    let (dmin, dmax) = (-32768i32, 32767i32);

    let ranges: Vec<(f64, f64)> = rec
        .samples
        .iter()
        .map(|c| {
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() && hi > lo {
                (lo, hi)
            } else {
                let v = if lo.is_finite() { lo } else { 0.0 };
                (v - 1.0, v + 1.0)
            }
        })
        .collect();

    let mut h = Vec::with_capacity(256 * (ns + 1));
    ascii(&mut h, "0", 8);
    ascii(&mut h, &rec.subject, 80);
    ascii(&mut h, &rec.name, 80);
    ascii(&mut h, "01.01.00", 8);
    ascii(&mut h, "00.00.00", 8);
    ascii(&mut h, &(256 * (ns + 1)).to_string(), 8);
    ascii(&mut h, if annotation_signal { "EDF+C" } else { "" }, 44);
    ascii(&mut h, &n_records.to_string(), 8);
    ascii(&mut h, "1", 8);
    ascii(&mut h, &ns.to_string(), 4);

    let ann_spr = 30;
    let each = |h: &mut Vec<u8>, len: usize, f: &dyn Fn(usize) -> String, ann: &str| {
        for i in 0..rec.channels.len() {
            ascii(h, &f(i), len);
        }
        if annotation_signal {
            ascii(h, ann, len);
        }
    };
    // physical bounds are written with enough digits to fit 8 characters
    let num8 = |v: f64| {
        let s = format!("{v}");
        if s.len() <= 8 {
            s
        } else {
            let mut s = format!("{v:.6}");
            s.truncate(8);
            s
        }
    };
    let bounds: Vec<(f64, f64)> = ranges
        .iter()
        .map(|&(lo, hi)| {
            let lo: f64 = num8(lo.floor() - 1.0).parse().unwrap();
            let hi: f64 = num8(hi.ceil() + 1.0).parse().unwrap();
            (lo, hi)
        })
        .collect();
    each(&mut h, 16, &|i| rec.channels[i].clone(), ANNOTATION_LABEL);
    each(&mut h, 80, &|_| String::new(), "");
    each(&mut h, 8, &|_| "uV".into(), "");
    each(&mut h, 8, &|i| num8(bounds[i].0), "-1");
    each(&mut h, 8, &|i| num8(bounds[i].1), "1");
    each(&mut h, 8, &|_| dmin.to_string(), "-32768");
    each(&mut h, 8, &|_| dmax.to_string(), "32767");
    each(&mut h, 80, &|_| String::new(), "");
    each(&mut h, 8, &|_| spr.to_string(), &ann_spr.to_string());
    each(&mut h, 32, &|_| String::new(), "");
    debug_assert_eq!(h.len(), 256 * (ns + 1));

    let mut data = Vec::with_capacity(n_records * 2 * (spr * rec.channels.len() + ann_spr));
    for r in 0..n_records {
        for (c, &(pmin, pmax)) in rec.samples.iter().zip(&bounds) {
            for &v in &c[r * spr..(r + 1) * spr] {
                let d = ((v - pmin) * (dmax - dmin) as f64 / (pmax - pmin) + dmin as f64).round();
                let d = d.clamp(dmin as f64, dmax as f64) as i16;
                data.extend_from_slice(&d.to_le_bytes());
            }
        }
        if annotation_signal {
            data.extend(std::iter::repeat_n(0u8, 2 * ann_spr));
        }
    }
    let io = |e| Error::io(rec.name.clone(), e);
    w.write_all(&h).map_err(io)?;
    w.write_all(&data).map_err(io)
}
