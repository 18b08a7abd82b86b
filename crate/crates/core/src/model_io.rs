//! Model file format.
//!
//! All integers are little-endian. Hypervectors are written as a `u64`
//! dimension followed by `dim / 64` `u64` words.
//!
//! ```text
//! magic        4 bytes  "MCHD"
//! version      u32      1
//! kind         u8       0 = two-class, 1 = multi-centroid
//! dim          u64
//! levels       u32
//! channels     u32
//! features     u32
//! item_seed    u64      seed of the encoder item memories
//! master_seed  u64
//! window       f64      window length, seconds
//! step         f64      window step, seconds
//! fs           f64      sampling rate, Hz
//! labels       u32 count, then per label: u32 byte length + UTF-8 name
//! channel names u32 count, then per name: u32 byte length + UTF-8
//! calibration  u32 feature count, then per feature: f64 lower, f64 upper
//! tiebreak     hypervector
//! subclasses   u32 count, then per sub-class:
//!                u32 id, u8 label, u32 count, u32 x dim sums, hypervector prototype
//! ```
//!
//! The accumulator count is stored once per sub-class and the prototype is
//! checked against the re-binarized accumulator when loading.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::encoder::EncoderContext;
use crate::error::{Error, Result};
use crate::features::Calibration;
use crate::hdcore::{BitAccumulator, Hypervector, TieBreaker};
use crate::training::{GlobalLabel, Model, ModelKind, SubClass};

const MAGIC: &[u8; 4] = b"MCHD";
const VERSION: u32 = 1;

/// Everything needed to rebuild the encoder alongside a model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelHeader {
    pub dim: usize,
    pub levels: usize,
    pub n_channels: usize,
    pub n_features: usize,
    pub item_seed: u64,
    pub master_seed: u64,
    pub window_seconds: f64,
    pub step_seconds: f64,
    pub fs: f64,
    pub channel_names: Vec<String>,
}

impl ModelHeader {
    pub fn encoder(&self) -> Result<EncoderContext> {
        EncoderContext::generate(self.dim, self.levels, self.n_channels, self.n_features, self.item_seed)
    }
}

/// A trained model with its encoder description and feature calibration.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub header: ModelHeader,
    pub calibration: Calibration,
    pub model: Model,
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

struct Reader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Ingest(format!("model file truncated at byte {}: {e}", self.offset)))?;
        self.offset += N as u64;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        if len > 1 << 16 {
            return Err(Error::Ingest(format!(
                "implausible string length {len} at byte {}",
                self.offset
            )));
        }
        let mut buf = vec![0u8; len];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Ingest(format!("model file truncated at byte {}: {e}", self.offset)))?;
        self.offset += len as u64;
        String::from_utf8(buf).map_err(|_| Error::Ingest(format!("invalid UTF-8 before byte {}", self.offset)))
    }

    fn hypervector(&mut self) -> Result<Hypervector> {
        let hv = Hypervector::read_from(&mut self.inner)
            .map_err(|e| Error::Ingest(format!("{e} (near byte {})", self.offset)))?;
        self.offset += hv.encoded_len() as u64;
        Ok(hv)
    }
}

impl ModelFile {
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let h = &self.header;
        w.write_all(MAGIC)?;
        put_u32(w, VERSION)?;
        w.write_all(&[match self.model.kind() {
            ModelKind::TwoClass => 0,
            ModelKind::MultiCentroid => 1,
        }])?;
        w.write_all(&(h.dim as u64).to_le_bytes())?;
        put_u32(w, h.levels as u32)?;
        put_u32(w, h.n_channels as u32)?;
        put_u32(w, h.n_features as u32)?;
        w.write_all(&h.item_seed.to_le_bytes())?;
        w.write_all(&h.master_seed.to_le_bytes())?;
        w.write_all(&h.window_seconds.to_le_bytes())?;
        w.write_all(&h.step_seconds.to_le_bytes())?;
        w.write_all(&h.fs.to_le_bytes())?;
        put_u32(w, GlobalLabel::ALL.len() as u32)?;
        for l in GlobalLabel::ALL {
            put_str(w, l.name())?;
        }
        put_u32(w, h.channel_names.len() as u32)?;
        for c in &h.channel_names {
            put_str(w, c)?;
        }
        self.calibration.write_to(w)?;
        self.model.tiebreak().vector().write_to(w)?;
        put_u32(w, self.model.len() as u32)?;
        for s in self.model.subclasses() {
            put_u32(w, s.id())?;
            w.write_all(&[s.label().as_u8()])?;
            s.accumulator().write_to(w)?;
            s.prototype().write_to(w)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader { inner: r, offset: 0 };
        if &r.bytes::<4>()? != MAGIC {
            return Err(Error::Ingest("not a model file (bad magic at byte 0)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Ingest(format!("unsupported model version {version} at byte 4")));
        }
        let kind = match r.u8()? {
            0 => ModelKind::TwoClass,
            1 => ModelKind::MultiCentroid,
            k => return Err(Error::Ingest(format!("unknown model kind {k} at byte 8"))),
        };
        let dim = r.u64()? as usize;
        let levels = r.u32()? as usize;
        let n_channels = r.u32()? as usize;
        let n_features = r.u32()? as usize;
        let item_seed = r.u64()?;
        let master_seed = r.u64()?;
        let window_seconds = r.f64()?;
        let step_seconds = r.f64()?;
        let fs = r.f64()?;
        let n_labels = r.u32()?;
        for l in 0..n_labels {
            let name = r.string()?;
            let expected = GlobalLabel::from_u8(l as u8).map(|g| g.name());
            if expected != Some(name.as_str()) {
                return Err(Error::Ingest(format!("unexpected label name {name:?} at index {l}")));
            }
        }
        let n_names = r.u32()? as usize;
        let channel_names = (0..n_names).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
        let calibration = Calibration::read_from(&mut r.inner)?;
        r.offset += 4 + 16 * calibration.lower.len() as u64;
        let tiebreak = TieBreaker::from_vector(r.hypervector()?);
        if tiebreak.dim() != dim {
            return Err(Error::Ingest("tiebreak dimension disagrees with header".into()));
        }
        let n_sub = r.u32()? as usize;
        let mut subclasses = Vec::with_capacity(n_sub);
        for _ in 0..n_sub {
            let id = r.u32()?;
            let label = GlobalLabel::from_u8(r.u8()?)
                .ok_or_else(|| Error::Ingest(format!("invalid label byte before {}", r.offset)))?;
            let acc = BitAccumulator::read_from(&mut r.inner, dim)?;
            r.offset += 4 + 4 * dim as u64;
            let prototype = r.hypervector()?;
            let s = SubClass::from_parts(id, label, acc, &tiebreak)?;
            if s.prototype() != &prototype {
                return Err(Error::Ingest(format!(
                    "sub-class {id} prototype does not match its accumulator"
                )));
            }
            subclasses.push(s);
        }
        let mut trailing = [0u8; 1];
        if r.inner.read(&mut trailing).map_err(|e| Error::Ingest(e.to_string()))? != 0 {
            return Err(Error::Ingest(format!("trailing bytes after offset {}", r.offset)));
        }
        Ok(Self {
            header: ModelHeader {
                dim,
                levels,
                n_channels,
                n_features,
                item_seed,
                master_seed,
                window_seconds,
                step_seconds,
                fs,
                channel_names,
            },
            calibration,
            model: Model::from_parts(kind, tiebreak, subclasses),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f))
    }
}
