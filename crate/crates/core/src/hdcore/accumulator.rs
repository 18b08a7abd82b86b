use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::hdcore::Hypervector;

/// Per-bit counters over a stream of hypervectors; the pre-binarization
/// state of a prototype.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitAccumulator {
    sums: Vec<u32>,
    n: u32,
}

impl BitAccumulator {
    pub fn new(dim: usize) -> Result<Self> {
        super::hypervector::check_dim(dim)?;
        Ok(Self {
            sums: vec![0; dim],
            n: 0,
        })
    }

    pub fn from_vector(hv: &Hypervector) -> Self {
        let mut acc = Self {
            sums: vec![0; hv.dim()],
            n: 0,
        };
        acc.add_unchecked(hv);
        acc
    }

    pub fn dim(&self) -> usize {
        self.sums.len()
    }

    /// Number of vectors absorbed.
    pub fn count(&self) -> u32 {
        self.n
    }

    pub fn sums(&self) -> &[u32] {
        &self.sums
    }

    pub fn accumulate(&mut self, hv: &Hypervector) -> Result<()> {
        if hv.dim() != self.dim() {
            return Err(Error::Usage(format!(
                "dimension mismatch: {} vs {}",
                hv.dim(),
                self.dim()
            )));
        }
        self.add_unchecked(hv);
        Ok(())
    }

    fn add_unchecked(&mut self, hv: &Hypervector) {
        for (chunk, &word) in self.sums.chunks_exact_mut(64).zip(hv.words()) {
            for (b, s) in chunk.iter_mut().enumerate() {
                *s += ((word >> b) & 1) as u32;
            }
        }
        self.n += 1;
    }

    /// Adds another accumulator's sums and count into this one.
    pub fn merge(&mut self, other: &BitAccumulator) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::Usage("accumulator dimension mismatch".into()));
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        self.n += other.n;
        Ok(())
    }

    /// Bit 1 iff `2 * sums[i] > n`, ties taken from `tiebreak`.
    pub fn binarize(&self, tiebreak: &Hypervector) -> Result<Hypervector> {
        if self.n == 0 {
            return Err(Error::Usage("cannot binarize an empty accumulator".into()));
        }
        if tiebreak.dim() != self.dim() {
            return Err(Error::Usage("tiebreak dimension mismatch".into()));
        }
        let words = self
            .sums
            .chunks_exact(64)
            .zip(tiebreak.words())
            .map(|(chunk, &tie)| {
                chunk.iter().enumerate().fold(0u64, |acc, (b, &s)| {
                    let twice = 2 * u64::from(s);
                    let n = u64::from(self.n);
                    let bit = if twice > n {
                        1
                    } else if twice == n {
                        (tie >> b) & 1
                    } else {
                        0
                    };
                    acc | (bit << b)
                })
            })
            .collect();
        Hypervector::from_words(words)
    }

    pub(crate) fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&self.n.to_le_bytes())?;
        for s in &self.sums {
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    pub(crate) fn read_from<R: Read>(r: &mut R, dim: usize) -> Result<Self> {
        let mut buf = [0u8; 4];
        let mut next = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut buf)
                .map_err(|e| Error::Ingest(format!("truncated accumulator: {e}")))?;
            Ok(u32::from_le_bytes(buf))
        };
        let n = next(r)?;
        let mut sums = Vec::with_capacity(dim);
        for _ in 0..dim {
            let s = next(r)?;
            if s > n {
                return Err(Error::Ingest(format!("accumulator sum {s} exceeds count {n}")));
            }
            sums.push(s);
        }
        Ok(Self { sums, n })
    }
}
