//! Packed binary hypervectors.
//!
//! Bit `i` lives in word `i / 64` at bit position `i % 64`. The dimension is
//! always a multiple of 64, so there are no padding bits to keep clean.

use std::fmt;
use std::io::{Read, Write};

use rand::RngCore;

use crate::error::{Error, Result};

/// Default hypervector dimension.
pub const DEFAULT_DIM: usize = 10240;

const WORD_BITS: usize = 64;

/// Fixed-dimension packed binary vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Hypervector {
    dim: usize,
    words: Vec<u64>,
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim < WORD_BITS || !dim.is_multiple_of(WORD_BITS) {
        return Err(Error::Config(format!(
            "hypervector dimension must be a positive multiple of 64, got {dim}"
        )));
    }
    Ok(())
}

impl Hypervector {
    /// All-zero vector.
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            words: vec![0; dim / WORD_BITS],
        })
    }

    /// Uniformly random vector; each bit is an independent fair coin.
    pub fn random<R: RngCore + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        check_dim(dim)?;
        let words = (0..dim / WORD_BITS).map(|_| rng.next_u64()).collect();
        Ok(Self { dim, words })
    }

    /// Builds a vector from raw words. `words.len() * 64` is the dimension.
    pub fn from_words(words: Vec<u64>) -> Result<Self> {
        let dim = words.len() * WORD_BITS;
        check_dim(dim)?;
        Ok(Self { dim, words })
    }

    /// Builds a vector of dimension `dim` whose leading bits are given by
    /// `bits` (`'0'`/`'1'`, other characters ignored); the rest are zero.
    pub fn from_bit_str(dim: usize, bits: &str) -> Result<Self> {
        let mut hv = Self::zeros(dim)?;
        let mut i = 0;
        for c in bits.chars() {
            match c {
                '0' => i += 1,
                '1' => {
                    if i >= dim {
                        return Err(Error::Usage(format!("bit string longer than dim {dim}")));
                    }
                    hv.set(i, true);
                    i += 1;
                }
                _ => {}
            }
        }
        if i > dim {
            return Err(Error::Usage(format!("bit string longer than dim {dim}")));
        }
        Ok(hv)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    pub(crate) fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Usage(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    /// XOR binding.
    pub fn bind(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect();
        Ok(Self { dim: self.dim, words })
    }

    /// Bitwise complement.
    pub fn complement(&self) -> Self {
        Self {
            dim: self.dim,
            words: self.words.iter().map(|w| !w).collect(),
        }
    }

    /// Number of differing bits.
    pub fn hamming(&self, other: &Self) -> Result<u32> {
        self.same_dim(other)?;
        Ok(hamming_words(&self.words, &other.words))
    }

    /// Differing bits divided by the dimension.
    pub fn normalized_hamming(&self, other: &Self) -> Result<f64> {
        Ok(f64::from(self.hamming(other)?) / self.dim as f64)
    }

    /// Flips every bit in `[start, end)`.
    pub(crate) fn flip_range(&mut self, start: usize, end: usize) {
        for i in start..end {
            self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
        }
    }

    /// Serialized length in bytes.
    pub fn encoded_len(&self) -> usize {
        8 + 8 * self.words.len()
    }

    /// Writes `dim` as a little-endian u64 followed by the packed words.
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        for word in &self.words {
            w.write_all(&word.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)
            .map_err(|e| Error::Ingest(format!("truncated hypervector header: {e}")))?;
        let dim = u64::from_le_bytes(buf) as usize;
        check_dim(dim).map_err(|_| Error::Ingest(format!("invalid hypervector dim {dim}")))?;
        let mut words = Vec::with_capacity(dim / WORD_BITS);
        for _ in 0..dim / WORD_BITS {
            r.read_exact(&mut buf)
                .map_err(|e| Error::Ingest(format!("truncated hypervector body: {e}")))?;
            words.push(u64::from_le_bytes(buf));
        }
        Ok(Self { dim, words })
    }
}

#[inline]
pub(crate) fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

impl fmt::Debug for Hypervector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown = self.dim.min(32);
        let head: String = (0..shown).map(|i| if self.bit(i) { '1' } else { '0' }).collect();
        write!(f, "Hypervector(dim={}, {}..)", self.dim, head)
    }
}

/// Majority vote over `vs`, ties resolved from `tiebreak`.
///
/// Counting is bit-sliced: each input word is added into a stack of counter
/// planes with a ripple carry, and the threshold comparison runs on whole
/// words.
pub fn bundle(vs: &[Hypervector], tiebreak: &Hypervector) -> Result<Hypervector> {
    let first = vs
        .first()
        .ok_or_else(|| Error::Usage("cannot bundle an empty list".into()))?;
    let mut counter = BundleCounter::new(first.dim())?;
    for v in vs {
        counter.add(v)?;
    }
    counter.majority(tiebreak)
}

/// Streaming bit-sliced population counter used by [`bundle`] and the encoder.
#[derive(Clone, Debug)]
pub struct BundleCounter {
    dim: usize,
    n: u32,
    // planes[j][w]: bit j of the per-position count, for word w.
    planes: Vec<Vec<u64>>,
}

impl BundleCounter {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            n: 0,
            planes: Vec::new(),
        })
    }

    pub fn len(&self) -> u32 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Clears counts, keeping allocations.
    pub fn reset(&mut self) {
        self.n = 0;
        for p in &mut self.planes {
            p.iter_mut().for_each(|w| *w = 0);
        }
    }

    pub fn add(&mut self, hv: &Hypervector) -> Result<()> {
        if hv.dim() != self.dim {
            return Err(Error::Usage(format!(
                "dimension mismatch: {} vs {}",
                hv.dim(),
                self.dim
            )));
        }
        self.add_words(hv.words().iter().copied());
        Ok(())
    }

    /// Adds `a XOR b` without materializing the bound vector.
    pub fn add_bound(&mut self, a: &Hypervector, b: &Hypervector) -> Result<()> {
        if a.dim() != self.dim || b.dim() != self.dim {
            return Err(Error::Usage("dimension mismatch in bound add".into()));
        }
        self.add_words(a.words().iter().zip(b.words()).map(|(x, y)| x ^ y));
        Ok(())
    }

    fn add_words(&mut self, words: impl Iterator<Item = u64>) {
        self.n += 1;
        let needed = (32 - self.n.leading_zeros()) as usize;
        while self.planes.len() < needed {
            self.planes.push(vec![0; self.dim / WORD_BITS]);
        }
        for (w, word) in words.enumerate() {
            let mut carry = word;
            for plane in self.planes.iter_mut() {
                if carry == 0 {
                    break;
                }
                let p = &mut plane[w];
                let next = *p & carry;
                *p ^= carry;
                carry = next;
            }
        }
    }

    /// Bit is 1 where `2 * count > n`; where `2 * count == n` the tiebreak bit is used.
    pub fn majority(&self, tiebreak: &Hypervector) -> Result<Hypervector> {
        if self.n == 0 {
            return Err(Error::Usage("majority of zero vectors".into()));
        }
        if tiebreak.dim() != self.dim {
            return Err(Error::Usage("tiebreak dimension mismatch".into()));
        }
        let half = self.n / 2;
        let even = self.n.is_multiple_of(2);
        let words = (0..self.dim / WORD_BITS)
            .map(|w| {
                // Compare the sliced count against `half`, most significant plane first.
                let mut gt = 0u64;
                let mut eq = !0u64;
                for j in (0..self.planes.len()).rev() {
                    let p = self.planes[j][w];
                    if (half >> j) & 1 == 1 {
                        eq &= p;
                    } else {
                        gt |= eq & p;
                        eq &= !p;
                    }
                }
                if even {
                    gt | (eq & tiebreak.words()[w])
                } else {
                    gt
                }
            })
            .collect();
        Ok(Hypervector { dim: self.dim, words })
    }
}
