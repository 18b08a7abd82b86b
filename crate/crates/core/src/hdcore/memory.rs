//! Item memories: level-value vectors, channel-feature slot vectors and the
//! tie-breaking vector.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::hdcore::Hypervector;

/// Default number of discretization levels.
pub const DEFAULT_LEVELS: usize = 20;

/// Ordered level vectors whose pairwise distance is proportional to the
/// level difference.
///
/// Level `k` is level `k - 1` with the block `[(k-1)*d, k*d)` complemented,
/// where `d = floor(dim / (2 * (L - 1)))`. The blocks are disjoint, so
/// `hamming(v_i, v_j) == |i - j| * d` exactly and the extreme levels differ
/// in about half the bits.
#[derive(Clone, Debug)]
pub struct LevelMemory {
    vectors: Vec<Hypervector>,
    block: usize,
}

impl LevelMemory {
    pub fn generate<R: RngCore + ?Sized>(dim: usize, levels: usize, rng: &mut R) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Config(format!("need at least 2 levels, got {levels}")));
        }
        if dim < 2 * (levels - 1) {
            return Err(Error::Config(format!("{levels} levels do not fit in dimension {dim}")));
        }
        let block = dim / (2 * (levels - 1));
        let mut current = Hypervector::random(dim, rng)?;
        let mut vectors = Vec::with_capacity(levels);
        vectors.push(current.clone());
        for k in 1..levels {
            current.flip_range((k - 1) * block, k * block);
            vectors.push(current.clone());
        }
        Ok(Self { vectors, block })
    }

    pub fn levels(&self) -> usize {
        self.vectors.len()
    }

    /// Bits flipped between consecutive levels.
    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn get(&self, level: usize) -> Option<&Hypervector> {
        self.vectors.get(level)
    }

    pub fn vectors(&self) -> &[Hypervector] {
        &self.vectors
    }
}

/// One independent random vector per (channel, feature) slot.
#[derive(Clone, Debug)]
pub struct ChFeatMemory {
    n_channels: usize,
    n_features: usize,
    vectors: Vec<Hypervector>,
}

impl ChFeatMemory {
    pub fn generate<R: RngCore + ?Sized>(
        n_channels: usize,
        n_features: usize,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n_channels == 0 || n_features == 0 {
            return Err(Error::Config(format!(
                "channel-feature memory needs at least one channel and feature, got {n_channels}x{n_features}"
            )));
        }
        let vectors = (0..n_channels * n_features)
            .map(|_| Hypervector::random(dim, rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            n_channels,
            n_features,
            vectors,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, channel: usize, feature: usize) -> &Hypervector {
        &self.vectors[channel * self.n_features + feature]
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }
}

/// Fixed random vector consulted wherever a majority vote is tied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieBreaker(Hypervector);

impl TieBreaker {
    pub fn generate<R: RngCore + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        Ok(Self(Hypervector::random(dim, rng)?))
    }

    pub fn from_vector(hv: Hypervector) -> Self {
        Self(hv)
    }

    pub fn vector(&self) -> &Hypervector {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl AsRef<Hypervector> for TieBreaker {
    fn as_ref(&self) -> &Hypervector {
        &self.0
    }
}
