//! Window encoding: bind each (channel, feature) slot vector with its level
//! vector and bundle all of them in a single majority vote.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::DiscretizedFeatures;
use crate::hdcore::{BundleCounter, ChFeatMemory, Hypervector, LevelMemory, TieBreaker};

/// Read-only item memories shared by every window of a model.
#[derive(Clone, Debug)]
pub struct EncoderContext {
    levels: LevelMemory,
    chfeat: ChFeatMemory,
    tiebreak: TieBreaker,
    seed: u64,
}

impl EncoderContext {
    /// Generates the memories from one seeded stream, in the order
    /// level memory, channel-feature memory, tiebreaker.
    pub fn generate(dim: usize, levels: usize, n_channels: usize, n_features: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let levels = LevelMemory::generate(dim, levels, &mut rng)?;
        let chfeat = ChFeatMemory::generate(n_channels, n_features, dim, &mut rng)?;
        let tiebreak = TieBreaker::generate(dim, &mut rng)?;
        Ok(Self {
            levels,
            chfeat,
            tiebreak,
            seed,
        })
    }

    pub fn from_parts(levels: LevelMemory, chfeat: ChFeatMemory, tiebreak: TieBreaker) -> Result<Self> {
        if levels.dim() != chfeat.dim() || chfeat.dim() != tiebreak.dim() {
            return Err(Error::Config("item memories disagree on dimension".into()));
        }
        Ok(Self {
            levels,
            chfeat,
            tiebreak,
            seed: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.levels.dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn level_memory(&self) -> &LevelMemory {
        &self.levels
    }

    pub fn chfeat_memory(&self) -> &ChFeatMemory {
        &self.chfeat
    }

    pub fn tiebreak(&self) -> &TieBreaker {
        &self.tiebreak
    }

    /// Majority over `chfeat[c][f] XOR level[df[c][f]]` for every slot.
    pub fn encode(&self, df: &DiscretizedFeatures) -> Result<Hypervector> {
        let mut counter = BundleCounter::new(self.dim())?;
        self.encode_with(df, &mut counter)
    }

    /// Same as [`encode`](Self::encode) but reuses a caller-owned counter.
    pub fn encode_with(&self, df: &DiscretizedFeatures, counter: &mut BundleCounter) -> Result<Hypervector> {
        if df.n_channels() != self.chfeat.n_channels() {
            return Err(Error::Usage(format!(
                "window has {} channels, encoder expects {}",
                df.n_channels(),
                self.chfeat.n_channels()
            )));
        }
        if df.n_features() != self.chfeat.n_features() {
            return Err(Error::Usage(format!(
                "window has {} features, encoder expects {}",
                df.n_features(),
                self.chfeat.n_features()
            )));
        }
        counter.reset();
        for c in 0..df.n_channels() {
            for (f, &level) in df.row(c).iter().enumerate() {
                let value = self.levels.get(usize::from(level)).ok_or_else(|| {
                    Error::Usage(format!(
                        "level {level} out of range for {} levels",
                        self.levels.levels()
                    ))
                })?;
                counter.add_bound(self.chfeat.get(c, f), value)?;
            }
        }
        counter.majority(self.tiebreak.vector())
    }
}
