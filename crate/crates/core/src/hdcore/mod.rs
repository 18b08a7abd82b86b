//! Binary hypervector algebra and item memories.

mod accumulator;
mod hypervector;
mod memory;

pub use accumulator::BitAccumulator;
pub use hypervector::{bundle, BundleCounter, Hypervector, DEFAULT_DIM};
pub use memory::{ChFeatMemory, LevelMemory, TieBreaker, DEFAULT_LEVELS};

pub(crate) use hypervector::hamming_words;
