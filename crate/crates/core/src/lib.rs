//! Multi-centroid hyperdimensional computing for EEG seizure detection.
//!
//! The pipeline runs windowed feature extraction ([`features`]), discretization
//! and hypervector encoding ([`encoder`]), prototype training with one or
//! several sub-classes per label ([`training`]), optional sub-class reduction
//! ([`reduction`]), nearest-prototype inference with label smoothing
//! ([`inference`]) and episode/duration scoring ([`metrics`]). [`ingest`] reads
//! EDF and text recordings and builds balanced per-seizure files;
//! [`experiment`] runs leave-one-seizure-out cross-validation and writes CSV
//! reports.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod encoder;
pub mod error;
pub mod experiment;
pub mod features;
pub mod hdcore;
pub mod inference;
pub mod ingest;
pub mod metrics;
pub mod model_io;
pub mod reduction;
pub mod seed;
pub mod training;

pub use encoder::EncoderContext;
pub use error::{Error, Result};
pub use hdcore::{bundle, BitAccumulator, ChFeatMemory, Hypervector, LevelMemory, TieBreaker};
pub use inference::{classify_window, smooth_labels, EncodedFile, LabelSequence, Smoothing, SmoothingMode};
pub use metrics::{aggregate_subject, f1de_gmean, Rates, ScoreSet};
pub use reduction::{reduce, ReductionConfig, ReductionStrategy};
pub use training::{train_multicentroid, train_two_class, GlobalLabel, Model, ModelKind, SubClass};
