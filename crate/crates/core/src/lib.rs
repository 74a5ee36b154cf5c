//! Text segmentation methods for agglutinative-language sentiment analysis,
//! plus the small from-scratch classifiers, evaluation and performance
//! accounting needed to compare them end to end.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`corpus`]: review ingestion, sentence splitting, statistics and splits.
//! - [`morphdict`]: dictionary-backed morphological segmentations.
//! - [`subword`]: byte-pair encoding, character and syllable segmentation.
//! - [`segment`]: word tokenization, the method registry, vocabularies and
//!   fixed-length encoding.
//! - [`nn`]: mean-pool and CNN classifiers with hand-written backprop,
//!   training callbacks and shape inference.
//! - [`eval`]: sentence accuracy, review-level voting, histograms and the
//!   central-limit check.
//! - [`perf`]: memory/time formulas and experiment records.
//! - [`experiment`]: the seeded end-to-end runner used by the CLI.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod morphdict;
pub mod nn;
pub mod perf;
pub mod segment;
pub mod seed;
pub mod subword;
pub mod text;

pub use error::{Error, Result};
