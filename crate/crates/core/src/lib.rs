//! Relation-specific word embeddings.
//!
//! Embeddings are pretrained by predicting each word between a noun pair
//! from the pair itself, the neighbouring words and the words outside the
//! pair. The trained parameters then yield fixed-length feature vectors for
//! a softmax relation classifier evaluated with the SemEval-2010 Task 8
//! protocol.

pub mod cbow;
pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod embed_train;
pub mod error;
pub mod eval;
pub mod features;
pub mod params;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
