//! Detection of machine-generated text by stacking the probability outputs
//! of several base classifiers.
//!
//! The crate covers the full pipeline: corpus handling ([`corpus`]),
//! dataset divergence analyses ([`analysis`]), a small dense network engine
//! ([`mlp`]), hashed n-gram and imported base classifiers ([`base`]),
//! decision trees, random forests and gradient boosting ([`trees`]), the
//! voting and meta-learner ensembles ([`ensemble`]), evaluation
//! ([`metrics`]) and a synthetic corpus generator ([`synth`]).

pub mod analysis;
pub mod base;
pub mod corpus;
pub mod error;
pub mod mlp;
pub mod metrics;
pub mod ensemble;
pub mod rng;
pub mod synth;
pub mod trees;

pub use error::{Error, Result};
