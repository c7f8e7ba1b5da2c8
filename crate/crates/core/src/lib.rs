//! Candidate generation, reranking and combination for LLM outputs, with the
//! metrics and dataset tooling needed to train and evaluate a small corrector
//! model on top of them.

pub mod alignment;
pub mod dataset;
pub mod error;
pub mod fingerprint;
pub mod generation;
pub mod harness;
pub mod metrics;
pub mod rerank;
pub mod tokenize;

pub use error::{Error, Result};
