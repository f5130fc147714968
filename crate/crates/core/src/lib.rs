//! Rebalancing toolkit for imbalanced binary tabular data: a GAN learns the
//! minority-class distribution and synthesizes rows up to a target class
//! ratio, a transformer-encoder classifier is trained on the rebalanced
//! table, and detection quality plus distribution fidelity are reported.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod gan;
pub mod metrics;
pub mod rng;
pub mod tensor;
pub mod transformer;

pub use error::{Error, Result};
