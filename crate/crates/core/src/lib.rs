//! Few-shot self-prompting for promptable segmentation decoders.
//!
//! A logistic-regression classifier over frozen encoder embeddings predicts
//! a coarse mask; a point and a box extracted from that mask prompt the
//! decoder. The [`eval`] module runs the k-fold few-shot protocol.

pub mod classifier;
pub mod data;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod prompt;
pub mod synthetic;

pub use error::{Error, Result};
