//! Ordinal severity grading of motion-corrupted images and a quality gate
//! that withholds severe cases from segmentation.
//!
//! The crate is split into:
//! - [`ordinal`]: CORAL/CORN heads, their losses and prediction rules, and
//!   softmax/focal baselines.
//! - [`diffnum`]: a small reverse-mode differentiation engine, optimizers and
//!   the MLP feature extractor.
//! - [`phantom`]: synthetic cardiac phantoms, k-space motion corruption and a
//!   reference threshold segmenter.
//! - [`metrics`]: accuracy, Cohen's kappa, Dice and HD95.
//! - [`io`]: the tensor container, dataset manifests and canonical JSON.
//! - [`pipeline`]: training, classification, gating and reporting.

pub mod diffnum;
pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod ordinal;
pub mod phantom;
pub mod pipeline;

pub use error::{Error, ErrorCategory, Result};
