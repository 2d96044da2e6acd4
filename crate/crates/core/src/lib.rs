//! Relative information loss of deterministic systems.
//!
//! The crate estimates information dimensions from samples, evaluates the
//! closed-form losses of piecewise-submersive blocks, and tracks how
//! information moves through PCA with population and sample covariance.

pub mod blocks;
pub mod cli;
pub mod dist;
pub mod error;
pub mod linalg;
pub mod loss;
pub mod pca;
pub mod quant;

pub use blocks::{analytic_relative_loss, Block, PieceProbMode};
pub use dist::{sample, DistributionSpec, SampleBatch};
pub use error::{Error, Result};
pub use loss::{LossValue, Status};
pub use quant::{estimate_dimension, DimensionEstimate, EntropyCorrection};
