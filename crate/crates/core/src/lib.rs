#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks
//! Point-process Monte Carlo estimation of tail probabilities and means.
//!
//! The N-walk superposition of increasing random walks drives the tail
//! probability estimator, the nested-sampling mean estimators and their
//! unbiased randomly truncated versions.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod mcmc;
pub mod numeric;
pub mod pareto_oracle;
pub mod randomize;
pub mod replicas;
pub mod report;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
