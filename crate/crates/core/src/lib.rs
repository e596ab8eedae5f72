//! Bootstrap tests for whether any of many predictors has a marginal
//! relationship with a response, in serially dependent samples.
//!
//! The pipeline: load or simulate a [`Sample`], fit every bivariate
//! regression with [`fit_marginal`], weight and reduce the slopes to a
//! max- or ave-statistic, then compare against dependent (DWB) or
//! parametric (PWB) wild bootstrap replicates with [`run_test`]. The
//! [`art`] module holds the adaptive resampling test, [`dgp`] the
//! simulation processes and [`harness`] the Monte Carlo driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod art;
pub mod bootstrap;
pub mod bounds;
pub mod dgp;
pub mod error;
pub mod harness;
mod kernel;
pub mod marginal;
pub mod rng;
pub mod sample;
#[cfg(test)]
mod testutil;
pub mod weights;

pub use art::{art_test, ArtConfig, ArtFlavor, ArtResult};
pub use bootstrap::{run_test, BootstrapConfig, Method, MultiplierDraw, TestResult};
pub use bounds::{block_size, default_block_size, pbar, GrowthParams};
pub use dgp::{generate, CovariateLaw, DgpSpec, ErrorLaw, Model};
pub use error::{Error, Result};
pub use harness::{emit_report, run_monte_carlo, ExperimentSpec, RejectionTable, ReportFormat, TestKind};
pub use marginal::{compute_statistic, fit_marginal, MarginalFit, StatKind, StatisticValue};
pub use sample::{load_sample, make_blocks, save_sample, standardize, BlockPartition, Layout, Sample};
pub use weights::{compute_weights, WeightScheme};
