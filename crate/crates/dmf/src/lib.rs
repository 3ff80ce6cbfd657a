//! Data-driven modality fusion: estimate a city's sensing modalities
//! (traffic, noise, temperature, humidity, wind speed, solar radiation)
//! from pollutant-concentration time series, so that fewer physical
//! sensors have to be deployed and transmitted.
//!
//! The crate covers the full workflow:
//!
//! - [`timeseries`]: ingest per-modality CSV series at heterogeneous rates
//!   and align them onto a common sampling grid with min-max normalization.
//! - [`stats`]: Pearson/Spearman correlation tables and the predictor
//!   ranking that picks the top-m sensing modalities.
//! - [`eigen`]: covariance, dominant eigenpairs by power iteration, and
//!   angular distances between modality groups as a feasibility signal.
//! - [`nn`]: a from-scratch ReLU MLP with exact backpropagation, adaptive
//!   moment updates, and validation-patience early stopping.
//! - [`fusion`]: the isolated (ITR) and unified (UTR) regressor pipelines,
//!   range-normalized MAE scoring, and the complexity/modality/bandwidth
//!   sweeps.
//! - [`synthgen`]: deterministic synthetic datasets with known couplings
//!   and analytic noise floors, used as the oracle in end-to-end tests.
//! - [`cli`]: the `dmf` command-line front end; see the `examples/`
//!   directory for library-level entry points per capability.

pub mod cli;
pub mod eigen;
pub mod error;
pub mod fusion;
pub mod nn;
pub mod stats;
pub mod synthgen;
pub mod timeseries;

mod seed;

pub use error::{Error, Result};
