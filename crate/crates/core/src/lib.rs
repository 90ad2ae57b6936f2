//! Sub-asymptotic bivariate generalized Pareto modelling.
//!
//! The crate covers the univariate building blocks, the bivariate sBGP
//! model and its dependence coefficients, rank-based χ(q) and η estimators,
//! a neural Bayes estimator trained on simulated data, bootstrap intervals,
//! a standardised bivariate GP baseline and a data-ingestion pipeline.
//!
//! Start with the programs under `examples/`.

pub mod bgp;
pub mod bootstrap;
pub mod cli;
pub mod dependence;
pub mod distributions;
pub mod error;
pub mod ingest;
pub mod model;
pub mod nbe;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod sample;
pub mod stats;

pub use error::{Error, Result};
pub use model::SbgpParams;
pub use rng::RngState;
pub use sample::Sample;
