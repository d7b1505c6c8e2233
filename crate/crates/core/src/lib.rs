//! Global-vote opinion dynamics on Erdős–Rényi graphs, with the return
//! statistics used to compare simulated markets against real indices.
//!
//! Modules map onto the pipeline stages: [`graph`] builds the interaction
//! network, [`dynamics`] evolves opinions and records the magnetization,
//! [`measures`] turns series into returns and observables, [`fitting`] fits
//! distribution and decay models, [`ingest`] reads index price files, and
//! [`pipeline`] ties them together into on-disk artifacts.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fitting;
pub mod graph;
pub mod ingest;
pub mod measures;
mod optim;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Execution;
