//! Design-consistent regression trees for data collected under unequal
//! probability sampling designs.
//!
//! The crate fits recursive-partitioning regression trees whose split search,
//! median fallback and leaf estimates are all driven by design weights
//! (`w = 1/π`), and ships a Monte-Carlo harness that compares weighted and
//! unweighted trees on repeated probability-proportional-to-size samples
//! drawn from a synthetic finite population.
//!
//! Module map:
//!
//! * [`data`]: population and sample containers, CSV ingestion and validation.
//! * [`estimators`]: Hájek mean, weighted EDF, weighted quantile, trimmed mean, weighted SSE.
//! * [`partition`]: axis-aligned box partitions and their per-variable norms.
//! * [`tree`]: rate functions, the weighted partitioning algorithm, prediction, tree files.
//! * [`design`]: PPS inclusion probabilities, systematic PPS draws, design summaries.
//! * [`simlab`]: synthetic populations, the repeated-sampling protocol, consistency diagnostics.
//! * [`cli`]: the `svytree` command-line front end.

pub mod cli;
pub mod data;
pub mod design;
pub mod error;
pub mod estimators;
pub mod partition;
pub mod simlab;
pub mod tree;

pub use error::{Error, Result};
