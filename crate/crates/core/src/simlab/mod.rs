//! Simulation harness: synthetic populations, repeated PPS sampling with
//! weighted and unweighted fits, and partition diagnostics.

mod chart;
mod diagnostics;
mod generator;
mod protocol;

pub use chart::render_chart;
pub use diagnostics::{dense_box_mass, diagnose, norm_report, write_diagnostics, DiagnosticReport, NormRow};
pub use generator::{synth_population, GeneratorSpec, Shape, COR_TOLERANCE};
pub use protocol::{
    config_header, fit_population_tree, population_on_sample_partition, rep_seed, run_simulation,
    tree_discrepancy, write_aggregates, write_rep_records, Aggregate, Method, PopulationSource,
    RepRecord, SimConfig, SimResult,
};
