//! Scenario loading, virtual experiments, output emission and the
//! acceptance checks built on them.

pub mod checks;
pub mod experiments;
pub mod output;
pub mod scenario;

pub use checks::{run_checks, Manifest, SuiteReport};
pub use experiments::{run_experiments, Experiment};
pub use output::{emit_outputs, ExperimentOutput, RunSummary, Table};
pub use scenario::{load_scenario, parse_scenario, LoadedScenario, Scenario};
