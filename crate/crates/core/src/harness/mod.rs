//! Scenario files, experiment runs, reports and report comparison.

mod compare;
mod config;
mod dump;
mod run;

pub use compare::{compare, compare_str, Comparison, MetricDelta, ValueChange};
pub use config::{
    parse_scenario, BaselineConfig, GridConfig, LinkConfig, OptimizerSettings, PowerConfig, PowerModels, RadarKind,
    RhsConfig, Scenario, TargetConfig, UserConfig, REQUIRED_KEYS,
};
pub use dump::{bank_dump, pattern_dump};
pub use run::{
    execute, exit_code, power_summary, resolve_seed, run, ArchitectureReport, CycleReport, ErrorReport, LinkSummary,
    OptimizerSummary, PowerSummary, RunOutput, RunReport, UserReport, EXIT_INFEASIBLE, EXIT_OK, EXIT_PARSE,
    EXIT_RUNTIME, SCHEMA_VERSION,
};

/// The bundled prototype experiment.
pub const PROTOTYPE_EXPERIMENT: &str = include_str!("../../scenarios/prototype_experiment.conf");
