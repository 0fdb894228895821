//! Closed-loop planner benchmark: scenarios, runs, summaries and images.

mod aggregate;
mod pipeline;
mod render;
mod scenario;

pub use aggregate::{aggregate, runs_csv, summary_csv, summary_table, MeanStd, PlannerSummary, NA};
pub use pipeline::{
    bench_scenarios, bench_seed, fit_regressor, label_terrain, run_benchmark, run_pipeline, training_maps, PipelineConfig,
    PipelineOutput,
};
pub use render::{render_elevation, render_traversability};
pub use scenario::{
    run_on_map, run_scenario, scenario_suite, trajectory_csv, Artifacts, BenchConfig, FailureKind, PlannerVariant,
    RunMetrics, Scenario, TrajRow,
};
