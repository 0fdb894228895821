//! Grid search with path tracking, and sampling-based control.

mod astar;
mod field;
mod mppi;
mod tracker;

pub use astar::{astar_plan, edge_cost, GridPath};
pub use field::{FieldParams, GoalField};
pub use mppi::{
    default_threshold, enters_above, mppi_plan, rollout_cost, shift, softmax_weights, weighted_sequence, CostTerms,
    CostWeights, MaskMode, MppiConfig, MppiDiagnostics, MppiOutput, PlanContext, SENTINEL,
};
pub use tracker::{track_path, TrackerGains};
