//! Experiment runner: resolves a plan from a config file and flags, runs
//! every seed of every sweep point in parallel, and writes CSV summaries.

pub mod execute;
pub mod format;
pub mod plan;

pub use execute::{execute_plan, ExecError, ExecutionReport, PointSummary};
pub use plan::{ExperimentPlan, PlanBuilder, PlanError};
