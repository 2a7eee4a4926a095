//! Home energy scheduling over dynamic tariffs: domain model, optimal
//! planner, contrastive explanations and tariff ingestion.

pub mod canonical;
pub mod explain;
pub mod generate;
pub mod ingest;
pub mod model;
pub mod planner;
pub mod scenarios;
pub mod semantics;
pub mod units;

pub use model::{
    ApplianceSpec, BatterySpec, DynamicTariff, HomeModel, ModelError, PrimitiveRequirement,
    Timestep, Window,
};
pub use planner::{astar_solve, SearchBudget, SolveOutcome, SolveStats, SolveStatus};
pub use semantics::{ApplianceAction, BatteryAction, JointAction, Plan, PlanVerdict};
pub use units::{Energy, Money, Price};
