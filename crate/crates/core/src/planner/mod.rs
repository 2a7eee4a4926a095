//! Optimal schedule search.

mod astar;
pub mod feasibility;
pub mod normalize;
pub mod oracle;

pub use astar::{
    astar_solve, PlannerError, SearchBudget, SolveOutcome, SolveStats, SolveStatus, MAX_APPLIANCES,
};
pub use feasibility::{heuristic, requirement_feasible, FeasibilityTable};
pub use normalize::{achievable_usages, normalize_costs, NormalizedCosts};
pub use oracle::{brute_force_solve, for_each_valid_plan, OracleConfig, OracleError};

use crate::model::HomeModel;

/// Solves `model` with the default search budget.
pub fn solve(model: &HomeModel) -> Result<SolveOutcome, PlannerError> {
    astar_solve(model, SearchBudget::default())
}
