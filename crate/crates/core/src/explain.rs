//! Requirement satisfaction, model restriction and contrastive answers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::model::{
    ApplianceSpec, HomeModel, ModelError, PrimitiveRequirement, Timestep, Window, BATTERY_NAME,
};
use crate::planner::{astar_solve, PlannerError, SearchBudget, SolveOutcome, SolveStatus};
use crate::semantics::{ApplianceAction, Plan};
use crate::units::Money;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExplainError {
    #[error("action sequence has length {actual}, horizon is {expected}")]
    Length { expected: usize, actual: usize },
    #[error("invalid question: {0}")]
    Question(ModelError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

/// Whether one appliance's action sequence meets all of its requirements.
///
/// Maximal On-runs are cut into consecutive blocks of `duration_steps`; a run
/// whose length is not a multiple of the duration contains an unfinished
/// task and fails. Each block counts toward every requirement whose window
/// contains it.
pub fn satisfies(
    spec: &ApplianceSpec,
    actions: &[ApplianceAction],
    horizon: u32,
) -> Result<bool, ExplainError> {
    if actions.len() != horizon as usize {
        return Err(ExplainError::Length {
            expected: horizon as usize,
            actual: actions.len(),
        });
    }
    let omega = spec.duration_steps;
    let mut blocks: Vec<Timestep> = Vec::new();
    for (start, len) in on_runs(actions) {
        if len % omega != 0 {
            return Ok(false);
        }
        blocks.extend((0..len / omega).map(|k| start + k * omega));
    }
    Ok(spec.requirements.iter().all(|r| {
        let covered = blocks
            .iter()
            .filter(|&&b| r.window.contains_run(b, omega))
            .count();
        covered >= r.min_tasks as usize
    }))
}

/// Maximal runs of On as `(first timestep, length)`.
fn on_runs(actions: &[ApplianceAction]) -> Vec<(Timestep, u32)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, a) in actions.iter().enumerate() {
        let t = i as Timestep + 1;
        match (a.is_on(), start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                runs.push((s, t - s));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, actions.len() as Timestep + 1 - s));
    }
    runs
}

/// One requirement added to a named appliance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementAddition {
    pub appliance: String,
    pub window: Window,
    pub min_tasks: u32,
}

impl RequirementAddition {
    pub fn new(appliance: impl Into<String>, window: Window, min_tasks: u32) -> Self {
        RequirementAddition {
            appliance: appliance.into(),
            window,
            min_tasks,
        }
    }
}

/// "Why this schedule rather than one that also meets these requirements?"
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastiveQuestion {
    /// Job id of the solved problem being questioned; may be empty offline.
    #[serde(default)]
    pub base_problem_hash: String,
    pub additions: Vec<RequirementAddition>,
}

impl ContrastiveQuestion {
    /// Additions sorted and deduplicated, so equal questions hash equally.
    pub fn canonical_additions(&self) -> Vec<RequirementAddition> {
        let mut a = self.additions.clone();
        a.sort();
        a.dedup();
        a
    }

    pub fn content_hash(&self) -> String {
        let canon = ContrastiveQuestion {
            base_problem_hash: self.base_problem_hash.clone(),
            additions: self.canonical_additions(),
        };
        canonical::sha256_hex(canonical::to_canonical_string(&canon).as_bytes())
    }
}

/// The model with each addition's requirement joined to its appliance.
///
/// Every plan of the result is a plan of `model`.
pub fn restrict(
    model: &HomeModel,
    additions: &[RequirementAddition],
) -> Result<HomeModel, ExplainError> {
    let mut extra: BTreeMap<usize, Vec<PrimitiveRequirement>> = BTreeMap::new();
    for (k, add) in additions.iter().enumerate() {
        let path = |field: &str| format!("additions[{k}].{field}");
        if add.appliance == BATTERY_NAME {
            return Err(ExplainError::Question(ModelError::new(
                path("appliance"),
                "contrastive questions about the battery are not supported",
            )));
        }
        let Some(i) = model.appliance_index(&add.appliance) else {
            return Err(ExplainError::Question(ModelError::new(
                path("appliance"),
                format!("unknown appliance {:?}", add.appliance),
            )));
        };
        extra
            .entry(i)
            .or_default()
            .push(PrimitiveRequirement::new(add.window.clone(), add.min_tasks));
    }
    if extra.is_empty() {
        return Ok(model.clone());
    }
    let appliances = model
        .appliances()
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut spec = spec.clone();
            for r in extra.remove(&i).unwrap_or_default() {
                spec = spec.with_requirement(r.window, r.min_tasks);
            }
            spec
        })
        .collect();
    model.with_appliances(appliances).map_err(|e| {
        // name the offending addition rather than the merged requirement index
        ExplainError::Question(ModelError::new("additions", e.to_string()))
    })
}

/// A contrastive answer: the original plan against the best plan meeting the
/// extra requirements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastiveExplanation {
    pub original: Plan,
    pub alternative: SolveOutcome,
    /// `C(alternative) - C(original)` when the alternative was solved.
    pub cost_delta: Option<Money>,
    pub rendered: String,
}

pub fn answer_contrastive(
    model: &HomeModel,
    original: &Plan,
    additions: &[RequirementAddition],
    budget: SearchBudget,
) -> Result<ContrastiveExplanation, ExplainError> {
    let restricted = restrict(model, additions)?;
    let alternative = astar_solve(&restricted, budget)?;
    Ok(explanation_from(original.clone(), alternative))
}

/// Assembles an explanation from an already-solved alternative.
pub fn explanation_from(original: Plan, alternative: SolveOutcome) -> ContrastiveExplanation {
    let cost_delta = alternative.cost().map(|c| c - original.total_cost);
    let rendered = render(alternative.status, cost_delta);
    ContrastiveExplanation {
        original,
        alternative,
        cost_delta,
        rendered,
    }
}

/// Message for a failed solve, without the trailing advice.
pub fn status_message(status: SolveStatus) -> Option<&'static str> {
    match status {
        SolveStatus::Solved => None,
        SolveStatus::Unsolvable => Some("Unsolvable problem"),
        SolveStatus::StateBudgetExceeded => Some("Space budget exceeded"),
        SolveStatus::TimeBudgetExceeded => Some("Time budget exceeded"),
    }
}

pub fn render(status: SolveStatus, delta: Option<Money>) -> String {
    if let Some(msg) = status_message(status) {
        return format!("{msg}. Please adjust your question and try again.");
    }
    let delta = delta.unwrap_or(Money::ZERO);
    if delta > Money::ZERO {
        format!(
            "The minimum cost satisfying the question is higher than the Cuttlefish AI schedule. \
             Your total bill increases by {delta} in pence (p)."
        )
    } else if delta == Money::ZERO {
        "The minimum cost satisfying the question is the same as the Cuttlefish AI schedule. \
         Your total bill increases by 0 in pence (p)."
            .to_owned()
    } else {
        // only reachable when the original plan was not optimal
        format!(
            "The minimum cost satisfying the question is lower than the Cuttlefish AI schedule. \
             Your total bill decreases by {} in pence (p).",
            -delta
        )
    }
}

pub fn render_explanation(expl: &ContrastiveExplanation) -> String {
    render(expl.alternative.status, expl.cost_delta)
}

/// Wire form of a [`ContrastiveExplanation`]; money in micro-pence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationJson {
    pub status: SolveStatus,
    pub cost_original: Money,
    pub cost_alternative: Option<Money>,
    pub delta: Option<Money>,
    pub text: String,
    pub plan_original: Plan,
    pub plan_alternative: Option<Plan>,
}

impl From<&ContrastiveExplanation> for ExplanationJson {
    fn from(e: &ContrastiveExplanation) -> Self {
        ExplanationJson {
            status: e.alternative.status,
            cost_original: e.original.total_cost,
            cost_alternative: e.alternative.cost(),
            delta: e.cost_delta,
            text: e.rendered.clone(),
            plan_original: e.original.clone(),
            plan_alternative: e.alternative.plan.clone(),
        }
    }
}
