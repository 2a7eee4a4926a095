//! Goal-reachability pruning.
//!
//! A state is pruned when some single requirement can no longer collect its
//! residual task count, or when the battery cannot reach a goal charge in the
//! steps left. Each test relaxes every interaction with the other
//! requirements and effectors, so a pruned state never lies on a valid plan.

use crate::model::{ApplianceSpec, BatterySpec, HomeModel, Timestep, Window};
use crate::semantics::{ApplianceState, JointState};
use crate::units::Money;

/// Whether `needed` disjoint runs of `duration` steps can still be placed
/// inside `window` from `from_t` on.
///
/// `in_progress` is the start of a task that is already running: that task
/// is credited if it lies inside the window, and no other run may overlap it.
/// Greedy leftmost placement is exact for equal-length runs.
pub fn requirement_feasible(
    window: &Window,
    from_t: Timestep,
    needed: u32,
    duration: u32,
    in_progress: Option<Timestep>,
) -> bool {
    if needed == 0 {
        return true;
    }
    let mut placed = 0;
    let mut cursor = from_t;
    if let Some(start) = in_progress {
        if window.contains_run(start, duration) {
            placed += 1;
        }
        cursor = cursor.max(start + duration);
    }
    let Some(last) = window.last() else {
        return placed >= needed;
    };
    while placed < needed && u64::from(cursor) + u64::from(duration) - 1 <= u64::from(last) {
        if window.contains_run(cursor, duration) {
            placed += 1;
            cursor += duration;
        } else {
            cursor += 1;
        }
    }
    placed >= needed
}

/// Start of the running task when the appliance is mid-task at timestep `t`.
fn running_task_start(
    t: Timestep,
    state: &ApplianceState,
    spec: &ApplianceSpec,
) -> Option<Timestep> {
    (!state.is_idle(spec)).then(|| t - state.progress)
}

fn battery_can_reach_goal(charge: u32, battery: &BatterySpec, steps_left: u32) -> bool {
    match &battery.goal_charges {
        None => true,
        Some(goals) => goals.iter().any(|&g| g.abs_diff(charge) <= steps_left),
    }
}

/// Search heuristic for `state` with timestep `t` next to act.
///
/// Returns `None` when the goal is provably unreachable, otherwise a lower
/// bound on the remaining normalized cost. Normalized step costs are
/// non-negative, so zero is admissible.
pub fn heuristic(state: &JointState, t: Timestep, model: &HomeModel) -> Option<Money> {
    let steps_left = model.horizon() + 1 - t;
    if let Some(b) = model.battery() {
        if !battery_can_reach_goal(state.battery_charge, b, steps_left) {
            return None;
        }
    }
    for (spec, s) in model.appliances().iter().zip(&state.appliances) {
        let running = running_task_start(t, s, spec);
        for (req, &done) in spec.requirements.iter().zip(&s.completed) {
            let needed = req.min_tasks.saturating_sub(done);
            if !requirement_feasible(&req.window, t, needed, spec.duration_steps, running) {
                return None;
            }
        }
    }
    Some(Money::ZERO)
}

/// Precomputed form of [`heuristic`]'s pruning used inside the search.
///
/// For each requirement, `max_runs[t]` is the largest number of disjoint runs
/// placeable in the window using only timesteps `>= t`, computed right to
/// left; the greedy function above is the independent reference.
#[derive(Debug, Clone)]
pub struct FeasibilityTable {
    horizon: u32,
    appliances: Vec<ApplianceTable>,
    battery_distance: Vec<u32>,
}

#[derive(Debug, Clone)]
struct ApplianceTable {
    duration: u32,
    requirements: Vec<RequirementTable>,
}

#[derive(Debug, Clone)]
pub(crate) struct RequirementTable {
    pub(crate) min_tasks: u32,
    /// `run_fits[t0]`: run starting at `t0` lies in the window (index 0 unused).
    pub(crate) run_fits: Vec<bool>,
    max_runs: Vec<u32>,
}

impl FeasibilityTable {
    pub fn new(model: &HomeModel) -> Self {
        let h = model.horizon();
        let appliances = model
            .appliances()
            .iter()
            .map(|spec| ApplianceTable {
                duration: spec.duration_steps,
                requirements: spec
                    .requirements
                    .iter()
                    .map(|r| RequirementTable::new(&r.window, spec.duration_steps, r.min_tasks, h))
                    .collect(),
            })
            .collect();
        let battery_distance = match model.battery() {
            None => vec![0],
            Some(b) => (0..=b.capacity_steps)
                .map(|c| match &b.goal_charges {
                    None => 0,
                    Some(goals) => goals
                        .iter()
                        .map(|&g| g.abs_diff(c))
                        .min()
                        .unwrap_or(u32::MAX),
                })
                .collect(),
        };
        FeasibilityTable {
            horizon: h,
            appliances,
            battery_distance,
        }
    }

    pub fn battery_feasible(&self, charge: u32, t: Timestep) -> bool {
        self.battery_distance[charge as usize] <= self.horizon + 1 - t
    }

    /// Appliance `i` with the given progress and counters, `t` next to act.
    pub fn appliance_feasible(
        &self,
        i: usize,
        progress: u32,
        completed: &[u32],
        t: Timestep,
    ) -> bool {
        self.appliance_feasible_with(i, progress, completed.iter().copied(), t)
    }

    pub(crate) fn appliance_feasible_digits(
        &self,
        i: usize,
        progress: u32,
        completed: &[u8],
        t: Timestep,
    ) -> bool {
        self.appliance_feasible_with(i, progress, completed.iter().map(|&c| u32::from(c)), t)
    }

    fn appliance_feasible_with(
        &self,
        i: usize,
        progress: u32,
        completed: impl Iterator<Item = u32>,
        t: Timestep,
    ) -> bool {
        let a = &self.appliances[i];
        let running = progress != 0 && progress != a.duration;
        a.requirements.iter().zip(completed).all(|(r, done)| {
            let needed = r.min_tasks.saturating_sub(done);
            if needed == 0 {
                return true;
            }
            if running {
                let start = t - progress;
                let credit = u32::from(r.run_fits[start as usize]);
                credit + r.max_runs_from(start + a.duration) >= needed
            } else {
                r.max_runs_from(t) >= needed
            }
        })
    }

    pub fn is_feasible(&self, state: &JointState, t: Timestep) -> bool {
        self.battery_feasible(state.battery_charge, t)
            && state
                .appliances
                .iter()
                .enumerate()
                .all(|(i, s)| self.appliance_feasible(i, s.progress, &s.completed, t))
    }

    pub(crate) fn requirement(&self, appliance: usize, req: usize) -> &RequirementTable {
        &self.appliances[appliance].requirements[req]
    }
}

impl RequirementTable {
    fn new(window: &Window, duration: u32, min_tasks: u32, h: u32) -> Self {
        let len = (h + duration + 2) as usize;
        let mut run_fits = vec![false; len];
        for t0 in 1..=h {
            run_fits[t0 as usize] = t0 + duration - 1 <= h && window.contains_run(t0, duration);
        }
        let mut max_runs = vec![0u32; len];
        for t in (1..=h as usize).rev() {
            let skip = max_runs[t + 1];
            let take = if run_fits[t] {
                1 + max_runs[t + duration as usize]
            } else {
                0
            };
            max_runs[t] = skip.max(take);
        }
        RequirementTable {
            min_tasks,
            run_fits,
            max_runs,
        }
    }

    fn max_runs_from(&self, t: Timestep) -> u32 {
        self.max_runs.get(t as usize).copied().unwrap_or(0)
    }
}
