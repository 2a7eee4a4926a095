//! Applicability, transition, cost and goal semantics of the home model.
//!
//! A task occupies exactly `duration_steps` consecutive timesteps
//! `{t0, ..., t0 + duration - 1}` inside the horizon, and it counts toward a
//! requirement iff all of those timesteps lie in the requirement's window.
//! Completion counters are capped at the requirement's `min_tasks`, which
//! keeps the state space finite without changing which plans reach the goal.

use std::fmt;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::model::{ApplianceSpec, BatterySpec, DynamicTariff, HomeModel, Timestep};
use crate::units::{Energy, Money};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum BatteryAction {
    Discharge,
    Idle,
    Charge,
}

impl BatteryAction {
    pub const ALL: [BatteryAction; 3] = [
        BatteryAction::Discharge,
        BatteryAction::Idle,
        BatteryAction::Charge,
    ];

    /// Change in charge level: -1, 0 or +1.
    pub fn delta(self) -> i64 {
        match self {
            BatteryAction::Discharge => -1,
            BatteryAction::Idle => 0,
            BatteryAction::Charge => 1,
        }
    }
}

impl TryFrom<i8> for BatteryAction {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            -1 => Ok(BatteryAction::Discharge),
            0 => Ok(BatteryAction::Idle),
            1 => Ok(BatteryAction::Charge),
            _ => Err(format!("battery action must be -1, 0 or 1, got {v}")),
        }
    }
}

impl From<BatteryAction> for i8 {
    fn from(a: BatteryAction) -> i8 {
        a.delta() as i8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ApplianceAction {
    Off,
    On,
}

impl ApplianceAction {
    pub fn is_on(self) -> bool {
        self == ApplianceAction::On
    }
}

impl TryFrom<u8> for ApplianceAction {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(ApplianceAction::Off),
            1 => Ok(ApplianceAction::On),
            _ => Err(format!("appliance action must be 0 or 1, got {v}")),
        }
    }
}

impl From<ApplianceAction> for u8 {
    fn from(a: ApplianceAction) -> u8 {
        a as u8
    }
}

/// One battery action plus one action per appliance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointAction {
    pub battery: BatteryAction,
    pub appliances: Vec<ApplianceAction>,
}

impl JointAction {
    pub fn idle(n: usize) -> Self {
        JointAction {
            battery: BatteryAction::Idle,
            appliances: vec![ApplianceAction::Off; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ApplianceState {
    /// Steps completed in the current task, `0..=duration`.
    pub progress: u32,
    /// Tasks credited to each requirement, in requirement order.
    pub completed: Vec<u32>,
}

impl ApplianceState {
    pub fn initial(spec: &ApplianceSpec) -> Self {
        ApplianceState {
            progress: 0,
            completed: vec![0; spec.requirements.len()],
        }
    }

    /// True when no task is running (so the appliance may stay off).
    pub fn is_idle(&self, spec: &ApplianceSpec) -> bool {
        self.progress == 0 || self.progress == spec.duration_steps
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointState {
    pub battery_charge: u32,
    pub appliances: Vec<ApplianceState>,
}

/// A length-`h` action sequence together with its total cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub actions: Vec<JointAction>,
    /// Total cost in micro-pence.
    pub total_cost: Money,
}

/// Which effector an error or verdict refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Battery,
    Appliance(usize),
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Battery => f.write_str("battery"),
            Component::Appliance(i) => write!(f, "appliance {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error("action for {component} is not applicable at timestep {t}")]
    Inapplicable { t: Timestep, component: Component },
    #[error("joint action has {actual} appliance actions, model has {expected} appliances")]
    Shape { expected: usize, actual: usize },
}

/// Whether completion counters saturate at the requirement's `min_tasks`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterMode {
    Capped,
    Uncapped,
}

pub fn battery_applicable(
    charge: u32,
    battery: Option<&BatterySpec>,
) -> ArrayVec<BatteryAction, 3> {
    let capacity = battery.map_or(0, |b| b.capacity_steps);
    let mut out = ArrayVec::new();
    if charge != 0 {
        out.push(BatteryAction::Discharge);
    }
    out.push(BatteryAction::Idle);
    if charge != capacity {
        out.push(BatteryAction::Charge);
    }
    out
}

pub fn battery_transition(
    charge: u32,
    action: BatteryAction,
    battery: Option<&BatterySpec>,
) -> Result<u32, SemanticsError> {
    if !battery_applicable(charge, battery).contains(&action) {
        return Err(SemanticsError::Inapplicable {
            t: 0,
            component: Component::Battery,
        });
    }
    let capacity = i64::from(battery.map_or(0, |b| b.capacity_steps));
    Ok((i64::from(charge) + action.delta()).clamp(0, capacity) as u32)
}

/// Applicable appliance actions from raw progress, shared with the search.
pub(crate) fn appliance_options(
    t: Timestep,
    progress: u32,
    duration: u32,
    horizon: u32,
) -> ArrayVec<ApplianceAction, 2> {
    let idle = progress == 0 || progress == duration;
    let mut out = ArrayVec::new();
    if idle {
        out.push(ApplianceAction::Off);
    }
    // the rest of a running task, or a whole fresh task
    let remaining = if idle { duration } else { duration - progress };
    let slots_left = i64::from(horizon) - i64::from(t) + 1;
    if i64::from(remaining) <= slots_left {
        out.push(ApplianceAction::On);
    }
    out
}

pub(crate) fn next_progress(progress: u32, action: ApplianceAction, duration: u32) -> u32 {
    if progress != duration && action.is_on() {
        progress + 1
    } else {
        action as u32
    }
}

/// Off is applicable only between tasks; On only if the task can finish by `h`.
pub fn appliance_applicable(
    t: Timestep,
    state: &ApplianceState,
    spec: &ApplianceSpec,
    horizon: u32,
) -> ArrayVec<ApplianceAction, 2> {
    appliance_options(t, state.progress, spec.duration_steps, horizon)
}

pub fn appliance_transition(
    t: Timestep,
    state: &ApplianceState,
    action: ApplianceAction,
    spec: &ApplianceSpec,
    horizon: u32,
) -> Result<ApplianceState, SemanticsError> {
    appliance_transition_with(t, state, action, spec, horizon, CounterMode::Capped)
}

pub fn appliance_transition_with(
    t: Timestep,
    state: &ApplianceState,
    action: ApplianceAction,
    spec: &ApplianceSpec,
    horizon: u32,
    mode: CounterMode,
) -> Result<ApplianceState, SemanticsError> {
    if !appliance_applicable(t, state, spec, horizon).contains(&action) {
        return Err(SemanticsError::Inapplicable {
            t,
            component: Component::Appliance(0),
        });
    }
    let duration = spec.duration_steps;
    let progress = next_progress(state.progress, action, duration);
    let mut completed = state.completed.clone();
    if action.is_on() && progress == duration {
        let start = t + 1 - duration;
        for (count, req) in completed.iter_mut().zip(&spec.requirements) {
            if req.window.contains_run(start, duration) {
                *count += 1;
                if mode == CounterMode::Capped {
                    *count = (*count).min(req.min_tasks);
                }
            }
        }
    }
    Ok(ApplianceState {
        progress,
        completed,
    })
}

/// Net energy drawn from the grid: positive imports, negative exports.
pub fn net_usage(action: &JointAction, model: &HomeModel) -> Energy {
    let battery = model.battery_rate() * action.battery.delta();
    model
        .appliances()
        .iter()
        .zip(&action.appliances)
        .filter(|(_, a)| a.is_on())
        .map(|(spec, _)| spec.rate)
        .fold(battery, |acc, r| acc + r)
}

/// Cost of drawing `usage` at timestep `t`: export price for negative usage,
/// import price otherwise.
pub fn usage_cost(tariff: &DynamicTariff, t: Timestep, usage: Energy) -> Money {
    if usage.is_negative() {
        tariff.export_price(t) * usage
    } else {
        tariff.import_price(t) * usage
    }
}

pub fn joint_cost(t: Timestep, action: &JointAction, model: &HomeModel) -> Money {
    usage_cost(model.tariff(), t, net_usage(action, model))
}

pub fn initial_state(model: &HomeModel) -> JointState {
    JointState {
        battery_charge: model.battery().map_or(0, |b| b.initial_charge),
        appliances: model
            .appliances()
            .iter()
            .map(ApplianceState::initial)
            .collect(),
    }
}

/// All applicable joint actions, battery-major, then appliances in
/// lexicographic order (Off before On, first appliance most significant).
pub fn joint_applicable(t: Timestep, state: &JointState, model: &HomeModel) -> Vec<JointAction> {
    let h = model.horizon();
    let per_appliance: Vec<ArrayVec<ApplianceAction, 2>> = model
        .appliances()
        .iter()
        .zip(&state.appliances)
        .map(|(spec, s)| appliance_applicable(t, s, spec, h))
        .collect();
    let mut combos: Vec<Vec<ApplianceAction>> = vec![Vec::with_capacity(per_appliance.len())];
    for options in &per_appliance {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |&a| {
                    let mut next = prefix.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    battery_applicable(state.battery_charge, model.battery())
        .into_iter()
        .flat_map(|b| {
            combos.iter().map(move |apps| JointAction {
                battery: b,
                appliances: apps.clone(),
            })
        })
        .collect()
}

pub fn joint_transition(
    t: Timestep,
    state: &JointState,
    action: &JointAction,
    model: &HomeModel,
) -> Result<JointState, SemanticsError> {
    joint_transition_with(t, state, action, model, CounterMode::Capped)
}

pub fn joint_transition_with(
    t: Timestep,
    state: &JointState,
    action: &JointAction,
    model: &HomeModel,
    mode: CounterMode,
) -> Result<JointState, SemanticsError> {
    let n = model.appliances().len();
    if action.appliances.len() != n {
        return Err(SemanticsError::Shape {
            expected: n,
            actual: action.appliances.len(),
        });
    }
    let battery_charge = battery_transition(state.battery_charge, action.battery, model.battery())
        .map_err(|_| SemanticsError::Inapplicable {
            t,
            component: Component::Battery,
        })?;
    let h = model.horizon();
    let appliances = model
        .appliances()
        .iter()
        .zip(&state.appliances)
        .zip(&action.appliances)
        .enumerate()
        .map(|(i, ((spec, s), &a))| {
            appliance_transition_with(t, s, a, spec, h, mode).map_err(|_| {
                SemanticsError::Inapplicable {
                    t,
                    component: Component::Appliance(i),
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JointState {
        battery_charge,
        appliances,
    })
}

pub fn is_goal(state: &JointState, model: &HomeModel) -> bool {
    let battery_ok = model
        .battery()
        .map_or(true, |b| b.is_goal_charge(state.battery_charge));
    battery_ok
        && model
            .appliances()
            .iter()
            .zip(&state.appliances)
            .all(|(spec, s)| {
                spec.requirements
                    .iter()
                    .zip(&s.completed)
                    .all(|(r, &c)| c >= r.min_tasks)
            })
}

/// Why a plan was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InvalidReason {
    Length { expected: usize, actual: usize },
    Shape { expected: usize, actual: usize },
    Inapplicable { component: Component },
    GoalUnmet,
    CostMismatch { recorded: Money, actual: Money },
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::Length { expected, actual } => {
                write!(f, "plan has {actual} actions, horizon is {expected}")
            }
            InvalidReason::Shape { expected, actual } => {
                write!(
                    f,
                    "joint action has {actual} appliance actions, model has {expected}"
                )
            }
            InvalidReason::Inapplicable { component } => {
                write!(f, "inapplicable action for {component}")
            }
            InvalidReason::GoalUnmet => f.write_str("final state does not satisfy the goal"),
            InvalidReason::CostMismatch { recorded, actual } => {
                write!(
                    f,
                    "recorded cost {recorded} p differs from actual cost {actual} p"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PlanVerdict {
    Valid {
        cost: Money,
    },
    Invalid {
        reason: InvalidReason,
        #[serde(skip_serializing_if = "Option::is_none")]
        step: Option<Timestep>,
    },
}

impl PlanVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, PlanVerdict::Valid { .. })
    }
}

/// Outcome of running an action sequence from the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// `states[0]` is the initial state; `states[t]` is the state after step `t`.
    pub states: Vec<JointState>,
    pub cost: Money,
}

/// Simulates `actions` from the initial state, checking applicability and
/// the goal. The recorded cost of a [`Plan`] is not consulted.
pub fn simulate(
    model: &HomeModel,
    actions: &[JointAction],
    mode: CounterMode,
) -> Result<Trajectory, (InvalidReason, Option<Timestep>)> {
    let h = model.horizon() as usize;
    if actions.len() != h {
        return Err((
            InvalidReason::Length {
                expected: h,
                actual: actions.len(),
            },
            None,
        ));
    }
    let mut states = Vec::with_capacity(h + 1);
    states.push(initial_state(model));
    let mut cost = Money::ZERO;
    for (i, action) in actions.iter().enumerate() {
        let t = i as Timestep + 1;
        let next =
            joint_transition_with(t, &states[i], action, model, mode).map_err(|e| match e {
                SemanticsError::Inapplicable { component, .. } => {
                    (InvalidReason::Inapplicable { component }, Some(t))
                }
                SemanticsError::Shape { expected, actual } => {
                    (InvalidReason::Shape { expected, actual }, Some(t))
                }
            })?;
        cost += joint_cost(t, action, model);
        states.push(next);
    }
    if !is_goal(&states[h], model) {
        return Err((InvalidReason::GoalUnmet, None));
    }
    Ok(Trajectory { states, cost })
}

pub fn validate_plan(plan: &Plan, model: &HomeModel) -> PlanVerdict {
    match simulate(model, &plan.actions, CounterMode::Capped) {
        Err((reason, step)) => PlanVerdict::Invalid { reason, step },
        Ok(traj) if traj.cost != plan.total_cost => PlanVerdict::Invalid {
            reason: InvalidReason::CostMismatch {
                recorded: plan.total_cost,
                actual: traj.cost,
            },
            step: None,
        },
        Ok(traj) => PlanVerdict::Valid { cost: traj.cost },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PrimitiveRequirement, Window};
    use crate::units::Price;
    use ApplianceAction::{Off, On};
    use BatteryAction::{Charge, Discharge, Idle};

    fn battery(cap: u32) -> BatterySpec {
        BatterySpec::new(cap, Energy::from_wh(1000))
    }

    fn washer(window: Window, min_tasks: u32) -> ApplianceSpec {
        ApplianceSpec {
            name: "washer".into(),
            duration_steps: 2,
            rate: Energy::from_wh(750),
            requirements: vec![PrimitiveRequirement::new(window, min_tasks)],
        }
    }

    fn st(progress: u32, completed: &[u32]) -> ApplianceState {
        ApplianceState {
            progress,
            completed: completed.to_vec(),
        }
    }

    #[test]
    fn battery_applicability_at_bounds() {
        let b = battery(6);
        assert_eq!(battery_applicable(0, Some(&b)).as_slice(), &[Idle, Charge]);
        assert_eq!(
            battery_applicable(6, Some(&b)).as_slice(),
            &[Discharge, Idle]
        );
        assert_eq!(
            battery_applicable(3, Some(&b)).as_slice(),
            &[Discharge, Idle, Charge]
        );
        assert_eq!(battery_applicable(0, None).as_slice(), &[Idle]);
    }

    #[test]
    fn battery_transitions() {
        let b = battery(6);
        assert_eq!(battery_transition(3, Discharge, Some(&b)), Ok(2));
        assert_eq!(battery_transition(0, Idle, Some(&b)), Ok(0));
        assert!(battery_transition(6, Charge, Some(&b)).is_err());
        assert!(battery_transition(0, Discharge, Some(&b)).is_err());
        assert!(battery_transition(0, Charge, None).is_err());
    }

    #[test]
    fn appliance_applicability() {
        let w = washer(Window::horizon(4), 1);
        assert_eq!(
            appliance_applicable(3, &st(0, &[0]), &w, 4).as_slice(),
            &[Off, On]
        );
        assert_eq!(
            appliance_applicable(4, &st(0, &[0]), &w, 4).as_slice(),
            &[Off]
        );
        assert_eq!(
            appliance_applicable(4, &st(1, &[0]), &w, 4).as_slice(),
            &[On]
        );
        // just finished: may idle or start a fresh task if it fits
        assert_eq!(
            appliance_applicable(3, &st(2, &[1]), &w, 4).as_slice(),
            &[Off, On]
        );
        assert_eq!(
            appliance_applicable(4, &st(2, &[1]), &w, 4).as_slice(),
            &[Off]
        );
    }

    #[test]
    fn appliance_transitions_credit_windows() {
        let inside = washer(Window::range(2, 3).unwrap(), 1);
        let s = appliance_transition(3, &st(1, &[0]), On, &inside, 4).unwrap();
        assert_eq!(s, st(2, &[1]));

        let outside = washer(Window::range(1, 2).unwrap(), 1);
        let s = appliance_transition(3, &st(1, &[0]), On, &outside, 4).unwrap();
        assert_eq!(s, st(2, &[0]));

        let s = appliance_transition(1, &st(0, &[0]), Off, &inside, 4).unwrap();
        assert_eq!(s, st(0, &[0]));

        assert!(appliance_transition(4, &st(1, &[0]), Off, &inside, 4).is_err());
    }

    #[test]
    fn counters_cap_at_min_tasks() {
        let mut spec = washer(Window::horizon(8), 1);
        spec.duration_steps = 1;
        let s = appliance_transition(1, &st(0, &[0]), On, &spec, 8).unwrap();
        let s = appliance_transition(2, &s, On, &spec, 8).unwrap();
        assert_eq!(s.completed, vec![1]);
        let u = appliance_transition_with(1, &st(0, &[0]), On, &spec, 8, CounterMode::Uncapped)
            .unwrap();
        let u = appliance_transition_with(2, &u, On, &spec, 8, CounterMode::Uncapped).unwrap();
        assert_eq!(u.completed, vec![2]);
    }

    fn home(
        prices_i: &[i64],
        prices_e: &[i64],
        battery: Option<BatterySpec>,
        apps: Vec<ApplianceSpec>,
    ) -> HomeModel {
        HomeModel::new(
            DynamicTariff::from_pence(prices_i, prices_e).unwrap(),
            battery,
            apps,
        )
        .unwrap()
    }

    #[test]
    fn net_usage_and_cost() {
        let mut w = washer(Window::horizon(2), 0);
        w.requirements.clear();
        let m = home(&[10, 10], &[5, 5], Some(battery(6)), vec![w]);
        let charge_on = JointAction {
            battery: Charge,
            appliances: vec![On],
        };
        let discharge_on = JointAction {
            battery: Discharge,
            appliances: vec![On],
        };
        assert_eq!(net_usage(&charge_on, &m), Energy::from_wh(1750));
        assert_eq!(net_usage(&discharge_on, &m), Energy::from_wh(-250));
        assert_eq!(net_usage(&JointAction::idle(1), &m), Energy::ZERO);
        assert_eq!(joint_cost(1, &charge_on, &m), Money(17_500_000));
        assert_eq!(joint_cost(1, &discharge_on, &m), Money(-1_250_000));
        assert_eq!(joint_cost(1, &JointAction::idle(1), &m), Money::ZERO);
    }

    #[test]
    fn zero_usage_costs_nothing_at_any_price() {
        let t = DynamicTariff::new(vec![Price(-7_000)], vec![Price(123)]).unwrap();
        assert_eq!(usage_cost(&t, 1, Energy::ZERO), Money::ZERO);
    }

    #[test]
    fn goals() {
        let m = home(&[1], &[1], Some(battery(1)), vec![]);
        assert!(is_goal(&initial_state(&m), &m));

        let w = washer(Window::horizon(4), 1);
        let m = home(&[1; 4], &[1; 4], None, vec![w]);
        let mut s = initial_state(&m);
        assert!(!is_goal(&s, &m));
        s.appliances[0].completed[0] = 1;
        assert!(is_goal(&s, &m));
    }

    #[test]
    fn goal_charges_are_enforced() {
        let mut b = battery(2);
        b.goal_charges = Some([2].into_iter().collect());
        let m = home(&[1; 2], &[1; 2], Some(b), vec![]);
        assert!(!is_goal(&initial_state(&m), &m));
        let plan = Plan {
            actions: vec![
                JointAction {
                    battery: Charge,
                    appliances: vec![]
                };
                2
            ],
            total_cost: Money::from_pence(2),
        };
        assert_eq!(
            validate_plan(&plan, &m),
            PlanVerdict::Valid {
                cost: Money::from_pence(2)
            }
        );
    }

    #[test]
    fn battery_arbitrage_plan() {
        let m = home(&[10, 20], &[5, 15], Some(battery(1)), vec![]);
        let charge = JointAction {
            battery: Charge,
            appliances: vec![],
        };
        let discharge = JointAction {
            battery: Discharge,
            appliances: vec![],
        };
        let plan = Plan {
            actions: vec![charge, discharge.clone()],
            total_cost: Money::from_pence(-5),
        };
        assert_eq!(
            validate_plan(&plan, &m),
            PlanVerdict::Valid {
                cost: Money::from_pence(-5)
            }
        );

        let bad = Plan {
            actions: vec![discharge, JointAction::idle(0)],
            total_cost: Money::ZERO,
        };
        assert_eq!(
            validate_plan(&bad, &m),
            PlanVerdict::Invalid {
                reason: InvalidReason::Inapplicable {
                    component: Component::Battery
                },
                step: Some(1)
            }
        );

        let tampered = Plan {
            total_cost: Money::from_pence(-6),
            ..plan
        };
        assert!(matches!(
            validate_plan(&tampered, &m),
            PlanVerdict::Invalid {
                reason: InvalidReason::CostMismatch { .. },
                ..
            }
        ));
    }

    #[test]
    fn all_off_plan_misses_requirement() {
        let m = home(&[1; 4], &[1; 4], None, vec![washer(Window::horizon(4), 1)]);
        let plan = Plan {
            actions: vec![JointAction::idle(1); 4],
            total_cost: Money::ZERO,
        };
        assert_eq!(
            validate_plan(&plan, &m),
            PlanVerdict::Invalid {
                reason: InvalidReason::GoalUnmet,
                step: None
            }
        );
        let short = Plan {
            actions: vec![JointAction::idle(1); 3],
            total_cost: Money::ZERO,
        };
        assert!(matches!(
            validate_plan(&short, &m),
            PlanVerdict::Invalid {
                reason: InvalidReason::Length {
                    expected: 4,
                    actual: 3
                },
                step: None
            }
        ));
    }

    #[test]
    fn joint_applicable_is_componentwise_product() {
        let mut w = washer(Window::horizon(4), 0);
        w.requirements.clear();
        let m = home(
            &[1; 4],
            &[1; 4],
            Some(battery(2)),
            vec![
                w.clone(),
                ApplianceSpec {
                    name: "dryer".into(),
                    ..w
                },
            ],
        );
        let s = initial_state(&m);
        let acts = joint_applicable(1, &s, &m);
        // battery {0,+1} x {off,on}^2
        assert_eq!(acts.len(), 8);
        assert_eq!(
            acts[0],
            JointAction {
                battery: Idle,
                appliances: vec![Off, Off]
            }
        );
        assert_eq!(
            acts[7],
            JointAction {
                battery: Charge,
                appliances: vec![On, On]
            }
        );
    }

    #[test]
    fn action_json_encoding() {
        let a = JointAction {
            battery: Discharge,
            appliances: vec![On, Off],
        };
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            r#"{"battery":-1,"appliances":[1,0]}"#
        );
        assert!(serde_json::from_str::<JointAction>(r#"{"battery":2,"appliances":[]}"#).is_err());
    }
}
