//! A* over `(joint state, timestep)` with normalized, non-negative step costs.
//!
//! States are packed into mixed-radix `u128` keys (battery charge, then per
//! appliance its progress followed by its requirement counters, then the
//! timestep). Node digits live in one flat arena so expansion never allocates
//! per state.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use super::feasibility::FeasibilityTable;
use super::normalize::{normalize_costs, NormalizedCosts};
use crate::model::{HomeModel, Timestep};
use crate::semantics::{
    appliance_options, battery_applicable, initial_state, next_progress, usage_cost,
    ApplianceAction, BatteryAction, JointAction, Plan,
};
use crate::units::{Energy, Money};

/// Largest appliance count the packed action encoding supports.
pub const MAX_APPLIANCES: usize = 61;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_runtime: Duration,
    pub max_visited_states: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_runtime: Duration::from_secs(180),
            max_visited_states: 8_000_000,
        }
    }
}

impl SearchBudget {
    pub fn unlimited() -> Self {
        SearchBudget {
            max_runtime: Duration::from_secs(u64::MAX / 4),
            max_visited_states: u64::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    Unsolvable,
    TimeBudgetExceeded,
    StateBudgetExceeded,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::Unsolvable => "unsolvable",
            SolveStatus::TimeBudgetExceeded => "time_budget_exceeded",
            SolveStatus::StateBudgetExceeded => "state_budget_exceeded",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Distinct `(state, timestep)` keys reached.
    pub visited: u64,
    pub expanded: u64,
    pub elapsed_ms: u64,
}

/// Result of one solver invocation. `plan` is present iff `status` is `Solved`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
    pub stats: SolveStats,
}

impl SolveOutcome {
    pub fn solved(plan: Plan, stats: SolveStats) -> Self {
        SolveOutcome {
            status: SolveStatus::Solved,
            plan: Some(plan),
            stats,
        }
    }

    pub fn failed(status: SolveStatus, stats: SolveStats) -> Self {
        debug_assert_ne!(status, SolveStatus::Solved);
        SolveOutcome {
            status,
            plan: None,
            stats,
        }
    }

    pub fn cost(&self) -> Option<Money> {
        self.plan.as_ref().map(|p| p.total_cost)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlannerError {
    #[error("model has {0} appliances; the planner supports at most {MAX_APPLIANCES}")]
    TooManyAppliances(usize),
    #[error("joint state space is too large to index")]
    StateSpaceTooLarge,
}

struct Segment {
    /// Digit index of the progress digit; counters follow it.
    start: usize,
    counters: usize,
}

struct Layout {
    width: usize,
    strides: Vec<u128>,
    t_stride: u128,
    segments: Vec<Segment>,
}

impl Layout {
    fn new(model: &HomeModel) -> Result<Self, PlannerError> {
        let mut radices: Vec<u128> = vec![u128::from(model.battery_capacity()) + 1];
        let mut segments = Vec::new();
        for spec in model.appliances() {
            segments.push(Segment {
                start: radices.len(),
                counters: spec.requirements.len(),
            });
            radices.push(u128::from(spec.duration_steps) + 1);
            radices.extend(
                spec.requirements
                    .iter()
                    .map(|r| u128::from(r.min_tasks) + 1),
            );
        }
        let mut strides = Vec::with_capacity(radices.len());
        let mut acc: u128 = 1;
        for r in &radices {
            strides.push(acc);
            acc = acc
                .checked_mul(*r)
                .ok_or(PlannerError::StateSpaceTooLarge)?;
        }
        acc.checked_mul(u128::from(model.horizon()) + 2)
            .ok_or(PlannerError::StateSpaceTooLarge)?;
        Ok(Layout {
            width: radices.len(),
            strides,
            t_stride: acc,
            segments,
        })
    }

    fn key(&self, digits: &[u8], t: Timestep) -> u128 {
        digits
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| u128::from(d) * s)
            .sum::<u128>()
            + u128::from(t) * self.t_stride
    }
}

#[derive(Clone, Copy)]
struct Node {
    parent: u32,
    t: u16,
    action: u64,
    g: Money,
}

const NO_PARENT: u32 = u32::MAX;

fn pack_action(battery: BatteryAction, appliance_bits: u64) -> u64 {
    let b = match battery {
        BatteryAction::Discharge => 0,
        BatteryAction::Idle => 1,
        BatteryAction::Charge => 2,
    };
    b | (appliance_bits << 2)
}

fn unpack_action(packed: u64, n: usize) -> JointAction {
    let battery = match packed & 3 {
        0 => BatteryAction::Discharge,
        1 => BatteryAction::Idle,
        _ => BatteryAction::Charge,
    };
    let appliances = (0..n)
        .map(|i| {
            if packed >> (2 + i) & 1 == 1 {
                ApplianceAction::On
            } else {
                ApplianceAction::Off
            }
        })
        .collect();
    JointAction {
        battery,
        appliances,
    }
}

/// One applicable, non-pruned choice for one effector at the current node.
struct ComponentOption {
    key_part: u128,
    usage: Energy,
    /// Battery action (for the battery component) or appliance on-bit.
    battery: BatteryAction,
    on: bool,
    /// Range of this option's digits in the scratch buffer.
    digits: (usize, usize),
}

struct Search<'m> {
    model: &'m HomeModel,
    horizon: u32,
    costs: NormalizedCosts,
    table: FeasibilityTable,
    layout: Layout,
    nodes: Vec<Node>,
    digits: Vec<u8>,
    best: HashMap<u128, u32>,
    open: BinaryHeap<Reverse<(Money, Money, u64, u32)>>,
    seq: u64,
    expanded: u64,
    budget: SearchBudget,
}

enum Step {
    Continue,
    Goal(u32),
    StateBudget,
}

impl<'m> Search<'m> {
    fn new(model: &'m HomeModel, budget: SearchBudget) -> Result<Self, PlannerError> {
        if model.appliances().len() > MAX_APPLIANCES {
            return Err(PlannerError::TooManyAppliances(model.appliances().len()));
        }
        Ok(Search {
            model,
            horizon: model.horizon(),
            costs: normalize_costs(model),
            table: FeasibilityTable::new(model),
            layout: Layout::new(model)?,
            nodes: Vec::new(),
            digits: Vec::new(),
            best: HashMap::new(),
            open: BinaryHeap::new(),
            seq: 0,
            expanded: 0,
            budget,
        })
    }

    fn node_digits(&self, idx: u32) -> &[u8] {
        let w = self.layout.width;
        &self.digits[idx as usize * w..(idx as usize + 1) * w]
    }

    fn push_node(&mut self, node: Node, digits: &[u8]) -> u32 {
        let idx = self.nodes.len() as u32;
        self.nodes.push(node);
        self.digits.extend_from_slice(digits);
        self.open.push(Reverse((node.g, node.g, self.seq, idx)));
        self.seq += 1;
        idx
    }

    fn seed(&mut self) -> bool {
        let s0 = initial_state(self.model);
        if !self.table.is_feasible(&s0, 1) {
            return false;
        }
        let mut d = vec![s0.battery_charge as u8];
        for a in &s0.appliances {
            d.push(a.progress as u8);
            d.extend(a.completed.iter().map(|&c| c as u8));
        }
        let key = self.layout.key(&d, 1);
        let idx = self.push_node(
            Node {
                parent: NO_PARENT,
                t: 1,
                action: 0,
                g: Money::ZERO,
            },
            &d,
        );
        self.best.insert(key, idx);
        true
    }

    fn expand(&mut self, idx: u32, scratch: &mut Vec<u8>, base: &mut Vec<u8>) -> Step {
        let node = self.nodes[idx as usize];
        let t = Timestep::from(node.t);
        if t == self.horizon + 1 {
            return Step::Goal(idx);
        }
        self.expanded += 1;
        base.clear();
        base.extend_from_slice(self.node_digits(idx));
        scratch.clear();
        let next_t = t + 1;
        let model = self.model;

        let mut components: Vec<ArrayVec<ComponentOption, 3>> =
            Vec::with_capacity(self.layout.segments.len() + 1);

        let mut battery_opts = ArrayVec::new();
        let charge = u32::from(base[0]);
        for b in battery_applicable(charge, model.battery()) {
            let next = (i64::from(charge) + b.delta()) as u32;
            if !self.table.battery_feasible(next, next_t) {
                continue;
            }
            let at = scratch.len();
            scratch.push(next as u8);
            battery_opts.push(ComponentOption {
                key_part: u128::from(next) * self.layout.strides[0],
                usage: model.battery_rate() * b.delta(),
                battery: b,
                on: false,
                digits: (at, at + 1),
            });
        }
        if battery_opts.is_empty() {
            return Step::Continue;
        }
        components.push(battery_opts);

        for (i, (spec, seg)) in model
            .appliances()
            .iter()
            .zip(&self.layout.segments)
            .enumerate()
        {
            let duration = spec.duration_steps;
            let progress = u32::from(base[seg.start]);
            let mut opts = ArrayVec::new();
            for a in appliance_options(t, progress, duration, self.horizon) {
                let p = next_progress(progress, a, duration);
                let at = scratch.len();
                scratch.push(p as u8);
                let completes = a.is_on() && p == duration;
                for r in 0..seg.counters {
                    let mut c = base[seg.start + 1 + r];
                    if completes {
                        let req = self.table.requirement(i, r);
                        if req.run_fits[(t + 1 - duration) as usize] && u32::from(c) < req.min_tasks
                        {
                            c += 1;
                        }
                    }
                    scratch.push(c);
                }
                let end = scratch.len();
                let seg_digits = &scratch[at..end];
                if !self
                    .table
                    .appliance_feasible_digits(i, p, &seg_digits[1..], next_t)
                {
                    scratch.truncate(at);
                    continue;
                }
                let key_part = seg_digits
                    .iter()
                    .zip(&self.layout.strides[seg.start..])
                    .map(|(&d, &s)| u128::from(d) * s)
                    .sum();
                opts.push(ComponentOption {
                    key_part,
                    usage: if a.is_on() { spec.rate } else { Energy::ZERO },
                    battery: BatteryAction::Idle,
                    on: a.is_on(),
                    digits: (at, end),
                });
            }
            if opts.is_empty() {
                return Step::Continue;
            }
            components.push(opts);
        }

        // odometer over the option lists; battery most significant, last appliance fastest
        let mut choice = vec![0usize; components.len()];
        let t_part = u128::from(next_t) * self.layout.t_stride;
        let offset = self.costs.offset(t);
        let tariff = model.tariff();
        // every digit is overwritten per child
        let mut d = base.clone();
        loop {
            let mut key = t_part;
            let mut usage = Energy::ZERO;
            let mut bits: u64 = 0;
            for (c, (opts, &k)) in components.iter().zip(&choice).enumerate() {
                let o = &opts[k];
                key += o.key_part;
                usage += o.usage;
                if c > 0 && o.on {
                    bits |= 1 << (c - 1);
                }
            }
            let g = node.g + usage_cost(tariff, t, usage) + offset;
            let improved = match self.best.entry(key) {
                Entry::Occupied(e) => self.nodes[*e.get() as usize].g > g,
                Entry::Vacant(_) => {
                    if self.best.len() as u64 >= self.budget.max_visited_states {
                        return Step::StateBudget;
                    }
                    true
                }
            };
            if improved {
                d[0] = scratch[components[0][choice[0]].digits.0];
                for (seg, (opts, &k)) in self
                    .layout
                    .segments
                    .iter()
                    .zip(components[1..].iter().zip(&choice[1..]))
                {
                    let (a, b) = opts[k].digits;
                    d[seg.start..seg.start + (b - a)].copy_from_slice(&scratch[a..b]);
                }
                let action = pack_action(components[0][choice[0]].battery, bits);
                let child = self.push_node(
                    Node {
                        parent: idx,
                        t: next_t as u16,
                        action,
                        g,
                    },
                    &d,
                );
                self.best.insert(key, child);
            }

            // advance odometer
            let mut pos = components.len();
            loop {
                if pos == 0 {
                    return Step::Continue;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < components[pos].len() {
                    break;
                }
                choice[pos] = 0;
            }
        }
    }

    fn is_current(&self, idx: u32) -> bool {
        let node = &self.nodes[idx as usize];
        let key = self
            .layout
            .key(self.node_digits(idx), Timestep::from(node.t));
        self.best.get(&key) == Some(&idx)
    }

    fn reconstruct(&self, goal: u32) -> Plan {
        let n = self.model.appliances().len();
        let mut packed = Vec::with_capacity(self.horizon as usize);
        let mut cur = goal;
        while self.nodes[cur as usize].parent != NO_PARENT {
            packed.push(self.nodes[cur as usize].action);
            cur = self.nodes[cur as usize].parent;
        }
        packed.reverse();
        let actions = packed.into_iter().map(|p| unpack_action(p, n)).collect();
        Plan {
            actions,
            total_cost: self.costs.denormalize_total(self.nodes[goal as usize].g),
        }
    }
}

/// Finds a minimum-cost plan, or reports why none was returned.
///
/// Ties in `f` are broken by lower `g`, then by insertion order, so repeated
/// runs return identical plans.
pub fn astar_solve(model: &HomeModel, budget: SearchBudget) -> Result<SolveOutcome, PlannerError> {
    let started = Instant::now();
    let mut search = Search::new(model, budget)?;
    let outcome = run(&mut search, started);
    tracing::info!(
        target: "cuttlefish::planner",
        instance = %model.content_hash(),
        visited = outcome.stats.visited,
        expanded = outcome.stats.expanded,
        elapsed_ms = outcome.stats.elapsed_ms,
        status = outcome.status.as_str(),
        "solve finished"
    );
    Ok(outcome)
}

fn run(search: &mut Search<'_>, started: Instant) -> SolveOutcome {
    let stats = |s: &Search<'_>| SolveStats {
        visited: s.best.len() as u64,
        expanded: s.expanded,
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    if !search.seed() {
        return SolveOutcome::failed(
            SolveStatus::Unsolvable,
            SolveStats {
                visited: 1,
                ..stats(search)
            },
        );
    }
    let mut scratch = Vec::new();
    let mut base = Vec::new();
    while let Some(Reverse((_, _, _, idx))) = search.open.pop() {
        if started.elapsed() >= search.budget.max_runtime {
            return SolveOutcome::failed(SolveStatus::TimeBudgetExceeded, stats(search));
        }
        if !search.is_current(idx) {
            continue;
        }
        match search.expand(idx, &mut scratch, &mut base) {
            Step::Continue => {}
            Step::StateBudget => {
                return SolveOutcome::failed(SolveStatus::StateBudgetExceeded, stats(search))
            }
            Step::Goal(goal) => {
                let plan = search.reconstruct(goal);
                debug_assert_eq!(
                    crate::semantics::validate_plan(&plan, search.model),
                    crate::semantics::PlanVerdict::Valid {
                        cost: plan.total_cost
                    }
                );
                return SolveOutcome::solved(plan, stats(search));
            }
        }
    }
    SolveOutcome::failed(SolveStatus::Unsolvable, stats(search))
}
