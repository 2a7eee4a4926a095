//! Exhaustive reference solver for small instances.
//!
//! Appliance sequences are checked with the run-decomposition test in
//! [`crate::explain::satisfies`] and battery sequences by direct charge
//! bookkeeping, so this shares no transition code with the search.

use std::time::Instant;

use super::{SolveOutcome, SolveStats, SolveStatus};
use crate::explain::satisfies;
use crate::model::HomeModel;
use crate::semantics::{ApplianceAction, BatteryAction, JointAction, Plan};
use crate::units::{Energy, Money};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest number of candidate sequences (per component or combined) to enumerate.
    pub max_candidates: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_candidates: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("instance needs {needed} candidate sequences; the oracle cap is {cap}")]
    TooLarge { needed: u128, cap: u64 },
}

fn check_cap(needed: u128, cfg: &OracleConfig) -> Result<(), OracleError> {
    if needed > u128::from(cfg.max_candidates) {
        Err(OracleError::TooLarge {
            needed,
            cap: cfg.max_candidates,
        })
    } else {
        Ok(())
    }
}

fn battery_sequences(model: &HomeModel) -> Vec<Vec<BatteryAction>> {
    let h = model.horizon() as usize;
    let Some(b) = model.battery() else {
        return vec![vec![BatteryAction::Idle; h]];
    };
    let mut out = Vec::new();
    let mut seq = Vec::with_capacity(h);
    fn dfs(
        charge: i64,
        cap: i64,
        h: usize,
        goal: &dyn Fn(i64) -> bool,
        seq: &mut Vec<BatteryAction>,
        out: &mut Vec<Vec<BatteryAction>>,
    ) {
        if seq.len() == h {
            if goal(charge) {
                out.push(seq.clone());
            }
            return;
        }
        for (a, d) in [
            (BatteryAction::Discharge, -1),
            (BatteryAction::Idle, 0),
            (BatteryAction::Charge, 1),
        ] {
            let next = charge + d;
            if (0..=cap).contains(&next) {
                seq.push(a);
                dfs(next, cap, h, goal, seq, out);
                seq.pop();
            }
        }
    }
    let goal = |c: i64| {
        b.goal_charges
            .as_ref()
            .map_or(true, |g| g.contains(&(c as u32)))
    };
    dfs(
        i64::from(b.initial_charge),
        i64::from(b.capacity_steps),
        h,
        &goal,
        &mut seq,
        &mut out,
    );
    out
}

fn appliance_sequences(model: &HomeModel, i: usize) -> Vec<Vec<ApplianceAction>> {
    let h = model.horizon();
    let spec = &model.appliances()[i];
    (0u64..1 << h)
        .map(|mask| {
            // first timestep is the most significant bit, so Off sorts first
            (0..h)
                .map(|k| {
                    if mask >> (h - 1 - k) & 1 == 1 {
                        ApplianceAction::On
                    } else {
                        ApplianceAction::Off
                    }
                })
                .collect::<Vec<_>>()
        })
        .filter(|seq| satisfies(spec, seq, h).expect("sequence has horizon length"))
        .collect()
}

fn step_cost(model: &HomeModel, t: usize, usage: Energy) -> Money {
    let tariff = model.tariff();
    let price = if usage.wh() < 0 {
        tariff.export_prices()[t]
    } else {
        tariff.import_prices()[t]
    };
    price * usage
}

/// Calls `visit` with every valid action sequence and its cost.
///
/// Order: battery sequences in depth-first order (discharge before idle
/// before charge), then appliance sequences lexicographically with the first
/// appliance most significant.
pub fn for_each_valid_plan(
    model: &HomeModel,
    cfg: &OracleConfig,
    mut visit: impl FnMut(&[JointAction], Money),
) -> Result<u64, OracleError> {
    let h = model.horizon();
    let n = model.appliances().len();
    if model.battery().is_some() {
        check_cap(3u128.saturating_pow(h), cfg)?;
    }
    check_cap((n as u128).max(1).saturating_mul(1u128 << h.min(127)), cfg)?;

    let batteries = battery_sequences(model);
    let appliances: Vec<_> = (0..n).map(|i| appliance_sequences(model, i)).collect();
    let total = appliances.iter().fold(batteries.len() as u128, |acc, s| {
        acc.saturating_mul(s.len() as u128)
    });
    check_cap(total, cfg)?;
    if total == 0 {
        return Ok(0);
    }

    let rate = model.battery_rate();
    let rates: Vec<Energy> = model.appliances().iter().map(|a| a.rate).collect();
    let mut buf: Vec<JointAction> = (0..h).map(|_| JointAction::idle(n)).collect();
    let mut choice = vec![0usize; n];
    let mut count = 0u64;
    for bseq in &batteries {
        choice.iter_mut().for_each(|c| *c = 0);
        loop {
            let mut cost = Money::ZERO;
            for (t, action) in buf.iter_mut().enumerate() {
                action.battery = bseq[t];
                let mut usage = rate * bseq[t].delta();
                for (i, seqs) in appliances.iter().enumerate() {
                    let a = seqs[choice[i]][t];
                    action.appliances[i] = a;
                    if a.is_on() {
                        usage += rates[i];
                    }
                }
                cost += step_cost(model, t, usage);
            }
            visit(&buf, cost);
            count += 1;

            let mut pos = n;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < appliances[pos].len() {
                    break;
                }
                choice[pos] = 0;
            }
            if choice.iter().all(|&c| c == 0) {
                break;
            }
        }
    }
    Ok(count)
}

/// Minimum-cost valid plan by exhaustive enumeration; the first minimum in
/// enumeration order wins.
pub fn brute_force_solve(
    model: &HomeModel,
    cfg: &OracleConfig,
) -> Result<SolveOutcome, OracleError> {
    let started = Instant::now();
    let mut best: Option<Plan> = None;
    let count = for_each_valid_plan(model, cfg, |actions, cost| {
        if best.as_ref().map_or(true, |b| cost < b.total_cost) {
            best = Some(Plan {
                actions: actions.to_vec(),
                total_cost: cost,
            });
        }
    })?;
    let stats = SolveStats {
        visited: count,
        expanded: count,
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    Ok(match best {
        Some(plan) => SolveOutcome::solved(plan, stats),
        None => SolveOutcome::failed(SolveStatus::Unsolvable, stats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ApplianceSpec, BatterySpec, DynamicTariff, Window};
    use crate::semantics::validate_plan;

    #[test]
    fn battery_arbitrage() {
        let m = HomeModel::new(
            DynamicTariff::from_pence(&[10, 20], &[5, 15]).unwrap(),
            Some(BatterySpec::new(1, Energy::from_wh(1000))),
            vec![],
        )
        .unwrap();
        let out = brute_force_solve(&m, &OracleConfig::default()).unwrap();
        let plan = out.plan.unwrap();
        assert_eq!(plan.total_cost, Money::from_pence(-5));
        let seq: Vec<_> = plan.actions.iter().map(|a| a.battery).collect();
        assert_eq!(seq, vec![BatteryAction::Charge, BatteryAction::Discharge]);
        assert!(validate_plan(&plan, &m).is_valid());
    }

    #[test]
    fn counts_all_sequences_without_constraints() {
        let m = HomeModel::new(
            DynamicTariff::from_pence(&[1, 1, 1], &[1, 1, 1]).unwrap(),
            None,
            vec![ApplianceSpec::new("w", 1, Energy::from_wh(100))],
        )
        .unwrap();
        assert_eq!(
            for_each_valid_plan(&m, &OracleConfig::default(), |_, _| {}).unwrap(),
            8
        );
    }

    #[test]
    fn pigeonhole_is_unsolvable() {
        let m = HomeModel::new(
            DynamicTariff::from_pence(&[1, 1, 1], &[0, 0, 0]).unwrap(),
            None,
            vec![ApplianceSpec::new("w", 2, Energy::from_wh(100))
                .with_requirement(Window::horizon(3), 2)],
        )
        .unwrap();
        let out = brute_force_solve(&m, &OracleConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Unsolvable);
    }

    #[test]
    fn cap_is_enforced() {
        let m = HomeModel::new(
            DynamicTariff::from_pence(&[1; 20], &[0; 20]).unwrap(),
            None,
            vec![],
        )
        .unwrap();
        let err = brute_force_solve(
            &m,
            &OracleConfig {
                max_candidates: 1000,
            },
        )
        .unwrap_err();
        assert!(matches!(err, OracleError::TooLarge { cap: 1000, .. }));
    }
}
