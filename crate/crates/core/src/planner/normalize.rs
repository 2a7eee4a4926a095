use std::collections::BTreeSet;

use crate::model::{HomeModel, Timestep};
use crate::semantics::usage_cost;
use crate::units::{Energy, Money};

/// Per-timestep offsets `K_t` that make every step cost non-negative.
///
/// Every plan has exactly one action per timestep, so adding `K_t` to each
/// step shifts every plan's total by the same `total_offset` and leaves the
/// ranking of plans unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedCosts {
    offsets: Vec<Money>,
    total_offset: Money,
}

impl NormalizedCosts {
    pub fn offsets(&self) -> &[Money] {
        &self.offsets
    }

    pub fn offset(&self, t: Timestep) -> Money {
        self.offsets[(t - 1) as usize]
    }

    pub fn total_offset(&self) -> Money {
        self.total_offset
    }

    /// Step cost shifted by `K_t`.
    pub fn normalize(&self, t: Timestep, cost: Money) -> Money {
        cost + self.offset(t)
    }

    /// Recovers a true plan cost from its normalized total.
    pub fn denormalize_total(&self, normalized: Money) -> Money {
        normalized - self.total_offset
    }
}

/// Every net usage some joint action can produce (applicability ignored).
pub fn achievable_usages(model: &HomeModel) -> BTreeSet<Energy> {
    let rate = model.battery_rate();
    let mut sums: BTreeSet<Energy> = if model.battery().is_some() {
        [-rate, Energy::ZERO, rate].into_iter().collect()
    } else {
        [Energy::ZERO].into_iter().collect()
    };
    for spec in model.appliances() {
        let shifted: Vec<Energy> = sums.iter().map(|&u| u + spec.rate).collect();
        sums.extend(shifted);
    }
    sums
}

pub fn normalize_costs(model: &HomeModel) -> NormalizedCosts {
    let usages = achievable_usages(model);
    let tariff = model.tariff();
    let offsets: Vec<Money> = (1..=model.horizon())
        .map(|t| {
            let min = usages
                .iter()
                .map(|&u| usage_cost(tariff, t, u))
                .min()
                .unwrap_or(Money::ZERO);
            (-min).max(Money::ZERO)
        })
        .collect();
    let total_offset = offsets.iter().copied().sum();
    NormalizedCosts {
        offsets,
        total_offset,
    }
}
