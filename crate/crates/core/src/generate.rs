//! Random small homes for oracle comparisons and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{ApplianceSpec, BatterySpec, DynamicTariff, HomeModel, Window};
use crate::units::Energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    pub max_horizon: u32,
    pub max_appliances: usize,
    pub max_duration: u32,
    pub max_battery_capacity: u32,
    pub max_requirements: usize,
    pub max_min_tasks: u32,
    /// Whole-pence price range, inclusive.
    pub price_range: (i64, i64),
    /// Chance in percent that the home has a battery.
    pub battery_percent: u32,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_horizon: 8,
            max_appliances: 2,
            max_duration: 3,
            max_battery_capacity: 2,
            max_requirements: 2,
            max_min_tasks: 2,
            price_range: (-10, 30),
            battery_percent: 80,
        }
    }
}

fn random_window(rng: &mut impl Rng, h: u32) -> Window {
    let start = rng.gen_range(1..=h);
    let end = rng.gen_range(start..=h);
    let mut w = Window::range(start, end).expect("ordered range");
    if rng.gen_bool(0.3) {
        let s2 = rng.gen_range(1..=h);
        w = w.union(&Window::range(s2, rng.gen_range(s2..=h)).expect("ordered range"));
    }
    w
}

pub fn random_home(rng: &mut impl Rng, p: &RandomParams) -> HomeModel {
    let h = rng.gen_range(1..=p.max_horizon);
    let (lo, hi) = p.price_range;
    let import: Vec<i64> = (0..h).map(|_| rng.gen_range(lo..=hi)).collect();
    let export: Vec<i64> = (0..h).map(|_| rng.gen_range(lo..=hi)).collect();
    let tariff = DynamicTariff::from_pence(&import, &export).expect("matching lengths");

    let battery = rng.gen_ratio(p.battery_percent, 100).then(|| {
        let cap = rng.gen_range(1..=p.max_battery_capacity);
        let mut b = BatterySpec::new(cap, Energy::from_wh(250 * rng.gen_range(1..=8)));
        b.initial_charge = rng.gen_range(0..=cap);
        if rng.gen_bool(0.5) {
            let mut levels: Vec<u32> = (0..=cap).collect();
            levels.shuffle(rng);
            let keep = rng.gen_range(1..=levels.len());
            b.goal_charges = Some(levels[..keep].iter().copied().collect());
        }
        b
    });

    let n = rng.gen_range(0..=p.max_appliances);
    let appliances = (0..n)
        .map(|i| {
            let mut spec = ApplianceSpec::new(
                format!("a{i}"),
                rng.gen_range(1..=p.max_duration),
                Energy::from_wh(250 * rng.gen_range(0..=12)),
            );
            for _ in 0..rng.gen_range(0..=p.max_requirements) {
                spec = spec
                    .with_requirement(random_window(rng, h), rng.gen_range(0..=p.max_min_tasks));
            }
            spec
        })
        .collect();
    HomeModel::new(tariff, battery, appliances).expect("generated homes are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = RandomParams::default();
        for _ in 0..500 {
            let m = random_home(&mut rng, &p);
            assert!(m.horizon() <= 8 && m.appliances().len() <= 2 && m.battery_capacity() <= 2);
            assert!(m.appliances().iter().all(|a| a.duration_steps <= 3));
        }
    }
}
