//! Fixture homes: the Alice and Bob study weeks and the four-step worked example.
//!
//! Week fixtures start on a Monday at 00:00 with hourly slots, so hour `k` of
//! day `d` (Monday = 0) is timestep `24 d + k + 1`. Hour ranges below are
//! half-open: `7..23` covers the slots starting 07:00 through 22:00.

use crate::explain::RequirementAddition;
use crate::model::{
    ApplianceSpec, BatterySpec, DynamicTariff, HomeModel, ModelError, Timestep, Window,
};
use crate::units::Energy;

pub const WEEK_HOURS: u32 = 168;

const MON: u32 = 0;
const TUE: u32 = 1;
const THU: u32 = 3;
const FRI: u32 = 4;
const SAT: u32 = 5;
const SUN: u32 = 6;

fn slot(day: u32, hour: u32) -> Timestep {
    day * 24 + hour + 1
}

/// Slots from `(day, hour)` up to but excluding `(end_day, end_hour)`.
fn span(day: u32, hour: u32, end_day: u32, end_hour: u32) -> (Timestep, Timestep) {
    (slot(day, hour), slot(end_day, end_hour) - 1)
}

/// The same hours on each of the given days.
fn daily(days: impl IntoIterator<Item = u32>, from: u32, to: u32) -> Window {
    Window::from_ranges(days.into_iter().map(|d| span(d, from, d, to)))
        .expect("fixture windows are valid")
}

fn days(from: u32, to_inclusive: u32) -> Window {
    Window::from_ranges([span(from, 0, to_inclusive + 1, 0)]).expect("fixture windows are valid")
}

fn washer() -> ApplianceSpec {
    ApplianceSpec::new("washer", 2, Energy::from_wh(750))
}

fn dryer() -> ApplianceSpec {
    ApplianceSpec::new("dryer", 3, Energy::from_wh(1500))
}

fn dishwasher() -> ApplianceSpec {
    ApplianceSpec::new("dishwasher", 1, Energy::from_wh(1200))
}

fn vehicle() -> ApplianceSpec {
    ApplianceSpec::new("vehicle", 4, Energy::from_wh(5000))
}

pub fn study_battery() -> BatterySpec {
    BatterySpec::new(6, Energy::from_wh(1000))
}

/// Office worker, 9:00 to 17:00 with a two-hour commute, home on Wednesday
/// and Friday. One washer and dryer cycle outside 23:00 to 7:00, dishwasher
/// once by Thursday and once after, and the car charged before each office
/// day.
pub fn alice(tariff: DynamicTariff) -> Result<HomeModel, ModelError> {
    let awake = daily(MON..=SUN, 7, 23);
    let ev = |r: (Timestep, Timestep)| Window::from_ranges([r]).expect("fixture windows are valid");
    HomeModel::new(
        tariff,
        Some(study_battery()),
        vec![
            washer().with_requirement(awake.clone(), 1),
            dryer().with_requirement(awake, 1),
            dishwasher()
                .with_requirement(days(MON, THU), 1)
                .with_requirement(days(FRI, SUN), 1),
            vehicle()
                .with_requirement(ev(span(MON, 0, MON, 8)), 1)
                .with_requirement(ev(span(MON, 18, TUE, 8)), 1)
                .with_requirement(ev(span(TUE, 18, THU, 8)), 1),
        ],
    )
}

/// Night-shift worker, 23:00 to 9:00 with a one-hour commute. Every
/// appliance runs once on weekdays and once at the weekend; washer and dryer
/// only between 7:00 and 15:00.
pub fn bob(tariff: DynamicTariff) -> Result<HomeModel, ModelError> {
    let weekdays = MON..=FRI;
    let weekend = SAT..=SUN;
    HomeModel::new(
        tariff,
        Some(study_battery()),
        vec![
            washer()
                .with_requirement(daily(weekdays.clone(), 7, 15), 1)
                .with_requirement(daily(weekend.clone(), 7, 15), 1),
            dryer()
                .with_requirement(daily(weekdays.clone(), 7, 15), 1)
                .with_requirement(daily(weekend.clone(), 7, 15), 1),
            dishwasher()
                .with_requirement(days(MON, FRI), 1)
                .with_requirement(days(SAT, SUN), 1),
            vehicle()
                .with_requirement(daily(weekdays, 10, 22), 1)
                .with_requirement(daily(weekend, 0, 24), 1),
        ],
    )
}

/// Four hourly slots priced 10, 1, 1, 10 p/kWh (import) and 0 (export), no
/// battery, one 2-step 1 kWh appliance that must run once.
pub fn worked_example() -> HomeModel {
    HomeModel::new(
        DynamicTariff::from_pence(&[10, 1, 1, 10], &[0, 0, 0, 0]).expect("valid tariff"),
        None,
        vec![ApplianceSpec::new("appliance", 2, Energy::from_wh(1000))
            .with_requirement(Window::horizon(4), 1)],
    )
    .expect("valid model")
}

/// "Why not run it in the first two slots?"
pub fn worked_example_question() -> Vec<RequirementAddition> {
    vec![RequirementAddition::new(
        "appliance",
        Window::range(1, 2).expect("valid window"),
        1,
    )]
}

/// A question no plan can answer: three 2-step runs in four slots.
pub fn worked_example_impossible_question() -> Vec<RequirementAddition> {
    vec![RequirementAddition::new("appliance", Window::horizon(4), 3)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{downsample_to_hourly, synthetic_agile_week};

    fn week() -> DynamicTariff {
        downsample_to_hourly(&synthetic_agile_week(1)).unwrap()
    }

    #[test]
    fn slots() {
        assert_eq!(slot(MON, 0), 1);
        assert_eq!(slot(SUN, 23), 168);
        assert_eq!(span(MON, 18, TUE, 8), (19, 32));
        assert_eq!(days(SAT, SUN).ranges(), &[(121, 168)]);
        assert_eq!(daily([2], 7, 23).ranges(), &[(56, 71)]);
    }

    #[test]
    fn fixtures_build() {
        let a = alice(week()).unwrap();
        assert_eq!(a.horizon(), WEEK_HOURS);
        assert_eq!(a.appliances().len(), 4);
        assert_eq!(a.appliances()[3].requirements.len(), 3);
        let b = bob(week()).unwrap();
        assert!(b.appliances().iter().all(|s| s.requirements.len() == 2));
    }
}
