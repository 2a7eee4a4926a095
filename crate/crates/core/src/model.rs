//! Domain data: tariffs, battery and appliance specifications, and the joint
//! home model they induce.
//!
//! Timesteps are 1-based: a horizon `h` covers `{1, ..., h}`. Every value here
//! is validated on construction and immutable afterwards, so the semantics and
//! planner modules never re-check invariants.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::units::{Energy, Price};

/// A 1-based timestep index.
pub type Timestep = u32;

/// Appliance name reserved for the battery lane; appliances may not use it.
pub const BATTERY_NAME: &str = "battery";

/// Largest horizon accepted by any model (search nodes store timesteps in 16 bits).
pub const MAX_HORIZON: u32 = u16::MAX as u32 - 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ModelError {
    pub path: String,
    pub message: String,
}

impl ModelError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError {
            path: path.into(),
            message: message.into(),
        }
    }

    fn nested(self, prefix: &str) -> Self {
        let path = if self.path.is_empty() {
            prefix.to_owned()
        } else {
            format!("{prefix}.{}", self.path)
        };
        ModelError {
            path,
            message: self.message,
        }
    }
}

/// A set of timesteps stored as sorted, merged, inclusive ranges.
///
/// Serialized as `[[start, end], ...]`. Input ranges may be unsorted or
/// overlapping; they are normalized so equal sets always compare and
/// serialize identically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<[u32; 2]>", into = "Vec<[u32; 2]>")]
pub struct Window {
    ranges: Vec<(Timestep, Timestep)>,
}

impl Window {
    pub fn empty() -> Self {
        Window::default()
    }

    /// The inclusive range `start..=end`.
    pub fn range(start: Timestep, end: Timestep) -> Result<Self, ModelError> {
        Window::from_ranges([(start, end)])
    }

    /// The whole horizon `1..=h`.
    pub fn horizon(h: u32) -> Self {
        if h == 0 {
            Window::empty()
        } else {
            Window {
                ranges: vec![(1, h)],
            }
        }
    }

    pub fn from_ranges<I>(ranges: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (Timestep, Timestep)>,
    {
        let mut rs: Vec<(u32, u32)> = Vec::new();
        for (start, end) in ranges {
            if start == 0 {
                return Err(ModelError::new("", "timesteps are 1-based; got 0"));
            }
            if start > end {
                return Err(ModelError::new(
                    "",
                    format!("range start {start} is after end {end}"),
                ));
            }
            rs.push((start, end));
        }
        rs.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(rs.len());
        for (s, e) in rs {
            match merged.last_mut() {
                Some(last) if s <= last.1.saturating_add(1) => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        Ok(Window { ranges: merged })
    }

    pub fn from_timesteps<I>(steps: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = Timestep>,
    {
        Window::from_ranges(steps.into_iter().map(|t| (t, t)))
    }

    pub fn ranges(&self) -> &[(Timestep, Timestep)] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ranges.iter().map(|&(s, e)| (e - s + 1) as usize).sum()
    }

    pub fn last(&self) -> Option<Timestep> {
        self.ranges.last().map(|r| r.1)
    }

    pub fn contains(&self, t: Timestep) -> bool {
        self.containing_range(t).is_some()
    }

    /// True iff every timestep of `start..start + len` is in the window.
    pub fn contains_run(&self, start: Timestep, len: u32) -> bool {
        if len == 0 {
            return true;
        }
        match self.containing_range(start) {
            Some((_, e)) => u64::from(start) + u64::from(len) - 1 <= u64::from(e),
            None => false,
        }
    }

    fn containing_range(&self, t: Timestep) -> Option<(Timestep, Timestep)> {
        let idx = self.ranges.partition_point(|&(_, e)| e < t);
        self.ranges.get(idx).copied().filter(|&(s, _)| s <= t)
    }

    pub fn iter(&self) -> impl Iterator<Item = Timestep> + '_ {
        self.ranges.iter().flat_map(|&(s, e)| s..=e)
    }

    pub fn union(&self, other: &Window) -> Window {
        Window::from_ranges(self.ranges.iter().chain(other.ranges.iter()).copied())
            .expect("ranges of valid windows are valid")
    }
}

impl TryFrom<Vec<[u32; 2]>> for Window {
    type Error = ModelError;

    fn try_from(v: Vec<[u32; 2]>) -> Result<Self, ModelError> {
        Window::from_ranges(v.into_iter().map(|[s, e]| (s, e)))
    }
}

impl From<Window> for Vec<[u32; 2]> {
    fn from(w: Window) -> Self {
        w.ranges.into_iter().map(|(s, e)| [s, e]).collect()
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, &(s, e)) in self.ranges.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if s == e {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}..{e}")?;
            }
        }
        f.write_str("}")
    }
}

/// At least `min_tasks` complete tasks must run wholly inside `window`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveRequirement {
    pub window: Window,
    pub min_tasks: u32,
}

impl PrimitiveRequirement {
    pub fn new(window: Window, min_tasks: u32) -> Self {
        PrimitiveRequirement { window, min_tasks }
    }
}

/// Import and export prices for each timestep of the horizon.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TariffRepr")]
pub struct DynamicTariff {
    horizon: u32,
    import_prices: Vec<Price>,
    export_prices: Vec<Price>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TariffRepr {
    horizon: u32,
    import_prices: Vec<Price>,
    export_prices: Vec<Price>,
}

impl TryFrom<TariffRepr> for DynamicTariff {
    type Error = ModelError;

    fn try_from(r: TariffRepr) -> Result<Self, ModelError> {
        let tariff = DynamicTariff::new(r.import_prices, r.export_prices)?;
        if tariff.horizon != r.horizon {
            return Err(ModelError::new(
                "horizon",
                format!(
                    "horizon {} does not match {} price entries",
                    r.horizon, tariff.horizon
                ),
            ));
        }
        Ok(tariff)
    }
}

impl DynamicTariff {
    pub fn new(import_prices: Vec<Price>, export_prices: Vec<Price>) -> Result<Self, ModelError> {
        if import_prices.len() != export_prices.len() {
            return Err(ModelError::new(
                "export_prices",
                format!(
                    "{} export prices for {} import prices",
                    export_prices.len(),
                    import_prices.len()
                ),
            ));
        }
        if import_prices.is_empty() {
            return Err(ModelError::new("horizon", "horizon must be at least 1"));
        }
        if import_prices.len() > MAX_HORIZON as usize {
            return Err(ModelError::new(
                "horizon",
                format!("horizon exceeds {MAX_HORIZON}"),
            ));
        }
        Ok(DynamicTariff {
            horizon: import_prices.len() as u32,
            import_prices,
            export_prices,
        })
    }

    /// Convenience constructor from whole pence per kWh.
    pub fn from_pence(import: &[i64], export: &[i64]) -> Result<Self, ModelError> {
        DynamicTariff::new(
            import
                .iter()
                .map(|&p| Price::from_pence_per_kwh(p))
                .collect(),
            export
                .iter()
                .map(|&p| Price::from_pence_per_kwh(p))
                .collect(),
        )
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Import price at 1-based timestep `t`.
    pub fn import_price(&self, t: Timestep) -> Price {
        self.import_prices[(t - 1) as usize]
    }

    /// Export price at 1-based timestep `t`.
    pub fn export_price(&self, t: Timestep) -> Price {
        self.export_prices[(t - 1) as usize]
    }

    pub fn import_prices(&self) -> &[Price] {
        &self.import_prices
    }

    pub fn export_prices(&self) -> &[Price] {
        &self.export_prices
    }
}

/// Battery with `capacity_steps` charge levels above empty, each worth `rate` of energy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    pub capacity_steps: u32,
    #[serde(rename = "rate_wh")]
    pub rate: Energy,
    #[serde(default)]
    pub initial_charge: u32,
    /// Acceptable final charge levels; `None` accepts every level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_charges: Option<BTreeSet<u32>>,
}

impl BatterySpec {
    /// A battery starting empty with no constraint on its final charge.
    pub fn new(capacity_steps: u32, rate: Energy) -> Self {
        BatterySpec {
            capacity_steps,
            rate,
            initial_charge: 0,
            goal_charges: None,
        }
    }

    pub fn energy_capacity(&self) -> Energy {
        self.rate * i64::from(self.capacity_steps)
    }

    pub fn is_goal_charge(&self, charge: u32) -> bool {
        match &self.goal_charges {
            Some(g) => g.contains(&charge),
            None => charge <= self.capacity_steps,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.capacity_steps == 0 {
            return Err(ModelError::new(
                "capacity_steps",
                "capacity must be at least 1",
            ));
        }
        if self.capacity_steps > u32::from(u8::MAX) {
            return Err(ModelError::new(
                "capacity_steps",
                "capacity must be at most 255",
            ));
        }
        if self.rate.wh() <= 0 {
            return Err(ModelError::new("rate_wh", "battery rate must be positive"));
        }
        if self.initial_charge > self.capacity_steps {
            return Err(ModelError::new(
                "initial_charge",
                format!(
                    "initial charge {} exceeds capacity {}",
                    self.initial_charge, self.capacity_steps
                ),
            ));
        }
        if let Some(goals) = &self.goal_charges {
            if goals.is_empty() {
                return Err(ModelError::new("goal_charges", "goal charge set is empty"));
            }
            if let Some(&g) = goals.iter().find(|&&g| g > self.capacity_steps) {
                return Err(ModelError::new(
                    "goal_charges",
                    format!("goal charge {g} exceeds capacity"),
                ));
            }
        }
        Ok(())
    }

    fn normalize(&mut self) {
        if let Some(g) = &self.goal_charges {
            if g.len() == self.capacity_steps as usize + 1 {
                self.goal_charges = None;
            }
        }
    }
}

/// An appliance whose tasks run for `duration_steps` consecutive timesteps,
/// consuming `rate` per timestep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplianceSpec {
    pub name: String,
    pub duration_steps: u32,
    #[serde(rename = "rate_wh")]
    pub rate: Energy,
    #[serde(default)]
    pub requirements: Vec<PrimitiveRequirement>,
}

impl ApplianceSpec {
    pub fn new(name: impl Into<String>, duration_steps: u32, rate: Energy) -> Self {
        ApplianceSpec {
            name: name.into(),
            duration_steps,
            rate,
            requirements: Vec::new(),
        }
    }

    pub fn with_requirement(mut self, window: Window, min_tasks: u32) -> Self {
        self.requirements
            .push(PrimitiveRequirement::new(window, min_tasks));
        self.normalize();
        self
    }

    pub fn energy_per_task(&self) -> Energy {
        self.rate * i64::from(self.duration_steps)
    }

    fn validate(&self, horizon: u32) -> Result<(), ModelError> {
        if self.name.trim().is_empty() {
            return Err(ModelError::new("name", "appliance name is empty"));
        }
        if self.name == BATTERY_NAME {
            return Err(ModelError::new("name", "the name \"battery\" is reserved"));
        }
        if self.duration_steps == 0 {
            return Err(ModelError::new(
                "duration_steps",
                "task duration must be at least 1",
            ));
        }
        if self.duration_steps > u32::from(u8::MAX) {
            return Err(ModelError::new(
                "duration_steps",
                "task duration must be at most 255",
            ));
        }
        if self.rate.wh() < 0 {
            return Err(ModelError::new(
                "rate_wh",
                "appliance rate must be non-negative",
            ));
        }
        for (i, r) in self.requirements.iter().enumerate() {
            if let Some(last) = r.window.last() {
                if last > horizon {
                    return Err(ModelError::new(
                        format!("requirements[{i}].window"),
                        format!("timestep {last} is beyond the horizon {horizon}"),
                    ));
                }
            }
            if r.min_tasks > u32::from(u8::MAX) {
                return Err(ModelError::new(
                    format!("requirements[{i}].min_tasks"),
                    "at most 255 tasks",
                ));
            }
        }
        Ok(())
    }

    /// Requirements form a set: sort and drop duplicates.
    fn normalize(&mut self) {
        self.requirements.sort();
        self.requirements.dedup();
    }
}

/// A home: one tariff, an optional battery and zero or more appliances.
///
/// A home without a battery behaves as if its battery action is always idle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "HomeModelRepr")]
pub struct HomeModel {
    tariff: DynamicTariff,
    battery: Option<BatterySpec>,
    appliances: Vec<ApplianceSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HomeModelRepr {
    tariff: DynamicTariff,
    #[serde(default)]
    battery: Option<BatterySpec>,
    #[serde(default)]
    appliances: Vec<ApplianceSpec>,
}

impl TryFrom<HomeModelRepr> for HomeModel {
    type Error = ModelError;

    fn try_from(r: HomeModelRepr) -> Result<Self, ModelError> {
        HomeModel::new(r.tariff, r.battery, r.appliances)
    }
}

impl HomeModel {
    pub fn new(
        tariff: DynamicTariff,
        battery: Option<BatterySpec>,
        appliances: Vec<ApplianceSpec>,
    ) -> Result<Self, ModelError> {
        let mut battery = battery;
        if let Some(b) = battery.as_mut() {
            b.validate().map_err(|e| e.nested("battery"))?;
            b.normalize();
        }
        let mut names = HashSet::new();
        let mut appliances = appliances;
        for (i, a) in appliances.iter_mut().enumerate() {
            a.validate(tariff.horizon())
                .map_err(|e| e.nested(&format!("appliances[{i}]")))?;
            if !names.insert(a.name.clone()) {
                return Err(ModelError::new(
                    format!("appliances[{i}].name"),
                    format!("duplicate name {:?}", a.name),
                ));
            }
            a.normalize();
        }
        Ok(HomeModel {
            tariff,
            battery,
            appliances,
        })
    }

    pub fn tariff(&self) -> &DynamicTariff {
        &self.tariff
    }

    pub fn horizon(&self) -> u32 {
        self.tariff.horizon()
    }

    pub fn battery(&self) -> Option<&BatterySpec> {
        self.battery.as_ref()
    }

    pub fn appliances(&self) -> &[ApplianceSpec] {
        &self.appliances
    }

    pub fn appliance_index(&self, name: &str) -> Option<usize> {
        self.appliances.iter().position(|a| a.name == name)
    }

    /// Battery capacity in steps; zero when there is no battery.
    pub fn battery_capacity(&self) -> u32 {
        self.battery.as_ref().map_or(0, |b| b.capacity_steps)
    }

    pub fn battery_rate(&self) -> Energy {
        self.battery.as_ref().map_or(Energy::ZERO, |b| b.rate)
    }

    /// Same home with the appliance list replaced (re-validated).
    pub fn with_appliances(&self, appliances: Vec<ApplianceSpec>) -> Result<HomeModel, ModelError> {
        HomeModel::new(self.tariff.clone(), self.battery.clone(), appliances)
    }

    pub fn with_tariff(&self, tariff: DynamicTariff) -> Result<HomeModel, ModelError> {
        HomeModel::new(tariff, self.battery.clone(), self.appliances.clone())
    }

    /// Canonical JSON text: object keys sorted, windows as merged sorted ranges,
    /// requirements sorted and de-duplicated.
    pub fn canonical_json(&self) -> String {
        canonical::to_canonical_string(self)
    }

    /// Hex SHA-256 of [`HomeModel::canonical_json`].
    pub fn content_hash(&self) -> String {
        canonical::sha256_hex(self.canonical_json().as_bytes())
    }
}
