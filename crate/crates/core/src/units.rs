//! Fixed-point quantities used throughout the models.
//!
//! Costs are summed and compared exactly, so every quantity is an integer:
//!
//! - [`Energy`] in watt-hours,
//! - [`Price`] in milli-pence per kWh,
//! - [`Money`] in micro-pence.
//!
//! Multiplying a price by an energy gives money with no rounding:
//! `mp/kWh * Wh = 10^-3 p * 10^-3 = 10^-6 p`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Micro-pence per penny.
pub const MICRO_PENCE_PER_PENNY: i64 = 1_000_000;
/// Milli-pence per penny.
pub const MILLI_PENCE_PER_PENNY: i64 = 1_000;
/// Watt-hours per kilowatt-hour.
pub const WH_PER_KWH: i64 = 1_000;

/// An amount of money in micro-pence.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_micro_pence(v: i64) -> Self {
        Money(v)
    }

    pub const fn from_pence(p: i64) -> Self {
        Money(p * MICRO_PENCE_PER_PENNY)
    }

    pub const fn micro_pence(self) -> i64 {
        self.0
    }

    /// Approximate value in pence, for display and charts only.
    pub fn as_pence_f64(self) -> f64 {
        self.0 as f64 / MICRO_PENCE_PER_PENNY as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn abs(self) -> Money {
        Money(self.0.abs())
    }
}

/// Renders as pence with trailing zeros trimmed: `9`, `17.5`, `-1.25`.
impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / MICRO_PENCE_PER_PENNY as u64;
        let frac = abs % MICRO_PENCE_PER_PENNY as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

/// An amount of energy in watt-hours. Rates are non-negative; net usage may be negative.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Energy(pub i64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub const fn from_wh(wh: i64) -> Self {
        Energy(wh)
    }

    pub const fn wh(self) -> i64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Wh", self.0)
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0 - rhs.0)
    }
}

impl Neg for Energy {
    type Output = Energy;
    fn neg(self) -> Energy {
        Energy(-self.0)
    }
}

impl Mul<i64> for Energy {
    type Output = Energy;
    fn mul(self, rhs: i64) -> Energy {
        Energy(self.0 * rhs)
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, Add::add)
    }
}

/// A unit price in milli-pence per kWh. May be negative.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Price(pub i64);

impl Price {
    pub const fn from_milli_pence_per_kwh(v: i64) -> Self {
        Price(v)
    }

    pub const fn from_pence_per_kwh(p: i64) -> Self {
        Price(p * MILLI_PENCE_PER_PENNY)
    }

    pub const fn milli_pence_per_kwh(self) -> i64 {
        self.0
    }

    pub fn as_pence_f64(self) -> f64 {
        self.0 as f64 / MILLI_PENCE_PER_PENNY as f64
    }

    /// Parses a decimal pence-per-kWh string with at most three fractional digits.
    pub fn parse_pence_per_kwh(s: &str) -> Result<Price, PriceParseError> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(PriceParseError::Malformed(s.to_owned()));
        }
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part)
            || !all_digits(frac_part)
            || (body.contains('.') && frac_part.is_empty())
        {
            return Err(PriceParseError::Malformed(s.to_owned()));
        }
        if frac_part.len() > 3 {
            return Err(PriceParseError::TooPrecise(s.to_owned()));
        }
        let whole: i64 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| PriceParseError::Malformed(s.to_owned()))?
        };
        let mut frac: i64 = 0;
        for (i, b) in frac_part.bytes().enumerate() {
            frac += i64::from(b - b'0') * 10_i64.pow(2 - i as u32);
        }
        let v = whole
            .checked_mul(MILLI_PENCE_PER_PENNY)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(|| PriceParseError::Malformed(s.to_owned()))?;
        Ok(Price(if neg { -v } else { v }))
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let frac = abs % 1000;
        if frac == 0 {
            write!(f, "{sign}{} p/kWh", abs / 1000)
        } else {
            let digits = format!("{frac:03}");
            write!(
                f,
                "{sign}{}.{} p/kWh",
                abs / 1000,
                digits.trim_end_matches('0')
            )
        }
    }
}

impl Mul<Energy> for Price {
    type Output = Money;
    fn mul(self, rhs: Energy) -> Money {
        Money(self.0 * rhs.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PriceParseError {
    #[error("malformed price {0:?}")]
    Malformed(String),
    #[error("price {0:?} has more than 3 decimal places")]
    TooPrecise(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_times_energy_is_micro_pence() {
        // 10 p/kWh * 1.75 kWh = 17.5 p
        let cost = Price::from_pence_per_kwh(10) * Energy::from_wh(1750);
        assert_eq!(cost, Money(17_500_000));
        assert_eq!(cost.to_string(), "17.5");
    }

    #[test]
    fn money_display() {
        assert_eq!(Money::from_pence(9).to_string(), "9");
        assert_eq!(Money(-1_250_000).to_string(), "-1.25");
        assert_eq!(Money(1).to_string(), "0.000001");
        assert_eq!(Money::ZERO.to_string(), "0");
    }

    #[test]
    fn parse_prices() {
        assert_eq!(Price::parse_pence_per_kwh("5.88"), Ok(Price(5880)));
        assert_eq!(Price::parse_pence_per_kwh("35"), Ok(Price(35000)));
        assert_eq!(Price::parse_pence_per_kwh("-0.01"), Ok(Price(-10)));
        assert_eq!(Price::parse_pence_per_kwh("17.680"), Ok(Price(17680)));
        assert_eq!(Price::parse_pence_per_kwh(".5"), Ok(Price(500)));
        assert!(matches!(
            Price::parse_pence_per_kwh("5.8801"),
            Err(PriceParseError::TooPrecise(_))
        ));
        for bad in ["", "abc", "1.2.3", "5.", "-", "1e3", "--1"] {
            assert!(
                matches!(
                    Price::parse_pence_per_kwh(bad),
                    Err(PriceParseError::Malformed(_))
                ),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn price_display_round_trips() {
        for v in [0, 5880, -10, 35000, 17680, 1] {
            let p = Price(v);
            let text = p.to_string();
            let back = Price::parse_pence_per_kwh(text.trim_end_matches(" p/kWh")).unwrap();
            assert_eq!(back, p);
        }
    }
}
