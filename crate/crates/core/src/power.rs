//! LDO power budgeting.
//!
//! Currents in mA and powers in mW are fixed-point decimals with six
//! fractional digits, so budget totals add up exactly as printed.
//!
//! The case study's text says one AP7312 (150 mA) feeds "around 4 encoders"
//! and one MCP1700T (250 mA) "around 6 decoders". The arithmetic behind those
//! counts is 150 / 32.9 -> 4 decoders and 250 / 37 -> 6 encoders, so the
//! device names look swapped. [`case_study`] reports the arithmetic.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const SCALE: i64 = 1_000_000;
const DIGITS: usize = 6;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PowerError {
    #[error("no load devices")]
    NoLoads,
    #[error("per-device current must be positive, got {0} mA")]
    NonPositiveCurrent(Decimal),
    #[error("LDO {name:?}: maximum output current must be positive")]
    InvalidLdo { name: String },
    #[error("load {name:?}: {reason}")]
    InvalidLoad { name: String, reason: String },
    #[error("load {load:?} names unknown LDO {ldo:?}")]
    UnknownLdo { load: String, ldo: String },
    #[error("bad decimal {0:?}")]
    Parse(String),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("unsupported budget schema {0}, expected 1")]
    Schema(u32),
}

/// Signed decimal with exactly six fractional digits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decimal(i64);

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);

    pub fn from_int(v: i64) -> Decimal {
        Decimal(v * SCALE)
    }

    /// `units` millionths.
    pub const fn from_micros(units: i64) -> Decimal {
        Decimal(units)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn checked_add(self, other: Decimal) -> Option<Decimal> {
        self.0.checked_add(other.0).map(Decimal)
    }

    pub fn checked_mul_int(self, n: u64) -> Option<Decimal> {
        i64::try_from(n).ok().and_then(|n| self.0.checked_mul(n)).map(Decimal)
    }

    /// Whole number of times `divisor` fits, rounding toward negative infinity.
    pub fn div_floor(self, divisor: Decimal) -> i64 {
        self.0.div_euclid(divisor.0)
    }

    pub fn div_ceil(self, divisor: Decimal) -> i64 {
        -(-self.0).div_euclid(divisor.0)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }
}

impl Add for Decimal {
    type Output = Decimal;

    /// # Panics
    /// On overflow.
    fn add(self, rhs: Decimal) -> Decimal {
        self.checked_add(rhs).expect("decimal overflow")
    }
}

impl Sum for Decimal {
    fn sum<I: Iterator<Item = Decimal>>(iter: I) -> Decimal {
        iter.fold(Decimal::ZERO, Add::add)
    }
}

impl FromStr for Decimal {
    type Err = PowerError;

    fn from_str(s: &str) -> Result<Decimal, PowerError> {
        let err = || PowerError::Parse(s.to_string());
        let t = s.trim();
        let (neg, t) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int.is_empty() && frac.is_empty()) || !digits(int) || !digits(frac) || frac.len() > DIGITS {
            return Err(err());
        }
        let whole: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
        let frac_v: i64 = if frac.is_empty() {
            0
        } else {
            frac.parse::<i64>().map_err(|_| err())? * 10i64.pow((DIGITS - frac.len()) as u32)
        };
        let v = whole
            .checked_mul(SCALE)
            .and_then(|w| w.checked_add(frac_v))
            .ok_or_else(err)?;
        Ok(Decimal(if neg { -v } else { v }))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        let (whole, frac) = (a / SCALE as u64, a % SCALE as u64);
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let s = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", s.trim_end_matches('0'))
        }
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Decimal, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Decimal;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal number or numeric string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
                i64::try_from(v)
                    .ok()
                    .and_then(|v| v.checked_mul(SCALE))
                    .map(Decimal)
                    .ok_or_else(|| E::custom("decimal overflow"))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decimal, E> {
                v.checked_mul(SCALE).map(Decimal).ok_or_else(|| E::custom("decimal overflow"))
            }
            // Shortest round-trip formatting recovers what was written.
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Decimal, E> {
                if !v.is_finite() {
                    return Err(E::custom("non-finite decimal"));
                }
                v.to_string().parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

fn default_quantity() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadDevice {
    pub name: String,
    #[serde(default)]
    pub supply_current_ma: Decimal,
    #[serde(default)]
    pub power_mw: Decimal,
    #[serde(default = "default_quantity")]
    pub quantity: u32,
    /// LDO this device draws from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldo: Option<String>,
}

impl LoadDevice {
    pub fn new(name: &str, supply_current_ma: &str, power_mw: &str, quantity: u32) -> LoadDevice {
        LoadDevice {
            name: name.to_string(),
            supply_current_ma: supply_current_ma.parse().expect("literal decimal"),
            power_mw: power_mw.parse().expect("literal decimal"),
            quantity,
            ldo: None,
        }
    }

    pub fn on_ldo(mut self, ldo: &str) -> LoadDevice {
        self.ldo = Some(ldo.to_string());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdoSpec {
    pub name: String,
    pub max_output_current_ma: Decimal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_voltage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_voltage: Option<String>,
}

impl LdoSpec {
    pub fn new(name: &str, max_output_current_ma: &str) -> LdoSpec {
        LdoSpec {
            name: name.to_string(),
            max_output_current_ma: max_output_current_ma.parse().expect("literal decimal"),
            input_voltage: None,
            output_voltage: None,
        }
    }
}

/// I_max: total current drawn by `loads`.
pub fn max_load_current(loads: &[LoadDevice]) -> Result<Decimal, PowerError> {
    if loads.is_empty() {
        return Err(PowerError::NoLoads);
    }
    loads.iter().try_fold(Decimal::ZERO, |acc, l| {
        l.supply_current_ma
            .checked_mul_int(l.quantity as u64)
            .and_then(|c| acc.checked_add(c))
            .ok_or(PowerError::Overflow)
    })
}

/// How many devices drawing `per_device_ma` one LDO can carry.
pub fn devices_per_ldo(ldo: &LdoSpec, per_device_ma: Decimal) -> Result<u64, PowerError> {
    if !per_device_ma.is_positive() {
        return Err(PowerError::NonPositiveCurrent(per_device_ma));
    }
    Ok(ldo.max_output_current_ma.div_floor(per_device_ma).max(0) as u64)
}

/// Identical LDOs needed to cover `i_max`.
pub fn ldos_required(ldo: &LdoSpec, i_max: Decimal) -> Result<u64, PowerError> {
    if !ldo.max_output_current_ma.is_positive() {
        return Err(PowerError::InvalidLdo { name: ldo.name.clone() });
    }
    Ok(i_max.div_ceil(ldo.max_output_current_ma).max(0) as u64)
}

pub fn total_power(devices: &[LoadDevice]) -> Decimal {
    devices
        .iter()
        .map(|d| d.power_mw.checked_mul_int(d.quantity as u64).expect("decimal overflow"))
        .sum()
}

/// Budget input file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBudget {
    pub schema: u32,
    #[serde(default)]
    pub ldos: Vec<LdoSpec>,
    #[serde(default)]
    pub loads: Vec<LoadDevice>,
}

impl PowerBudget {
    pub fn validate(&self) -> Result<(), PowerError> {
        if self.schema != 1 {
            return Err(PowerError::Schema(self.schema));
        }
        for l in &self.ldos {
            if !l.max_output_current_ma.is_positive() {
                return Err(PowerError::InvalidLdo { name: l.name.clone() });
            }
        }
        for d in &self.loads {
            let bad = |reason: &str| PowerError::InvalidLoad {
                name: d.name.clone(),
                reason: reason.to_string(),
            };
            if d.supply_current_ma < Decimal::ZERO {
                return Err(bad("negative supply current"));
            }
            if d.power_mw < Decimal::ZERO {
                return Err(bad("negative power"));
            }
            if let Some(ldo) = &d.ldo {
                if !self.ldos.iter().any(|l| &l.name == ldo) {
                    return Err(PowerError::UnknownLdo {
                        load: d.name.clone(),
                        ldo: ldo.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn report(&self) -> Result<BudgetReport, PowerError> {
        self.validate()?;
        let ldos = self
            .ldos
            .iter()
            .map(|ldo| {
                let assigned: Vec<LoadDevice> = self
                    .loads
                    .iter()
                    .filter(|d| d.ldo.as_deref() == Some(&ldo.name))
                    .cloned()
                    .collect();
                let load_current_ma = max_load_current(&assigned).ok();
                let required = load_current_ma.map(|i| ldos_required(ldo, i)).transpose()?;
                let capacity = self
                    .loads
                    .iter()
                    .filter(|d| d.supply_current_ma.is_positive())
                    .map(|d| {
                        Ok(DeviceCapacity {
                            device: d.name.clone(),
                            per_device_ma: d.supply_current_ma,
                            devices_per_ldo: devices_per_ldo(ldo, d.supply_current_ma)?,
                        })
                    })
                    .collect::<Result<Vec<_>, PowerError>>()?;
                Ok(LdoRow {
                    ldo: ldo.name.clone(),
                    max_output_current_ma: ldo.max_output_current_ma,
                    load_current_ma,
                    ldos_required: required,
                    capacity,
                })
            })
            .collect::<Result<Vec<_>, PowerError>>()?;
        Ok(BudgetReport {
            total_power_mw: total_power(&self.loads),
            max_load_current_ma: max_load_current(&self.loads).ok(),
            ldos,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceCapacity {
    pub device: String,
    pub per_device_ma: Decimal,
    pub devices_per_ldo: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdoRow {
    pub ldo: String,
    pub max_output_current_ma: Decimal,
    /// I_max of the loads assigned to this LDO.
    pub load_current_ma: Option<Decimal>,
    pub ldos_required: Option<u64>,
    pub capacity: Vec<DeviceCapacity>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub total_power_mw: Decimal,
    pub max_load_current_ma: Option<Decimal>,
    pub ldos: Vec<LdoRow>,
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Sizing-only budgets list currents without power figures.
        if self.total_power_mw != Decimal::ZERO {
            writeln!(f, "total power: {} mW", self.total_power_mw)?;
        }
        match self.max_load_current_ma {
            Some(i) => writeln!(f, "max load current: {i} mA")?,
            None => writeln!(f, "max load current: n/a (no loads)")?,
        }
        for row in &self.ldos {
            write!(f, "{} ({} mA)", row.ldo, row.max_output_current_ma)?;
            if let (Some(i), Some(n)) = (row.load_current_ma, row.ldos_required) {
                write!(f, ": assigned {i} mA, needs {n}")?;
            }
            writeln!(f)?;
            for c in &row.capacity {
                writeln!(f, "  {:<24} {:>10} mA  {:>4} per LDO", c.device, c.per_device_ma, c.devices_per_ldo)?;
            }
        }
        Ok(())
    }
}

/// Figures from the reference hardware build.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseStudy {
    /// Per-device power; the "2x" rows are pair totals with quantity 1.
    pub device_power: Vec<LoadDevice>,
    /// Power measured at the analog and digital supplies.
    pub supply_power: Vec<LoadDevice>,
    /// LDOs and the load currents used for sizing.
    pub sizing: PowerBudget,
}

pub fn case_study() -> CaseStudy {
    let mut ap7312 = LdoSpec::new("AP7312", "150");
    ap7312.input_voltage = Some("5 V".into());
    ap7312.output_voltage = Some("1.8 V / 3.3 V".into());
    let mut mcp1700t = LdoSpec::new("MCP1700T", "250");
    mcp1700t.input_voltage = Some("5 V".into());
    mcp1700t.output_voltage = Some("5 V".into());
    CaseStudy {
        device_power: vec![
            LoadDevice::new("2x AP7312", "0", "45", 1),
            LoadDevice::new("2x TVP5150", "0", "230", 1),
            LoadDevice::new("MCP1700", "0", "44.5", 1),
            LoadDevice::new("ADV7171", "0", "1250", 1),
        ],
        supply_power: vec![
            LoadDevice::new("Analog DC Supply", "0", "350", 1),
            LoadDevice::new("Digital DC Supply", "0", "1500", 1),
        ],
        sizing: PowerBudget {
            schema: 1,
            ldos: vec![ap7312, mcp1700t],
            loads: vec![
                LoadDevice::new("TVP5150 decoder", "32.9", "0", 2).on_ldo("AP7312"),
                LoadDevice::new("ADV7171 encoder", "37", "0", 1).on_ldo("MCP1700T"),
            ],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn decimal_parse_and_display() {
        assert_eq!(d("32.9"), Decimal::from_micros(32_900_000));
        assert_eq!(d("-0.5").to_string(), "-0.5");
        assert_eq!(d("1569.500000").to_string(), "1569.5");
        assert_eq!(d(".25").to_string(), "0.25");
        assert_eq!(d("150").to_string(), "150");
        for bad in ["", ".", "1.2.3", "1e3", "0.1234567", "abc"] {
            assert!(bad.parse::<Decimal>().is_err(), "{bad}");
        }
        let v: Decimal = serde_json::from_str("32.9").unwrap();
        assert_eq!(v, d("32.9"));
        let v: Decimal = serde_json::from_str("\"44.5\"").unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"44.5\"");
    }

    #[test]
    fn load_current_sums() {
        let two = [LoadDevice::new("dec", "32.9", "0", 2)];
        assert_eq!(max_load_current(&two).unwrap(), d("65.8"));
        let one = [LoadDevice::new("enc", "37", "0", 1)];
        assert_eq!(max_load_current(&one).unwrap(), d("37"));
        assert_eq!(max_load_current(&[]), Err(PowerError::NoLoads));
    }

    #[test]
    fn devices_per_ldo_floors() {
        assert_eq!(devices_per_ldo(&LdoSpec::new("a", "150"), d("32.9")).unwrap(), 4);
        assert_eq!(devices_per_ldo(&LdoSpec::new("m", "250"), d("37")).unwrap(), 6);
        assert_eq!(devices_per_ldo(&LdoSpec::new("a", "150"), d("151")).unwrap(), 0);
        assert_eq!(devices_per_ldo(&LdoSpec::new("a", "150"), d("150")).unwrap(), 1);
        assert!(devices_per_ldo(&LdoSpec::new("a", "150"), d("0")).is_err());
    }

    #[test]
    fn ldos_required_ceils() {
        let ldo = LdoSpec::new("a", "150");
        assert_eq!(ldos_required(&ldo, d("65.8")).unwrap(), 1);
        assert_eq!(ldos_required(&ldo, d("150")).unwrap(), 1);
        assert_eq!(ldos_required(&ldo, d("150.000001")).unwrap(), 2);
        assert_eq!(ldos_required(&ldo, d("0")).unwrap(), 0);
    }

    #[test]
    fn case_study_tables() {
        let cs = case_study();
        assert_eq!(total_power(&cs.device_power), d("1569.5"));
        assert_eq!(total_power(&cs.supply_power), d("1850"));
        assert_eq!(total_power(&[]), Decimal::ZERO);
        let report = cs.sizing.report().unwrap();
        assert_eq!(report.max_load_current_ma, Some(d("102.8")));
        let ap = &report.ldos[0];
        assert_eq!(ap.load_current_ma, Some(d("65.8")));
        assert_eq!(ap.ldos_required, Some(1));
        assert_eq!(ap.capacity[0].devices_per_ldo, 4);
        assert_eq!(report.ldos[1].capacity[1].devices_per_ldo, 6);
        let text = report.to_string();
        assert!(text.contains("AP7312 (150 mA): assigned 65.8 mA, needs 1"));
    }

    #[test]
    fn budget_validation() {
        let json = r#"{"schema":1,"ldos":[{"name":"L","max_output_current_ma":100}],
            "loads":[{"name":"x","supply_current_ma":"10","ldo":"nope"}]}"#;
        let b: PowerBudget = serde_json::from_str(json).unwrap();
        assert!(matches!(b.validate(), Err(PowerError::UnknownLdo { .. })));
        let bad_key = r#"{"schema":1,"ldoz":[]}"#;
        assert!(serde_json::from_str::<PowerBudget>(bad_key).is_err());
        let v2 = PowerBudget {
            schema: 2,
            ldos: vec![],
            loads: vec![],
        };
        assert_eq!(v2.validate(), Err(PowerError::Schema(2)));
    }
}
