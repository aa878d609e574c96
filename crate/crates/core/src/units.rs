//! Unit newtypes and the dB/linear conversions.
//!
//! Model arithmetic is carried out in linear watts and meters (frequency in
//! GHz). dB and dBm values only appear where parameters enter or results
//! leave the library.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfpError};

/// Linear power in watts. Always finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerWatts(f64);

impl PowerWatts {
    pub const ZERO: PowerWatts = PowerWatts(0.0);

    pub fn new(watts: f64) -> Result<Self> {
        if watts.is_finite() && watts >= 0.0 {
            Ok(PowerWatts(watts))
        } else {
            Err(RfpError::Domain(format!(
                "power must be finite and non-negative, got {watts} W"
            )))
        }
    }

    #[inline]
    pub fn watts(self) -> f64 {
        self.0
    }

    /// Scales by a non-negative factor.
    pub fn scaled(self, factor: f64) -> Result<Self> {
        PowerWatts::new(self.0 * factor)
    }
}

impl Add for PowerWatts {
    type Output = PowerWatts;

    fn add(self, rhs: PowerWatts) -> PowerWatts {
        PowerWatts(self.0 + rhs.0)
    }
}

impl TryFrom<f64> for PowerWatts {
    type Error = RfpError;

    fn try_from(v: f64) -> Result<Self> {
        PowerWatts::new(v)
    }
}

impl From<PowerWatts> for f64 {
    fn from(p: PowerWatts) -> f64 {
        p.0
    }
}

impl fmt::Display for PowerWatts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} W", self.0)
    }
}

/// Power level in dBm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerDbm(f64);

impl PowerDbm {
    pub fn new(dbm: f64) -> Result<Self> {
        if dbm.is_finite() {
            Ok(PowerDbm(dbm))
        } else {
            Err(RfpError::Domain(format!(
                "dBm value must be finite, got {dbm}"
            )))
        }
    }

    #[inline]
    pub fn dbm(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PowerDbm {
    type Error = RfpError;

    fn try_from(v: f64) -> Result<Self> {
        PowerDbm::new(v)
    }
}

impl From<PowerDbm> for f64 {
    fn from(p: PowerDbm) -> f64 {
        p.0
    }
}

/// Dimensionless gain or loss in dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GainDb(f64);

impl GainDb {
    pub fn new(db: f64) -> Result<Self> {
        if db.is_finite() {
            Ok(GainDb(db))
        } else {
            Err(RfpError::Domain(format!(
                "dB value must be finite, got {db}"
            )))
        }
    }

    #[inline]
    pub fn db(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn linear(self) -> f64 {
        db_to_linear(self)
    }
}

impl TryFrom<f64> for GainDb {
    type Error = RfpError;

    fn try_from(v: f64) -> Result<Self> {
        GainDb::new(v)
    }
}

impl From<GainDb> for f64 {
    fn from(g: GainDb) -> f64 {
        g.0
    }
}

#[inline]
pub fn db_to_linear(g: GainDb) -> f64 {
    10f64.powf(g.0 / 10.0)
}

#[inline]
pub fn dbm_to_watts(p: PowerDbm) -> PowerWatts {
    PowerWatts(10f64.powf((p.0 - 30.0) / 10.0))
}

pub fn watts_to_dbm(p: PowerWatts) -> Result<PowerDbm> {
    if p.0 <= 0.0 {
        return Err(RfpError::Domain(format!("cannot express {} W in dBm", p.0)));
    }
    Ok(PowerDbm(10.0 * p.0.log10() + 30.0))
}
