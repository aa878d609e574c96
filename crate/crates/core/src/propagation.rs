//! Deterministic distance/frequency power-law propagation kernel.
//!
//! Received power at distance `d` (meters) from a source radiating `P` watts
//! at frequency `f` (GHz) is `P / (d^gamma * f^eta * c)`, with `c` the
//! linear value of the baseline constant (32.4 dB is the free-space constant
//! for GHz and meters).

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfpError};
use crate::units::{db_to_linear, GainDb, PowerWatts};

pub const MIN_GAMMA: f64 = 2.0;
pub const MAX_GAMMA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PropagationWire", into = "PropagationWire")]
pub struct PropagationParams {
    gamma: f64,
    freq_ghz: f64,
    eta: f64,
    c_db: GainDb,
    /// `f^eta * c`, fixed at construction so every caller shares one value.
    attenuation: f64,
}

impl PropagationParams {
    pub fn new(gamma: f64, freq_ghz: f64, eta: f64, c_db: f64) -> Result<Self> {
        if !(MIN_GAMMA..=MAX_GAMMA).contains(&gamma) {
            return Err(RfpError::Config(format!(
                "path-loss exponent gamma must lie in [{MIN_GAMMA}, {MAX_GAMMA}], got {gamma}"
            )));
        }
        if !(freq_ghz.is_finite() && freq_ghz > 0.0) {
            return Err(RfpError::Config(format!(
                "frequency must be positive, got {freq_ghz} GHz"
            )));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(RfpError::Config(format!(
                "frequency exponent eta must be non-negative, got {eta}"
            )));
        }
        let c_db = GainDb::new(c_db)?;
        let attenuation = freq_ghz.powf(eta) * db_to_linear(c_db);
        Ok(PropagationParams {
            gamma,
            freq_ghz,
            eta,
            c_db,
            attenuation,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn freq_ghz(&self) -> f64 {
        self.freq_ghz
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn c_db(&self) -> GainDb {
        self.c_db
    }

    /// `f^eta * c` in linear units.
    pub fn attenuation(&self) -> f64 {
        self.attenuation
    }
}

#[derive(Serialize, Deserialize)]
struct PropagationWire {
    gamma: f64,
    f_ghz: f64,
    eta: f64,
    c_db: f64,
}

impl TryFrom<PropagationWire> for PropagationParams {
    type Error = RfpError;

    fn try_from(w: PropagationWire) -> Result<Self> {
        PropagationParams::new(w.gamma, w.f_ghz, w.eta, w.c_db)
    }
}

impl From<PropagationParams> for PropagationWire {
    fn from(p: PropagationParams) -> Self {
        PropagationWire {
            gamma: p.gamma,
            f_ghz: p.freq_ghz,
            eta: p.eta,
            c_db: p.c_db.db(),
        }
    }
}

/// Linear path gain `1 / (d^gamma * f^eta * c)` at distance `d` meters.
#[inline]
pub fn path_gain(d: f64, params: &PropagationParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(RfpError::Domain(format!(
            "distance must be positive, got {d} m"
        )));
    }
    Ok(unchecked_path_gain(d, params))
}

#[inline]
pub(crate) fn unchecked_path_gain(d: f64, params: &PropagationParams) -> f64 {
    1.0 / (d.powf(params.gamma) * params.attenuation)
}

pub fn received_power(pe: PowerWatts, d: f64, params: &PropagationParams) -> Result<PowerWatts> {
    let gain = path_gain(d, params)?;
    Ok(PowerWatts::new(pe.watts() * gain).expect("non-negative product"))
}
