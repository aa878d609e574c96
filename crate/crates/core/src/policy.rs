//! Radiated-power policies and the point-source power-density check.
//!
//! * MSP: the power that delivers exactly the sensitivity threshold at the
//!   cell edge.
//! * ELP: the power that saturates the power-density limit at the border of
//!   the exclusion zone.
//! * SPS: a fixed power per 10 MHz of licensed bandwidth.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RfpError};
use crate::model::Deployment;
use crate::propagation::PropagationParams;
use crate::simulator::PixelGrid;
use crate::units::{dbm_to_watts, watts_to_dbm, GainDb, PowerDbm, PowerWatts};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MspWire", into = "MspWire")]
pub struct MspConfig {
    p_th: PowerWatts,
}

impl MspConfig {
    pub fn new(p_th: PowerDbm) -> Self {
        MspConfig {
            p_th: dbm_to_watts(p_th),
        }
    }

    pub fn from_dbm(p_th_dbm: f64) -> Result<Self> {
        Ok(MspConfig::new(PowerDbm::new(p_th_dbm)?))
    }

    /// Sensitivity threshold, linear.
    pub fn p_th(&self) -> PowerWatts {
        self.p_th
    }

    /// Returns a copy with the threshold multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        let p_th = self.p_th.scaled(k)?;
        if p_th.watts() <= 0.0 {
            return Err(RfpError::Config(
                "sensitivity threshold must be positive".into(),
            ));
        }
        Ok(MspConfig { p_th })
    }
}

#[derive(Serialize, Deserialize)]
struct MspWire {
    p_th_dbm: f64,
}

impl TryFrom<MspWire> for MspConfig {
    type Error = RfpError;

    fn try_from(w: MspWire) -> Result<Self> {
        MspConfig::from_dbm(w.p_th_dbm)
    }
}

impl From<MspConfig> for MspWire {
    fn from(c: MspConfig) -> Self {
        MspWire {
            p_th_dbm: watts_to_dbm(c.p_th).expect("positive threshold").dbm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElpWire", into = "ElpWire")]
pub struct ElpConfig {
    s_max: f64,
    g_tx: GainDb,
    l_tx: GainDb,
    power_ref_m: Option<f64>,
}

impl ElpConfig {
    /// `s_max` is the power-density limit in W/m².
    pub fn new(s_max: f64, g_tx: GainDb, l_tx: GainDb) -> Result<Self> {
        if !(s_max.is_finite() && s_max > 0.0) {
            return Err(RfpError::Config(format!(
                "power-density limit must be positive, got {s_max} W/m²"
            )));
        }
        Ok(ElpConfig {
            s_max,
            g_tx,
            l_tx,
            power_ref_m: None,
        })
    }

    /// Pins the exclusion radius used to set the radiated power, independent
    /// of the deployment's own `d_min`. Used when the exclusion zone is moved
    /// on otherwise unchanged equipment.
    pub fn with_power_ref(mut self, d_ref: f64) -> Result<Self> {
        if !(d_ref.is_finite() && d_ref > 0.0) {
            return Err(RfpError::Config(format!(
                "power reference distance must be positive, got {d_ref} m"
            )));
        }
        self.power_ref_m = Some(d_ref);
        Ok(self)
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn g_tx(&self) -> GainDb {
        self.g_tx
    }

    pub fn l_tx(&self) -> GainDb {
        self.l_tx
    }

    pub fn power_ref_m(&self) -> Option<f64> {
        self.power_ref_m
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        let mut out = ElpConfig::new(self.s_max * k, self.g_tx, self.l_tx)?;
        out.power_ref_m = self.power_ref_m;
        Ok(out)
    }

    /// `G_TX / (4π L_TX)`: multiply by power and divide by d² to get W/m².
    fn pd_factor(&self) -> f64 {
        self.g_tx.linear() / (4.0 * PI * self.l_tx.linear())
    }
}

#[derive(Serialize, Deserialize)]
struct ElpWire {
    s_max_w_m2: f64,
    g_tx_db: f64,
    l_tx_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_ref_m: Option<f64>,
}

impl TryFrom<ElpWire> for ElpConfig {
    type Error = RfpError;

    fn try_from(w: ElpWire) -> Result<Self> {
        let cfg = ElpConfig::new(
            w.s_max_w_m2,
            GainDb::new(w.g_tx_db)?,
            GainDb::new(w.l_tx_db)?,
        )?;
        match w.power_ref_m {
            Some(d) => cfg.with_power_ref(d),
            None => Ok(cfg),
        }
    }
}

impl From<ElpConfig> for ElpWire {
    fn from(c: ElpConfig) -> Self {
        ElpWire {
            s_max_w_m2: c.s_max,
            g_tx_db: c.g_tx.db(),
            l_tx_db: c.l_tx.db(),
            power_ref_m: c.power_ref_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpsWire", into = "SpsWire")]
pub struct SpsConfig {
    p_f: PowerWatts,
    bandwidth_mhz: f64,
}

impl SpsConfig {
    /// `p_f` is the maximum power per 10 MHz block.
    pub fn new(p_f: PowerDbm, bandwidth_mhz: f64) -> Result<Self> {
        if !(bandwidth_mhz.is_finite() && bandwidth_mhz > 0.0) {
            return Err(RfpError::Config(format!(
                "bandwidth must be positive, got {bandwidth_mhz} MHz"
            )));
        }
        Ok(SpsConfig {
            p_f: dbm_to_watts(p_f),
            bandwidth_mhz,
        })
    }

    pub fn p_f(&self) -> PowerWatts {
        self.p_f
    }

    pub fn bandwidth_mhz(&self) -> f64 {
        self.bandwidth_mhz
    }
}

#[derive(Serialize, Deserialize)]
struct SpsWire {
    p_f_dbm: f64,
    bandwidth_mhz: f64,
}

impl TryFrom<SpsWire> for SpsConfig {
    type Error = RfpError;

    fn try_from(w: SpsWire) -> Result<Self> {
        SpsConfig::new(PowerDbm::new(w.p_f_dbm)?, w.bandwidth_mhz)
    }
}

impl From<SpsConfig> for SpsWire {
    fn from(c: SpsConfig) -> Self {
        SpsWire {
            p_f_dbm: watts_to_dbm(c.p_f).expect("positive power").dbm(),
            bandwidth_mhz: c.bandwidth_mhz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PowerPolicy {
    Msp(MspConfig),
    Elp(ElpConfig),
    Sps(SpsConfig),
}

impl PowerPolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            PowerPolicy::Msp(_) => PolicyKind::Msp,
            PowerPolicy::Elp(_) => PolicyKind::Elp,
            PowerPolicy::Sps(_) => PolicyKind::Sps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Msp,
    Elp,
    Sps,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Msp => "msp",
            PolicyKind::Elp => "elp",
            PolicyKind::Sps => "sps",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `P_TH * d_max^gamma * f^eta * c`.
pub fn msp_power(cfg: &MspConfig, d_max: f64, params: &PropagationParams) -> Result<PowerWatts> {
    if !(d_max > 0.0) {
        return Err(RfpError::Domain(format!(
            "d_max must be positive, got {d_max}"
        )));
    }
    PowerWatts::new(cfg.p_th.watts() * d_max.powf(params.gamma()) * params.attenuation())
}

/// `4π d_min² S_MAX L_TX / G_TX`.
pub fn elp_power(cfg: &ElpConfig, d_min: f64) -> Result<PowerWatts> {
    if !(d_min > 0.0) {
        return Err(RfpError::Domain(format!(
            "d_min must be positive, got {d_min}"
        )));
    }
    PowerWatts::new(4.0 * PI * d_min * d_min * cfg.s_max * cfg.l_tx.linear() / cfg.g_tx.linear())
}

/// `P_F * B / 10`.
pub fn sps_power(cfg: &SpsConfig) -> PowerWatts {
    PowerWatts::new(cfg.p_f.watts() * cfg.bandwidth_mhz / 10.0).expect("positive inputs")
}

/// Point-source power density in W/m² at distance `d`.
pub fn pd_point_source(pe: PowerWatts, cfg: &ElpConfig, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(RfpError::Domain(format!(
            "distance must be positive, got {d} m"
        )));
    }
    Ok(pe.watts() * cfg.pd_factor() / (d * d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelRef {
    pub row: usize,
    pub col: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub max_pd_w_m2: f64,
    pub s_max_w_m2: f64,
    /// `s_max - max_pd`; negative when the limit is exceeded.
    pub margin_w_m2: f64,
    pub worst_pixel: Option<PixelRef>,
    pub sources: usize,
    pub passed: bool,
}

/// Checks the summed point-source power density of the serving site and all
/// neighbor sites of `grid` against the ELP limit, over every unmasked pixel.
pub fn verify_elp_compliance(
    deployment: &Deployment,
    grid: &PixelGrid,
) -> Result<ComplianceReport> {
    let PowerPolicy::Elp(cfg) = deployment.policy() else {
        return Err(RfpError::Config(format!(
            "ELP compliance requires an ELP deployment, got {}",
            deployment.policy().kind()
        )));
    };
    let pe = crate::model::emitted_power(deployment);
    compliance_for_power(grid, pe, cfg)
}

/// Same as [`verify_elp_compliance`] with an explicit radiated power.
pub fn compliance_for_power(
    grid: &PixelGrid,
    pe: PowerWatts,
    cfg: &ElpConfig,
) -> Result<ComplianceReport> {
    let k = pe.watts() * cfg.pd_factor();
    let sites = grid.neighbors();
    let side = grid.side();

    // Per-row maxima in parallel; the sequential reduction keeps the first
    // row-major pixel on ties.
    let row_best: Vec<Option<(f64, usize)>> = (0..side)
        .into_par_iter()
        .map(|row| {
            let mut best: Option<(f64, usize)> = None;
            for col in 0..side {
                if grid.rfp_at(row, col).is_none() {
                    continue;
                }
                let c = grid.center(row, col);
                let d = grid.distance_at(row, col);
                let mut pd = k / (d * d);
                for s in sites {
                    let (dx, dy) = (c.x - s.x, c.y - s.y);
                    pd += k / (dx * dx + dy * dy);
                }
                if best.is_none_or(|(b, _)| pd > b) {
                    best = Some((pd, col));
                }
            }
            best
        })
        .collect();

    let mut worst: Option<(f64, usize, usize)> = None;
    for (row, best) in row_best.into_iter().enumerate() {
        if let Some((pd, col)) = best {
            if worst.is_none_or(|(b, _, _)| pd > b) {
                worst = Some((pd, row, col));
            }
        }
    }

    let max_pd = worst.map_or(0.0, |(pd, _, _)| pd);
    let worst_pixel = worst.map(|(_, row, col)| {
        let c = grid.center(row, col);
        PixelRef {
            row,
            col,
            x_m: c.x,
            y_m: c.y,
            distance_m: grid.distance_at(row, col),
        }
    });
    Ok(ComplianceReport {
        max_pd_w_m2: max_pd,
        s_max_w_m2: cfg.s_max,
        margin_w_m2: cfg.s_max - max_pd,
        worst_pixel,
        sources: 1 + sites.len(),
        passed: max_pd <= cfg.s_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    pub(crate) fn table_elp() -> ElpConfig {
        ElpConfig::new(0.1, GainDb::new(15.0).unwrap(), GainDb::new(2.32).unwrap()).unwrap()
    }

    fn s1_dep1_params() -> PropagationParams {
        PropagationParams::new(3.0, 0.7, 2.0, 32.4).unwrap()
    }

    #[test]
    fn msp_unity() {
        let cfg = MspConfig::from_dbm(30.0).unwrap();
        for gamma in [2.0, 2.5, 3.0, 4.0] {
            let p = PropagationParams::new(gamma, 1.0, 2.0, 0.0).unwrap();
            assert!(rel(msp_power(&cfg, 1.0, &p).unwrap().watts(), 1.0) < 1e-15);
        }
    }

    #[test]
    fn msp_table_values() {
        let s1 = msp_power(
            &MspConfig::from_dbm(-90.0).unwrap(),
            500.0,
            &s1_dep1_params(),
        )
        .unwrap();
        let expected = 1e-12 * 1.25e8 * 0.49 * 10f64.powf(3.24);
        assert!(rel(s1.watts(), expected) < 1e-13);
        assert!(rel(s1.watts(), 0.1064) < 1e-3);
        assert!((watts_to_dbm(s1).unwrap().dbm() - 20.27).abs() < 0.01);

        let p5 = PropagationParams::new(2.1, 3.7, 2.0, 32.4).unwrap();
        let s5 = msp_power(&MspConfig::from_dbm(-87.0).unwrap(), 50.0, &p5).unwrap();
        let exact = 10f64.powf(-11.7) * 50f64.powf(2.1) * 3.7 * 3.7 * 10f64.powf(3.24);
        assert!(rel(s5.watts(), exact) < 1e-13);
        assert!(rel(s5.watts(), 1.757e-4) < 2e-3);
        assert!((watts_to_dbm(s5).unwrap().dbm() + 7.55).abs() < 0.01);
    }

    #[test]
    fn elp_values() {
        let unit = ElpConfig::new(
            1.0 / (4.0 * PI),
            GainDb::new(0.0).unwrap(),
            GainDb::new(0.0).unwrap(),
        )
        .unwrap();
        assert!(rel(elp_power(&unit, 1.0).unwrap().watts(), 1.0) < 1e-15);

        let at15 = elp_power(&table_elp(), 15.0).unwrap().watts();
        let expected = 4.0 * PI * 225.0 * 0.1 * 10f64.powf(0.232) / 10f64.powf(1.5);
        assert!(rel(at15, expected) < 1e-14);
        assert!((at15 - 15.255).abs() < 2e-3);

        let at5 = elp_power(&table_elp(), 5.0).unwrap().watts();
        assert!(rel(at5, at15 / 9.0) < 1e-14);
        assert!((at5 - 1.695).abs() < 1e-3);
    }

    #[test]
    fn sps_values() {
        let p47 = PowerDbm::new(47.0).unwrap();
        let unit = sps_power(&SpsConfig::new(p47, 10.0).unwrap());
        assert_eq!(unit, dbm_to_watts(p47));
        assert!((sps_power(&SpsConfig::new(p47, 20.0).unwrap()).watts() - 100.24).abs() < 0.01);
        assert!((sps_power(&SpsConfig::new(p47, 80.0).unwrap()).watts() - 400.95).abs() < 0.01);
        assert!(SpsConfig::new(p47, 0.0).is_err());
    }

    #[test]
    fn point_source_density() {
        let cfg = table_elp();
        let pe = elp_power(&cfg, 15.0).unwrap();
        assert!(rel(pd_point_source(pe, &cfg, 15.0).unwrap(), 0.1) < 1e-14);
        assert!(rel(pd_point_source(pe, &cfg, 30.0).unwrap(), 0.025) < 1e-14);

        let unit =
            ElpConfig::new(1.0, GainDb::new(0.0).unwrap(), GainDb::new(0.0).unwrap()).unwrap();
        let pe = PowerWatts::new(4.0 * PI).unwrap();
        assert!(rel(pd_point_source(pe, &unit, 1.0).unwrap(), 1.0) < 1e-15);
        assert!(pd_point_source(pe, &unit, 0.0).is_err());
    }

    #[test]
    fn threshold_ratio_is_linear_domain() {
        let a = MspConfig::from_dbm(-90.0).unwrap().p_th().watts();
        let b = MspConfig::from_dbm(-87.0).unwrap().p_th().watts();
        assert!(rel(a / b, 10f64.powf(-0.3)) < 1e-12);
        assert!(((a / b) * 10.0).round() / 10.0 == 0.5);
    }

    #[test]
    fn policy_json_is_tagged() {
        let pol = PowerPolicy::Elp(table_elp());
        let json = serde_json::to_string(&pol).unwrap();
        assert_eq!(
            json,
            r#"{"type":"elp","s_max_w_m2":0.1,"g_tx_db":15.0,"l_tx_db":2.32}"#
        );
        let back: PowerPolicy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pol);

        let msp: PowerPolicy = serde_json::from_str(r#"{"type":"msp","p_th_dbm":-90}"#).unwrap();
        assert_eq!(msp.kind(), PolicyKind::Msp);
        assert!(serde_json::from_str::<PowerPolicy>(
            r#"{"type":"sps","p_f_dbm":47,"bandwidth_mhz":-1}"#
        )
        .is_err());
        assert!(serde_json::from_str::<PowerPolicy>(
            r#"{"type":"elp","s_max_w_m2":0,"g_tx_db":15,"l_tx_db":2.32}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn msp_homogeneous_in_d_max(d in 1.0f64..2000.0, gamma in 2.0f64..=4.0) {
            let p = PropagationParams::new(gamma, 0.7, 2.0, 32.4).unwrap();
            let cfg = MspConfig::from_dbm(-90.0).unwrap();
            let r = msp_power(&cfg, 2.0 * d, &p).unwrap().watts() / msp_power(&cfg, d, &p).unwrap().watts();
            prop_assert!(rel(r, 2f64.powf(gamma)) < 1e-12);
        }

        #[test]
        fn elp_homogeneous_in_d_min(d in 0.1f64..100.0, k in 0.1f64..10.0) {
            let cfg = table_elp();
            let r = elp_power(&cfg, k * d).unwrap().watts() / elp_power(&cfg, d).unwrap().watts();
            prop_assert!(rel(r, k * k) < 1e-12);
        }

        #[test]
        fn elp_density_bounded_outside_exclusion(d_min in 1.0f64..50.0, extra in 0.0f64..1000.0) {
            let cfg = table_elp();
            let pe = elp_power(&cfg, d_min).unwrap();
            let pd = pd_point_source(pe, &cfg, d_min + extra).unwrap();
            prop_assert!(pd <= cfg.s_max() * (1.0 + 1e-12));
        }
    }
}
