//! Reference scenarios, the model/simulation comparison pipeline and sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfpError};
use crate::geometry::{LayoutSpec, HEX_ZETA};
use crate::model::{
    emitted_power, total_cell_rfp, total_fixed_rfp, ComparisonSpec, Deployment, DEFAULT_EPSILON_M,
    DEFAULT_FX_OFFSET_M,
};
use crate::policy::{ElpConfig, MspConfig, PolicyKind, PowerPolicy, SpsConfig};
use crate::propagation::PropagationParams;
use crate::simulator::{
    aggregate_cell, aggregate_fixed, build_grid_capped, distance_profile, DEFAULT_MAX_PIXELS,
    DEFAULT_PIXEL_SIZE_M,
};
use crate::units::{dbm_to_watts, GainDb, PowerDbm};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::S1,
        Scenario::S2,
        Scenario::S3,
        Scenario::S4,
        Scenario::S5,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
            Scenario::S4 => "S4",
            Scenario::S5 => "S5",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = RfpError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                RfpError::Config(format!("unknown scenario {s:?}; expected one of S1..S5"))
            })
    }
}

/// Parameters that differ between the two deployments of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideParams {
    pub d_min_m: f64,
    pub d_max_m: f64,
    pub gamma: f64,
    pub f_ghz: f64,
    pub p_th_dbm: f64,
    pub bandwidth_mhz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPreset {
    pub id: Scenario,
    pub sides: [SideParams; 2],
    pub eta: f64,
    pub c_db: f64,
    pub zeta: f64,
    pub s_max_w_m2: f64,
    pub g_tx_db: f64,
    pub l_tx_db: f64,
    pub p_f_dbm: f64,
    /// Exclusion radius that sets the ELP radiated power; each deployment's
    /// own `d_min` when absent.
    pub elp_power_ref_m: Option<f64>,
    pub d_fx_m: [Option<f64>; 2],
    pub epsilon_m: f64,
}

const TABLE_D_MIN: f64 = 15.0;

pub fn preset(id: Scenario) -> ScenarioPreset {
    let (d_max2, gamma2, f2, p_th2) = match id {
        Scenario::S1 => (250.0, 3.0, 0.7, -90.0),
        Scenario::S2 => (100.0, 2.1, 0.7, -90.0),
        Scenario::S3 => (250.0, 3.0, 3.7, -90.0),
        Scenario::S4 => (500.0, 3.0, 3.7, -87.0),
        Scenario::S5 => (50.0, 2.1, 3.7, -87.0),
    };
    let side = |d_max_m, gamma, f_ghz, p_th_dbm| SideParams {
        d_min_m: TABLE_D_MIN,
        d_max_m,
        gamma,
        f_ghz,
        p_th_dbm,
        bandwidth_mhz: None,
    };
    ScenarioPreset {
        id,
        sides: [
            side(500.0, 3.0, 0.7, -90.0),
            side(d_max2, gamma2, f2, p_th2),
        ],
        eta: 2.0,
        c_db: 32.4,
        zeta: HEX_ZETA,
        s_max_w_m2: 0.1,
        g_tx_db: 15.0,
        l_tx_db: 2.32,
        p_f_dbm: 47.0,
        elp_power_ref_m: None,
        d_fx_m: [None, None],
        epsilon_m: DEFAULT_EPSILON_M,
    }
}

pub fn preset_by_name(name: &str) -> Result<ScenarioPreset> {
    Ok(preset(name.parse()?))
}

/// JSON overrides applied on top of a preset. Suffix `1`/`2` selects a
/// deployment; unsuffixed geometry keys apply to both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetOverride {
    pub schema_version: Option<u32>,
    pub scenario: Option<String>,
    pub d_min_m: Option<f64>,
    pub d_min1_m: Option<f64>,
    pub d_min2_m: Option<f64>,
    pub d_max1_m: Option<f64>,
    pub d_max2_m: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub f1_ghz: Option<f64>,
    pub f2_ghz: Option<f64>,
    pub p_th1_dbm: Option<f64>,
    pub p_th2_dbm: Option<f64>,
    pub bandwidth1_mhz: Option<f64>,
    pub bandwidth2_mhz: Option<f64>,
    pub eta: Option<f64>,
    pub c_db: Option<f64>,
    pub zeta: Option<f64>,
    pub s_max_w_m2: Option<f64>,
    pub g_tx_db: Option<f64>,
    pub l_tx_db: Option<f64>,
    pub p_f_dbm: Option<f64>,
    pub elp_power_ref_m: Option<f64>,
    pub d_fx1_m: Option<f64>,
    pub d_fx2_m: Option<f64>,
    pub epsilon_m: Option<f64>,
}

impl ScenarioPreset {
    pub fn apply(&self, o: &PresetOverride) -> ScenarioPreset {
        let mut p = *self;
        fn set<T: Copy>(dst: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *dst = v;
            }
        }
        if let Some(d) = o.d_min_m {
            p.sides[0].d_min_m = d;
            p.sides[1].d_min_m = d;
        }
        let per_side = [
            (
                o.d_min1_m,
                o.d_max1_m,
                o.gamma1,
                o.f1_ghz,
                o.p_th1_dbm,
                o.bandwidth1_mhz,
            ),
            (
                o.d_min2_m,
                o.d_max2_m,
                o.gamma2,
                o.f2_ghz,
                o.p_th2_dbm,
                o.bandwidth2_mhz,
            ),
        ];
        for (s, (d_min, d_max, gamma, f, p_th, bw)) in p.sides.iter_mut().zip(per_side) {
            set(&mut s.d_min_m, d_min);
            set(&mut s.d_max_m, d_max);
            set(&mut s.gamma, gamma);
            set(&mut s.f_ghz, f);
            set(&mut s.p_th_dbm, p_th);
            if bw.is_some() {
                s.bandwidth_mhz = bw;
            }
        }
        set(&mut p.eta, o.eta);
        set(&mut p.c_db, o.c_db);
        set(&mut p.zeta, o.zeta);
        set(&mut p.s_max_w_m2, o.s_max_w_m2);
        set(&mut p.g_tx_db, o.g_tx_db);
        set(&mut p.l_tx_db, o.l_tx_db);
        set(&mut p.p_f_dbm, o.p_f_dbm);
        set(&mut p.epsilon_m, o.epsilon_m);
        if o.elp_power_ref_m.is_some() {
            p.elp_power_ref_m = o.elp_power_ref_m;
        }
        if o.d_fx1_m.is_some() {
            p.d_fx_m[0] = o.d_fx1_m;
        }
        if o.d_fx2_m.is_some() {
            p.d_fx_m[1] = o.d_fx2_m;
        }
        p
    }

    pub fn delta_d_max(&self) -> f64 {
        self.sides[0].d_max_m / self.sides[1].d_max_m
    }

    pub fn delta_f(&self) -> f64 {
        self.sides[0].f_ghz / self.sides[1].f_ghz
    }

    /// Threshold ratio in the linear domain.
    pub fn delta_p_th(&self) -> f64 {
        let w = |dbm| dbm_to_watts(PowerDbm::new(dbm).expect("finite")).watts();
        w(self.sides[0].p_th_dbm) / w(self.sides[1].p_th_dbm)
    }

    /// Both deployments share one propagation constant.
    pub fn delta_c(&self) -> f64 {
        1.0
    }

    /// Ratio of the coverage-annulus areas.
    pub fn delta_area(&self) -> f64 {
        let a = |s: &SideParams| s.d_max_m * s.d_max_m - s.d_min_m * s.d_min_m;
        a(&self.sides[0]) / a(&self.sides[1])
    }

    pub fn delta_bandwidth(&self) -> Option<f64> {
        Some(self.sides[0].bandwidth_mhz? / self.sides[1].bandwidth_mhz?)
    }

    fn policy_for(&self, k: usize, kind: PolicyKind) -> Result<PowerPolicy> {
        let s = &self.sides[k];
        Ok(match kind {
            PolicyKind::Msp => PowerPolicy::Msp(MspConfig::from_dbm(s.p_th_dbm)?),
            PolicyKind::Elp => {
                let cfg = ElpConfig::new(
                    self.s_max_w_m2,
                    GainDb::new(self.g_tx_db)?,
                    GainDb::new(self.l_tx_db)?,
                )?;
                PowerPolicy::Elp(match self.elp_power_ref_m {
                    Some(d) => cfg.with_power_ref(d)?,
                    None => cfg,
                })
            }
            PolicyKind::Sps => {
                let b = s.bandwidth_mhz.ok_or_else(|| {
                    RfpError::Config(format!(
                        "SPS needs bandwidth{}_mhz in an override file; {} has no default bandwidth",
                        k + 1,
                        self.id
                    ))
                })?;
                PowerPolicy::Sps(SpsConfig::new(PowerDbm::new(self.p_f_dbm)?, b)?)
            }
        })
    }

    /// Deployment `k` (0 or 1) of the pair.
    pub fn deployment(&self, k: usize, kind: PolicyKind, n_i: u32) -> Result<Deployment> {
        let s = &self.sides[k];
        let params = PropagationParams::new(s.gamma, s.f_ghz, self.eta, self.c_db)?;
        let layout = LayoutSpec::new(self.zeta, if n_i > 0 { 1 } else { 0 })?;
        Deployment::new(
            s.d_min_m,
            s.d_max_m,
            params,
            self.policy_for(k, kind)?,
            layout,
            n_i,
        )
    }

    pub fn comparison(&self, kind: PolicyKind, n_i: u32) -> Result<ComparisonSpec> {
        let dep1 = self.deployment(0, kind, n_i)?;
        let dep2 = self.deployment(1, kind, n_i)?;
        let d_fx = |k: usize| self.d_fx_m[k].unwrap_or(self.sides[k].d_min_m + DEFAULT_FX_OFFSET_M);
        ComparisonSpec::new(dep1, dep2, d_fx(0), d_fx(1), self.epsilon_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Model,
    Simulation,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Model => "model",
            Method::Simulation => "simulation",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub pixel_size: f64,
    pub max_pixels: u64,
    /// Neighbor rings to simulate; defaults to 1 when `n_i > 0`, else 0.
    pub neighbor_levels: Option<u8>,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            pixel_size: DEFAULT_PIXEL_SIZE_M,
            max_pixels: DEFAULT_MAX_PIXELS,
            neighbor_levels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub policy: PolicyKind,
    pub n_i: u32,
    pub neighbor_levels: u8,
    pub method: Method,
    pub fixed_ratio: f64,
    pub cell_ratio: f64,
    pub pe1_w: f64,
    pub pe2_w: f64,
    pub cell1_w: f64,
    pub cell2_w: f64,
    pub fx1_w: f64,
    pub fx2_w: f64,
    pub d_min1_m: f64,
    pub d_min2_m: f64,
    pub d_fx1_m: f64,
    pub d_fx2_m: f64,
    pub pixel_size_m: Option<f64>,
    pub schema_version: u32,
    /// Wall-clock seconds; kept out of data files.
    #[serde(skip)]
    pub elapsed_s: f64,
}

pub fn run_comparison(
    preset: &ScenarioPreset,
    kind: PolicyKind,
    n_i: u32,
    method: Method,
    sim: &SimSettings,
) -> Result<ComparisonReport> {
    let spec = preset.comparison(kind, n_i)?;
    run_spec(preset.id.as_str(), &spec, method, sim)
}

/// Runs one comparison for an arbitrary deployment pair.
pub fn run_spec(
    label: &str,
    spec: &ComparisonSpec,
    method: Method,
    sim: &SimSettings,
) -> Result<ComparisonReport> {
    let start = Instant::now();
    let (dep1, dep2) = (spec.dep1(), spec.dep2());
    let n_i = dep1.n_i();
    let default_levels = if n_i > 0 { 1 } else { 0 };
    let levels = match method {
        Method::Model => default_levels,
        Method::Simulation => sim.neighbor_levels.unwrap_or(default_levels),
    };
    let (cell, fx) = match method {
        Method::Model => (
            [total_cell_rfp(dep1).watts(), total_cell_rfp(dep2).watts()],
            [
                total_fixed_rfp(dep1, spec.d_fx1())?.watts(),
                total_fixed_rfp(dep2, spec.d_fx2())?.watts(),
            ],
        ),
        Method::Simulation => {
            let mut cell = [0.0; 2];
            let mut fx = [0.0; 2];
            for (k, (dep, d_fx)) in [(dep1, spec.d_fx1()), (dep2, spec.d_fx2())]
                .into_iter()
                .enumerate()
            {
                let grid = build_grid_capped(dep, levels, sim.pixel_size, sim.max_pixels)?;
                cell[k] = aggregate_cell(&grid)?.watts();
                fx[k] = aggregate_fixed(&grid, d_fx, spec.epsilon())?.watts();
            }
            (cell, fx)
        }
    };
    Ok(ComparisonReport {
        scenario: label.to_string(),
        policy: dep1.policy().kind(),
        n_i,
        neighbor_levels: levels,
        method,
        fixed_ratio: fx[0] / fx[1],
        cell_ratio: cell[0] / cell[1],
        pe1_w: emitted_power(dep1).watts(),
        pe2_w: emitted_power(dep2).watts(),
        cell1_w: cell[0],
        cell2_w: cell[1],
        fx1_w: fx[0],
        fx2_w: fx[1],
        d_min1_m: dep1.d_min(),
        d_min2_m: dep2.d_min(),
        d_fx1_m: spec.d_fx1(),
        d_fx2_m: spec.d_fx2(),
        pixel_size_m: (method == Method::Simulation).then_some(sim.pixel_size),
        schema_version: SCHEMA_VERSION,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Moves deployment (2)'s exclusion zone to each value, with `d_fx2` one
/// meter beyond it. ELP equipment keeps the radiated power set by the
/// preset's original exclusion radius.
pub fn sweep_dmin2(
    preset: &ScenarioPreset,
    kind: PolicyKind,
    values: &[f64],
    n_i: u32,
    method: Method,
    sim: &SimSettings,
) -> Result<Vec<ComparisonReport>> {
    let d_max2 = preset.sides[1].d_max_m;
    let power_ref = preset.elp_power_ref_m.unwrap_or(preset.sides[1].d_min_m);
    values
        .iter()
        .map(|&v| {
            if !(v > 0.0 && v < d_max2 - DEFAULT_FX_OFFSET_M) {
                return Err(RfpError::Config(format!(
                    "d_min2 sweep value {v} m must lie in (0, {}) m",
                    d_max2 - DEFAULT_FX_OFFSET_M
                )));
            }
            let mut p = *preset;
            p.sides[1].d_min_m = v;
            p.d_fx_m[1] = Some(v + DEFAULT_FX_OFFSET_M);
            p.elp_power_ref_m = Some(power_ref);
            run_comparison(&p, kind, n_i, method, sim)
        })
        .collect()
}

/// Simulated reports with 0, 1 or 2 neighbor rings.
pub fn sweep_neighbor_levels(
    preset: &ScenarioPreset,
    kind: PolicyKind,
    levels: &[u8],
    sim: &SimSettings,
) -> Result<Vec<ComparisonReport>> {
    levels
        .iter()
        .map(|&l| {
            let n_i = if l > 0 { 6 } else { 0 };
            let s = SimSettings {
                neighbor_levels: Some(l),
                ..*sim
            };
            run_comparison(preset, kind, n_i, Method::Simulation, &s)
        })
        .collect()
}

/// First `beta = d / d_max` at which deployment (1)'s simulated distance
/// profile falls below deployment (2)'s, comparing both at equal `beta`.
/// `None` when the profiles never cross from above to below.
pub fn profile_crossover(
    preset: &ScenarioPreset,
    kind: PolicyKind,
    neighbor_levels: u8,
    sim: &SimSettings,
) -> Result<Option<f64>> {
    let n_i = if neighbor_levels > 0 { 6 } else { 0 };
    let spec = preset.comparison(kind, n_i)?;
    let (dep1, dep2) = (spec.dep1(), spec.dep2());
    let p1 = distance_profile(&build_grid_capped(
        dep1,
        neighbor_levels,
        sim.pixel_size,
        sim.max_pixels,
    )?);
    let p2 = distance_profile(&build_grid_capped(
        dep2,
        neighbor_levels,
        sim.pixel_size,
        sim.max_pixels,
    )?);

    let mut prev: Option<(f64, f64)> = None;
    for b in &p2.bins {
        let beta = (b.lower_m + 0.5) / dep2.d_max();
        let Some(v1) = p1.log_interp(beta * dep1.d_max()) else {
            continue;
        };
        let diff = v1.ln() - b.mean_rfp.watts().ln();
        if let Some((pb, pd)) = prev {
            if pd > 0.0 && diff <= 0.0 {
                return Ok(Some(pb + (beta - pb) * pd / (pd - diff)));
            }
        }
        prev = Some((beta, diff));
    }
    Ok(None)
}
