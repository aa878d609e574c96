//! Closed-form RFP of a deployment and ratios between two deployments.
//!
//! Three quantities describe a single deployment:
//!
//! * cell RFP: the serving-gNB received power averaged over the coverage
//!   annulus `[d_min, d_max]`;
//! * fixed-distance RFP: the serving-gNB received power at `d_fx`;
//! * neighbor upper bound: every one of `n_i` neighbors placed at its closest
//!   possible distance `(2 zeta - 1) d_max` to the coverage area.
//!
//! Totals add the neighbor bound to either serving term, and the ratios
//! divide deployment (1) by deployment (2): a ratio above one means
//! deployment (1) pollutes more.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfpError};
use crate::geometry::LayoutSpec;
use crate::policy::{elp_power, msp_power, sps_power, PowerPolicy};
use crate::propagation::{path_gain, PropagationParams};
use crate::units::PowerWatts;

/// Neighbor counts the closed-form bound is defined for.
pub const ALLOWED_N_I: [u32; 2] = [0, 6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeploymentWire", into = "DeploymentWire")]
pub struct Deployment {
    d_min: f64,
    d_max: f64,
    params: PropagationParams,
    policy: PowerPolicy,
    layout: LayoutSpec,
    n_i: u32,
}

impl Deployment {
    pub fn new(
        d_min: f64,
        d_max: f64,
        params: PropagationParams,
        policy: PowerPolicy,
        layout: LayoutSpec,
        n_i: u32,
    ) -> Result<Self> {
        if !(d_min.is_finite() && d_max.is_finite() && 0.0 < d_min && d_min < d_max) {
            return Err(RfpError::Config(format!(
                "need 0 < d_min < d_max, got d_min={d_min} m, d_max={d_max} m"
            )));
        }
        if !ALLOWED_N_I.contains(&n_i) {
            return Err(RfpError::Config(format!("n_i must be 0 or 6, got {n_i}")));
        }
        if n_i > 0 && layout.zeta() <= 0.5 {
            return Err(RfpError::Config(format!(
                "neighbor bound needs zeta > 0.5, got {}",
                layout.zeta()
            )));
        }
        Ok(Deployment {
            d_min,
            d_max,
            params,
            policy,
            layout,
            n_i,
        })
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn params(&self) -> &PropagationParams {
        &self.params
    }

    pub fn policy(&self) -> &PowerPolicy {
        &self.policy
    }

    pub fn layout(&self) -> &LayoutSpec {
        &self.layout
    }

    pub fn n_i(&self) -> u32 {
        self.n_i
    }

    pub fn with_d_min(&self, d_min: f64) -> Result<Self> {
        Deployment::new(
            d_min,
            self.d_max,
            self.params,
            self.policy,
            self.layout,
            self.n_i,
        )
    }

    pub fn with_n_i(&self, n_i: u32) -> Result<Self> {
        Deployment::new(
            self.d_min,
            self.d_max,
            self.params,
            self.policy,
            self.layout,
            n_i,
        )
    }

    pub fn with_policy(&self, policy: PowerPolicy) -> Result<Self> {
        Deployment::new(
            self.d_min,
            self.d_max,
            self.params,
            policy,
            self.layout,
            self.n_i,
        )
    }

    pub fn with_layout(&self, layout: LayoutSpec) -> Result<Self> {
        Deployment::new(
            self.d_min,
            self.d_max,
            self.params,
            self.policy,
            layout,
            self.n_i,
        )
    }

    /// Area of the coverage annulus in m².
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * (self.d_max * self.d_max - self.d_min * self.d_min)
    }
}

#[derive(Serialize, Deserialize)]
struct DeploymentWire {
    d_min_m: f64,
    d_max_m: f64,
    gamma: f64,
    f_ghz: f64,
    eta: f64,
    c_db: f64,
    zeta: f64,
    #[serde(default)]
    neighbor_levels: Option<u8>,
    n_i: u32,
    policy: PowerPolicy,
}

impl TryFrom<DeploymentWire> for Deployment {
    type Error = RfpError;

    fn try_from(w: DeploymentWire) -> Result<Self> {
        let params = PropagationParams::new(w.gamma, w.f_ghz, w.eta, w.c_db)?;
        let levels = w.neighbor_levels.unwrap_or(if w.n_i > 0 { 1 } else { 0 });
        let layout = LayoutSpec::new(w.zeta, levels)?;
        Deployment::new(w.d_min_m, w.d_max_m, params, w.policy, layout, w.n_i)
    }
}

impl From<Deployment> for DeploymentWire {
    fn from(d: Deployment) -> Self {
        DeploymentWire {
            d_min_m: d.d_min,
            d_max_m: d.d_max,
            gamma: d.params.gamma(),
            f_ghz: d.params.freq_ghz(),
            eta: d.params.eta(),
            c_db: d.params.c_db().db(),
            zeta: d.layout.zeta(),
            neighbor_levels: Some(d.layout.neighbor_levels()),
            n_i: d.n_i,
            policy: d.policy,
        }
    }
}

/// Two deployments and where to evaluate them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSpec {
    dep1: Deployment,
    dep2: Deployment,
    d_fx1: f64,
    d_fx2: f64,
    epsilon: f64,
}

pub const DEFAULT_EPSILON_M: f64 = 1.0;
pub const DEFAULT_FX_OFFSET_M: f64 = 1.0;

impl ComparisonSpec {
    pub fn new(
        dep1: Deployment,
        dep2: Deployment,
        d_fx1: f64,
        d_fx2: f64,
        epsilon: f64,
    ) -> Result<Self> {
        for (i, dep, d_fx) in [(1, &dep1, d_fx1), (2, &dep2, d_fx2)] {
            if !(d_fx >= dep.d_min && d_fx <= dep.d_max) {
                return Err(RfpError::Config(format!(
                    "d_fx{i}={d_fx} m must lie in [{}, {}] m",
                    dep.d_min, dep.d_max
                )));
            }
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(RfpError::Config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(ComparisonSpec {
            dep1,
            dep2,
            d_fx1,
            d_fx2,
            epsilon,
        })
    }

    /// Observation points one meter outside each exclusion zone, 1 m window.
    pub fn with_defaults(dep1: Deployment, dep2: Deployment) -> Result<Self> {
        ComparisonSpec::new(
            dep1,
            dep2,
            dep1.d_min + DEFAULT_FX_OFFSET_M,
            dep2.d_min + DEFAULT_FX_OFFSET_M,
            DEFAULT_EPSILON_M,
        )
    }

    pub fn dep1(&self) -> &Deployment {
        &self.dep1
    }

    pub fn dep2(&self) -> &Deployment {
        &self.dep2
    }

    pub fn d_fx1(&self) -> f64 {
        self.d_fx1
    }

    pub fn d_fx2(&self) -> f64 {
        self.d_fx2
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `d_fx1 / d_max1`.
    pub fn beta1(&self) -> f64 {
        self.d_fx1 / self.dep1.d_max
    }

    /// `d_fx2 / d_max2`.
    pub fn beta2(&self) -> f64 {
        self.d_fx2 / self.dep2.d_max
    }

    pub fn with_n_i(&self, n_i: u32) -> Result<Self> {
        ComparisonSpec::new(
            self.dep1.with_n_i(n_i)?,
            self.dep2.with_n_i(n_i)?,
            self.d_fx1,
            self.d_fx2,
            self.epsilon,
        )
    }
}

pub fn emitted_power(dep: &Deployment) -> PowerWatts {
    match &dep.policy {
        PowerPolicy::Msp(cfg) => msp_power(cfg, dep.d_max, &dep.params),
        PowerPolicy::Elp(cfg) => elp_power(cfg, cfg.power_ref_m().unwrap_or(dep.d_min)),
        PowerPolicy::Sps(cfg) => Ok(sps_power(cfg)),
    }
    .expect("validated deployment")
}

/// Serving-gNB received power averaged over the coverage annulus.
pub fn cell_rfp(dep: &Deployment) -> PowerWatts {
    let pe = emitted_power(dep).watts();
    let gamma = dep.params.gamma();
    let (lo, hi) = (dep.d_min, dep.d_max);
    let prefactor = 2.0 * pe / ((hi * hi - lo * lo) * dep.params.attenuation());
    let log_span = (hi / lo).ln();
    // (lo^(2-g) - hi^(2-g)) / (g-2), written to stay exact as g -> 2.
    let radial = if gamma == 2.0 {
        log_span
    } else {
        let k = gamma - 2.0;
        hi.powf(-k) * (k * log_span).exp_m1() / k
    };
    PowerWatts::new(prefactor * radial).expect("positive")
}

/// Serving-gNB received power at `d_fx`.
pub fn fixed_rfp(dep: &Deployment, d_fx: f64) -> Result<PowerWatts> {
    if !(d_fx >= dep.d_min && d_fx <= dep.d_max) {
        return Err(RfpError::Domain(format!(
            "d_fx={d_fx} m outside [{}, {}] m",
            dep.d_min, dep.d_max
        )));
    }
    let gain = path_gain(d_fx, &dep.params)?;
    PowerWatts::new(emitted_power(dep).watts() * gain)
}

/// `n_i P^E / (d_max^gamma (2 zeta - 1)^gamma f^eta c)`.
pub fn neighbor_rfp_ub(dep: &Deployment) -> PowerWatts {
    if dep.n_i == 0 {
        return PowerWatts::ZERO;
    }
    let gap = (2.0 * dep.layout.zeta() - 1.0) * dep.d_max;
    let per_site =
        emitted_power(dep).watts() / (gap.powf(dep.params.gamma()) * dep.params.attenuation());
    PowerWatts::new(dep.n_i as f64 * per_site).expect("positive")
}

pub fn total_cell_rfp(dep: &Deployment) -> PowerWatts {
    cell_rfp(dep) + neighbor_rfp_ub(dep)
}

pub fn total_fixed_rfp(dep: &Deployment, d_fx: f64) -> Result<PowerWatts> {
    Ok(fixed_rfp(dep, d_fx)? + neighbor_rfp_ub(dep))
}

pub fn cell_ratio(spec: &ComparisonSpec) -> f64 {
    total_cell_rfp(&spec.dep1).watts() / total_cell_rfp(&spec.dep2).watts()
}

pub fn fixed_ratio(spec: &ComparisonSpec) -> f64 {
    let num = total_fixed_rfp(&spec.dep1, spec.d_fx1).expect("validated d_fx1");
    let den = total_fixed_rfp(&spec.dep2, spec.d_fx2).expect("validated d_fx2");
    num.watts() / den.watts()
}
