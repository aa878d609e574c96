//! Scenario-specific closed-form ratios for deployments without neighbors.
//!
//! Each reference scenario changes only a few parameters between the two
//! deployments, so the generic ratios collapse to short expressions in the
//! δ(·) parameter ratios. They are evaluated here as written, independently
//! of [`crate::model`], and each expression checks that the deployment pair
//! satisfies the assumptions it was derived under.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfpError};
use crate::model::{emitted_power, ComparisonSpec, Deployment};
use crate::policy::{PolicyKind, PowerPolicy};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Fixed,
    Cell,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Fixed, Metric::Cell];
}

struct Terms {
    d_min: f64,
    d_max: [f64; 2],
    gamma: [f64; 2],
    delta_d: f64,
    delta_area: f64,
    delta_f_eta: f64,
    beta1: f64,
    /// (d_max1 - d_min) / (d_max2 - d_min)
    span: f64,
}

impl Terms {
    /// `[d_min^(2-g) - d_max^(2-g)] / (g - 2)`, or `ln(d_max/d_min)` at g = 2.
    fn bracket(&self, k: usize) -> f64 {
        let (g, hi, lo) = (self.gamma[k], self.d_max[k], self.d_min);
        if g == 2.0 {
            (hi / lo).ln()
        } else {
            (lo.powf(2.0 - g) - hi.powf(2.0 - g)) / (g - 2.0)
        }
    }

    /// `(g2-2)/(g1-2) · [d_min^(2-g1) - d_max1^(2-g1)] / [d_min^(2-g2) - d_max2^(2-g2)]`
    fn bracket_ratio(&self) -> f64 {
        self.bracket(0) / self.bracket(1)
    }
}

fn require(ok: bool, what: &str, id: Scenario, kind: PolicyKind) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(RfpError::Config(format!(
            "{id} {kind} expression assumes {what}"
        )))
    }
}

fn p_th(dep: &Deployment) -> f64 {
    match dep.policy() {
        PowerPolicy::Msp(c) => c.p_th().watts(),
        _ => f64::NAN,
    }
}

/// Evaluates the scenario expression for one policy and metric.
///
/// Only MSP and ELP have scenario expressions. The result describes the
/// pair without neighbors, whatever `n_i` the deployments carry.
pub fn table_expression(
    id: Scenario,
    kind: PolicyKind,
    metric: Metric,
    spec: &ComparisonSpec,
) -> Result<f64> {
    let (d1, d2) = (spec.dep1(), spec.dep2());
    if kind == PolicyKind::Sps {
        return Err(RfpError::Config(format!(
            "no scenario expression for {kind}"
        )));
    }
    if d1.policy().kind() != kind || d2.policy().kind() != kind {
        return Err(RfpError::Config(format!(
            "{kind} expression needs two {kind} deployments, got {} and {}",
            d1.policy().kind(),
            d2.policy().kind()
        )));
    }
    require(d1.d_min() == d2.d_min(), "a shared d_min", id, kind)?;

    let t = Terms {
        d_min: d1.d_min(),
        d_max: [d1.d_max(), d2.d_max()],
        gamma: [d1.params().gamma(), d2.params().gamma()],
        delta_d: d1.d_max() / d2.d_max(),
        delta_area: (d1.d_max().powi(2) - d1.d_min().powi(2))
            / (d2.d_max().powi(2) - d2.d_min().powi(2)),
        delta_f_eta: (d1.params().freq_ghz() / d2.params().freq_ghz()).powf(-d1.params().eta()),
        beta1: spec.beta1(),
        span: (d1.d_max() - d1.d_min()) / (d2.d_max() - d2.d_min()),
    };
    let same_fx = spec.d_fx1() == spec.d_fx2();
    let same_gamma = t.gamma[0] == t.gamma[1];
    let cubic = t.gamma[0] == 3.0 && t.gamma[1] == 3.0;
    let same_f = d1.params().freq_ghz() == d2.params().freq_ghz();
    let same_d_max = t.d_max[0] == t.d_max[1];
    let fixed = metric == Metric::Fixed;
    let req = |ok, what| require(ok, what, id, kind);

    match kind {
        PolicyKind::Msp => {
            let delta_pth = p_th(d1) / p_th(d2);
            let same_pth = delta_pth == 1.0;
            // d_max1^g1 / d_max2^g2
            let edge = t.d_max[0].powf(t.gamma[0]) / t.d_max[1].powf(t.gamma[1]);
            let s2 = |t: &Terms| {
                if fixed {
                    t.delta_d.powf(t.gamma[1]) / t.beta1.powf(t.gamma[0] - t.gamma[1])
                } else {
                    edge * t.bracket_ratio() / t.delta_area
                }
            };
            match id {
                Scenario::S1 | Scenario::S3 => {
                    req(cubic, "gamma = 3 for both deployments")?;
                    req(same_pth, "equal sensitivity thresholds")?;
                    req(!fixed || same_fx, "d_fx1 = d_fx2")?;
                    Ok(if fixed {
                        t.delta_d.powi(3)
                    } else {
                        t.delta_d.powi(2) * t.span / t.delta_area
                    })
                }
                Scenario::S2 => {
                    req(same_pth, "equal sensitivity thresholds")?;
                    req(!fixed || same_fx, "d_fx1 = d_fx2")?;
                    Ok(s2(&t))
                }
                Scenario::S4 => {
                    req(same_gamma && same_d_max, "equal gamma and d_max")?;
                    req(!fixed || same_fx, "d_fx1 = d_fx2")?;
                    Ok(delta_pth)
                }
                Scenario::S5 => {
                    req(!fixed || same_fx, "d_fx1 = d_fx2")?;
                    Ok(delta_pth * s2(&t))
                }
            }
        }
        PolicyKind::Elp => {
            req(
                emitted_power(d1) == emitted_power(d2),
                "equal radiated power (same ELP equipment and d_min)",
            )?;
            req(
                d1.params().eta() == d2.params().eta() && d1.params().c_db() == d2.params().c_db(),
                "shared eta and c",
            )?;
            req(!fixed || same_fx, "d_fx1 = d_fx2")?;
            let s2_fixed = |t: &Terms| (t.beta1 * t.d_max[0]).powf(t.gamma[1] - t.gamma[0]);
            let s2_cell = |t: &Terms| t.bracket_ratio() / t.delta_area;
            match id {
                Scenario::S1 => {
                    req(cubic && same_f, "gamma = 3 and equal frequencies")?;
                    Ok(if fixed {
                        1.0
                    } else {
                        t.span / (t.delta_area * t.delta_d)
                    })
                }
                Scenario::S2 => {
                    req(same_f, "equal frequencies")?;
                    Ok(if fixed { s2_fixed(&t) } else { s2_cell(&t) })
                }
                Scenario::S3 => {
                    req(cubic, "gamma = 3 for both deployments")?;
                    Ok(if fixed {
                        t.delta_f_eta
                    } else {
                        t.delta_f_eta * t.span / (t.delta_area * t.delta_d)
                    })
                }
                Scenario::S4 => {
                    req(same_gamma && same_d_max, "equal gamma and d_max")?;
                    Ok(t.delta_f_eta)
                }
                Scenario::S5 => Ok(if fixed {
                    s2_fixed(&t) * t.delta_f_eta
                } else {
                    t.delta_f_eta * s2_cell(&t)
                }),
            }
        }
        PolicyKind::Sps => unreachable!(),
    }
}
