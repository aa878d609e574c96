//! Radio-frequency pollution (RFP) of cellular deployments.
//!
//! RFP is the total power received at a location from the serving gNB and
//! its neighbors. The crate provides closed-form cell-averaged and
//! fixed-distance RFP for a deployment, ratios between two deployments, an
//! exact pixel-grid simulator used as ground truth, and the reference
//! scenarios with their sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod geometry;
pub mod model;

pub mod output;
pub mod policy;
pub mod propagation;
pub mod scenario;
pub mod simulator;
pub mod tables;
pub mod units;

pub use error::{Result, RfpError};
pub use geometry::{hex_neighbors, LayoutSpec, SitePosition, HEX_ZETA};
pub use model::{
    cell_ratio, cell_rfp, emitted_power, fixed_ratio, fixed_rfp, neighbor_rfp_ub, total_cell_rfp,
    total_fixed_rfp, ComparisonSpec, Deployment,
};
pub use policy::{ElpConfig, MspConfig, PolicyKind, PowerPolicy, SpsConfig};
pub use propagation::PropagationParams;
pub use scenario::{preset, ComparisonReport, Method, Scenario, ScenarioPreset, SimSettings};
pub use simulator::{aggregate_cell, aggregate_fixed, build_grid, distance_profile, PixelGrid};
pub use tables::{table_expression, Metric};
pub use units::{GainDb, PowerDbm, PowerWatts};
