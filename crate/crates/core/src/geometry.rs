//! Regular hexagonal site placement around a serving gNB at the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfpError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SitePosition {
    pub x: f64,
    pub y: f64,
}

impl SitePosition {
    pub const ORIGIN: SitePosition = SitePosition { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        SitePosition { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance_to(&self, other: &SitePosition) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// `zeta` for sites on a regular hexagonal lattice.
pub const HEX_ZETA: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutWire", into = "LayoutWire")]
pub struct LayoutSpec {
    zeta: f64,
    neighbor_levels: u8,
}

impl LayoutSpec {
    pub fn new(zeta: f64, neighbor_levels: u8) -> Result<Self> {
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(RfpError::Config(format!(
                "zeta must lie in (0, 1), got {zeta}"
            )));
        }
        check_levels(neighbor_levels)?;
        Ok(LayoutSpec {
            zeta,
            neighbor_levels,
        })
    }

    pub fn hexagonal(neighbor_levels: u8) -> Result<Self> {
        LayoutSpec::new(HEX_ZETA, neighbor_levels)
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn neighbor_levels(&self) -> u8 {
        self.neighbor_levels
    }

    pub fn with_levels(self, neighbor_levels: u8) -> Result<Self> {
        LayoutSpec::new(self.zeta, neighbor_levels)
    }
}

#[derive(Serialize, Deserialize)]
struct LayoutWire {
    zeta: f64,
    #[serde(default)]
    neighbor_levels: u8,
}

impl TryFrom<LayoutWire> for LayoutSpec {
    type Error = RfpError;

    fn try_from(w: LayoutWire) -> Result<Self> {
        LayoutSpec::new(w.zeta, w.neighbor_levels)
    }
}

impl From<LayoutSpec> for LayoutWire {
    fn from(l: LayoutSpec) -> Self {
        LayoutWire {
            zeta: l.zeta,
            neighbor_levels: l.neighbor_levels,
        }
    }
}

pub(crate) fn check_levels(levels: u8) -> Result<()> {
    if levels > 2 {
        return Err(RfpError::Config(format!(
            "neighbor levels must be 0, 1 or 2, got {levels}"
        )));
    }
    Ok(())
}

/// Number of neighbor sites generated for a given number of lattice rings.
pub fn neighbor_count(levels: u8) -> usize {
    match levels {
        0 => 0,
        1 => 6,
        _ => 18,
    }
}

/// `2 * zeta * d_max`.
pub fn inter_site_distance(d_max: f64, zeta: f64) -> f64 {
    2.0 * zeta * d_max
}

/// Neighbor sites of the serving gNB at the origin.
///
/// Level 1 is the first ring of six sites at `d_site`. Level 2 adds the
/// second lattice ring: six sites at `2 d_site` on the same bearings and six
/// at `sqrt(3) d_site` rotated by 30°.
pub fn hex_neighbors(d_max: f64, spec: &LayoutSpec) -> Vec<SitePosition> {
    let d_site = inter_site_distance(d_max, spec.zeta);
    let ring = |radius: f64, offset_deg: f64| {
        (0..6).map(move |k| {
            let theta = (offset_deg + 60.0 * k as f64).to_radians();
            SitePosition::new(radius * theta.cos(), radius * theta.sin())
        })
    };

    let mut sites = Vec::with_capacity(neighbor_count(spec.neighbor_levels));
    if spec.neighbor_levels >= 1 {
        sites.extend(ring(d_site, 0.0));
    }
    if spec.neighbor_levels >= 2 {
        sites.extend(ring(3f64.sqrt() * d_site, 30.0));
        sites.extend(ring(2.0 * d_site, 0.0));
    }
    sites
}

/// True when `p` lies in the closed annulus `[d_min, d_max]` around the origin.
pub fn in_coverage(p: &SitePosition, d_min: f64, d_max: f64) -> Result<bool> {
    if !(d_min < d_max) {
        return Err(RfpError::Config(format!(
            "d_min ({d_min}) must be below d_max ({d_max})"
        )));
    }
    let r = p.norm();
    Ok(r >= d_min && r <= d_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Lattice oracle: all points a·u + b·v of the triangular lattice with
    /// spacing `d_site`, sorted by distance from the origin.
    fn lattice_shells(d_site: f64) -> Vec<SitePosition> {
        let (vx, vy) = (0.5 * d_site, 0.5 * 3f64.sqrt() * d_site);
        let mut pts = Vec::new();
        for a in -6i32..=6 {
            for b in -6i32..=6 {
                if a == 0 && b == 0 {
                    continue;
                }
                pts.push(SitePosition::new(
                    a as f64 * d_site + b as f64 * vx,
                    b as f64 * vy,
                ));
            }
        }
        pts.sort_by(|p, q| p.norm().partial_cmp(&q.norm()).unwrap());
        pts
    }

    fn same_set(a: &[SitePosition], b: &[SitePosition], tol: f64) -> bool {
        a.len() == b.len()
            && a.iter().all(|p| b.iter().any(|q| p.distance_to(q) <= tol))
            && b.iter().all(|q| a.iter().any(|p| p.distance_to(q) <= tol))
    }

    #[test]
    fn inter_site_examples() {
        assert_eq!(inter_site_distance(100.0, 0.5), 100.0);
        assert!((inter_site_distance(500.0, HEX_ZETA) - 866.03).abs() < 0.005);
        assert!((inter_site_distance(50.0, HEX_ZETA) - 86.60).abs() < 0.005);
        assert!(rel(inter_site_distance(500.0, HEX_ZETA), 3f64.sqrt() * 500.0) < 1e-15);
    }

    #[test]
    fn level_counts() {
        for (levels, n) in [(0u8, 0usize), (1, 6), (2, 18)] {
            let spec = LayoutSpec::hexagonal(levels).unwrap();
            assert_eq!(hex_neighbors(500.0, &spec).len(), n);
            assert_eq!(neighbor_count(levels), n);
        }
        assert!(LayoutSpec::hexagonal(3).is_err());
    }

    #[test]
    fn first_ring_matches_lattice_oracle() {
        let spec = LayoutSpec::hexagonal(1).unwrap();
        let sites = hex_neighbors(500.0, &spec);
        let d_site = inter_site_distance(500.0, HEX_ZETA);
        for s in &sites {
            assert!(rel(s.norm(), d_site) < 1e-9);
            assert!((s.norm() - 866.03).abs() < 0.005);
        }
        let oracle = lattice_shells(d_site);
        assert!(same_set(&sites, &oracle[..6], 1e-9 * d_site));
    }

    #[test]
    fn second_ring_matches_lattice_oracle() {
        let spec = LayoutSpec::hexagonal(2).unwrap();
        let sites = hex_neighbors(500.0, &spec);
        let d_site = inter_site_distance(500.0, HEX_ZETA);
        let oracle = lattice_shells(d_site);
        // Oracle shells: 6 at d, 6 at sqrt(3) d, 6 at 2d; the 19th point is farther.
        assert!(oracle[18].norm() > 2.0 * d_site * (1.0 + 1e-9));
        assert!(same_set(&sites, &oracle[..18], 1e-9 * d_site));

        let mut dists: Vec<f64> = sites.iter().map(|s| s.norm()).collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, d) in dists.iter().enumerate() {
            let expected = match i / 6 {
                0 => 866.03,
                1 => 1500.0,
                _ => 1732.05,
            };
            assert!((d - expected).abs() < 0.005, "{i}: {d}");
        }
    }

    #[test]
    fn rings_are_rotation_symmetric() {
        for levels in [1u8, 2] {
            let sites = hex_neighbors(250.0, &LayoutSpec::hexagonal(levels).unwrap());
            let (c, s) = (60f64.to_radians().cos(), 60f64.to_radians().sin());
            let rotated: Vec<SitePosition> = sites
                .iter()
                .map(|p| SitePosition::new(c * p.x - s * p.y, s * p.x + c * p.y))
                .collect();
            assert!(same_set(&sites, &rotated, 1e-9));
        }
    }

    #[test]
    fn neighbor_gap_to_annulus() {
        // Closest approach of any neighbor to the serving disc is d_site - d_max.
        let d_max = 500.0;
        let sites = hex_neighbors(d_max, &LayoutSpec::hexagonal(1).unwrap());
        let expected = (2.0 * HEX_ZETA - 1.0) * d_max;
        let mut min = f64::INFINITY;
        for k in 0..3600 {
            let t = (k as f64 / 10.0).to_radians();
            let p = SitePosition::new(d_max * t.cos(), d_max * t.sin());
            for s in &sites {
                min = min.min(p.distance_to(s));
            }
        }
        assert!(rel(min, expected) < 1e-9, "{min} vs {expected}");
        assert!(rel(inter_site_distance(d_max, HEX_ZETA) - d_max, expected) < 1e-12);
    }

    #[test]
    fn coverage_membership() {
        assert!(!in_coverage(&SitePosition::ORIGIN, 15.0, 500.0).unwrap());
        assert!(in_coverage(&SitePosition::new(15.0, 0.0), 15.0, 500.0).unwrap());
        assert!(in_coverage(&SitePosition::new(0.0, 500.0), 15.0, 500.0).unwrap());
        assert!(!in_coverage(&SitePosition::new(500.001, 0.0), 15.0, 500.0).unwrap());
        assert!(in_coverage(&SitePosition::ORIGIN, 15.0, 15.0).is_err());
    }

    #[test]
    fn layout_validation() {
        assert!(LayoutSpec::new(0.0, 1).is_err());
        assert!(LayoutSpec::new(1.0, 1).is_err());
        assert!(LayoutSpec::new(0.4, 0).is_ok());
    }
}
