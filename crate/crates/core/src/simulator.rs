//! Exact pixel-grid evaluation of the received power over a square raster.
//!
//! The serving gNB sits on a pixel corner at the origin, so no pixel centre
//! coincides with it. Row 0 is the northernmost row; pixel `(row, col)` has
//! its centre at `((col - n + 0.5) px, (n - row - 0.5) px)` where `n` is the
//! half-width in pixels. Only pixels whose centre lies in the closed annulus
//! `[d_min, d_max]` carry a value; all others are masked.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RfpError};
use crate::geometry::{check_levels, hex_neighbors, SitePosition};
use crate::model::{emitted_power, Deployment};
use crate::propagation::unchecked_path_gain;
use crate::units::{watts_to_dbm, PowerWatts};

pub const DEFAULT_PIXEL_SIZE_M: f64 = 1.0;
pub const DEFAULT_MAX_PIXELS: u64 = 50_000_000;

#[derive(Debug, Clone)]
pub struct PixelGrid {
    pixel_size: f64,
    half: usize,
    padded_half: usize,
    d_min: f64,
    d_max: f64,
    /// Row-major; NaN marks a masked pixel.
    rfp: Vec<f64>,
    distance: Vec<f64>,
    neighbors: Vec<SitePosition>,
}

impl PixelGrid {
    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    /// Rows (and columns) of stored pixels.
    pub fn side(&self) -> usize {
        2 * self.half
    }

    /// Half-width of the stored raster, in meters.
    pub fn stored_extent(&self) -> f64 {
        self.half as f64 * self.pixel_size
    }

    /// Half-width of the raster including every neighbor site, in meters.
    pub fn extent(&self) -> f64 {
        self.padded_half as f64 * self.pixel_size
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn neighbors(&self) -> &[SitePosition] {
        &self.neighbors
    }

    pub fn origin(&self) -> SitePosition {
        SitePosition::ORIGIN
    }

    pub fn center(&self, row: usize, col: usize) -> SitePosition {
        center_of(self.half, self.pixel_size, row, col)
    }

    pub fn distance_at(&self, row: usize, col: usize) -> f64 {
        self.distance[row * self.side() + col]
    }

    /// RFP of an unmasked pixel; `None` when masked.
    pub fn rfp_at(&self, row: usize, col: usize) -> Option<PowerWatts> {
        let v = self.rfp[row * self.side() + col];
        if v.is_nan() {
            None
        } else {
            Some(PowerWatts::new(v).expect("finite non-negative pixel"))
        }
    }

    pub fn unmasked_count(&self) -> usize {
        self.rfp.iter().filter(|v| !v.is_nan()).count()
    }

    /// Raw row-major values with NaN for masked pixels.
    pub fn raw_rfp(&self) -> &[f64] {
        &self.rfp
    }

    /// Grid with every unmasked pixel set to `value`; for tests of the
    /// aggregation code.
    pub fn with_uniform_rfp(&self, value: PowerWatts) -> PixelGrid {
        let mut out = self.clone();
        for v in out.rfp.iter_mut().filter(|v| !v.is_nan()) {
            *v = value.watts();
        }
        out
    }

    /// Mean over unmasked pixels accepted by `keep(distance)`, summed per row
    /// in parallel and combined in row order.
    fn masked_mean(&self, keep: impl Fn(f64) -> bool + Sync) -> Option<f64> {
        let side = self.side();
        let partial: Vec<(f64, u64)> = (0..side)
            .into_par_iter()
            .map(|row| {
                let mut sum = 0.0;
                let mut n = 0u64;
                let base = row * side;
                for col in 0..side {
                    let v = self.rfp[base + col];
                    if !v.is_nan() && keep(self.distance[base + col]) {
                        sum += v;
                        n += 1;
                    }
                }
                (sum, n)
            })
            .collect();
        let (sum, n) = partial
            .into_iter()
            .fold((0.0, 0u64), |(s, c), (ps, pc)| (s + ps, c + pc));
        (n > 0).then(|| sum / n as f64)
    }
}

fn center_of(half: usize, px: f64, row: usize, col: usize) -> SitePosition {
    let n = half as f64;
    SitePosition::new((col as f64 - n + 0.5) * px, (n - row as f64 - 0.5) * px)
}

pub fn build_grid(dep: &Deployment, neighbor_levels: u8, pixel_size: f64) -> Result<PixelGrid> {
    build_grid_capped(dep, neighbor_levels, pixel_size, DEFAULT_MAX_PIXELS)
}

pub fn build_grid_capped(
    dep: &Deployment,
    neighbor_levels: u8,
    pixel_size: f64,
    max_pixels: u64,
) -> Result<PixelGrid> {
    if !(pixel_size.is_finite() && pixel_size > 0.0) {
        return Err(RfpError::Config(format!(
            "pixel size must be positive, got {pixel_size} m"
        )));
    }
    check_levels(neighbor_levels)?;

    let half = (dep.d_max() / pixel_size).ceil() as usize;
    let side = 2 * half;
    let pixels = (side as u64).saturating_mul(side as u64);
    if pixels > max_pixels {
        return Err(RfpError::GridTooLarge {
            pixels,
            cap: max_pixels,
        });
    }

    let layout = dep.layout().with_levels(neighbor_levels)?;
    let neighbors = hex_neighbors(dep.d_max(), &layout);
    let far = neighbors.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let padded_half = half.max((far / pixel_size).ceil() as usize + 1);

    let pe = emitted_power(dep).watts();
    let params = *dep.params();
    let (d_min, d_max) = (dep.d_min(), dep.d_max());

    let mut rfp = vec![f64::NAN; side * side];
    let mut distance = vec![0.0; side * side];
    rfp.par_chunks_mut(side)
        .zip(distance.par_chunks_mut(side))
        .enumerate()
        .for_each(|(row, (rfp_row, dist_row))| {
            for col in 0..side {
                let c = center_of(half, pixel_size, row, col);
                let d = c.norm();
                dist_row[col] = d;
                if d < d_min || d > d_max {
                    continue;
                }
                let mut gain = unchecked_path_gain(d, &params);
                for s in &neighbors {
                    gain += unchecked_path_gain(c.distance_to(s), &params);
                }
                rfp_row[col] = pe * gain;
            }
        });

    if rfp.iter().any(|v| v.is_infinite()) {
        return Err(RfpError::Domain(
            "a neighbor site coincides with a pixel centre in the coverage area".into(),
        ));
    }

    Ok(PixelGrid {
        pixel_size,
        half,
        padded_half,
        d_min,
        d_max,
        rfp,
        distance,
        neighbors,
    })
}

/// Mean RFP over pixels whose centre distance lies in `[d_fx - eps, d_fx + eps]`.
pub fn aggregate_fixed(grid: &PixelGrid, d_fx: f64, epsilon: f64) -> Result<PowerWatts> {
    if !(epsilon > 0.0) {
        return Err(RfpError::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let (lo, hi) = (d_fx - epsilon, d_fx + epsilon);
    grid.masked_mean(|d| d >= lo && d <= hi)
        .map(|m| PowerWatts::new(m).expect("mean of non-negative values"))
        .ok_or(RfpError::EmptyAggregate { lo, hi })
}

/// Mean RFP over every unmasked pixel.
pub fn aggregate_cell(grid: &PixelGrid) -> Result<PowerWatts> {
    grid.masked_mean(|_| true)
        .map(|m| PowerWatts::new(m).expect("mean of non-negative values"))
        .ok_or(RfpError::EmptyAggregate {
            lo: grid.d_min,
            hi: grid.d_max,
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub lower_m: f64,
    pub mean_rfp: PowerWatts,
    pub pixels: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub bins: Vec<ProfileBin>,
}

pub const PROFILE_HEADER: [&str; 3] = ["bin_m", "mean_rfp_dbm", "pixels"];

impl DistanceProfile {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let fail = |e: csv::Error| RfpError::Format {
            path: "<profile>".into(),
            message: e.to_string(),
        };
        out.write_record(PROFILE_HEADER).map_err(fail)?;
        for b in &self.bins {
            let dbm = watts_to_dbm(b.mean_rfp)?.dbm();
            out.write_record([b.lower_m.to_string(), dbm.to_string(), b.pixels.to_string()])
                .map_err(fail)?;
        }
        out.flush().map_err(|e| RfpError::io("<profile>", e))?;
        Ok(())
    }

    /// Linear interpolation of `log(mean)` at distance `d`, using bin centres.
    pub fn log_interp(&self, d: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .bins
            .iter()
            .map(|b| (b.lower_m + 0.5, b.mean_rfp.watts().ln()))
            .collect();
        let i = pts.windows(2).position(|w| d >= w[0].0 && d <= w[1].0)?;
        let ((x0, y0), (x1, y1)) = (pts[i], pts[i + 1]);
        let t = (d - x0) / (x1 - x0);
        Some((y0 + t * (y1 - y0)).exp())
    }
}

/// 1 m bins from `d_min`; a pixel exactly at `d_max` joins the last bin.
pub fn distance_profile(grid: &PixelGrid) -> DistanceProfile {
    let n_bins = ((grid.d_max - grid.d_min).ceil() as usize).max(1);
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0u64; n_bins];
    for (v, d) in grid.rfp.iter().zip(&grid.distance) {
        if v.is_nan() {
            continue;
        }
        let idx = ((d - grid.d_min).floor() as usize).min(n_bins - 1);
        sums[idx] += v;
        counts[idx] += 1;
    }
    let bins = (0..n_bins)
        .filter(|&i| counts[i] > 0)
        .map(|i| ProfileBin {
            lower_m: grid.d_min + i as f64,
            mean_rfp: PowerWatts::new(sums[i] / counts[i] as f64).expect("non-negative"),
            pixels: counts[i],
        })
        .collect();
    DistanceProfile { bins }
}

/// Writes the raster over the padded extent as row-major CSV of dBm values
/// with two decimals. Masked pixels, including the padding, are empty fields.
pub fn write_heatmap<W: Write>(grid: &PixelGrid, w: W) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(w);
    let padded_side = 2 * grid.padded_half;
    let offset = grid.padded_half - grid.half;
    let side = grid.side();
    let mut line = String::new();
    for prow in 0..padded_side {
        line.clear();
        for pcol in 0..padded_side {
            if pcol > 0 {
                line.push(',');
            }
            let inside = |p: usize| p >= offset && p < offset + side;
            if inside(prow) && inside(pcol) {
                let v = grid.rfp[(prow - offset) * side + (pcol - offset)];
                if !v.is_nan() && v > 0.0 {
                    let dbm = 10.0 * v.log10() + 30.0;
                    line.push_str(&format!("{dbm:.2}"));
                }
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn export_heatmap(grid: &PixelGrid, path: &Path) -> Result<()> {
    let padded_side = 2 * grid.padded_half as u64;
    if padded_side * padded_side > DEFAULT_MAX_PIXELS {
        return Err(RfpError::GridTooLarge {
            pixels: padded_side * padded_side,
            cap: DEFAULT_MAX_PIXELS,
        });
    }
    let file = std::fs::File::create(path).map_err(|e| RfpError::io(path, e))?;
    write_heatmap(grid, file).map_err(|e| RfpError::io(path, e))
}

/// Parses a heatmap raster: one `Vec` per row, `None` for empty fields.
pub fn read_heatmap<R: std::io::Read>(r: R) -> std::io::Result<Vec<Vec<Option<f64>>>> {
    let mut rows = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        let row = line
            .split(',')
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>().map(Some).map_err(|e| {
                        std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{f:?}: {e}"))
                    })
                }
            })
            .collect::<std::io::Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{cell_rfp, fixed_rfp, neighbor_rfp_ub, tests::dep};
    use crate::policy::{MspConfig, PowerPolicy};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn msp(dbm: f64) -> PowerPolicy {
        PowerPolicy::Msp(MspConfig::from_dbm(dbm).unwrap())
    }

    fn s1_msp(n_i: u32) -> Deployment {
        dep(500.0, 3.0, 0.7, msp(-90.0), n_i)
    }

    fn small(d_max: f64) -> Deployment {
        dep(d_max, 3.0, 0.7, msp(-90.0), 0)
    }

    fn locate(grid: &PixelGrid, x: f64, y: f64) -> (usize, usize) {
        let px = grid.pixel_size();
        let n = grid.side() as f64 / 2.0;
        let col = (x / px + n).floor() as usize;
        let row = (n - y / px).floor() as usize;
        (row, col)
    }

    #[test]
    fn geometry_of_pixel_centres() {
        let g = build_grid(&small(40.0), 0, 1.0).unwrap();
        assert_eq!(g.side(), 80);
        assert_eq!(g.center(0, 0), SitePosition::new(-39.5, 39.5));
        assert_eq!(g.center(79, 79), SitePosition::new(39.5, -39.5));
        let (r, c) = locate(&g, 16.5, 0.5);
        assert_eq!(g.center(r, c), SitePosition::new(16.5, 0.5));
        assert!((g.distance_at(r, c) - 16.5f64.hypot(0.5)).abs() < 1e-15);
    }

    #[test]
    fn single_source_equals_fixed_rfp() {
        let d = small(60.0);
        let g = build_grid(&d, 0, 1.0).unwrap();
        let mut checked = 0;
        for row in 0..g.side() {
            for col in 0..g.side() {
                if let Some(v) = g.rfp_at(row, col) {
                    let expected = fixed_rfp(&d, g.distance_at(row, col)).unwrap();
                    assert_eq!(v, expected);
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, g.unmasked_count());
        assert!(checked > 0);
    }

    #[test]
    fn exclusion_zone_masked() {
        let g = build_grid(&small(60.0), 0, 1.0).unwrap();
        let (r, c) = locate(&g, 14.0, 0.0);
        assert!(g.distance_at(r, c) < 15.0);
        assert!(g.rfp_at(r, c).is_none());
        let (r, c) = locate(&g, 0.2, 0.2);
        assert!(g.rfp_at(r, c).is_none());
        let (r, c) = locate(&g, 59.9, 59.9);
        assert!(g.rfp_at(r, c).is_none());
    }

    #[test]
    fn s1_pixel_sandwich() {
        let d = s1_msp(6);
        let g = build_grid(&d, 1, 1.0).unwrap();
        let (r, c) = locate(&g, 16.0, 0.0);
        let v = g.rfp_at(r, c).unwrap().watts();
        let serving = fixed_rfp(&d, g.distance_at(r, c)).unwrap().watts();
        assert!(v >= serving);
        assert!(v <= serving + neighbor_rfp_ub(&d).watts());
        assert!(rel(serving, 3.051e-8) < 0.1);
    }

    #[test]
    fn neighbor_part_bounded_by_ub() {
        let d = dep(100.0, 2.1, 0.7, msp(-90.0), 6);
        let with = build_grid(&d, 1, 1.0).unwrap();
        let without = build_grid(&d, 0, 1.0).unwrap();
        let ub = neighbor_rfp_ub(&d).watts();
        for (a, b) in with.raw_rfp().iter().zip(without.raw_rfp()) {
            assert_eq!(a.is_nan(), b.is_nan());
            if !a.is_nan() {
                assert!(a - b <= ub * (1.0 + 1e-12));
                assert!(a >= b);
            }
        }
    }

    #[test]
    fn uniform_aggregates() {
        let g = build_grid(&small(50.0), 0, 1.0).unwrap();
        let k = PowerWatts::new(3.25e-9).unwrap();
        let u = g.with_uniform_rfp(k);
        assert!(rel(aggregate_cell(&u).unwrap().watts(), k.watts()) < 1e-14);
        assert!(rel(aggregate_fixed(&u, 20.0, 1.0).unwrap().watts(), k.watts()) < 1e-14);
    }

    #[test]
    fn s1_aggregates_match_closed_forms() {
        let d = s1_msp(0);
        let g = build_grid(&d, 0, 1.0).unwrap();
        let fx = aggregate_fixed(&g, 16.0, 1.0).unwrap().watts();
        assert!(rel(fx, fixed_rfp(&d, 16.0).unwrap().watts()) < 0.02);
        let cell = aggregate_cell(&g).unwrap().watts();
        assert!(rel(cell, cell_rfp(&d).watts()) < 0.03);
        assert!(rel(cell, 6.471e-11) < 0.03);

        let g1 = build_grid(&d, 1, 1.0).unwrap();
        assert!(aggregate_cell(&g1).unwrap() >= aggregate_cell(&g).unwrap());
    }

    #[test]
    fn empty_window_is_an_error() {
        let g = build_grid(&small(50.0), 0, 1.0).unwrap();
        // Centres lie at hypot(i + 0.5, j + 0.5); none in [15.2, 15.21].
        let res = aggregate_fixed(&g, 15.205, 0.005);
        assert!(
            matches!(res, Err(RfpError::EmptyAggregate { .. })),
            "{res:?}"
        );
        assert!(aggregate_fixed(&g, 20.0, 0.0).is_err());
    }

    #[test]
    fn cap_and_pixel_size_guards() {
        let d = s1_msp(0);
        assert!(matches!(
            build_grid_capped(&d, 0, 1.0, 1000),
            Err(RfpError::GridTooLarge {
                pixels: 1_000_000,
                cap: 1000
            })
        ));
        assert!(build_grid(&d, 0, 0.0).is_err());
        assert!(build_grid(&d, 3, 1.0).is_err());
    }

    #[test]
    fn level_two_has_eighteen_neighbors() {
        let g = build_grid(&small(50.0), 2, 1.0).unwrap();
        assert_eq!(g.neighbors().len(), 18);
        assert!(g.extent() >= 2.0 * 3f64.sqrt() * 50.0);
        assert_eq!(g.stored_extent(), 50.0);
    }

    #[test]
    fn profile_monotone_without_neighbors() {
        let g = build_grid(&small(120.0), 0, 1.0).unwrap();
        let p = distance_profile(&g);
        assert_eq!(p.bins.len(), 105);
        assert_eq!(p.bins[0].lower_m, 15.0);
        assert_eq!(p.bins.last().unwrap().lower_m, 119.0);
        for w in p.bins.windows(2) {
            assert!(w[1].mean_rfp < w[0].mean_rfp);
            assert_eq!(w[1].lower_m - w[0].lower_m, 1.0);
        }
        let total: u64 = p.bins.iter().map(|b| b.pixels).sum();
        assert_eq!(total as usize, g.unmasked_count());
    }

    #[test]
    fn profile_csv_header() {
        let g = build_grid(&small(20.0), 0, 1.0).unwrap();
        let mut buf = Vec::new();
        distance_profile(&g).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bin_m,mean_rfp_dbm,pixels\n15,"));
    }

    #[test]
    fn heatmap_round_trip() {
        let d = dep(50.0, 2.1, 3.7, msp(-87.0), 6);
        let g = build_grid(&d, 1, 1.0).unwrap();
        let mut buf = Vec::new();
        write_heatmap(&g, &mut buf).unwrap();
        let rows = read_heatmap(buf.as_slice()).unwrap();
        let padded = (g.extent() / g.pixel_size()) as usize * 2;
        assert_eq!(rows.len(), padded);
        assert!(rows.iter().all(|r| r.len() == padded));
        let off = (padded - g.side()) / 2;

        let mut max = (f64::NEG_INFINITY, 0.0);
        for row in 0..g.side() {
            for col in 0..g.side() {
                let cell = rows[row + off][col + off];
                match g.rfp_at(row, col) {
                    None => assert!(cell.is_none()),
                    Some(v) => {
                        let dbm = watts_to_dbm(v).unwrap().dbm();
                        let parsed = cell.unwrap();
                        assert!((parsed - dbm).abs() <= 0.005 + 1e-9);
                        if parsed > max.0 {
                            max = (parsed, g.distance_at(row, col));
                        }
                    }
                }
            }
        }
        // Strongest pixel sits on the innermost ring.
        assert!(max.1 < 16.0, "{max:?}");
        // Centre of the raster is in the exclusion zone.
        assert!(rows[padded / 2][padded / 2].is_none());
        assert!(rows[0][0].is_none());
    }

    #[test]
    fn determinism_across_thread_counts() {
        let d = dep(120.0, 2.1, 3.7, msp(-87.0), 6);
        let build = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    let g = build_grid(&d, 2, 0.7).unwrap();
                    let cell = aggregate_cell(&g).unwrap();
                    (g, cell)
                })
        };
        let (a, ca) = build(1);
        let (b, cb) = build(4);
        assert_eq!(ca.watts().to_bits(), cb.watts().to_bits());
        assert_eq!(a.raw_rfp().len(), b.raw_rfp().len());
        for (x, y) in a.raw_rfp().iter().zip(b.raw_rfp()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn neighbors_only_add(d_max in 30.0f64..90.0, gamma in 2.0f64..=4.0) {
            let d = dep(d_max, gamma, 0.7, msp(-90.0), 0);
            let g0 = build_grid(&d, 0, 1.0).unwrap();
            let g1 = build_grid(&d, 1, 1.0).unwrap();
            let g2 = build_grid(&d, 2, 1.0).unwrap();
            for ((a, b), c) in g0.raw_rfp().iter().zip(g1.raw_rfp()).zip(g2.raw_rfp()) {
                prop_assert_eq!(a.is_nan(), c.is_nan());
                if !a.is_nan() {
                    prop_assert!(a <= b && b <= c);
                }
            }
        }
    }
}
