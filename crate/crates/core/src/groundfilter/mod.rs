//! Enclosed-region ground filtering.
//!
//! Break-line pixels split the raster into 4-connected regions. Each region
//! is classified from its area and rectangularity:
//!
//! * area < A1: non-ground
//! * area > A2: ground
//! * A1 <= area <= A2: non-ground iff rectangularity > R
//!
//! Break-line pixels are always non-ground.

pub mod label;
pub mod mbr;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Raster};
use crate::slope::BreakMask;

pub use label::{component_pixels, label_components};
pub use mbr::{convex_hull, min_area_rect};

/// Region ids per pixel; 0 marks break-line pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub grid: GridSpec,
    pub label: Raster<u32>,
    pub region_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionStat {
    pub label: u32,
    pub pixel_count: usize,
    pub area_m2: f64,
    pub mbr_area_m2: f64,
    pub rectangularity: f64,
}

/// Per-region statistics, indexed by `label - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionStats {
    pub regions: Vec<RegionStat>,
}

impl RegionStats {
    pub fn get(&self, label: u32) -> Option<&RegionStat> {
        label
            .checked_sub(1)
            .and_then(|i| self.regions.get(i as usize))
    }
}

/// Enclosure rule parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterParams {
    /// Slope threshold, degrees.
    pub tau_deg: f64,
    /// Low area limit, m².
    pub a1_m2: f64,
    /// High area limit, m².
    pub a2_m2: f64,
    /// Rectangularity limit.
    pub r: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            tau_deg: 45.0,
            a1_m2: 40_000.0,
            a2_m2: 100_000.0,
            r: 0.5,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_deg > 0.0 && self.tau_deg < 90.0) {
            return Err(Error::BadThreshold(self.tau_deg));
        }
        if !(self.a1_m2 > 0.0 && self.a1_m2 <= self.a2_m2 && self.a2_m2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "area limits must satisfy 0 < A1 <= A2, got A1={} A2={}",
                self.a1_m2, self.a2_m2
            )));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rectangularity limit must lie in (0, 1], got {}",
                self.r
            )));
        }
        Ok(())
    }

    /// Ground decision for a region with the given area and rectangularity.
    pub fn is_ground(&self, area_m2: f64, rectangularity: f64) -> bool {
        if area_m2 < self.a1_m2 {
            false
        } else if area_m2 > self.a2_m2 {
            true
        } else {
            rectangularity <= self.r
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundMask {
    pub grid: GridSpec,
    pub is_ground: Raster<bool>,
}

impl GroundMask {
    pub fn ground_count(&self) -> usize {
        self.is_ground.as_slice().iter().filter(|&&g| g).count()
    }

    pub fn non_ground_count(&self) -> usize {
        self.is_ground.len() - self.ground_count()
    }
}

pub fn label_regions(mask: &BreakMask) -> Segmentation {
    let open = mask.is_break.map(|&b| !b);
    let (label, region_count) = label_components(&open);
    Segmentation {
        grid: mask.grid,
        label,
        region_count,
    }
}

/// Pixel-square corners spanning each row run of every region, in pixel units.
fn region_outline_points(seg: &Segmentation) -> (Vec<usize>, Vec<Vec<(f64, f64)>>) {
    let n = seg.region_count as usize;
    let mut counts = vec![0usize; n];
    let mut spans: Vec<Option<(usize, usize, usize)>> = vec![None; n];
    let mut points: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let flush = |pts: &mut Vec<(f64, f64)>, (r, c0, c1): (usize, usize, usize)| {
        let (r0, r1) = (r as f64, r as f64 + 1.0);
        let (x0, x1) = (c0 as f64, c1 as f64 + 1.0);
        pts.extend_from_slice(&[(x0, r0), (x0, r1), (x1, r0), (x1, r1)]);
    };
    for r in 0..seg.label.nrows() {
        for (c, &l) in seg.label.row(r).iter().enumerate() {
            if l == 0 {
                continue;
            }
            let k = l as usize - 1;
            counts[k] += 1;
            spans[k] = match spans[k] {
                Some((sr, c0, _)) if sr == r => Some((r, c0, c)),
                Some(prev) => {
                    flush(&mut points[k], prev);
                    Some((r, c, c))
                }
                None => Some((r, c, c)),
            };
        }
    }
    for (k, span) in spans.into_iter().enumerate() {
        if let Some(s) = span {
            flush(&mut points[k], s);
        }
    }
    (counts, points)
}

/// Area, rotated minimum bounding rectangle and rectangularity of every region.
pub fn region_stats(seg: &Segmentation) -> RegionStats {
    let cell_area = seg.grid.cell_area();
    let (counts, outlines) = region_outline_points(seg);
    let regions = outlines
        .par_iter()
        .zip(counts.par_iter())
        .enumerate()
        .map(|(k, (pts, &pixel_count))| {
            let area_px = pixel_count as f64;
            // The rectangle can never be smaller than the pixels it contains.
            let mbr_px = min_area_rect(pts).max(area_px);
            RegionStat {
                label: k as u32 + 1,
                pixel_count,
                area_m2: area_px * cell_area,
                mbr_area_m2: mbr_px * cell_area,
                rectangularity: area_px / mbr_px,
            }
        })
        .collect();
    RegionStats { regions }
}

pub fn classify_regions(
    seg: &Segmentation,
    stats: &RegionStats,
    p: &FilterParams,
) -> Result<GroundMask> {
    if stats.regions.len() != seg.region_count as usize {
        return Err(Error::Invariant(format!(
            "{} region stats for {} regions",
            stats.regions.len(),
            seg.region_count
        )));
    }
    let mut decision = Vec::with_capacity(stats.regions.len() + 1);
    decision.push(false);
    decision.extend(
        stats
            .regions
            .iter()
            .map(|s| p.is_ground(s.area_m2, s.rectangularity)),
    );
    Ok(GroundMask {
        grid: seg.grid,
        is_ground: seg.label.map(|&l| decision[l as usize]),
    })
}

/// CSV of `label,area_m2,rectangularity,class`.
pub fn write_region_report<W: Write>(
    stats: &RegionStats,
    p: &FilterParams,
    mut out: W,
) -> Result<()> {
    writeln!(out, "label,area_m2,rectangularity,class")?;
    for s in &stats.regions {
        let class = if p.is_ground(s.area_m2, s.rectangularity) {
            "ground"
        } else {
            "non_ground"
        };
        writeln!(
            out,
            "{},{:.6},{:.6},{}",
            s.label, s.area_m2, s.rectangularity, class
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg_from(rows: &[&str], cell: f64) -> Segmentation {
        let nrows = rows.len();
        let ncols = rows[0].len();
        let grid = GridSpec::new(0.0, 0.0, cell, ncols, nrows).unwrap();
        let is_break = Raster::from_fn(ncols, nrows, |r, c| rows[r].as_bytes()[c] == b'#');
        label_regions(&BreakMask { grid, is_break })
    }

    #[test]
    fn open_interior_is_one_region() {
        let seg = seg_from(&["#####", "#...#", "#...#", "#####"], 1.0);
        assert_eq!(seg.region_count, 1);
    }

    #[test]
    fn closed_loop_gives_two_regions() {
        let seg = seg_from(
            &[
                "#########",
                "#.......#",
                "#.####..#",
                "#.#..#..#",
                "#.####..#",
                "#.......#",
                "#########",
            ],
            1.0,
        );
        assert_eq!(seg.region_count, 2);
    }

    #[test]
    fn solid_rectangle_and_single_pixel_are_fully_rectangular() {
        let grid = GridSpec::new(0.0, 0.0, 0.5, 30, 40).unwrap();
        let is_break = Raster::from_fn(30, 40, |r, c| {
            !(5..25).contains(&r) || !(5..15).contains(&c)
        });
        let seg = label_regions(&BreakMask { grid, is_break });
        let stats = region_stats(&seg);
        assert_eq!(stats.regions.len(), 1);
        let s = stats.regions[0];
        assert_eq!(s.pixel_count, 200);
        assert!((s.rectangularity - 1.0).abs() < 1e-12);
        assert!((s.area_m2 - 50.0).abs() < 1e-12);

        let seg = seg_from(&["###", "#.#", "###"], 0.5);
        let s = region_stats(&seg).regions[0];
        assert!((s.mbr_area_m2 - 0.25).abs() < 1e-12);
        assert!((s.rectangularity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rule_branches_and_inclusive_edges() {
        let p = FilterParams::default();
        assert!(!p.is_ground(30_000.0, 0.1));
        assert!(p.is_ground(150_000.0, 1.0));
        assert!(!p.is_ground(60_000.0, 0.8));
        assert!(p.is_ground(60_000.0, 0.3));
        // Exactly A1 and exactly A2 take the rectangularity branch.
        assert!(!p.is_ground(40_000.0, 0.9));
        assert!(p.is_ground(40_000.0, 0.2));
        assert!(!p.is_ground(100_000.0, 0.9));
        assert!(p.is_ground(100_000.0, 0.2));
        // Rectangularity exactly R is ground.
        assert!(p.is_ground(60_000.0, 0.5));
    }

    #[test]
    fn break_pixels_never_ground() {
        let seg = seg_from(&["#####", "#...#", "#####"], 200.0);
        let stats = region_stats(&seg);
        let g = classify_regions(&seg, &stats, &FilterParams::default()).unwrap();
        // 3 pixels of 40,000 m² each = 120,000 m² > A2.
        assert_eq!(g.ground_count(), 3);
        for (i, &l) in seg.label.as_slice().iter().enumerate() {
            if l == 0 {
                assert!(!g.is_ground[i]);
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(FilterParams::default().validate().is_ok());
        let bad = FilterParams {
            a1_m2: 200_000.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidParameter(_))));
        let bad = FilterParams {
            r: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
