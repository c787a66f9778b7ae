//! End-to-end orchestration: point source to DTM, masks and run report.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::asc::{write_ascii_grid_file, write_mask_file};
use crate::error::{Error, Result, Stage};
use crate::grid::{GridSpec, Raster};
use crate::groundfilter::{
    classify_regions, label_regions, region_stats, write_region_report, FilterParams, GroundMask,
    RegionStats,
};
use crate::hydro::{
    apply_water, occupied_fraction, threshold_for, water_mask, water_segments,
    write_segment_report, WaterMap, WaterParams,
};
use crate::ingest::{bounds, read_points, BBox, PointCloud, ReadOptions, ReadStats};
use crate::interp::{interpolate_nonground, DtmRaster, PixelSource};
use crate::raster::{fill_voids_nearest, make_grid_spec, rasterize_min, Dsm, SparseDsm};
use crate::slope::{break_line_mask, slope_map, BreakMask, SlopeMap};

/// Every knob of a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    /// Raster cell edge, meters.
    pub cell: f64,
    pub filter: FilterParams,
    pub water: WaterParams,
    pub read: ReadOptions,
    /// Processing extent; defaults to the bounds of the input points.
    pub extent: Option<BBox>,
    /// Output window; cells whose centers fall inside are kept.
    pub crop: Option<BBox>,
    /// Keep DSM, slope, break and occupancy rasters for output.
    pub emit_intermediates: bool,
    /// Thread count; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cell: 0.5,
            filter: FilterParams::default(),
            water: WaterParams::default(),
            read: ReadOptions::default(),
            extent: None,
            crop: None,
            emit_intermediates: false,
            workers: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell.is_finite() && self.cell > 0.0) {
            return Err(Error::NonPositiveCell(self.cell));
        }
        self.filter.validate()?;
        self.water.validate()?;
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub ingest_ms: f64,
    pub raster_ms: f64,
    pub slope_ms: f64,
    pub groundfilter_ms: f64,
    pub interp_ms: f64,
    pub hydro_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub read: ReadStats,
    pub points: usize,
    pub points_outside_grid: usize,
    pub grid: GridSpec,
    pub output_grid: GridSpec,
    /// Fraction of cells holding at least one return.
    pub occupied_fraction: f64,
    /// Window count below which a pixel is water.
    pub water_threshold: u32,
    pub region_count: u32,
    pub ground_regions: usize,
    pub break_px: usize,
    pub measured_ground_px: usize,
    pub interpolated_px: usize,
    pub water_px: usize,
    pub water_segment_count: usize,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intermediates {
    pub dsm: Dsm,
    pub slope: SlopeMap,
    pub breaks: BreakMask,
    pub occupancy: Raster<u32>,
}

/// Pipeline results, cropped to the output window when one is configured.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub dtm: DtmRaster,
    pub ground: GroundMask,
    pub water: WaterMap,
    /// Region statistics over the full processing grid.
    pub regions: RegionStats,
    pub report: RunReport,
    /// Full-grid intermediates when `emit_intermediates` is set.
    pub intermediates: Option<Intermediates>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs `f` on a pool of `workers` threads, or the global pool for `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Reads `input` and runs the full pipeline.
pub fn run_pipeline<R: Read>(input: R, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let t = Instant::now();
    let (pc, stats) = read_points(input, cfg.read).map_err(|e| e.at(Stage::Ingest))?;
    let ingest_ms = ms(t);
    let mut out = run_pipeline_on_cloud(&pc, cfg)?;
    out.report.read = stats;
    out.report.timings.ingest_ms = ingest_ms;
    out.report.timings.total_ms += ingest_ms;
    Ok(out)
}

/// Sparse and filled DSM on the configured or inferred grid.
pub fn build_dsm(pc: &PointCloud, cfg: &PipelineConfig) -> Result<(SparseDsm, Dsm)> {
    let extent = match cfg.extent {
        Some(e) => e,
        None => bounds(pc).map_err(|e| e.at(Stage::Ingest))?,
    };
    let grid = make_grid_spec(&extent, cfg.cell).map_err(|e| e.at(Stage::Raster))?;
    let sparse = rasterize_min(pc, &grid);
    let dsm = fill_voids_nearest(&sparse).map_err(|e| e.at(Stage::Raster))?;
    Ok((sparse, dsm))
}

/// Slope and break-line rasters for a DSM.
pub fn breaks_for(dsm: &Dsm, tau_deg: f64) -> Result<(SlopeMap, BreakMask)> {
    let slope = slope_map(dsm).map_err(|e| e.at(Stage::Slope))?;
    let breaks = break_line_mask(&slope, tau_deg).map_err(|e| e.at(Stage::Slope))?;
    Ok((slope, breaks))
}

/// Water detection on the occupancy of `sparse`; returns the map, P and T.
pub fn detect_water(sparse: &SparseDsm, wp: &WaterParams) -> Result<(WaterMap, f64, u32)> {
    wp.validate()?;
    let p = occupied_fraction(&sparse.occupancy);
    let t = threshold_for(p, wp.window * wp.window, wp.k);
    let mask = water_mask(&sparse.occupancy, t, wp.window);
    let water = water_segments(&mask, sparse, wp).map_err(|e| e.at(Stage::Hydro))?;
    Ok((water, p, t))
}

/// Runs the pipeline on an in-memory cloud.
pub fn run_pipeline_on_cloud(pc: &PointCloud, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    with_workers(cfg.workers, || run_stages(pc, cfg))?
}

fn run_stages(pc: &PointCloud, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let start = Instant::now();
    if pc.is_empty() {
        return Err(Error::EmptyInput.at(Stage::Ingest));
    }
    let mut timings = Timings::default();

    let t = Instant::now();
    let (sparse, dsm) = build_dsm(pc, cfg)?;
    timings.raster_ms = ms(t);
    let grid = dsm.grid;

    let t = Instant::now();
    let (slope, breaks) = breaks_for(&dsm, cfg.filter.tau_deg)?;
    timings.slope_ms = ms(t);

    let t = Instant::now();
    let seg = label_regions(&breaks);
    let regions = region_stats(&seg);
    let ground =
        classify_regions(&seg, &regions, &cfg.filter).map_err(|e| e.at(Stage::GroundFilter))?;
    timings.groundfilter_ms = ms(t);

    let t = Instant::now();
    let dtm = interpolate_nonground(&dsm, &ground).map_err(|e| e.at(Stage::Interp))?;
    timings.interp_ms = ms(t);

    let t = Instant::now();
    let (water, p, thr) = detect_water(&sparse, &cfg.water)?;
    let dtm = apply_water(&dtm, &water).map_err(|e| e.at(Stage::Hydro))?;
    timings.hydro_ms = ms(t);

    let ground_regions = regions
        .regions
        .iter()
        .filter(|r| cfg.filter.is_ground(r.area_m2, r.rectangularity))
        .count();
    let break_px = breaks.count();

    let (dtm, ground, water, output_grid) = match &cfg.crop {
        None => (dtm, ground, water, grid),
        Some(bbox) => {
            let (sub, c0, r0) = grid.crop_window(bbox).ok_or_else(|| {
                Error::InvalidParameter("crop window does not overlap the grid".into())
            })?;
            let cut = |r: &Raster<_>| r.window(c0, r0, sub.ncols, sub.nrows);
            let water = crop_water(&water, &sub, c0, r0);
            (
                DtmRaster {
                    grid: sub,
                    elev: cut(&dtm.elev),
                    source: dtm.source.window(c0, r0, sub.ncols, sub.nrows),
                },
                GroundMask {
                    grid: sub,
                    is_ground: ground.is_ground.window(c0, r0, sub.ncols, sub.nrows),
                },
                water,
                sub,
            )
        }
    };

    timings.total_ms = ms(start);
    let report = RunReport {
        config: *cfg,
        read: ReadStats::default(),
        points: pc.count(),
        points_outside_grid: sparse.dropped,
        grid,
        output_grid,
        occupied_fraction: p,
        water_threshold: thr,
        region_count: seg.region_count,
        ground_regions,
        break_px,
        measured_ground_px: dtm.count(PixelSource::MeasuredGround),
        interpolated_px: dtm.count(PixelSource::Interpolated),
        water_px: water.water_count(),
        water_segment_count: water.segments.len(),
        timings,
    };
    let intermediates = cfg.emit_intermediates.then(|| Intermediates {
        dsm,
        slope,
        breaks,
        occupancy: sparse.occupancy.clone(),
    });
    Ok(PipelineOutput {
        dtm,
        ground,
        water,
        regions,
        report,
        intermediates,
    })
}

/// Restricts water segments to a window, re-indexing their pixels.
fn crop_water(water: &WaterMap, sub: &GridSpec, c0: usize, r0: usize) -> WaterMap {
    let ncols = water.grid.ncols;
    let segments = water
        .segments
        .iter()
        .filter_map(|s| {
            let pixels: Vec<usize> = s
                .pixels
                .iter()
                .filter_map(|&i| {
                    let (r, c) = (i / ncols, i % ncols);
                    (r >= r0 && r < r0 + sub.nrows && c >= c0 && c < c0 + sub.ncols)
                        .then(|| (r - r0) * sub.ncols + (c - c0))
                })
                .collect();
            (!pixels.is_empty()).then_some(crate::hydro::WaterSegment {
                id: s.id,
                pixels,
                elevation: s.elevation,
            })
        })
        .collect();
    WaterMap {
        grid: *sub,
        is_water: water.is_water.window(c0, r0, sub.ncols, sub.nrows),
        segments,
    }
}

/// Writes a text file through `f`, buffered.
pub fn write_text_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes all outputs into `dir`:
/// `dtm.asc`, `ground_mask.asc`, `water_mask.asc`, `regions.csv`,
/// `water_segments.csv`, `report.json`, plus `dsm.asc`, `slope.asc`,
/// `breaks.asc` and `occupancy.asc` when intermediates were kept.
pub fn write_outputs(out: &PipelineOutput, cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let go = || -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_ascii_grid_file(&dir.join("dtm.asc"), &out.dtm.grid, &out.dtm.elev)?;
        write_mask_file(
            &dir.join("ground_mask.asc"),
            &out.ground.grid,
            &out.ground.is_ground,
        )?;
        write_mask_file(
            &dir.join("water_mask.asc"),
            &out.water.grid,
            &out.water.is_water,
        )?;
        write_text_file(&dir.join("regions.csv"), |w| {
            write_region_report(&out.regions, &cfg.filter, w)
        })?;
        write_text_file(&dir.join("water_segments.csv"), |w| {
            write_segment_report(&out.water, w)
        })?;
        if let Some(im) = &out.intermediates {
            let g = im.dsm.grid;
            write_ascii_grid_file(&dir.join("dsm.asc"), &g, &im.dsm.elev)?;
            write_ascii_grid_file(&dir.join("slope.asc"), &g, &im.slope.slope_deg)?;
            write_mask_file(&dir.join("breaks.asc"), &g, &im.breaks.is_break)?;
            write_ascii_grid_file(
                &dir.join("occupancy.asc"),
                &g,
                &im.occupancy.map(|&n| f64::from(n)),
            )?;
        }
        write_text_file(&dir.join("report.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &out.report).map_err(std::io::Error::from)?;
            writeln!(w)?;
            Ok(())
        })
    };
    go().map_err(|e| e.at(Stage::Output))
}
