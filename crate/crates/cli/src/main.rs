use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dtm_core::asc::{read_ascii_grid_file, write_ascii_grid_file, write_mask_file};
use dtm_core::eval::{compare_tiled, write_tile_report, DEFAULT_TILE_PX};
use dtm_core::groundfilter::FilterParams;
use dtm_core::hydro::{write_segment_report, WaterParams};
use dtm_core::ingest::{read_points, write_xyz_text, InputFormat, ReadOptions};
use dtm_core::pipeline::{
    breaks_for, build_dsm, detect_water, run_pipeline, with_workers, write_outputs, write_text_file,
};
use dtm_core::raster::make_grid_spec;
use dtm_core::scenegen::parse_scene;
use dtm_core::{BBox, Error, PipelineConfig, Stage};

#[derive(Parser)]
#[command(
    name = "dtm",
    version,
    about = "Terrain models from airborne LiDAR point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: DTM, ground and water masks, reports.
    Dtm(RunArgs),
    /// DSM, slope and break-line rasters only.
    Slope(RunArgs),
    /// Water mask and segment report only.
    Water(RunArgs),
    /// Tiled MAE/RMSE comparison of two ASCII grids.
    Compare(CompareArgs),
    /// Synthesize a point cloud and truth rasters from a scene file.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Point file (xyz text or LAS); `-` reads stdin.
    input: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Input format: auto, xyz or las.
    #[arg(long, default_value = "auto")]
    format: String,
    /// Raster cell size in meters.
    #[arg(long, default_value_t = 0.5)]
    cell: f64,
    /// Break-line slope threshold in degrees.
    #[arg(long, default_value_t = 45.0)]
    slope_threshold: f64,
    /// Low area limit in m².
    #[arg(long, default_value_t = 40_000.0)]
    a1: f64,
    /// High area limit in m².
    #[arg(long, default_value_t = 100_000.0)]
    a2: f64,
    /// Rectangularity limit.
    #[arg(long, default_value_t = 0.5)]
    rectangularity: f64,
    /// Water window edge in pixels (odd).
    #[arg(long, default_value_t = 9)]
    window: usize,
    /// Confidence multiplier k on the standard deviation.
    #[arg(long, default_value_t = 4.0)]
    confidence: f64,
    /// Percentile used for water segment elevation.
    #[arg(long, default_value_t = 0.10)]
    percentile: f64,
    /// Drop water segments smaller than this many pixels.
    #[arg(long, default_value_t = 0)]
    min_segment_px: usize,
    /// Processing extent `minx,miny,maxx,maxy`; defaults to the point bounds.
    #[arg(long, value_parser = parse_bbox)]
    extent: Option<BBox>,
    /// Output window `minx,miny,maxx,maxy` cut from the processed extent.
    #[arg(long, value_parser = parse_bbox)]
    crop: Option<BBox>,
    /// Fail on the first malformed record.
    #[arg(long)]
    strict: bool,
    /// Also write DSM, slope, break and occupancy rasters.
    #[arg(long)]
    emit_intermediates: bool,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    show_config: bool,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Grid of pixels to exclude (non-zero values are excluded).
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Tile edge in pixels.
    #[arg(long, default_value_t = DEFAULT_TILE_PX)]
    tile_px: usize,
    /// CSV report path; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    scene: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "synth")]
    out: PathBuf,
    /// Truth raster cell size in meters.
    #[arg(long, default_value_t = 0.5)]
    cell: f64,
    /// Override the scene density, points/m².
    #[arg(long)]
    density: Option<f64>,
    /// Override the scene seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_bbox(s: &str) -> std::result::Result<BBox, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number {t:?}"))
        })
        .collect::<std::result::Result<_, _>>()?;
    let [x0, y0, x1, y1] = v[..] else {
        return Err("expected minx,miny,maxx,maxy".into());
    };
    BBox::new(x0, y0, x1, y1).map_err(|e| e.to_string())
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let format: InputFormat = self.format.parse()?;
        let cfg = PipelineConfig {
            cell: self.cell,
            filter: FilterParams {
                tau_deg: self.slope_threshold,
                a1_m2: self.a1,
                a2_m2: self.a2,
                r: self.rectangularity,
            },
            water: WaterParams {
                window: self.window,
                k: self.confidence,
                percentile: self.percentile,
                min_segment_px: self.min_segment_px,
            },
            read: ReadOptions {
                format,
                strict: self.strict,
            },
            extent: self.extent,
            crop: self.crop,
            emit_intermediates: self.emit_intermediates,
            workers: self.workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn open(&self) -> Result<Box<dyn io::Read>> {
        if self.input == Path::new("-") {
            return Ok(Box::new(io::stdin().lock()));
        }
        let f = File::open(&self.input)
            .map_err(|e| Error::Io(e).at(Stage::Ingest))
            .with_context(|| format!("opening {}", self.input.display()))?;
        Ok(Box::new(BufReader::new(f)))
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run_dtm(args: &RunArgs) -> Result<()> {
    let cfg = args.config()?;
    if args.show_config {
        return print_json(&cfg);
    }
    let out = run_pipeline(args.open()?, &cfg)?;
    write_outputs(&out, &cfg, &args.out)?;
    print_json(&out.report)
}

fn run_slope(args: &RunArgs) -> Result<()> {
    let cfg = args.config()?;
    if args.show_config {
        return print_json(&cfg);
    }
    let (pc, _) = read_points(args.open()?, cfg.read).map_err(|e| e.at(Stage::Ingest))?;
    if pc.is_empty() {
        return Err(Error::EmptyInput.at(Stage::Ingest).into());
    }
    let (dsm, slope, breaks) = with_workers(cfg.workers, || -> dtm_core::Result<_> {
        let (_, dsm) = build_dsm(&pc, &cfg)?;
        let (slope, breaks) = breaks_for(&dsm, cfg.filter.tau_deg)?;
        Ok((dsm, slope, breaks))
    })??;
    std::fs::create_dir_all(&args.out)?;
    let g = dsm.grid;
    write_ascii_grid_file(&args.out.join("dsm.asc"), &g, &dsm.elev)?;
    write_ascii_grid_file(&args.out.join("slope.asc"), &g, &slope.slope_deg)?;
    write_mask_file(&args.out.join("breaks.asc"), &g, &breaks.is_break)?;
    print_json(&serde_json::json!({
        "grid": g,
        "slope_threshold": cfg.filter.tau_deg,
        "break_px": breaks.count(),
    }))
}

fn run_water(args: &RunArgs) -> Result<()> {
    let cfg = args.config()?;
    if args.show_config {
        return print_json(&cfg);
    }
    let (pc, _) = read_points(args.open()?, cfg.read).map_err(|e| e.at(Stage::Ingest))?;
    if pc.is_empty() {
        return Err(Error::EmptyInput.at(Stage::Ingest).into());
    }
    let (water, p, t) = with_workers(cfg.workers, || -> dtm_core::Result<_> {
        let (sparse, _) = build_dsm(&pc, &cfg)?;
        detect_water(&sparse, &cfg.water)
    })??;
    std::fs::create_dir_all(&args.out)?;
    write_mask_file(
        &args.out.join("water_mask.asc"),
        &water.grid,
        &water.is_water,
    )?;
    write_text_file(&args.out.join("water_segments.csv"), |w| {
        write_segment_report(&water, w)
    })?;
    print_json(&serde_json::json!({
        "water": cfg.water,
        "occupied_fraction": p,
        "water_threshold": t,
        "water_px": water.water_count(),
        "water_segment_count": water.segments.len(),
    }))
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    let read =
        |p: &Path| read_ascii_grid_file(p).with_context(|| format!("reading {}", p.display()));
    let (ga, a) = read(&args.a)?;
    let (gb, b) = read(&args.b)?;
    ga.check_same(&gb)?;
    let mask = match &args.mask {
        Some(p) => {
            let (gm, m) = read(p)?;
            ga.check_same(&gm)?;
            Some(m.map(|&v| v.is_finite() && v != 0.0))
        }
        None => None,
    };
    let report = compare_tiled(&a, &b, mask.as_ref(), args.tile_px)?;
    match &args.out {
        Some(p) => {
            write_text_file(p, |w| write_tile_report(&report, w))?;
            print_json(&serde_json::json!({
                "tile_px": report.tile_px,
                "tile_rows": report.tile_rows,
                "tile_cols": report.tile_cols,
                "global_mae": report.global_mae,
                "global_rmse": report.global_rmse,
            }))
        }
        None => Ok(write_tile_report(&report, io::stdout().lock())?),
    }
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.scene)
        .map_err(Error::Io)
        .with_context(|| format!("reading {}", args.scene.display()))?;
    let mut scene = parse_scene(&text)?;
    if let Some(d) = args.density {
        scene.density = d;
    }
    if let Some(s) = args.seed {
        scene.seed = s;
    }
    let pc = scene.sample_points()?;
    let grid = make_grid_spec(&scene.extent, args.cell)?;
    let truth = scene.truth_rasters(&grid);
    std::fs::create_dir_all(&args.out)?;
    write_text_file(&args.out.join("points.xyz"), |w| write_xyz_text(&pc, w))?;
    write_ascii_grid_file(&args.out.join("truth_dtm.asc"), &grid, &truth.dtm)?;
    write_mask_file(&args.out.join("truth_ground.asc"), &grid, &truth.ground)?;
    write_mask_file(&args.out.join("truth_water.asc"), &grid, &truth.water)?;
    print_json(&serde_json::json!({
        "points": pc.count(),
        "density": scene.density,
        "seed": scene.seed,
        "grid": grid,
    }))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return e.exit_code() as u8;
        }
        if cause.is::<io::Error>() || cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    4
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Dtm(a) => run_dtm(a),
        Command::Slope(a) => run_slope(a),
        Command::Water(a) => run_water(a),
        Command::Compare(a) => run_compare(a),
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already print their own cause, so stop there.
            let mut msg = String::from("error");
            for cause in e.chain() {
                msg.push_str(&format!(": {cause}"));
                if cause.is::<Error>() {
                    break;
                }
            }
            eprintln!("{msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
