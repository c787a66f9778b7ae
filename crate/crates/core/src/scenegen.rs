//! Deterministic synthetic LiDAR scenes with known truth rasters.
//!
//! A scene is terrain (plane, Gaussian hills, trench valleys, smooth ramps)
//! plus box buildings and water polygons. Points are drawn uniformly at a
//! given density from a counter-based ChaCha stream, so the same seed gives
//! the same cloud on every platform and for any thread count.
//!
//! # Scene files
//!
//! One feature per line, `kind key=value ...`; `#` starts a comment.
//!
//! ```text
//! extent   x0=0 y0=0 x1=500 y1=500
//! sampling density=4.35 seed=7
//! plane    z0=100 sx=0.01 sy=0
//! hill     cx=250 cy=250 height=12 sigma=40
//! valley   x0=0 y0=100 x1=500 y1=100 width=12 depth=8 wall=65
//! building x0=100 y0=100 x1=130 y1=150 height=12 angle=15
//! ramp     x0=300 y0=300 x1=400 y1=320 height=6 slope=30
//! water    poly=10,10;60,10;60,40;10,40 retain=0.02 level=98.5
//! ```
//!
//! `angle` rotates a building about its footprint center (degrees, CCW).
//! Valley `width` is the flat floor width and `wall` the wall slope in
//! degrees. Ramps rise from their footprint edge to a plateau of `height`
//! with faces at exactly `slope` degrees. Water keeps each return with
//! probability `retain` and places kept returns at `level` when given.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Raster};
use crate::ingest::{BBox, Point, PointCloud};

/// Default fraction of returns kept over water.
pub const DEFAULT_WATER_RETAIN: f64 = 0.02;

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Plane {
    pub z0: f64,
    pub sx: f64,
    pub sy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hill {
    pub cx: f64,
    pub cy: f64,
    pub height: f64,
    pub sigma: f64,
}

/// Trench along a segment: flat floor, straight walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Valley {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub floor_width: f64,
    pub depth: f64,
    pub wall_deg: f64,
}

/// Axis-aligned rectangle, optionally rotated about its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
    pub angle_deg: f64,
}

impl Footprint {
    pub fn aligned(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Footprint {
            min_x,
            min_y,
            max_x,
            max_y,
            angle_deg: 0.0,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.min_x + self.max_x) / 2.0,
            (self.min_y + self.max_y) / 2.0,
        )
    }

    pub fn area(&self) -> f64 {
        (self.max_x - self.min_x) * (self.max_y - self.min_y)
    }

    /// Half-open containment in the footprint's own frame.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (lx, ly) = self.to_local(x, y);
        lx >= self.min_x && lx < self.max_x && ly >= self.min_y && ly < self.max_y
    }

    fn to_local(self, x: f64, y: f64) -> (f64, f64) {
        if self.angle_deg == 0.0 {
            return (x, y);
        }
        let (cx, cy) = self.center();
        let (s, c) = (-self.angle_deg.to_radians()).sin_cos();
        let (dx, dy) = (x - cx, y - cy);
        (cx + c * dx - s * dy, cy + s * dx + c * dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Building {
    pub footprint: Footprint,
    pub height: f64,
}

/// Plateau connected to the surrounding ground by faces of `slope_deg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ramp {
    pub footprint: Footprint,
    pub height: f64,
    pub slope_deg: f64,
}

impl Ramp {
    fn lift(&self, x: f64, y: f64) -> f64 {
        let f = &self.footprint;
        if !f.contains(x, y) {
            return 0.0;
        }
        let (lx, ly) = f.to_local(x, y);
        let edge = (lx - f.min_x)
            .min(f.max_x - lx)
            .min(ly - f.min_y)
            .min(f.max_y - ly);
        let run = self.height / self.slope_deg.to_radians().tan();
        self.height * (edge / run).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterBody {
    pub polygon: Vec<(f64, f64)>,
    pub retain: f64,
    pub level: Option<f64>,
}

impl WaterBody {
    /// Even-odd point-in-polygon test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        point_in_polygon(&self.polygon, x, y)
    }
}

pub fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Terrain {
    pub plane: Plane,
    pub hills: Vec<Hill>,
    pub valleys: Vec<Valley>,
}

impl Terrain {
    pub fn height(&self, x: f64, y: f64) -> f64 {
        let mut z = self.plane.z0 + self.plane.sx * x + self.plane.sy * y;
        for h in &self.hills {
            let d2 = (x - h.cx).powi(2) + (y - h.cy).powi(2);
            z += h.height * (-d2 / (2.0 * h.sigma * h.sigma)).exp();
        }
        for v in &self.valleys {
            z -= v.cut(x, y);
        }
        z
    }
}

impl Valley {
    fn cut(&self, x: f64, y: f64) -> f64 {
        let (ax, ay) = self.from;
        let (bx, by) = self.to;
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let d = (x - ax - t * dx).hypot(y - ay - t * dy);
        let half = self.floor_width / 2.0;
        if d <= half {
            self.depth
        } else {
            (self.depth - (d - half) * self.wall_deg.to_radians().tan()).max(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub extent: BBox,
    pub terrain: Terrain,
    pub buildings: Vec<Building>,
    pub ramps: Vec<Ramp>,
    pub water: Vec<WaterBody>,
    /// Points per square meter.
    pub density: f64,
    pub seed: u64,
}

/// Truth layers sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRasters {
    pub dtm: Raster<f64>,
    pub ground: Raster<bool>,
    pub water: Raster<bool>,
}

impl Scene {
    pub fn new(extent: BBox, density: f64, seed: u64) -> Self {
        Scene {
            extent,
            terrain: Terrain::default(),
            buildings: Vec::new(),
            ramps: Vec::new(),
            water: Vec::new(),
            density,
            seed,
        }
    }

    /// Bare-earth elevation, ramps included.
    pub fn ground_height(&self, x: f64, y: f64) -> f64 {
        let lift = self.ramps.iter().map(|r| r.lift(x, y)).fold(0.0, f64::max);
        self.terrain.height(x, y) + lift
    }

    pub fn building_at(&self, x: f64, y: f64) -> Option<&Building> {
        self.buildings.iter().find(|b| b.footprint.contains(x, y))
    }

    pub fn water_at(&self, x: f64, y: f64) -> Option<&WaterBody> {
        self.water.iter().find(|w| w.contains(x, y))
    }

    /// First-hit elevation: flat roofs, water level when set, else ground.
    pub fn surface_height(&self, x: f64, y: f64) -> f64 {
        if let Some(b) = self.building_at(x, y) {
            let (cx, cy) = b.footprint.center();
            return self.ground_height(cx, cy) + b.height;
        }
        if let Some(level) = self.water_at(x, y).and_then(|w| w.level) {
            return level;
        }
        self.ground_height(x, y)
    }

    pub fn sample_points(&self) -> Result<PointCloud> {
        sample_points(self, self.density, self.seed)
    }

    pub fn truth_rasters(&self, grid: &GridSpec) -> TruthRasters {
        truth_rasters(self, grid)
    }
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform returns over the extent; count is Poisson with mean `density * area`.
pub fn sample_points(scene: &Scene, density: f64, seed: u64) -> Result<PointCloud> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "density must be positive, got {density}"
        )));
    }
    let ext = scene.extent;
    let area = ext.width() * ext.height();
    if area <= 0.0 {
        return Err(Error::EmptyExtent);
    }
    let lambda = density * area;
    let poisson = Poisson::new(lambda)
        .map_err(|e| Error::InvalidParameter(format!("point count distribution: {e}")))?;
    let total = poisson.sample(&mut chunk_rng(seed, 0)) as u64;

    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<Vec<Point>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(seed, k + 1);
            let n = CHUNK.min(total - k * CHUNK);
            let mut pts = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let x = ext.min_x + ext.width() * rng.random::<f64>();
                let y = ext.min_y + ext.height() * rng.random::<f64>();
                let keep: f64 = rng.random();
                if let Some(w) = scene.water_at(x, y) {
                    if keep >= w.retain {
                        continue;
                    }
                }
                pts.push(Point::new(x, y, scene.surface_height(x, y)));
            }
            pts
        })
        .collect();
    Ok(PointCloud::from_points(parts.concat()).0)
}

pub fn truth_rasters(scene: &Scene, grid: &GridSpec) -> TruthRasters {
    let centers = |r, c| grid.cell_center(r, c);
    TruthRasters {
        dtm: Raster::from_fn(grid.ncols, grid.nrows, |r, c| {
            let (x, y) = centers(r, c);
            scene.ground_height(x, y)
        }),
        ground: Raster::from_fn(grid.ncols, grid.nrows, |r, c| {
            let (x, y) = centers(r, c);
            scene.building_at(x, y).is_none()
        }),
        water: Raster::from_fn(grid.ncols, grid.nrows, |r, c| {
            let (x, y) = centers(r, c);
            scene.water_at(x, y).is_some()
        }),
    }
}

fn scene_err(line: usize, reason: impl Into<String>) -> Error {
    Error::SceneParse {
        line,
        reason: reason.into(),
    }
}

struct Fields<'a> {
    line: usize,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn opt(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| scene_err(self.line, format!("bad number {v:?} for {key}")))
            })
            .transpose()
    }

    fn num(&self, key: &str) -> Result<f64> {
        self.opt(key)?
            .ok_or_else(|| scene_err(self.line, format!("missing {key}")))
    }

    fn footprint(&self) -> Result<Footprint> {
        let (x0, y0, x1, y1) = (
            self.num("x0")?,
            self.num("y0")?,
            self.num("x1")?,
            self.num("y1")?,
        );
        if x0 >= x1 || y0 >= y1 {
            return Err(scene_err(self.line, "footprint needs x0 < x1 and y0 < y1"));
        }
        Ok(Footprint {
            min_x: x0,
            min_y: y0,
            max_x: x1,
            max_y: y1,
            angle_deg: self.opt("angle")?.unwrap_or(0.0),
        })
    }
}

/// Parses the line-oriented scene format documented at module level.
pub fn parse_scene(text: &str) -> Result<Scene> {
    let mut extent = None;
    let mut density = None;
    let mut seed = 0u64;
    let mut terrain = Terrain::default();
    let mut buildings = Vec::new();
    let mut ramps = Vec::new();
    let mut water = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let kind = parts.next().unwrap();
        let pairs = parts
            .map(|p| {
                p.split_once('=')
                    .ok_or_else(|| scene_err(line, format!("expected key=value, got {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let f = Fields { line, pairs };
        match kind {
            "extent" => {
                extent = Some(
                    BBox::new(f.num("x0")?, f.num("y0")?, f.num("x1")?, f.num("y1")?)
                        .map_err(|e| scene_err(line, e.to_string()))?,
                )
            }
            "sampling" => {
                density = Some(f.num("density")?);
                if let Some(s) = f.raw("seed") {
                    seed = s
                        .parse()
                        .map_err(|_| scene_err(line, format!("bad seed {s:?}")))?;
                }
            }
            "plane" => {
                terrain.plane = Plane {
                    z0: f.opt("z0")?.unwrap_or(0.0),
                    sx: f.opt("sx")?.unwrap_or(0.0),
                    sy: f.opt("sy")?.unwrap_or(0.0),
                }
            }
            "hill" => terrain.hills.push(Hill {
                cx: f.num("cx")?,
                cy: f.num("cy")?,
                height: f.num("height")?,
                sigma: f.num("sigma")?,
            }),
            "valley" => terrain.valleys.push(Valley {
                from: (f.num("x0")?, f.num("y0")?),
                to: (f.num("x1")?, f.num("y1")?),
                floor_width: f.num("width")?,
                depth: f.num("depth")?,
                wall_deg: f.num("wall")?,
            }),
            "building" => buildings.push(Building {
                footprint: f.footprint()?,
                height: f.num("height")?,
            }),
            "ramp" => {
                let slope_deg = f.num("slope")?;
                if !(slope_deg > 0.0 && slope_deg < 90.0) {
                    return Err(scene_err(line, "ramp slope must lie in (0, 90)"));
                }
                ramps.push(Ramp {
                    footprint: f.footprint()?,
                    height: f.num("height")?,
                    slope_deg,
                })
            }
            "water" => {
                let poly = f
                    .raw("poly")
                    .ok_or_else(|| scene_err(line, "missing poly"))?;
                let polygon = poly
                    .split(';')
                    .map(|v| {
                        let (x, y) = v
                            .split_once(',')
                            .ok_or_else(|| scene_err(line, format!("bad vertex {v:?}")))?;
                        let x: f64 = x
                            .parse()
                            .map_err(|_| scene_err(line, format!("bad vertex {v:?}")))?;
                        let y: f64 = y
                            .parse()
                            .map_err(|_| scene_err(line, format!("bad vertex {v:?}")))?;
                        Ok((x, y))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if polygon.len() < 3 {
                    return Err(scene_err(line, "water polygon needs at least 3 vertices"));
                }
                let retain = f.opt("retain")?.unwrap_or(DEFAULT_WATER_RETAIN);
                if !(0.0..=1.0).contains(&retain) {
                    return Err(scene_err(line, "retain must lie in [0, 1]"));
                }
                water.push(WaterBody {
                    polygon,
                    retain,
                    level: f.opt("level")?,
                })
            }
            other => return Err(scene_err(line, format!("unknown feature {other:?}"))),
        }
    }

    let extent = extent.ok_or_else(|| scene_err(0, "missing extent line"))?;
    if extent.width() <= 0.0 || extent.height() <= 0.0 {
        return Err(Error::EmptyExtent);
    }
    let density = density.ok_or_else(|| scene_err(0, "missing sampling line"))?;
    Ok(Scene {
        extent,
        terrain,
        buildings,
        ramps,
        water,
        density,
        seed,
    })
}
