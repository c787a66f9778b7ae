//! Masks non-ground pixels and fills them by linear interpolation over a
//! TIN of the surrounding ground pixels.
//!
//! Each connected hole of non-ground pixels is filled independently from the
//! ground pixels 4-adjacent to it. Inside the hull of those pixels the value
//! is barycentric on their Delaunay triangulation; outside it (holes that
//! reach the raster edge) the nearest boundary pixel is copied.

use rayon::prelude::*;
use serde::Serialize;
use spade::{DelaunayTriangulation, FloatTriangulation, HasPosition, Point2};

use crate::error::{Error, Result};
use crate::grid::{for_each_neighbor4, GridSpec, Raster};
use crate::groundfilter::{component_pixels, label_components, GroundMask};
use crate::raster::Dsm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelSource {
    MeasuredGround,
    Interpolated,
    Water,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtmRaster {
    pub grid: GridSpec,
    pub elev: Raster<f64>,
    pub source: Raster<PixelSource>,
}

impl DtmRaster {
    pub fn count(&self, source: PixelSource) -> usize {
        self.source
            .as_slice()
            .iter()
            .filter(|&&s| s == source)
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    pos: Point2<f64>,
    z: f64,
}

impl HasPosition for Sample {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

enum Surface {
    Constant(f64),
    /// Collinear samples: piecewise-linear along the line, clamped at the ends.
    Line {
        origin: (f64, f64),
        dir: (f64, f64),
        stations: Vec<(f64, f64)>,
    },
    Tin(DelaunayTriangulation<Sample>),
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn all_collinear(pts: &[(f64, f64)]) -> bool {
    let Some(&p0) = pts.first() else { return true };
    let Some(&p1) = pts.iter().find(|&&p| p != p0) else {
        return true;
    };
    pts.iter().all(|&p| cross(p0, p1, p) == 0.0)
}

impl Surface {
    /// `samples` must be sorted lexicographically by position and non-empty.
    fn build(samples: Vec<Sample>) -> Result<Surface> {
        let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.pos.x, s.pos.y)).collect();
        if samples.len() == 1 {
            return Ok(Surface::Constant(samples[0].z));
        }
        if all_collinear(&pts) {
            let first = pts[0];
            let last = pts[pts.len() - 1];
            let len = (last.0 - first.0).hypot(last.1 - first.1);
            let dir = ((last.0 - first.0) / len, (last.1 - first.1) / len);
            let mut stations: Vec<(f64, f64)> = samples
                .iter()
                .map(|s| {
                    (
                        (s.pos.x - first.0) * dir.0 + (s.pos.y - first.1) * dir.1,
                        s.z,
                    )
                })
                .collect();
            stations.sort_by(|a, b| a.0.total_cmp(&b.0));
            return Ok(Surface::Line {
                origin: first,
                dir,
                stations,
            });
        }
        let tin = DelaunayTriangulation::<Sample>::bulk_load_stable(samples)
            .map_err(|e| Error::Invariant(format!("triangulation failed: {e:?}")))?;
        Ok(Surface::Tin(tin))
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Surface::Constant(z) => *z,
            Surface::Line {
                origin,
                dir,
                stations,
            } => {
                let t = (x - origin.0) * dir.0 + (y - origin.1) * dir.1;
                let k = stations.partition_point(|s| s.0 <= t);
                if k == 0 {
                    stations[0].1
                } else if k == stations.len() {
                    stations[k - 1].1
                } else {
                    let (t0, z0) = stations[k - 1];
                    let (t1, z1) = stations[k];
                    z0 + (z1 - z0) * (t - t0) / (t1 - t0)
                }
            }
            Surface::Tin(tin) => {
                let p = Point2::new(x, y);
                tin.barycentric()
                    .interpolate(|v| v.data().z, p)
                    .or_else(|| tin.nearest_neighbor(p).map(|v| v.data().z))
                    .expect("triangulation has vertices")
            }
        }
    }
}

fn check_ground_support(ground: &Raster<bool>) -> Result<()> {
    let ncols = ground.ncols();
    let pts = ground
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &g)| g)
        .map(|(i, _)| ((i % ncols) as f64, (i / ncols) as f64));
    let mut first = None;
    let mut second = None;
    for p in pts {
        match (first, second) {
            (None, _) => first = Some(p),
            (Some(_), None) => second = Some(p),
            (Some(a), Some(b)) => {
                if cross(a, b, p) != 0.0 {
                    return Ok(());
                }
            }
        }
    }
    Err(Error::InsufficientGround)
}

/// Builds the DTM: ground pixels copied from `dsm`, non-ground pixels interpolated.
pub fn interpolate_nonground(dsm: &Dsm, ground: &GroundMask) -> Result<DtmRaster> {
    dsm.grid.check_same(&ground.grid)?;
    check_ground_support(&ground.is_ground)?;

    let ncols = dsm.grid.ncols;
    let nrows = dsm.grid.nrows;
    let masked = ground.is_ground.map(|&g| !g);
    let (labels, count) = label_components(&masked);
    let holes = component_pixels(&labels, count);

    let filled: Vec<Result<Vec<(usize, f64)>>> = holes
        .par_iter()
        .map(|hole| {
            let mut border: Vec<usize> = Vec::new();
            for &i in hole {
                for_each_neighbor4(i, ncols, nrows, |j| {
                    if ground.is_ground[j] {
                        border.push(j);
                    }
                });
            }
            // Lexicographic (x, y) order fixes triangulation tie-breaking.
            border.sort_unstable_by_key(|&j| (j % ncols, j / ncols));
            border.dedup();
            let samples: Vec<Sample> = border
                .iter()
                .map(|&j| Sample {
                    pos: Point2::new((j % ncols) as f64, (j / ncols) as f64),
                    z: dsm.elev[j],
                })
                .collect();
            if samples.is_empty() {
                return Err(Error::InsufficientGround);
            }
            let surface = Surface::build(samples)?;
            Ok(hole
                .iter()
                .map(|&i| (i, surface.eval((i % ncols) as f64, (i / ncols) as f64)))
                .collect())
        })
        .collect();

    let mut elev = dsm.elev.clone();
    let mut source = ground.is_ground.map(|&g| {
        if g {
            PixelSource::MeasuredGround
        } else {
            PixelSource::Interpolated
        }
    });
    for hole in filled {
        for (i, z) in hole? {
            elev[i] = z;
            source[i] = PixelSource::Interpolated;
        }
    }
    Ok(DtmRaster {
        grid: dsm.grid,
        elev,
        source,
    })
}
