//! Digital terrain model extraction from airborne LiDAR point clouds.
//!
//! Points are binned into a fine lowest-return raster, steep pixels become
//! break-lines, and the regions enclosed by break-lines are classified by
//! area and rectangularity. Non-ground regions are re-filled by TIN
//! interpolation from the surrounding ground, and water bodies are found
//! from anomalously low return density.

pub mod asc;
pub mod error;
pub mod eval;
pub mod grid;
pub mod groundfilter;
pub mod hydro;
pub mod ingest;
pub mod interp;
pub mod pipeline;
pub mod raster;
pub mod scenegen;
pub mod slope;

pub use error::{Error, Result, Stage};
pub use grid::{GridSpec, Raster};
pub use ingest::{BBox, Point, PointCloud};
pub use pipeline::{
    run_pipeline, run_pipeline_on_cloud, PipelineConfig, PipelineOutput, RunReport,
};
