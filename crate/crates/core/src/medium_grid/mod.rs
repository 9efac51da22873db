//! Staggered-grid storage, media, and medium-file ingestion.

mod field;
mod file;
mod grid;
mod medium;

pub use field::Field2D;
pub use file::{decode_medium, encode_medium, load_medium_file, save_medium_file, MAGIC, VERSION};
pub use grid::{Axis, Boundary, GridSpec, Stagger, CFL_LIMIT};
pub use medium::{build_homogeneous_acoustic, build_layered_elastic, AcousticMedium, ElasticMedium, Layer, Medium};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid {nx}x{ny} is too small, both dimensions must be at least {min}")]
    TooSmall { nx: usize, ny: usize, min: usize },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("boundary {bc} is not supported along {axis:?}")]
    UnsupportedBoundary { axis: Axis, bc: Boundary },
    #[error("CFL number {cfl:.6} exceeds the stability limit {limit:.6}")]
    Cfl { cfl: f64, limit: f64 },
}

#[derive(Debug, Error)]
pub enum MediumError {
    #[error("invalid medium parameter: {0}")]
    Parameter(String),
    #[error("not a medium file (magic mismatch)")]
    BadMagic,
    #[error("unsupported medium file version {0}")]
    Version(u32),
    #[error("unknown medium kind {0}")]
    Kind(u32),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid {plane} value {value} at cell ({i}, {j})")]
    Invalid { plane: &'static str, i: usize, j: usize, value: f64 },
    #[error("cannot read medium file {0}: {1}")]
    Io(String, #[source] std::io::Error),
}
