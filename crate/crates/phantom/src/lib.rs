//! Random cartoon phantoms: closed B-spline boundaries with polynomial
//! interiors, their rasterization and their analytic digital wavefront sets.

pub mod dataset;
pub mod model;
pub mod raster;
pub mod spline;

use thiserror::Error;

pub use dataset::{dataset_generate, DatasetConfig};
pub use model::{sample_phantom, CartoonPhantom, PhantomConfig, Region};
pub use raster::{analytic_dwf, evaluate, rasterize};

#[derive(Debug, Error)]
pub enum PhantomError {
    #[error("invalid phantom parameter: {0}")]
    Invalid(String),
    #[error("no simple boundary found after {0} attempts")]
    RetryCap(usize),
    #[error(transparent)]
    Core(#[from] mlct_core::CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("phantom json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PhantomError>;
