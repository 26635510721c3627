//! Discretised parallel-beam Radon transform on `[-1, 1]^2` with detectors on
//! `[-sqrt(2), sqrt(2)]`.

pub mod filter;
pub mod geometry;
pub mod noise;
pub mod project;
pub mod restrict;

use thiserror::Error;

pub use filter::{ramp_filter, ramp_filter_raw, Window};
pub use geometry::Geometry;
pub use noise::add_noise;
pub use project::{backproject, radon, radon_transpose};
pub use restrict::{restrict, Restriction};

#[derive(Debug, Error)]
pub enum RadonError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] mlct_core::CoreError),
}

pub type Result<T> = std::result::Result<T, RadonError>;
