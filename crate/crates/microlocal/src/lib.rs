//! Canonical relations of the Radon transform and its back-projection, their
//! action on digital wavefront sets, visibility under restricted angles, and a
//! gradient-based wavefront estimator used for verification.

pub mod canon;
pub mod estimate;
pub mod pushforward;
pub mod visible;

use thiserror::Error;

pub use canon::{canon_bwd, canon_fwd, ImageWfElement, SinoWfElement};
pub use estimate::{dwf_estimate, dwf_estimate_sinogram, EstimateThresholds};
pub use pushforward::{dwf_image_to_sino, dwf_sino_to_image, CellMap, MapStats};
pub use visible::visible_orientations;

#[derive(Debug, Error)]
pub enum MicrolocalError {
    #[error("grazing orientation")]
    Grazing,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Core(#[from] mlct_core::CoreError),
}

pub type Result<T> = std::result::Result<T, MicrolocalError>;
