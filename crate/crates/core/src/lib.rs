//! Shared data types for the tomography toolkit: sampled images and
//! sinograms on fixed geometries, digital wavefront sets, image metrics and
//! the on-disk tensor container.

pub mod dwf;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod pgm;
pub mod sinogram;

pub use dwf::{angle_bin, bin_angle, bin_distance, orientation_distance, DigitalWavefrontSet, DwfMode};
pub use error::{CoreError, Result};
pub use field::Field;
pub use grid::GridImage;
pub use metrics::{l2_relative_error, mse, psnr, ssim, MetricsReport};
pub use sinogram::{default_detector_count, detector_positions, uniform_angles, Sinogram};

/// Stateless 64-bit mixer used to derive per-item seeds from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
