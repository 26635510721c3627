use mlct_core::{GridImage, Sinogram};
use mlct_radon::{backproject, ramp_filter, Geometry, Window};

use crate::Result;

/// Filtered back-projection over the available angles.
pub fn recon_fbp(g: &Sinogram, geo: &Geometry, window: Window) -> Result<GridImage> {
    Ok(backproject(&ramp_filter(g, window), geo)?)
}
