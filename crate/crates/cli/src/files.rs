//! Sinogram files carrying the image size of their geometry.

use std::fs;
use std::path::Path;

use mlct_core::io::{decode_container, decode_sinogram, encode_container, encode_sinogram, peek_header};
use mlct_core::Sinogram;
use mlct_radon::Geometry;
use serde_json::json;

use crate::{CliError, Result};

const IMAGE_SHAPE: &str = "image_shape";

pub fn save_sinogram(g: &Sinogram, geo: &Geometry, path: &Path) -> Result<()> {
    let bytes = encode_sinogram(g)?;
    let (mut header, payload) = decode_container(&bytes)?;
    if let Some(meta) = header.meta.as_object_mut() {
        meta.insert(IMAGE_SHAPE.into(), json!([geo.n1(), geo.n2()]));
    }
    fs::write(path, encode_container(&header, payload)?)?;
    Ok(())
}

/// Read a sinogram and its geometry; `n` overrides the recorded image size.
pub fn load_sinogram(path: &Path, n: Option<usize>) -> Result<(Sinogram, Geometry)> {
    let bytes = fs::read(path)?;
    let g = decode_sinogram(&bytes)?;
    let header = peek_header(&bytes)?;
    let recorded = header.meta.get(IMAGE_SHAPE).and_then(|v| v.as_array()).and_then(|a| {
        let n1 = a.first()?.as_u64()? as usize;
        let n2 = a.get(1)?.as_u64()? as usize;
        Some((n1, n2))
    });
    let (n1, n2) = match (n, recorded) {
        (Some(n), _) => (n, n),
        (None, Some(s)) => s,
        (None, None) => {
            return Err(CliError::Usage(format!("{} does not record its image size; pass --n", path.display())))
        }
    };
    let geo = Geometry::for_sinogram(n1, n2, &g)?;
    Ok((g, geo))
}
