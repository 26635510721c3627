use std::f64::consts::PI;

use mlct_core::Sinogram;
use serde::{Deserialize, Serialize};

use crate::geometry::Geometry;
use crate::{RadonError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Restriction {
    /// Remove the angles in `[center - width/2, center + width/2)` (degrees,
    /// taken modulo 180).
    LimitedAngle { center_deg: f64, width_deg: f64 },
    /// Keep `count` evenly indexed angles.
    SparseView { count: usize },
}

const ANGLE_EPS: f64 = 1e-9;

impl Restriction {
    /// Mask after applying the restriction to `mask` over `angles`.
    pub fn apply_mask(&self, angles: &[f64], mask: &[bool]) -> Result<Vec<bool>> {
        let m2 = angles.len();
        let out: Vec<bool> = match *self {
            Restriction::LimitedAngle { center_deg, width_deg } => {
                if !(0.0..=180.0).contains(&width_deg) || !center_deg.is_finite() {
                    return Err(RadonError::Invalid(format!("wedge width {width_deg} outside [0, 180]")));
                }
                let width = width_deg.to_radians();
                let start = (center_deg.to_radians() - width / 2.0).rem_euclid(PI);
                angles
                    .iter()
                    .zip(mask)
                    .map(|(&a, &m)| {
                        let mut d = (a - start).rem_euclid(PI);
                        if d > PI - ANGLE_EPS {
                            d = 0.0;
                        }
                        m && !(width > 0.0 && d < width - ANGLE_EPS)
                    })
                    .collect()
            }
            Restriction::SparseView { count } => {
                if count == 0 || count >= m2 {
                    return Err(RadonError::Invalid(format!("sparse view count {count} must lie in 1..{m2}")));
                }
                let mut keep = vec![false; m2];
                for j in 0..count {
                    keep[j * m2 / count] = true;
                }
                keep.iter().zip(mask).map(|(&k, &m)| k && m).collect()
            }
        };
        if !out.iter().any(|&m| m) {
            return Err(RadonError::Invalid("restriction removes every angle".into()));
        }
        Ok(out)
    }

    pub fn apply_geometry(&self, geo: &Geometry) -> Result<Geometry> {
        geo.with_mask(self.apply_mask(geo.angles(), geo.mask())?)
    }
}

/// Copy of `g` with the removed angles masked out and zeroed.
pub fn restrict(g: &Sinogram, mode: &Restriction) -> Result<Sinogram> {
    Ok(g.with_mask(mode.apply_mask(g.angles(), g.mask())?)?)
}
