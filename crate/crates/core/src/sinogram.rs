use std::f64::consts::{PI, SQRT_2};

use crate::error::{CoreError, Result};
use crate::field::Field;

/// Uniformly spaced detector positions covering `[-sqrt(2), sqrt(2)]`.
pub fn detector_positions(m1: usize) -> Vec<f64> {
    let ds = 2.0 * SQRT_2 / (m1 as f64 - 1.0);
    (0..m1).map(|k| -SQRT_2 + k as f64 * ds).collect()
}

/// `m2` uniform angles `l * pi / m2` in `[0, pi)`.
pub fn uniform_angles(m2: usize) -> Vec<f64> {
    (0..m2).map(|l| l as f64 * PI / m2 as f64).collect()
}

/// Default detector count for an image with `n` pixels per side: enough for a
/// detector spacing no coarser than the pixel spacing, rounded up to odd so a
/// detector sits at `s = 0`.
pub fn default_detector_count(n: usize) -> usize {
    let m = (SQRT_2 * (n as f64 - 1.0)).ceil() as usize + 2;
    if m % 2 == 0 {
        m + 1
    } else {
        m
    }
}

/// Sampled line-integral data over `(s, theta)`.
///
/// Values are stored with the detector index as the fast axis: sample `(k, l)`
/// (detector `k`, angle `l`) is `values[l * m1 + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    field: Field,
    detectors: Vec<f64>,
    angles: Vec<f64>,
    mask: Vec<bool>,
}

impl Sinogram {
    pub fn zeros(detectors: Vec<f64>, angles: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        let field = Field::zeros(detectors.len(), angles.len());
        Self::new(field, detectors, angles, mask)
    }

    pub fn new(field: Field, detectors: Vec<f64>, angles: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if detectors.len() < 2 {
            return Err(CoreError::Shape("sinogram needs at least two detectors".into()));
        }
        if field.width != detectors.len() || field.height != angles.len() {
            return Err(CoreError::Shape(format!(
                "values {}x{} vs {} detectors, {} angles",
                field.width,
                field.height,
                detectors.len(),
                angles.len()
            )));
        }
        if mask.len() != angles.len() {
            return Err(CoreError::Shape(format!("mask length {} vs {} angles", mask.len(), angles.len())));
        }
        if !mask.iter().any(|&m| m) {
            return Err(CoreError::Invalid("no available angle".into()));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) || angles.iter().any(|a| !(0.0..PI).contains(a)) {
            return Err(CoreError::Invalid("angles must be strictly increasing in [0, pi)".into()));
        }
        field.check_finite()?;
        let mut sino = Self { field, detectors, angles, mask };
        sino.zero_masked();
        Ok(sino)
    }

    pub fn m1(&self) -> usize {
        self.detectors.len()
    }

    pub fn m2(&self) -> usize {
        self.angles.len()
    }

    pub fn detectors(&self) -> &[f64] {
        &self.detectors
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.field.data
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.field.get(k, l)
    }

    /// Detector spacing.
    pub fn ds(&self) -> f64 {
        self.detectors[1] - self.detectors[0]
    }

    /// Replace the values, keeping geometry; masked rows are zeroed.
    pub fn with_values(&self, field: Field) -> Result<Self> {
        Self::new(field, self.detectors.clone(), self.angles.clone(), self.mask.clone())
    }

    /// Replace the mask; rows that become unavailable are zeroed.
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        Self::new(self.field.clone(), self.detectors.clone(), self.angles.clone(), mask)
    }

    pub fn row(&self, l: usize) -> &[f64] {
        let m1 = self.m1();
        &self.field.data[l * m1..(l + 1) * m1]
    }

    fn zero_masked(&mut self) {
        let m1 = self.m1();
        for (l, &avail) in self.mask.iter().enumerate() {
            if !avail {
                self.field.data[l * m1..(l + 1) * m1].iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
}
