use std::f64::consts::PI;

use mlct_core::grid::spacing;
use mlct_core::{default_detector_count, detector_positions, uniform_angles, Field, Sinogram};

use crate::{RadonError, Result};

/// Parallel-beam acquisition geometry for an `n1 x n2` image on `[-1, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    n1: usize,
    n2: usize,
    detectors: Vec<f64>,
    angles: Vec<f64>,
    mask: Vec<bool>,
}

impl Geometry {
    pub fn new(n1: usize, n2: usize, detectors: Vec<f64>, angles: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(RadonError::Invalid(format!("image size {n1}x{n2}")));
        }
        // reuse the sinogram validation for detectors, angles and mask
        Sinogram::zeros(detectors.clone(), angles.clone(), mask.clone())?;
        if detectors.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RadonError::Invalid("detector positions must increase".into()));
        }
        Ok(Self { n1, n2, detectors, angles, mask })
    }

    /// Square image, default detector count and `m2` uniform angles, all available.
    pub fn parallel(n: usize, m2: usize) -> Self {
        Self::with_counts(n, n, default_detector_count(n.max(2)), m2)
    }

    pub fn with_counts(n1: usize, n2: usize, m1: usize, m2: usize) -> Self {
        Self::new(n1, n2, detector_positions(m1), uniform_angles(m2), vec![true; m2])
            .expect("uniform geometry is valid")
    }

    /// Geometry of an existing sinogram for an `n1 x n2` image.
    pub fn for_sinogram(n1: usize, n2: usize, g: &Sinogram) -> Result<Self> {
        Self::new(n1, n2, g.detectors().to_vec(), g.angles().to_vec(), g.mask().to_vec())
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn h1(&self) -> f64 {
        spacing(self.n1)
    }

    pub fn h2(&self) -> f64 {
        spacing(self.n2)
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

    /// Mean detector spacing.
    pub fn ds(&self) -> f64 {
        (self.detectors[self.m1() - 1] - self.detectors[0]) / (self.m1() - 1) as f64
    }

    /// Quadrature weight of every angle: half the gap to its neighbours, with
    /// the list wrapped around `pi`. Uniform angles get `pi / m2`.
    pub fn angle_weights(&self) -> Vec<f64> {
        let a = &self.angles;
        let m = a.len();
        if m == 1 {
            return vec![PI];
        }
        (0..m)
            .map(|l| {
                let next = if l + 1 < m { a[l + 1] } else { a[0] + PI };
                let prev = if l > 0 { a[l - 1] } else { a[m - 1] - PI };
                (next - prev) / 2.0
            })
            .collect()
    }

    /// Angular cell width around angle `l`.
    pub fn angle_cell(&self, l: usize) -> f64 {
        self.angle_weights()[l]
    }

    pub fn available(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(l, _)| l)
    }

    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        Self::new(self.n1, self.n2, self.detectors.clone(), self.angles.clone(), mask)
    }

    pub fn zero_sinogram(&self) -> Sinogram {
        Sinogram::zeros(self.detectors.clone(), self.angles.clone(), self.mask.clone()).expect("valid geometry")
    }

    /// Wrap raw values laid out as `m1 x m2` into a sinogram of this geometry.
    pub fn sinogram(&self, values: Field) -> Result<Sinogram> {
        Ok(Sinogram::new(values, self.detectors.clone(), self.angles.clone(), self.mask.clone())?)
    }

    pub(crate) fn check_image(&self, width: usize, height: usize) -> Result<()> {
        if width != self.n1 || height != self.n2 {
            return Err(RadonError::Shape(format!("image {width}x{height} vs geometry {}x{}", self.n1, self.n2)));
        }
        Ok(())
    }

    pub(crate) fn check_sinogram(&self, g: &Sinogram) -> Result<()> {
        if g.detectors() != self.detectors.as_slice() || g.angles() != self.angles.as_slice() {
            return Err(RadonError::Shape(format!(
                "sinogram {}x{} does not match geometry {}x{}",
                g.m1(),
                g.m2(),
                self.m1(),
                self.m2()
            )));
        }
        Ok(())
    }
}
