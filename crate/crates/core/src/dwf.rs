use std::f64::consts::PI;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DwfMode {
    /// Every entry is exactly 0 or 1.
    Hard,
    /// Entries are membership scores in `[0, 1]`.
    Soft,
}

/// Per-pixel orientation sets over a 2-D grid.
///
/// Bin `k` stands for the orientation angle `k * pi / bins`; orientations are
/// identified modulo `pi`. Entry `(i1, i2, k)` is
/// `data[(i2 * width + i1) * bins + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalWavefrontSet {
    width: usize,
    height: usize,
    bins: usize,
    mode: DwfMode,
    data: Vec<f64>,
}

impl DigitalWavefrontSet {
    pub fn empty(width: usize, height: usize, bins: usize, mode: DwfMode) -> Self {
        assert!(bins > 0, "a wavefront set needs at least one orientation bin");
        Self { width, height, bins, mode, data: vec![0.0; width * height * bins] }
    }

    pub fn from_vec(width: usize, height: usize, bins: usize, mode: DwfMode, data: Vec<f64>) -> Result<Self> {
        if bins == 0 {
            return Err(CoreError::Invalid("bin count must be positive".into()));
        }
        if data.len() != width * height * bins {
            return Err(CoreError::Shape(format!(
                "{} entries for {}x{}x{}",
                data.len(),
                width,
                height,
                bins
            )));
        }
        for (i, &v) in data.iter().enumerate() {
            let ok = match mode {
                DwfMode::Hard => v == 0.0 || v == 1.0,
                DwfMode::Soft => (0.0..=1.0).contains(&v),
            };
            if !ok {
                return Err(CoreError::Invalid(format!("entry {i} = {v} invalid for {mode:?} mode")));
            }
        }
        Ok(Self { width, height, bins, mode, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn mode(&self) -> DwfMode {
        self.mode
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, k: usize) -> usize {
        (i2 * self.width + i1) * self.bins + k
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize, k: usize) -> f64 {
        self.data[self.index(i1, i2, k)]
    }

    #[inline]
    pub fn is_set(&self, i1: usize, i2: usize, k: usize) -> bool {
        self.get(i1, i2, k) > 0.5
    }

    /// Set a hard entry; soft entries are raised to at least `1`.
    pub fn mark(&mut self, i1: usize, i2: usize, k: usize) {
        let i = self.index(i1, i2, k);
        self.data[i] = 1.0;
    }

    pub fn set_value(&mut self, i1: usize, i2: usize, k: usize, v: f64) {
        let i = self.index(i1, i2, k);
        self.data[i] = v;
    }

    /// Orientation slice of one pixel.
    pub fn pixel(&self, i1: usize, i2: usize) -> &[f64] {
        let start = (i2 * self.width + i1) * self.bins;
        &self.data[start..start + self.bins]
    }

    pub fn pixel_mut(&mut self, i1: usize, i2: usize) -> &mut [f64] {
        let start = (i2 * self.width + i1) * self.bins;
        &mut self.data[start..start + self.bins]
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.bins == other.bins
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(CoreError::Shape(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.bins, other.width, other.height, other.bins
            )))
        }
    }

    /// Number of entries above one half.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0.5).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Set elements `(i1, i2, k)` in scan order.
    pub fn elements(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (w, b) = (self.width, self.bins);
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.5)
            .map(move |(i, _)| ((i / b) % w, i / (b * w), i % b))
    }

    /// Threshold a soft set at one half.
    pub fn to_hard(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bins: self.bins,
            mode: DwfMode::Hard,
            data: self.data.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn to_soft(&self) -> Self {
        Self { mode: DwfMode::Soft, ..self.clone() }
    }

    /// Keep only bins where `keep[k]` is true.
    pub fn restrict_bins(&self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.bins {
            return Err(CoreError::Shape(format!("{} mask bins vs {}", keep.len(), self.bins)));
        }
        let mut out = self.clone();
        for (i, v) in out.data.iter_mut().enumerate() {
            if !keep[i % self.bins] {
                *v = 0.0;
            }
        }
        Ok(out)
    }

    /// Fraction of the elements of `self` that have an element of `other`
    /// within `pixels` grid steps along each axis and `bins` orientation bins.
    /// An empty `self` is fully covered.
    pub fn covered_fraction(&self, other: &Self, pixels: usize, bins: usize) -> Result<f64> {
        self.check_same_grid(other)?;
        let mut total = 0usize;
        let mut hit = 0usize;
        let m = self.bins as isize;
        let (r, b) = (pixels as isize, bins as isize);
        for (i1, i2, k) in self.elements() {
            total += 1;
            let found = (-r..=r).any(|d2| {
                let j2 = i2 as isize + d2;
                (0..self.height as isize).contains(&j2)
                    && (-r..=r).any(|d1| {
                        let j1 = i1 as isize + d1;
                        (0..self.width as isize).contains(&j1)
                            && (-b..=b).any(|dk| {
                                let kk = (k as isize + dk).rem_euclid(m) as usize;
                                other.is_set(j1 as usize, j2 as usize, kk)
                            })
                    })
            });
            hit += found as usize;
        }
        Ok(if total == 0 { 1.0 } else { hit as f64 / total as f64 })
    }

    /// Pointwise union (max) in place.
    pub fn union_with(&mut self, other: &Self) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = a.max(b);
        }
        Ok(())
    }
}

/// Orientation angle of bin `k` out of `bins`.
pub fn bin_angle(k: usize, bins: usize) -> f64 {
    k as f64 * PI / bins as f64
}

/// Nearest bin for an orientation angle; angles are taken modulo `pi`.
pub fn angle_bin(angle: f64, bins: usize) -> usize {
    let a = angle.rem_euclid(PI);
    ((a / (PI / bins as f64)).round() as usize) % bins
}

/// Circular distance between two orientation bins.
pub fn bin_distance(a: usize, b: usize, bins: usize) -> usize {
    let d = if a > b { a - b } else { b - a };
    d.min(bins - d)
}

/// Distance between orientations modulo `pi`, in `[0, pi/2]`.
pub fn orientation_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}
