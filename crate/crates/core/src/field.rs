use crate::error::{CoreError, Result};

/// Dense row-major 2-D array of `f64` samples.
///
/// Sample `(i1, i2)` lives at `data[i2 * width + i1]`; `i1` runs along the
/// first axis (columns) and `i2` along the second (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(CoreError::Shape(format!(
                "{} values for a {}x{} field",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        i2 * self.width + i1
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.data[i2 * self.width + i1]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, v: f64) {
        self.data[i2 * self.width + i1] = v;
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_same_shape(&self, other: &Field) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(CoreError::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(CoreError::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn dot(&self, other: &Field) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Field) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}
