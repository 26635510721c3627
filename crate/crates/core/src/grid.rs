use crate::error::{CoreError, Result};
use crate::field::Field;

/// A sampled image on the domain `[-1, 1]^2`.
///
/// Pixel `(i1, i2)` sits at the world point `(-1 + i1 * h1, -1 + i2 * h2)` with
/// `h1 = 2 / (n1 - 1)` and `h2 = 2 / (n2 - 1)`, so the outermost pixels lie on
/// the domain boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    field: Field,
}

impl GridImage {
    pub fn zeros(n1: usize, n2: usize) -> Result<Self> {
        Self::from_field(Field::zeros(n1, n2))
    }

    pub fn new(n1: usize, n2: usize, values: Vec<f64>) -> Result<Self> {
        Self::from_field(Field::from_vec(n1, n2, values)?)
    }

    pub fn from_field(field: Field) -> Result<Self> {
        if field.width < 2 || field.height < 2 {
            return Err(CoreError::Shape(format!(
                "image needs at least 2x2 pixels, got {}x{}",
                field.width, field.height
            )));
        }
        field.check_finite()?;
        Ok(Self { field })
    }

    /// Build from a closure over world coordinates.
    pub fn from_fn(n1: usize, n2: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut field = Field::zeros(n1, n2);
        let h1 = 2.0 / (n1 as f64 - 1.0);
        let h2 = 2.0 / (n2 as f64 - 1.0);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                field.set(i1, i2, f(-1.0 + i1 as f64 * h1, -1.0 + i2 as f64 * h2));
            }
        }
        Self::from_field(field)
    }

    pub fn n1(&self) -> usize {
        self.field.width
    }

    pub fn n2(&self) -> usize {
        self.field.height
    }

    pub fn h1(&self) -> f64 {
        2.0 / (self.field.width as f64 - 1.0)
    }

    pub fn h2(&self) -> f64 {
        2.0 / (self.field.height as f64 - 1.0)
    }

    /// World coordinates of pixel `(i1, i2)`.
    pub fn world(&self, i1: usize, i2: usize) -> (f64, f64) {
        (-1.0 + i1 as f64 * self.h1(), -1.0 + i2 as f64 * self.h2())
    }

    pub fn values(&self) -> &[f64] {
        &self.field.data
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.field.get(i1, i2)
    }

    pub fn check_same_shape(&self, other: &GridImage) -> Result<()> {
        self.field.check_same_shape(&other.field)
    }
}

/// Pixel spacing for an `n`-sample axis over `[-1, 1]`.
pub fn spacing(n: usize) -> f64 {
    2.0 / (n as f64 - 1.0)
}
