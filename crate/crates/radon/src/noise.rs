use mlct_core::{Field, Sinogram};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{RadonError, Result};

/// Add i.i.d. Gaussian noise with standard deviation `sigma_rel * max|g|` on
/// the available angles.
pub fn add_noise(g: &Sinogram, sigma_rel: f64, seed: u64) -> Result<Sinogram> {
    if !(sigma_rel >= 0.0 && sigma_rel.is_finite()) {
        return Err(RadonError::Invalid(format!("sigma_rel {sigma_rel} must be non-negative")));
    }
    let sigma = sigma_rel * g.field().max_abs();
    if sigma == 0.0 {
        return Ok(g.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| RadonError::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m1 = g.m1();
    let mut values = g.values().to_vec();
    for (row, &available) in values.chunks_mut(m1).zip(g.mask()) {
        if available {
            row.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
        }
    }
    Ok(g.with_values(Field::from_vec(m1, g.m2(), values)?)?)
}
