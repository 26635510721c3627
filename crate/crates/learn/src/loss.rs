use mlct_core::{DigitalWavefrontSet, GridImage};

use crate::{LearnError, Result};

/// Sum of squared differences.
pub fn loss_rec(y1: &GridImage, y2: &GridImage) -> Result<f64> {
    y1.check_same_shape(y2)?;
    Ok(y1.values().iter().zip(y2.values()).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Gradient of [`loss_rec`] in `y1`.
pub fn loss_rec_grad(y1: &GridImage, y2: &GridImage) -> Result<Vec<f64>> {
    y1.check_same_shape(y2)?;
    Ok(y1.values().iter().zip(y2.values()).map(|(a, b)| 2.0 * (a - b)).collect())
}

fn check(target: &DigitalWavefrontSet, predicted: &DigitalWavefrontSet, eps_clip: f64) -> Result<()> {
    if !target.same_grid(predicted) {
        return Err(LearnError::Shape(format!(
            "target {}x{}x{} vs prediction {}x{}x{}",
            target.width(),
            target.height(),
            target.bins(),
            predicted.width(),
            predicted.height(),
            predicted.bins()
        )));
    }
    if !(eps_clip > 0.0 && eps_clip < 1.0) {
        return Err(LearnError::Invalid(format!("clip level {eps_clip} outside (0, 1)")));
    }
    Ok(())
}

/// Cross-entropy `-sum y log y'` with `y'` clipped to `[eps_clip, 1]`.
pub fn loss_inp(target: &DigitalWavefrontSet, predicted: &DigitalWavefrontSet, eps_clip: f64) -> Result<f64> {
    check(target, predicted, eps_clip)?;
    Ok(target
        .data()
        .iter()
        .zip(predicted.data())
        .filter(|(&y, _)| y != 0.0)
        .map(|(&y, &p)| -y * p.clamp(eps_clip, 1.0).ln())
        .sum())
}

/// Gradient of [`loss_inp`] in the prediction; zero where the clip is active.
pub fn loss_inp_grad(target: &DigitalWavefrontSet, predicted: &DigitalWavefrontSet, eps_clip: f64) -> Result<Vec<f64>> {
    check(target, predicted, eps_clip)?;
    Ok(target
        .data()
        .iter()
        .zip(predicted.data())
        .map(|(&y, &p)| if y == 0.0 || p < eps_clip { 0.0 } else { -y / p })
        .collect())
}

/// `lambda * rec + (1 - lambda) * inp`.
pub fn loss_joint(rec: f64, inp: f64, lambda: f64) -> f64 {
    lambda * rec + (1.0 - lambda) * inp
}
