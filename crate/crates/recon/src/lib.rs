//! Classical reconstruction baselines on top of the matched projector pair.

mod fbp;
mod tikhonov;
mod tv;

use thiserror::Error;

pub use fbp::recon_fbp;
pub use tikhonov::{recon_tikhonov, TikhonovReport, CG_TOLERANCE};
pub use tv::{operator_norm, recon_tv, total_variation, TvReport, DIVERGENCE_WINDOW, TV_DEFAULT_LAMBDA};

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },
    #[error(transparent)]
    Radon(#[from] mlct_radon::RadonError),
    #[error(transparent)]
    Core(#[from] mlct_core::CoreError),
}

pub type Result<T> = std::result::Result<T, ReconError>;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ReconError::Invalid(format!("regularisation weight must be positive, got {lambda}")));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
