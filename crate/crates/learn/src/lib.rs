//! Convolutional residual blocks and Learned Primal-Dual networks with
//! hand-written reverse passes, their training loop, and the propagation of
//! digital wavefront sets through them.

pub mod conv;
pub mod loss;
pub mod lpd;
pub mod optim;
pub mod resnet;
pub mod train;
pub mod wfprop;

use thiserror::Error;

pub use loss::{loss_inp, loss_joint, loss_rec};
pub use lpd::{lpd_backward, lpd_forward, LpdCapture, LpdFeatureGrads, LpdParams, LpdShape};
pub use optim::{Optimizer, OptimizerKind};
pub use resnet::{resnet_backward, resnet_forward, ChannelPlan, ResNetCapture, ResNetParams};
pub use train::{train, TrainConfig};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("missing or inconsistent capture: {0}")]
    Capture(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("training diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },
    #[error(transparent)]
    Core(#[from] mlct_core::CoreError),
    #[error(transparent)]
    Radon(#[from] mlct_radon::RadonError),
    #[error(transparent)]
    Microlocal(#[from] mlct_microlocal::MicrolocalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LearnError>;
