//! Propagation of digital wavefront sets through convolutional residual
//! blocks and whole Learned Primal-Dual networks.

pub mod filter;
pub mod hard;
pub mod relu;
pub mod soft;

pub use filter::{
    basis_filter, decompose_filter, filter_from_slice, is_elliptic, recompose_filter, symbol_eval, Ellipticity,
    Filter3, FilterBasisCoeffs,
};
pub use hard::{
    image_spacing, prop_conv, prop_lpd, prop_resnet, prop_sum, sinogram_spacing, LayerTrace, LpdMaps, LpdTrace,
    MapCounts, PropConfig, ResNetTrace,
};
pub use relu::{classify_pixels, gradient, prop_relu, PixelClass, ReluThresholds, Spacing};
pub use soft::{soft_prop_lpd, soft_prop_lpd_backward, soft_resnet_backward, soft_resnet_forward, SoftConfig, SoftLpdTape, SoftResNetTape};
