//! Blind, spatially non-uniform deblurring for large microscopy images.
//!
//! The pipeline splits an image into overlapping tiles, estimates a blur
//! kernel per tile by alternating sparse gradient estimation with
//! closed-form frequency-domain kernel solves over an image pyramid,
//! propagates finished kernels to neighbouring tiles, and recovers each
//! tile with hyper-Laplacian non-blind deconvolution before averaging the
//! overlaps.

pub mod blind;
pub mod error;
pub mod evaluation;
pub(crate) mod fft;
pub mod image_core;
pub mod kernel;
pub mod nonblind;
pub mod pipeline;
pub mod propagation;
pub mod synthesis;
pub mod synthetic;

pub use error::{DeblurError, Result};
pub use image_core::{GradientField, Image, Plane};
pub use kernel::Kernel;
