//! Spatially invariant blind kernel estimation on one sub-image.
//!
//! Alternates sparse (l1) updates of the latent gradient maps with
//! closed-form kernel solves anchored to a circular Gaussian, coarse to
//! fine over an image pyramid.

mod config;
mod ista;
mod kernel_update;
mod multiscale;
mod problem;

pub use config::EstimationConfig;
pub use ista::{gradient_energy, ista_gradient_update, IstaRun};
pub use kernel_update::{
    fit_gaussian, fit_gaussian_likelihood, kernel_solve_fft, kernel_update, sigma_candidates, sigma_window_search,
    KernelWeights, RawKernel, WindowSearch,
};
pub use multiscale::{
    estimate_kernel_multiscale, level_kernel_side, EstimationOutcome, KernelInit, LevelTrace,
    MIN_PYRAMID_INPUT,
};
pub use problem::{gaussian_mismatch, joint_energy, EnergyWeights, LevelProblem};
pub(crate) use problem::periodic_gradients;

use crate::image_core::GradientField;
use crate::kernel::Kernel;

/// `||gX * k - gI||^2` summed over both components, circular convolution.
pub fn data_energy(grad_x: &GradientField, k: &Kernel, grad_i: &GradientField) -> f64 {
    LevelProblem::from_gradients(grad_i.clone()).data_energy(grad_x, k)
}
