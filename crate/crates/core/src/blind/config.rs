use serde::{Deserialize, Serialize};

use crate::error::{DeblurError, Result};

/// Parameters of the per-tile blind kernel estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    /// Weight of the l1 prior on the latent gradients.
    pub lambda: f64,
    /// Initial weight of the circular-Gaussian kernel likelihood.
    pub eta: f64,
    /// Weight of the l2 kernel prior.
    pub nu: f64,
    /// Amount `eta` drops after each kernel update.
    pub eta_decay: f64,
    /// Amount `nu` drops after each kernel update (0 keeps it constant).
    pub nu_decay: f64,
    /// Kernel side at the finest level; odd.
    pub kernel_size: usize,
    /// Alternations per pyramid level.
    pub outer_iters: usize,
    /// Maximum ISTA iterations per gradient update.
    pub inner_iters: usize,
    /// ISTA step in units of the inverse data weight; at most 0.5 for
    /// guaranteed descent with a normalized non-negative kernel.
    pub ista_step: f64,
    /// Offsets tried on either side of the fitted Gaussian width, in pixels.
    pub sigma_search_steps: Vec<f64>,
    pub pyramid_levels: usize,
    /// Per-level linear downscale ratio.
    pub pyramid_scale: f64,
    /// Standard deviation of the white Gaussian noise model; the data term
    /// is weighted by `1 / (2 noise_sigma^2)`.
    pub noise_sigma: f64,
    /// Relative energy change that ends an ISTA run early.
    pub early_stop: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            lambda: 80.0,
            eta: 15.0,
            nu: 6.0,
            eta_decay: 2.0,
            nu_decay: 0.0,
            kernel_size: 15,
            outer_iters: 5,
            inner_iters: 3,
            ista_step: 0.5,
            sigma_search_steps: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            pyramid_levels: 5,
            pyramid_scale: std::f64::consts::FRAC_1_SQRT_2,
            noise_sigma: 0.02,
            early_stop: 1e-6,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DeblurError::InvalidConfig(msg));
        for (name, v) in [
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("nu", self.nu),
            ("eta_decay", self.eta_decay),
            ("nu_decay", self.nu_decay),
            ("early_stop", self.early_stop),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if self.kernel_size % 2 == 0 || self.kernel_size < 3 {
            return bad(format!("kernel_size must be odd and >= 3, got {}", self.kernel_size));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return bad("outer_iters and inner_iters must be at least 1".into());
        }
        if !(self.ista_step > 0.0 && self.ista_step.is_finite()) {
            return bad(format!("ista_step must be positive, got {}", self.ista_step));
        }
        if self.sigma_search_steps.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("sigma_search_steps must be positive".into());
        }
        if self.pyramid_levels == 0 {
            return bad("pyramid_levels must be at least 1".into());
        }
        if !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0) {
            return bad(format!("pyramid_scale must lie in (0, 1), got {}", self.pyramid_scale));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be positive, got {}", self.noise_sigma));
        }
        Ok(())
    }

    /// Multiplier on the squared residual in every energy.
    pub fn data_weight(&self) -> f64 {
        1.0 / (2.0 * self.noise_sigma * self.noise_sigma)
    }
}
