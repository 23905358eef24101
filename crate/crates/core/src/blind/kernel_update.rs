use rustfft::num_complex::Complex64;

use super::{EstimationConfig, LevelProblem};
use crate::error::{DeblurError, Result};
use crate::fft::crop_centered;
use crate::image_core::GradientField;
use crate::kernel::Kernel;

/// Unnormalized, possibly signed least-squares kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RawKernel {
    pub side: usize,
    pub weights: Vec<f64>,
}

impl RawKernel {
    /// Clamps negative lobes and rescales to unit sum.
    pub fn normalized(&self) -> Result<Kernel> {
        Kernel::from_raw(self.side, self.weights.clone())
    }
}

impl LevelProblem {
    pub(crate) fn solve_kernel_spectral(
        &self,
        fx: &[Complex64],
        fy: &[Complex64],
        nu: f64,
        side: usize,
    ) -> Result<RawKernel> {
        let mut quotient = vec![Complex64::default(); fx.len()];
        for i in 0..fx.len() {
            let num = fx[i].conj() * self.spec_ix[i] + fy[i].conj() * self.spec_iy[i];
            let den = fx[i].norm_sqr() + fy[i].norm_sqr() + nu;
            if den <= f64::MIN_POSITIVE {
                return Err(DeblurError::Singular(
                    "latent gradients vanish at a frequency and nu = 0".into(),
                ));
            }
            quotient[i] = num / den;
        }
        let full = self.fft.inverse_real(quotient);
        Ok(RawKernel {
            side,
            weights: crop_centered(&full, side),
        })
    }

    /// Regularized least-squares kernel in closed form.
    pub fn solve_kernel(&self, grad_x: &GradientField, nu: f64, side: usize) -> Result<RawKernel> {
        let (fx, fy) = self.spectra(grad_x);
        self.solve_kernel_spectral(&fx, &fy, nu, side)
    }
}

/// Minimizer of `||gX * k - gI||^2 + nu ||k||^2` over kernels on the full
/// (circular) grid, cropped to `side` around the kernel center.
pub fn kernel_solve_fft(
    grad_x: &GradientField,
    grad_i: &GradientField,
    nu: f64,
    side: usize,
) -> Result<RawKernel> {
    if grad_x.dims() != grad_i.dims() {
        return Err(DeblurError::DimensionMismatch(
            "latent and observed gradients differ in size".into(),
        ));
    }
    if side % 2 == 0 {
        return Err(DeblurError::InvalidConfig(format!("kernel side must be odd, got {side}")));
    }
    LevelProblem::from_gradients(grad_i.clone()).solve_kernel(grad_x, nu, side)
}

/// Width of the circular Gaussian matching the kernel's second moment:
/// `sigma^2 = 1/2 * sum k(a, b) (a^2 + b^2)` over centered offsets.
pub fn fit_gaussian(k: &Kernel) -> f64 {
    let r = k.radius() as isize;
    let mut m2 = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            m2 += k.at_offset(dy, dx) * (dy * dy + dx * dx) as f64;
        }
    }
    (0.5 * m2).max(0.0).sqrt()
}

/// Width of the sampled circular Gaussian closest to `k` in the Frobenius
/// norm, i.e. the minimizer of the kernel likelihood `||k - G(sigma)||^2`.
/// Searched over `[0, radius]`.
pub fn fit_gaussian_likelihood(k: &Kernel) -> f64 {
    let dist = |sigma: f64| {
        let g = Kernel::gaussian(k.side(), sigma);
        g.weights()
            .iter()
            .zip(k.weights())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    };
    const STEP: f64 = 0.05;
    let steps = (k.radius() as f64 / STEP).ceil() as usize;
    let (mut best, mut best_d) = (0.0, dist(0.0));
    for i in 1..=steps {
        let s = i as f64 * STEP;
        let d = dist(s);
        if d < best_d {
            best = s;
            best_d = d;
        }
    }
    let (mut lo, mut hi) = ((best - STEP).max(0.0), best + STEP);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (dist(a), dist(b));
    for _ in 0..40 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = dist(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = dist(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    if dist(mid) < best_d {
        mid
    } else {
        best
    }
}

/// Weights of the kernel sub-problem at one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelWeights {
    pub eta: f64,
    pub nu: f64,
}

impl KernelWeights {
    pub fn initial(cfg: &EstimationConfig) -> Self {
        Self { eta: cfg.eta, nu: cfg.nu }
    }

    pub(crate) fn decay(&mut self, cfg: &EstimationConfig) {
        self.eta = (self.eta - cfg.eta_decay).max(0.0);
        self.nu = (self.nu - cfg.nu_decay).max(0.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSearch {
    pub kernel: Kernel,
    pub sigma: f64,
    /// Objective value of every candidate, in evaluation order.
    pub objectives: Vec<(f64, f64)>,
}

/// Candidate widths `center, center - s1, center + s1, ...`, clamped at 0.
pub fn sigma_candidates(center: f64, steps: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * steps.len() + 1);
    out.push(center.max(0.0));
    for &s in steps {
        out.push((center - s).max(0.0));
        out.push(center + s);
    }
    out
}

impl LevelProblem {
    /// Non-negative scale `c` minimizing `||c (gX * k) - gI||^2`.
    pub(crate) fn optimal_gain(&self, fx: &[Complex64], fy: &[Complex64], kf: &[Complex64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..fx.len() {
            let px = fx[i] * kf[i];
            let py = fy[i] * kf[i];
            num += (px.conj() * self.spec_ix[i]).re + (py.conj() * self.spec_iy[i]).re;
            den += px.norm_sqr() + py.norm_sqr();
        }
        if den > 0.0 {
            (num / den).max(0.0)
        } else {
            1.0
        }
    }

    /// Each candidate is scored at its best amplitude: the latent gradients
    /// come out of shrinkage with reduced magnitude, and a unit-sum kernel
    /// would otherwise compensate by narrowing. The winner is returned
    /// normalized.
    pub(crate) fn window_search_spectral(
        &self,
        fx: &[Complex64],
        fy: &[Complex64],
        center: f64,
        side: usize,
        weights: KernelWeights,
        cfg: &EstimationConfig,
    ) -> WindowSearch {
        let data = cfg.data_weight();
        let anchor = Kernel::gaussian(side, center);
        let mut best: Option<(f64, f64, Kernel)> = None;
        let mut objectives = Vec::new();
        for sigma in sigma_candidates(center, &cfg.sigma_search_steps) {
            let k = Kernel::gaussian(side, sigma);
            let kf = self.transfer(&k);
            let mismatch: f64 = k
                .weights()
                .iter()
                .zip(anchor.weights())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let gain = self.optimal_gain(fx, fy, &kf);
            let kf: Vec<Complex64> = kf.iter().map(|v| v * gain).collect();
            let objective = data * self.residual_norm_spectral(fx, fy, &kf)
                + weights.eta * gain * gain * mismatch
                + weights.nu * gain * gain * k.sum_squares();
            objectives.push((sigma, objective));
            if best.as_ref().is_none_or(|(_, o, _)| objective < *o) {
                best = Some((sigma, objective, k));
            }
        }
        let (sigma, _, kernel) = best.expect("at least one candidate");
        WindowSearch { kernel, sigma, objectives }
    }

    /// One kernel update: least-squares solve, then (while the Gaussian
    /// weight is positive) snap to the best circular Gaussian near the
    /// fitted width. Decays the weights afterwards.
    pub fn kernel_update(
        &self,
        grad_x: &GradientField,
        side: usize,
        weights: &mut KernelWeights,
        cfg: &EstimationConfig,
    ) -> Result<Kernel> {
        let data = cfg.data_weight();
        let (fx, fy) = self.spectra(grad_x);
        let raw = self.solve_kernel_spectral(&fx, &fy, weights.nu / data, side)?;
        let kernel = if weights.eta > 0.0 {
            let ls = raw.normalized()?;
            let center = fit_gaussian_likelihood(&ls);
            let found = self.window_search_spectral(&fx, &fy, center, side, *weights, cfg);
            weights.decay(cfg);
            found.kernel
        } else {
            weights.decay(cfg);
            raw.normalized()?
        };
        Ok(kernel)
    }
}

/// Brute-force search over `sigma +/- steps` for the Gaussian minimizing the
/// kernel sub-problem objective, on an unpadded grid.
pub fn sigma_window_search(
    grad_x: &GradientField,
    grad_i: &GradientField,
    sigma: f64,
    side: usize,
    weights: KernelWeights,
    cfg: &EstimationConfig,
) -> WindowSearch {
    let problem = LevelProblem::from_gradients(grad_i.clone());
    let (fx, fy) = problem.spectra(grad_x);
    problem.window_search_spectral(&fx, &fy, sigma, side, weights, cfg)
}

/// Kernel update on an unpadded grid; see [`LevelProblem::kernel_update`].
pub fn kernel_update(
    grad_x: &GradientField,
    grad_i: &GradientField,
    side: usize,
    weights: &mut KernelWeights,
    cfg: &EstimationConfig,
) -> Result<Kernel> {
    LevelProblem::from_gradients(grad_i.clone()).kernel_update(grad_x, side, weights, cfg)
}
