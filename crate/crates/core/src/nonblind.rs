//! Hyper-Laplacian regularized non-blind deconvolution.
//!
//! Minimizes `beta ||x * k - y||^2 + sum |grad x|^alpha` per channel by
//! half-quadratic splitting: auxiliary gradients `w` are found pixelwise,
//! `x` in closed form in the frequency domain, over an increasing schedule
//! of coupling weights.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blind::periodic_gradients;
use crate::error::{DeblurError, Result};
use crate::fft::Fft2;
use crate::image_core::{
    convolve_plane, fast_len, gradients, pad_smooth_periodic, stitch_tiles, BoundaryMode, Image,
    Plane,
};
use crate::kernel::Kernel;
use crate::propagation::TilePlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeconvConfig {
    /// Data weight.
    pub beta: f64,
    /// Exponent of the gradient prior.
    pub alpha: f64,
    /// Coupling weights of the splitting, strictly increasing.
    pub hq_weights: Vec<f64>,
    /// Alternations per coupling weight.
    pub inner_iters: usize,
    /// Relative change of `x` that ends a stage's alternations early.
    pub inner_tol: f64,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        Self {
            beta: 3000.0,
            alpha: 0.8,
            hq_weights: vec![1.0, 4.0, 16.0, 64.0, 256.0],
            inner_iters: 1,
            inner_tol: 1e-4,
        }
    }
}

impl DeconvConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DeblurError::InvalidConfig(m));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return bad(format!("alpha must lie in (0, 2], got {}", self.alpha));
        }
        if self.hq_weights.is_empty() || self.hq_weights[0] <= 0.0 {
            return bad("hq_weights must be non-empty and positive".into());
        }
        if self.hq_weights.windows(2).any(|w| w[1] <= w[0]) {
            return bad("hq_weights must be strictly increasing".into());
        }
        if self.inner_iters == 0 {
            return bad("inner_iters must be at least 1".into());
        }
        if !(self.inner_tol >= 0.0) {
            return bad(format!("inner_tol must be non-negative, got {}", self.inner_tol));
        }
        Ok(())
    }
}

/// Minimizer of `|w|^alpha + gamma/2 (w - v)^2`.
pub fn shrink_alpha(v: f64, gamma: f64, alpha: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    if alpha == 1.0 {
        let t = 1.0 / gamma;
        return v.signum() * (v.abs() - t).max(0.0);
    }
    if alpha == 2.0 {
        return gamma * v / (2.0 + gamma);
    }
    let a = v.abs();
    let cost = |u: f64| u.powf(alpha) + 0.5 * gamma * (u - a) * (u - a);
    // stationarity g(u) = alpha u^(alpha-1) + gamma (u - a) on (0, a]
    let g = |u: f64| alpha * u.powf(alpha - 1.0) + gamma * (u - a);
    let dg = |u: f64| alpha * (alpha - 1.0) * u.powf(alpha - 2.0) + gamma;
    let u = if alpha < 1.0 {
        // g is convex with a single minimum; the relevant root lies to its
        // right, and Newton started at `a` descends onto it monotonically
        let turn = (alpha * (1.0 - alpha) / gamma).powf(1.0 / (2.0 - alpha));
        if turn >= a || g(turn) > 0.0 {
            return 0.0;
        }
        let mut u = a;
        for _ in 0..8 {
            let step = g(u) / dg(u);
            u = (u - step).max(turn);
            if step.abs() <= 1e-8 * u.max(1e-12) {
                break;
            }
        }
        u
    } else {
        // g is increasing and concave on (0, a]; Newton started left of the
        // root climbs onto it monotonically. Both bounds below satisfy g <= 0.
        let shift = a - alpha / gamma * a.powf(alpha - 1.0);
        let floor = (a * gamma / (alpha + gamma * a.powf(2.0 - alpha))).powf(1.0 / (alpha - 1.0));
        let mut u = shift.max(floor);
        for _ in 0..8 {
            let step = g(u) / dg(u);
            u = (u - step).min(a);
            if step.abs() <= 1e-8 * u.max(1e-12) {
                break;
            }
        }
        u
    };
    if cost(u) < cost(0.0) {
        v.signum() * u
    } else {
        0.0
    }
}

/// Frequency-domain factors shared by every channel of one padded grid.
struct Operator {
    width: usize,
    height: usize,
    fft: Fft2,
    kf: Vec<Complex64>,
    dx: Vec<Complex64>,
    dy: Vec<Complex64>,
}

impl Operator {
    fn new(width: usize, height: usize, k: &Kernel) -> Self {
        let fft = Fft2::new(width, height);
        let kf = fft.transfer_function(k.weights(), k.side());
        // forward differences as circular filters: x[c + 1] - x[c]
        let mut fx = Plane::zeros(width, height);
        fx.set(0, 0, -1.0);
        fx.set(0, (width - 1) % width, fx.get(0, (width - 1) % width) + 1.0);
        let mut fy = Plane::zeros(width, height);
        fy.set(0, 0, -1.0);
        fy.set((height - 1) % height, 0, fy.get((height - 1) % height, 0) + 1.0);
        let (dx, dy) = fft.forward_real_pair(&fx, &fy);
        Self { width, height, fft, kf, dx, dy }
    }
}

fn deconvolve_plane(y: &Plane, op: &Operator, offset: usize, cfg: &DeconvConfig) -> Result<Plane> {
    let (w, h) = (op.width, op.height);
    let padded = pad_smooth_periodic(y, w, h, offset);
    let yf = op.fft.forward_real(&padded);
    let two_beta = 2.0 * cfg.beta;
    let ky: Vec<Complex64> = yf.iter().zip(&op.kf).map(|(y, k)| k.conj() * y * two_beta).collect();
    let kk: Vec<f64> = op.kf.iter().map(|k| two_beta * k.norm_sqr()).collect();
    let dd: Vec<f64> = op.dx.iter().zip(&op.dy).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();

    let mut x = padded;
    for (stage, &gamma) in cfg.hq_weights.iter().enumerate() {
        for _ in 0..cfg.inner_iters {
            let g = periodic_gradients(&x);
            let wx = g.gx.map(|v| shrink_alpha(v, gamma, cfg.alpha));
            let wy = g.gy.map(|v| shrink_alpha(v, gamma, cfg.alpha));
            let (fwx, fwy) = op.fft.forward_real_pair(&wx, &wy);
            let spectrum: Vec<Complex64> = (0..ky.len())
                .map(|i| {
                    let num = ky[i] + (op.dx[i].conj() * fwx[i] + op.dy[i].conj() * fwy[i]) * gamma;
                    num / (kk[i] + gamma * dd[i])
                })
                .collect();
            let next = op.fft.inverse_real(spectrum);
            if !next.is_finite() {
                return Err(DeblurError::NonFinite { stage: "deconvolution", iteration: stage });
            }
            let change = next
                .data()
                .iter()
                .zip(x.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let norm = next.sum_squares().sqrt().max(1e-12);
            x = next;
            if change / norm < cfg.inner_tol {
                break;
            }
        }
    }
    Ok(x.crop(offset, offset, y.width(), y.height()))
}

/// Deconvolves every channel with the same kernel. The result is clamped to
/// `[0, 1]`.
pub fn deconvolve(img: &Image, k: &Kernel, cfg: &DeconvConfig) -> Result<Image> {
    cfg.validate()?;
    let margin = k.side().max(8);
    let w = fast_len(img.width() + 2 * margin);
    let h = fast_len(img.height() + 2 * margin);
    let op = Operator::new(w, h, k);
    let planes = img
        .planes()
        .iter()
        .map(|p| deconvolve_plane(p, &op, margin, cfg))
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes_clamped(planes)
}

/// `beta ||x * k - y||^2 + sum |grad x|^alpha` summed over channels, with
/// replicated borders.
pub fn deconv_objective(x: &Image, y: &Image, k: &Kernel, cfg: &DeconvConfig) -> Result<f64> {
    if !x.same_shape(y) {
        return Err(DeblurError::DimensionMismatch("objective operands differ in shape".into()));
    }
    let mut total = 0.0;
    for (xp, yp) in x.planes().iter().zip(y.planes()) {
        let blurred = convolve_plane(xp, k, BoundaryMode::Replicate)?;
        let data: f64 = blurred
            .data()
            .iter()
            .zip(yp.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let g = gradients(xp);
        let prior: f64 = g
            .gx
            .data()
            .iter()
            .chain(g.gy.data())
            .map(|v| v.abs().powf(cfg.alpha))
            .sum();
        total += cfg.beta * data + prior;
    }
    Ok(total)
}

/// Output of [`enhance_image`].
#[derive(Debug, Clone)]
pub struct Enhanced {
    pub image: Image,
    /// Tiles whose deconvolution failed; their blurry pixels were kept.
    pub failed_tiles: Vec<usize>,
}

/// Deconvolves every tile (margins included) with its kernel and averages
/// the overlaps.
pub fn enhance_image(img: &Image, plan: &TilePlan, cfg: &DeconvConfig) -> Result<Enhanced> {
    cfg.validate()?;
    let grid = &plan.grid;
    if grid.width != img.width() || grid.height != img.height() {
        return Err(DeblurError::DimensionMismatch(format!(
            "plan covers {}x{}, image is {}x{}",
            grid.width,
            grid.height,
            img.width(),
            img.height()
        )));
    }
    let kernels = plan.kernels()?;
    let outcomes: Vec<(Image, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let tile = grid.extract(img, i);
            match deconvolve(&tile, kernels[i], cfg) {
                Ok(out) => (out, false),
                Err(e) => {
                    log::warn!("tile {i}: deconvolution failed ({e}); keeping input pixels");
                    (tile, true)
                }
            }
        })
        .collect();
    let failed_tiles = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, (_, failed))| failed.then_some(i))
        .collect();
    let results: Vec<Option<Image>> = outcomes.into_iter().map(|(img, _)| Some(img)).collect();
    Ok(Enhanced {
        image: stitch_tiles(grid, &results)?,
        failed_tiles,
    })
}
