use rustfft::num_complex::Complex64;

use crate::fft::Fft2;
use crate::image_core::{fast_len, gradients, pad_smooth_periodic, GradientField, Plane};
use crate::kernel::Kernel;

/// Observed gradients of one pyramid level together with their spectra.
///
/// All convolutions inside the estimator are circular on this grid. When
/// built from an image the grid is the image padded to an FFT-friendly size
/// with a smooth wrap-around margin, so the periodic model does not see a
/// jump at the borders.
pub struct LevelProblem {
    pub(crate) fft: Fft2,
    pub(crate) grad_i: GradientField,
    pub(crate) spec_ix: Vec<Complex64>,
    pub(crate) spec_iy: Vec<Complex64>,
    /// Offset of the unpadded level inside the grid.
    pub(crate) offset: usize,
    /// Unpadded level size.
    pub(crate) inner: (usize, usize),
}

impl LevelProblem {
    /// Problem on exactly the given gradient grid (no padding).
    pub fn from_gradients(grad_i: GradientField) -> Self {
        let (w, h) = grad_i.dims();
        let fft = Fft2::new(w, h);
        let (spec_ix, spec_iy) = fft.forward_real_pair(&grad_i.gx, &grad_i.gy);
        Self {
            fft,
            grad_i,
            spec_ix,
            spec_iy,
            offset: 0,
            inner: (w, h),
        }
    }

    /// Pads `level` by at least `margin` on each side before taking
    /// gradients.
    pub fn from_image(level: &Plane, margin: usize) -> Self {
        let (w, h) = level.dims();
        if margin == 0 {
            let mut p = Self::from_gradients(gradients(level));
            p.inner = (w, h);
            return p;
        }
        let pw = fast_len(w + 2 * margin);
        let ph = fast_len(h + 2 * margin);
        let padded = pad_smooth_periodic(level, pw, ph, margin);
        let mut p = Self::from_gradients(periodic_gradients(&padded));
        p.offset = margin;
        p.inner = (w, h);
        p
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grad_i.dims()
    }

    pub fn grad_i(&self) -> &GradientField {
        &self.grad_i
    }

    /// Latent gradients restricted to the unpadded level.
    pub fn crop_inner(&self, g: &GradientField) -> GradientField {
        let (w, h) = self.inner;
        GradientField {
            gx: g.gx.crop(self.offset, self.offset, w, h),
            gy: g.gy.crop(self.offset, self.offset, w, h),
        }
    }

    /// Places an unpadded gradient field into the grid; the margin takes
    /// the observed gradients.
    pub fn embed_inner(&self, g: &GradientField) -> GradientField {
        let mut out = self.grad_i.clone();
        let (w, h) = self.inner;
        for (dst, src) in [(&mut out.gx, &g.gx), (&mut out.gy, &g.gy)] {
            for r in 0..h {
                for c in 0..w {
                    dst.set(r + self.offset, c + self.offset, src.get(r, c));
                }
            }
        }
        out
    }

    pub(crate) fn transfer(&self, k: &Kernel) -> Vec<Complex64> {
        self.fft.transfer_function(k.weights(), k.side())
    }

    pub(crate) fn spectra(&self, g: &GradientField) -> (Vec<Complex64>, Vec<Complex64>) {
        self.fft.forward_real_pair(&g.gx, &g.gy)
    }

    /// `k * g - grad_i` for both components.
    pub(crate) fn residual(&self, g: &GradientField, kf: &[Complex64]) -> GradientField {
        let (mut fx, mut fy) = self.spectra(g);
        for i in 0..fx.len() {
            fx[i] = fx[i] * kf[i] - self.spec_ix[i];
            fy[i] = fy[i] * kf[i] - self.spec_iy[i];
        }
        let (gx, gy) = self.fft.inverse_real_pair(&fx, &fy);
        GradientField { gx, gy }
    }

    /// Squared residual norm from precomputed latent spectra (Parseval).
    pub(crate) fn residual_norm_spectral(
        &self,
        fx: &[Complex64],
        fy: &[Complex64],
        kf: &[Complex64],
    ) -> f64 {
        let mut acc = 0.0;
        for i in 0..fx.len() {
            acc += (fx[i] * kf[i] - self.spec_ix[i]).norm_sqr();
            acc += (fy[i] * kf[i] - self.spec_iy[i]).norm_sqr();
        }
        acc / self.fft.len() as f64
    }

    pub fn data_energy(&self, g: &GradientField, k: &Kernel) -> f64 {
        self.residual(g, &self.transfer(k)).sum_squares()
    }
}

/// Forward differences with wrap-around.
pub(crate) fn periodic_gradients(p: &Plane) -> GradientField {
    let (w, h) = p.dims();
    GradientField {
        gx: Plane::from_fn(w, h, |r, c| p.get(r, (c + 1) % w) - p.get(r, c)),
        gy: Plane::from_fn(w, h, |r, c| p.get((r + 1) % h, c) - p.get(r, c)),
    }
}

/// Circular-Gaussian mismatch `min_sigma ||k - G(sigma)||^2` of the kernel
/// prior.
pub fn gaussian_mismatch(k: &Kernel) -> f64 {
    let g = Kernel::gaussian(k.side(), super::fit_gaussian_likelihood(k));
    k.weights()
        .iter()
        .zip(g.weights())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Weights of the joint energy at one moment of the alternation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWeights {
    pub data: f64,
    pub lambda: f64,
    pub eta: f64,
    pub nu: f64,
}

/// Joint energy `data ||k * gX - gI||^2 + lambda |gX|_1 + eta p(k) + nu ||k||^2`.
pub fn joint_energy(
    problem: &LevelProblem,
    g: &GradientField,
    k: &Kernel,
    weights: &EnergyWeights,
) -> f64 {
    weights.data * problem.data_energy(g, k)
        + weights.lambda * g.sum_abs()
        + weights.eta * gaussian_mismatch(k)
        + weights.nu * k.sum_squares()
}
