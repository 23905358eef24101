use super::{EstimationConfig, LevelProblem};
use crate::error::{DeblurError, Result};
use crate::image_core::{GradientField, Plane};
use crate::kernel::Kernel;

/// Result of one gradient-map update.
#[derive(Debug, Clone)]
pub struct IstaRun {
    pub grad: GradientField,
    /// Energy of the starting point followed by one entry per iteration.
    pub energies: Vec<f64>,
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl LevelProblem {
    /// Proximal-gradient iterations on
    /// `data ||k * gX - gI||^2 + lambda |gX|_1`, each component separately.
    ///
    /// The step is `ista_step / data`, so the gradient move is
    /// `2 ista_step * rot180(k) * (k * gX - gI)` and the shrinkage threshold
    /// is `lambda * ista_step / data`.
    pub fn ista(&self, k: &Kernel, init: &GradientField, cfg: &EstimationConfig) -> Result<IstaRun> {
        let data = cfg.data_weight();
        let kf = self.transfer(k);
        let step = 2.0 * cfg.ista_step;
        let threshold = cfg.lambda * cfg.ista_step / data;
        let energy = |x: &GradientField, r: &GradientField| data * r.sum_squares() + cfg.lambda * x.sum_abs();

        let mut x = init.clone();
        let mut r = self.residual(&x, &kf);
        let mut prev = energy(&x, &r);
        if !prev.is_finite() {
            return Err(DeblurError::NonFinite { stage: "ista", iteration: 0 });
        }
        let mut energies = vec![prev];
        for iteration in 1..=cfg.inner_iters {
            // adjoint of circular convolution = multiplication by conj(kf)
            let (mut fx, mut fy) = self.spectra(&r);
            for i in 0..fx.len() {
                let c = kf[i].conj();
                fx[i] *= c;
                fy[i] *= c;
            }
            let (adj_x, adj_y) = self.fft.inverse_real_pair(&fx, &fy);
            let update = |xc: &Plane, adj: &Plane| -> Plane {
                let data = xc
                    .data()
                    .iter()
                    .zip(adj.data())
                    .map(|(&v, &a)| soft_threshold(v - step * a, threshold))
                    .collect();
                Plane::from_vec(xc.width(), xc.height(), data).expect("same grid")
            };
            x = GradientField {
                gx: update(&x.gx, &adj_x),
                gy: update(&x.gy, &adj_y),
            };
            r = self.residual(&x, &kf);
            let e = energy(&x, &r);
            if !e.is_finite() {
                return Err(DeblurError::NonFinite { stage: "ista", iteration });
            }
            energies.push(e);
            let converged = prev - e < cfg.early_stop * prev.abs();
            prev = e;
            if converged {
                break;
            }
        }
        Ok(IstaRun { grad: x, energies })
    }
}

/// Sparse gradient-map update for a fixed kernel on an unpadded grid.
pub fn ista_gradient_update(
    grad_i: &GradientField,
    k: &Kernel,
    init: &GradientField,
    cfg: &EstimationConfig,
) -> Result<GradientField> {
    if grad_i.dims() != init.dims() {
        return Err(DeblurError::DimensionMismatch(
            "initial gradients differ from observed gradients".into(),
        ));
    }
    let problem = LevelProblem::from_gradients(grad_i.clone());
    Ok(problem.ista(k, init, cfg)?.grad)
}

/// Value of `data ||k * gX - gI||^2 + lambda |gX|_1` on an unpadded grid.
pub fn gradient_energy(
    grad_x: &GradientField,
    k: &Kernel,
    grad_i: &GradientField,
    cfg: &EstimationConfig,
) -> f64 {
    let problem = LevelProblem::from_gradients(grad_i.clone());
    cfg.data_weight() * problem.data_energy(grad_x, k) + cfg.lambda * grad_x.sum_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(w: usize, h: usize, scale: f64, rng: &mut ChaCha8Rng) -> GradientField {
        GradientField {
            gx: Plane::from_fn(w, h, |_, _| scale * (rng.gen::<f64>() - 0.5)),
            gy: Plane::from_fn(w, h, |_, _| scale * (rng.gen::<f64>() - 0.5)),
        }
    }

    #[test]
    fn zero_observation_is_a_fixed_point() {
        let g0 = GradientField::zeros(10, 8);
        let out = ista_gradient_update(&g0, &Kernel::gaussian(3, 0.8), &g0, &Default::default()).unwrap();
        assert!(out.gx.data().iter().chain(out.gy.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn delta_kernel_without_prior_reproduces_observation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gi = random_field(12, 12, 0.4, &mut rng);
        let cfg = EstimationConfig {
            lambda: 0.0,
            inner_iters: 50,
            ..Default::default()
        };
        let out = ista_gradient_update(&gi, &Kernel::delta(3), &GradientField::zeros(12, 12), &cfg).unwrap();
        for (a, b) in out.gx.data().iter().zip(gi.gx.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn energy_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cfg = EstimationConfig {
            inner_iters: 40,
            early_stop: 0.0,
            ..Default::default()
        };
        let problem = LevelProblem::from_gradients(random_field(16, 16, 0.3, &mut rng));
        let k = Kernel::gaussian(5, 1.3);
        let run = problem.ista(&k, problem.grad_i(), &cfg).unwrap();
        for w in run.energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }
}
