use serde::Serialize;

use super::{fit_gaussian, EnergyWeights, EstimationConfig, KernelWeights, LevelProblem};
use crate::error::{DeblurError, Result};
use crate::image_core::{build_pyramid, resize_plane, to_grayscale, GradientField, Image};
use crate::kernel::{round_to_odd, Kernel};

/// Smallest tile side that gets a multi-level pyramid.
pub const MIN_PYRAMID_INPUT: usize = 64;

/// Starting kernel of an estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelInit {
    /// Full coarse-to-fine run from a delta kernel.
    Dirac,
    /// Finest-level refinement of a kernel estimated on a neighbouring tile.
    Propagated(Kernel),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelTrace {
    /// 1-based pyramid index, 1 = coarsest.
    pub omega: usize,
    pub width: usize,
    pub height: usize,
    pub kernel_side: usize,
    /// Joint energy of the level's starting point.
    pub initial_energy: f64,
    /// Joint energy after each outer iteration.
    pub energies: Vec<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct EstimationOutcome {
    pub kernel: Kernel,
    pub levels: Vec<LevelTrace>,
    /// The image was too small for the configured number of levels.
    pub reduced: bool,
}

impl EstimationOutcome {
    /// Per-outer-iteration energies across all visited levels.
    pub fn energy_trace(&self) -> Vec<f64> {
        self.levels.iter().flat_map(|l| l.energies.iter().copied()).collect()
    }
}

/// Kernel side used at pyramid level `omega` of `levels`.
pub fn level_kernel_side(cfg: &EstimationConfig, omega: usize, levels: usize) -> usize {
    let scale = cfg.pyramid_scale.powi((levels - omega) as i32);
    round_to_odd(cfg.kernel_size as f64 * scale, 3).min(cfg.kernel_size)
}

fn upscale_gradients(
    g: &GradientField,
    width: usize,
    height: usize,
) -> GradientField {
    let (cw, ch) = g.dims();
    let sx = cw as f64 / width as f64;
    let sy = ch as f64 / height as f64;
    GradientField {
        gx: resize_plane(&g.gx, width, height).map(|v| v * sx),
        gy: resize_plane(&g.gy, width, height).map(|v| v * sy),
    }
}

/// Spatially invariant blind kernel estimation on one (sub-)image.
///
/// A `Dirac` start runs every pyramid level from the coarsest, seeding each
/// finer level with the upscaled kernel and latent gradients. A propagated
/// start skips straight to the finest level.
pub fn estimate_kernel_multiscale(
    img: &Image,
    init: &KernelInit,
    cfg: &EstimationConfig,
) -> Result<EstimationOutcome> {
    cfg.validate()?;
    let gray = to_grayscale(img);
    let small = gray.width().min(gray.height()) < MIN_PYRAMID_INPUT;
    let requested = match init {
        KernelInit::Dirac if !small => cfg.pyramid_levels,
        _ => 1,
    };
    let pyramid = build_pyramid(&gray, requested, cfg.pyramid_scale)?;
    let reduced = pyramid.reduced || (small && matches!(init, KernelInit::Dirac) && cfg.pyramid_levels > 1);
    if small {
        log::warn!(
            "{}x{} input is below {MIN_PYRAMID_INPUT} px; estimating at a single level",
            gray.width(),
            gray.height()
        );
    }
    let levels = pyramid.len();
    let base = EnergyWeights {
        data: cfg.data_weight(),
        lambda: cfg.lambda,
        eta: cfg.eta,
        nu: cfg.nu,
    };

    let mut traces = Vec::with_capacity(levels);
    let mut carried: Option<(Kernel, GradientField)> = None;
    let mut kernel = Kernel::delta(1);

    for omega in 1..=levels {
        let plane = pyramid.level(omega).channel(0);
        let side = level_kernel_side(cfg, omega, levels);
        let problem = LevelProblem::from_image(&plane, side);

        let (k0, x0) = match (&carried, init) {
            (Some((k, g)), _) => {
                let ratio = g.dims().0 as f64 / plane.width() as f64;
                let k = k.resample(side, ratio);
                let g = upscale_gradients(g, plane.width(), plane.height());
                (k, problem.embed_inner(&g))
            }
            (None, KernelInit::Dirac) => (Kernel::delta(side), problem.grad_i().clone()),
            (None, KernelInit::Propagated(k)) => {
                let k = if k.side() == side { k.clone() } else { k.resample(side, 1.0) };
                let x = problem.ista(&k, problem.grad_i(), cfg)?.grad;
                (k, x)
            }
        };

        let initial_energy = super::joint_energy(&problem, &x0, &k0, &base);
        let mut weights = KernelWeights::initial(cfg);
        let mut x = x0;
        let mut k = k0;
        let mut energies = Vec::with_capacity(cfg.outer_iters);
        for _ in 0..cfg.outer_iters {
            k = match problem.kernel_update(&x, side, &mut weights, cfg) {
                Ok(k) => k,
                // shrinkage removed every latent gradient; keep the kernel
                Err(DeblurError::Singular(msg)) => {
                    log::debug!("level {omega}: kernel update skipped ({msg})");
                    weights.decay(cfg);
                    k
                }
                Err(e) => return Err(e),
            };
            x = problem.ista(&k, &x, cfg)?.grad;
            let current = EnergyWeights {
                eta: weights.eta,
                nu: weights.nu,
                ..base
            };
            energies.push(super::joint_energy(&problem, &x, &k, &current));
        }
        log::debug!(
            "level {omega}/{levels} {}x{} side {side}: sigma {:.3}, energy {:.4e} -> {:.4e}",
            plane.width(),
            plane.height(),
            fit_gaussian(&k),
            initial_energy,
            energies.last().copied().unwrap_or(initial_energy)
        );
        traces.push(LevelTrace {
            omega,
            width: plane.width(),
            height: plane.height(),
            kernel_side: side,
            initial_energy,
            energies,
            sigma: fit_gaussian(&k),
        });
        carried = Some((k.clone(), problem.crop_inner(&x)));
        kernel = k;
    }

    Ok(EstimationOutcome {
        kernel,
        levels: traces,
        reduced,
    })
}
