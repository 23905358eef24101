//! End-to-end enhancement: tile, estimate kernels, deconvolve, stitch.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::blind::EstimationConfig;
use crate::error::{DeblurError, Result};
use crate::image_core::{Image, MIN_CORE};
use crate::nonblind::{enhance_image, DeconvConfig};
use crate::propagation::{estimate_all, plan_tiles, TilePlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilingConfig {
    /// Side of a tile's core region.
    pub tile_size: usize,
    /// Margin added around each core.
    pub overlap: usize,
    /// Seed tiles; `None` uses the size of the worker pool.
    pub seeds: Option<usize>,
    pub rng_seed: u64,
}

impl Default for TilingConfig {
    fn default() -> Self {
        Self {
            tile_size: 200,
            overlap: 20,
            seeds: None,
            rng_seed: 0,
        }
    }
}

impl TilingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tile_size < MIN_CORE {
            return Err(DeblurError::InvalidConfig(format!(
                "tile_size must be at least {MIN_CORE}, got {}",
                self.tile_size
            )));
        }
        if 2 * self.overlap >= self.tile_size {
            return Err(DeblurError::InvalidConfig(format!(
                "overlap {} must be less than half the tile size {}",
                self.overlap, self.tile_size
            )));
        }
        if self.seeds == Some(0) {
            return Err(DeblurError::InvalidConfig("seeds must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_seeds(&self) -> usize {
        self.seeds.unwrap_or_else(rayon::current_num_threads)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tiling: TilingConfig,
    pub estimation: EstimationConfig,
    pub deconv: DeconvConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.tiling.validate()?;
        self.estimation.validate()?;
        self.deconv.validate()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Timings {
    pub estimation: Duration,
    pub deconvolution: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.estimation + self.deconvolution
    }
}

#[derive(Debug, Clone)]
pub struct EnhanceOutput {
    pub image: Image,
    pub plan: TilePlan,
    /// Tiles whose deconvolution failed and kept their input pixels.
    pub failed_tiles: Vec<usize>,
    pub timings: Timings,
}

/// Deblurs `img` with per-tile kernels estimated blindly, on the current
/// rayon pool.
pub fn enhance(img: &Image, cfg: &PipelineConfig) -> Result<EnhanceOutput> {
    cfg.validate()?;
    let t = &cfg.tiling;
    let start = Instant::now();
    let plan = plan_tiles(img, t.tile_size, t.overlap, t.resolved_seeds(), t.rng_seed)?;
    log::info!(
        "{}x{} image: {}x{} tiles, {} seed(s)",
        img.width(),
        img.height(),
        plan.grid.rows,
        plan.grid.cols,
        plan.seeds.len()
    );
    let plan = estimate_all(img, plan, &cfg.estimation)?;
    let estimation = start.elapsed();
    let start = Instant::now();
    let out = enhance_image(img, &plan, &cfg.deconv)?;
    let deconvolution = start.elapsed();
    log::info!(
        "estimation {:.2}s, deconvolution {:.2}s",
        estimation.as_secs_f64(),
        deconvolution.as_secs_f64()
    );
    Ok(EnhanceOutput {
        image: out.image,
        plan,
        failed_tiles: out.failed_tiles,
        timings: Timings {
            estimation,
            deconvolution,
        },
    })
}
