//! Non-uniform estimation over a tile grid: a few randomly placed seed tiles
//! get the full coarse-to-fine estimation, every other tile starts from a
//! finished neighbour's kernel and is refined at the finest level only.

use std::collections::VecDeque;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blind::{
    estimate_kernel_multiscale, fit_gaussian_likelihood, EstimationConfig, KernelInit, LevelTrace,
};
use crate::error::{DeblurError, Result};
use crate::image_core::{split_tiles, Image, Rect, TileGrid};
use crate::kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TileStatus {
    Pending,
    Seed,
    Propagated { from: usize },
}

/// Where a tile's estimation starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitSource {
    Dirac,
    Neighbour(usize),
}

/// Whether non-seed tiles reuse a neighbour's kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagationMode {
    #[default]
    Propagate,
    /// Every tile runs the full pyramid from a delta kernel.
    AllSeeds,
}

#[derive(Debug, Clone)]
pub struct TileEstimate {
    pub kernel: Kernel,
    /// Width of the closest circular Gaussian.
    pub sigma: f64,
    pub levels: Vec<LevelTrace>,
    /// Estimation failed and the initialization kernel was kept.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct TilePlan {
    pub grid: TileGrid,
    pub seeds: Vec<usize>,
    pub assignment: Vec<TileStatus>,
    pub estimates: Vec<Option<TileEstimate>>,
}

impl TilePlan {
    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid.rows, self.grid.cols)
    }

    pub fn is_complete(&self) -> bool {
        self.estimates.iter().all(Option::is_some)
    }

    /// One kernel per tile, in tile order.
    pub fn kernels(&self) -> Result<Vec<&Kernel>> {
        self.estimates
            .iter()
            .enumerate()
            .map(|(i, e)| e.as_ref().map(|e| &e.kernel).ok_or(DeblurError::MissingTile(i)))
            .collect()
    }

    /// Indices of tiles that kept their initialization after a failure.
    pub fn fallback_tiles(&self) -> Vec<usize> {
        self.estimates
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().filter(|e| e.fallback).map(|_| i))
            .collect()
    }

    /// A plan with the given kernel on every tile.
    pub fn uniform(grid: TileGrid, kernel: &Kernel) -> Self {
        let n = grid.len();
        let estimate = TileEstimate {
            kernel: kernel.clone(),
            sigma: fit_gaussian_likelihood(kernel),
            levels: Vec::new(),
            fallback: false,
        };
        Self {
            grid,
            seeds: (0..n).collect(),
            assignment: vec![TileStatus::Seed; n],
            estimates: vec![Some(estimate); n],
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct TileDump {
            index: usize,
            grid_row: usize,
            grid_col: usize,
            core: Rect,
            outer: Rect,
            seed: bool,
            status: TileStatus,
            sigma: Option<f64>,
            kernel_side: Option<usize>,
            levels: Option<usize>,
            fallback: bool,
        }
        #[derive(Serialize)]
        struct PlanDump {
            width: usize,
            height: usize,
            rows: usize,
            cols: usize,
            core_size: usize,
            overlap: usize,
            seeds: Vec<usize>,
            tiles: Vec<TileDump>,
        }
        let tiles = self
            .grid
            .tiles
            .iter()
            .map(|t| {
                let e = self.estimates[t.index].as_ref();
                TileDump {
                    index: t.index,
                    grid_row: t.grid_row,
                    grid_col: t.grid_col,
                    core: t.core,
                    outer: t.outer,
                    seed: self.seeds.contains(&t.index),
                    status: self.assignment[t.index],
                    sigma: e.map(|e| e.sigma),
                    kernel_side: e.map(|e| e.kernel.side()),
                    levels: e.map(|e| e.levels.len()),
                    fallback: e.is_some_and(|e| e.fallback),
                }
            })
            .collect();
        serde_json::to_value(PlanDump {
            width: self.grid.width,
            height: self.grid.height,
            rows: self.grid.rows,
            cols: self.grid.cols,
            core_size: self.grid.core_size,
            overlap: self.grid.overlap,
            seeds: self.seeds.clone(),
            tiles,
        })
        .expect("plan dump serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()).expect("plan dump serializes");
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Tiles eligible as seeds: the interior, or every tile when the grid has no
/// interior.
fn seed_candidates(grid: &TileGrid) -> Vec<usize> {
    if grid.rows <= 2 || grid.cols <= 2 {
        return (0..grid.len()).collect();
    }
    (0..grid.len()).filter(|&i| !grid.is_boundary(i)).collect()
}

/// Tiles the image and draws `n_seeds` distinct seed tiles.
pub fn plan_tiles(img: &Image, core: usize, overlap: usize, n_seeds: usize, rng_seed: u64) -> Result<TilePlan> {
    plan_grid(split_tiles(img, core, overlap), n_seeds, rng_seed)
}

pub fn plan_grid(grid: TileGrid, n_seeds: usize, rng_seed: u64) -> Result<TilePlan> {
    if n_seeds == 0 {
        return Err(DeblurError::InvalidConfig("at least one seed is required".into()));
    }
    let candidates = seed_candidates(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let take = n_seeds.min(candidates.len());
    let mut seeds: Vec<usize> = rand::seq::index::sample(&mut rng, candidates.len(), take)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    seeds.sort_unstable();
    let mut assignment = vec![TileStatus::Pending; grid.len()];
    for &s in &seeds {
        assignment[s] = TileStatus::Seed;
    }
    let n = grid.len();
    Ok(TilePlan {
        grid,
        seeds,
        assignment,
        estimates: vec![None; n],
    })
}

/// Breadth-first waves from all seeds. Wave 0 holds the seeds; a tile in
/// wave `d` starts from its lowest-index neighbour in wave `d - 1`.
pub fn propagation_order(plan: &TilePlan) -> Result<Vec<Vec<(usize, InitSource)>>> {
    if plan.seeds.is_empty() {
        return Err(DeblurError::InvalidConfig("plan has no seeds".into()));
    }
    let grid = &plan.grid;
    let mut depth = vec![usize::MAX; grid.len()];
    let mut queue = VecDeque::new();
    for &s in &plan.seeds {
        depth[s] = 0;
        queue.push_back(s);
    }
    while let Some(t) = queue.pop_front() {
        for n in grid.neighbours(t) {
            if depth[n] == usize::MAX {
                depth[n] = depth[t] + 1;
                queue.push_back(n);
            }
        }
    }
    let max_depth = depth.iter().copied().max().unwrap_or(0);
    let mut waves = vec![Vec::new(); max_depth + 1];
    for (t, &d) in depth.iter().enumerate() {
        let source = if d == 0 {
            InitSource::Dirac
        } else {
            let from = grid
                .neighbours(t)
                .into_iter()
                .filter(|&n| depth[n] + 1 == d)
                .min()
                .expect("a tile at depth d has a neighbour at depth d - 1");
            InitSource::Neighbour(from)
        };
        waves[d].push((t, source));
    }
    Ok(waves)
}

fn estimate_tile(img: &Image, plan: &TilePlan, tile: usize, init: &KernelInit, cfg: &EstimationConfig) -> TileEstimate {
    let pixels = plan.grid.extract(img, tile);
    match estimate_kernel_multiscale(&pixels, init, cfg) {
        Ok(out) => TileEstimate {
            sigma: fit_gaussian_likelihood(&out.kernel),
            kernel: out.kernel,
            levels: out.levels,
            fallback: false,
        },
        Err(e) => {
            log::warn!("tile {tile}: estimation failed ({e}); keeping the initial kernel");
            let kernel = match init {
                KernelInit::Dirac => Kernel::delta(cfg.kernel_size),
                KernelInit::Propagated(k) => k.clone(),
            };
            TileEstimate {
                sigma: fit_gaussian_likelihood(&kernel),
                kernel,
                levels: Vec::new(),
                fallback: true,
            }
        }
    }
}

/// Runs the estimation wave by wave; tiles of one wave run in parallel on
/// the current rayon pool.
pub fn estimate_all(img: &Image, plan: TilePlan, cfg: &EstimationConfig) -> Result<TilePlan> {
    estimate_all_with(img, plan, cfg, PropagationMode::Propagate)
}

pub fn estimate_all_with(
    img: &Image,
    mut plan: TilePlan,
    cfg: &EstimationConfig,
    mode: PropagationMode,
) -> Result<TilePlan> {
    cfg.validate()?;
    if plan.grid.width != img.width() || plan.grid.height != img.height() {
        return Err(DeblurError::DimensionMismatch(format!(
            "plan covers {}x{}, image is {}x{}",
            plan.grid.width,
            plan.grid.height,
            img.width(),
            img.height()
        )));
    }
    let waves = match mode {
        PropagationMode::Propagate => propagation_order(&plan)?,
        PropagationMode::AllSeeds => vec![(0..plan.grid.len()).map(|t| (t, InitSource::Dirac)).collect()],
    };
    for (d, wave) in waves.iter().enumerate() {
        log::info!("wave {d}: {} tile(s)", wave.len());
        let inits: Vec<(usize, KernelInit)> = wave
            .iter()
            .map(|&(t, source)| {
                let init = match source {
                    InitSource::Dirac => KernelInit::Dirac,
                    InitSource::Neighbour(from) => KernelInit::Propagated(
                        plan.estimates[from]
                            .as_ref()
                            .expect("predecessor finished in an earlier wave")
                            .kernel
                            .clone(),
                    ),
                };
                (t, init)
            })
            .collect();
        let plan_ref = &plan;
        let results: Vec<(usize, TileEstimate)> = inits
            .par_iter()
            .map(|(t, init)| (*t, estimate_tile(img, plan_ref, *t, init, cfg)))
            .collect();
        for (&(t, source), (_, estimate)) in wave.iter().zip(results) {
            plan.assignment[t] = match source {
                InitSource::Dirac => TileStatus::Seed,
                InitSource::Neighbour(from) => TileStatus::Propagated { from },
            };
            plan.estimates[t] = Some(estimate);
        }
    }
    Ok(plan)
}
