use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use deblur_core::synthesis::DistortionLevel;

#[derive(Debug, Parser)]
#[command(name = "deblur", version, about = "Blind non-uniform deblurring for large microscopy images")]
pub struct Cli {
    /// Worker threads; defaults to the available hardware parallelism.
    #[arg(long, global = true, env = "DEBLUR_THREADS")]
    pub threads: Option<usize>,

    /// Log progress (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deblur one image.
    Enhance {
        input: PathBuf,
        output: PathBuf,
        /// Write the tile plan and estimated kernels as JSON.
        #[arg(long, value_name = "JSON")]
        dump_plan: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Blur a directory of sharp images at one distortion level.
    Synthesize {
        sharp_dir: PathBuf,
        out_dir: PathBuf,
        /// I, II, III or IV (or 1 to 4).
        #[arg(long, value_parser = parse_level)]
        level: DistortionLevel,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Spatial spread of each blur blob.
        #[arg(long)]
        sigma_l: Option<f64>,
        /// Divide drawn blur strengths by 255.
        #[arg(long)]
        sigma_in_255_units: bool,
    },
    /// Enhance and score every entry of a synthetic dataset manifest.
    Evaluate {
        manifest: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Print the effective pipeline configuration as TOML.
    DumpConfig {
        #[command(flatten)]
        tuning: Tuning,
    },
}

/// Pipeline overrides shared by the subcommands that run the pipeline.
#[derive(Debug, Default, Clone, Args)]
pub struct Tuning {
    /// TOML file with `[tiling]`, `[estimation]` and `[deconv]` tables.
    #[arg(long, value_name = "TOML")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tile_size: Option<usize>,
    #[arg(long)]
    pub overlap: Option<usize>,
    /// Seed tiles; defaults to the thread count.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    #[arg(long)]
    pub kernel_size: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub eta_decay: Option<f64>,
    #[arg(long)]
    pub outer_iters: Option<usize>,
    #[arg(long)]
    pub inner_iters: Option<usize>,
    #[arg(long)]
    pub pyramid_levels: Option<usize>,
    /// Data weight of the non-blind deconvolution.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Exponent of the hyper-Laplacian gradient prior.
    #[arg(long)]
    pub alpha: Option<f64>,
}

fn parse_level(s: &str) -> Result<DistortionLevel, String> {
    s.parse().map_err(|e: deblur_core::DeblurError| e.to_string())
}
