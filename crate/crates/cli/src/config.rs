//! Layered pipeline configuration: defaults, then a TOML file, then flags.

use deblur_core::pipeline::PipelineConfig;

use crate::args::Tuning;
use crate::error::CliError;

pub fn resolve(tuning: &Tuning) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &tuning.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    apply(&mut cfg, tuning);
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(cfg)
}

fn apply(cfg: &mut PipelineConfig, t: &Tuning) {
    fn set<T: Copy>(slot: &mut T, v: Option<T>) {
        if let Some(v) = v {
            *slot = v;
        }
    }
    set(&mut cfg.tiling.tile_size, t.tile_size);
    set(&mut cfg.tiling.overlap, t.overlap);
    set(&mut cfg.tiling.rng_seed, t.rng_seed);
    if t.seeds.is_some() {
        cfg.tiling.seeds = t.seeds;
    }
    let e = &mut cfg.estimation;
    set(&mut e.kernel_size, t.kernel_size);
    set(&mut e.lambda, t.lambda);
    set(&mut e.eta, t.eta);
    set(&mut e.nu, t.nu);
    set(&mut e.eta_decay, t.eta_decay);
    set(&mut e.outer_iters, t.outer_iters);
    set(&mut e.inner_iters, t.inner_iters);
    set(&mut e.pyramid_levels, t.pyramid_levels);
    set(&mut cfg.deconv.beta, t.beta);
    set(&mut cfg.deconv.alpha, t.alpha);
}

pub fn to_toml(cfg: &PipelineConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}
