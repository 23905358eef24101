use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use deblur_core::evaluation::{run_benchmark, BenchmarkOptions};
use deblur_core::image_core::io::{load_image, save_image, BitDepth};
use deblur_core::pipeline::{enhance, PipelineConfig};
use deblur_core::synthesis::{
    make_level_dataset, read_manifest, write_manifest, DistortionLevel, ManifestEntry, SynthesisConfig,
};
use deblur_core::Image;

use crate::error::{from_pipeline, CliError};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "tif", "tiff"];

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn check_output_path(path: &Path) -> Result<(), CliError> {
    if !has_image_extension(path) {
        return Err(CliError::Output(format!(
            "{}: output must end in .png, .tif or .tiff",
            path.display()
        )));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::Output(format!(
            "{}: directory {} does not exist",
            path.display(),
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn depth_name(d: BitDepth) -> &'static str {
    match d {
        BitDepth::Eight => "8-bit",
        BitDepth::Sixteen => "16-bit",
    }
}

pub fn cmd_enhance(
    input: &Path,
    output: &Path,
    dump_plan: Option<&Path>,
    cfg: &PipelineConfig,
) -> Result<(), CliError> {
    check_output_path(output)?;
    let (img, depth) = load_image(input).map_err(|e| CliError::Input(e.to_string()))?;
    println!(
        "input      {} ({}x{}, {} channel(s), {})",
        input.display(),
        img.width(),
        img.height(),
        img.channels(),
        depth_name(depth)
    );
    let out = enhance(&img, cfg).map_err(from_pipeline)?;
    let (rows, cols) = out.plan.grid_dims();
    println!(
        "tiles      {rows}x{cols} of {} px (+{} overlap), {} seed(s) {:?}, rng seed {}",
        cfg.tiling.tile_size, cfg.tiling.overlap, out.plan.seeds.len(), out.plan.seeds, cfg.tiling.rng_seed
    );
    let fallback = out.plan.fallback_tiles();
    if !fallback.is_empty() {
        println!("fallback   tiles {fallback:?} kept their initial kernel");
    }
    if !out.failed_tiles.is_empty() {
        println!("failed     tiles {:?} kept their input pixels", out.failed_tiles);
    }
    println!("estimation    {:>8.3} s", out.timings.estimation.as_secs_f64());
    println!("deconvolution {:>8.3} s", out.timings.deconvolution.as_secs_f64());
    println!("total         {:>8.3} s", out.timings.total().as_secs_f64());

    let start = Instant::now();
    save_image(output, &out.image, depth).map_err(|e| CliError::Output(e.to_string()))?;
    log::debug!("saved in {:.3} s", start.elapsed().as_secs_f64());
    println!("wrote      {}", output.display());
    if let Some(path) = dump_plan {
        let mut json = out.plan.to_json();
        json["rng_seed"] = cfg.tiling.rng_seed.into();
        json["config"] = serde_json::to_value(cfg).expect("config serializes");
        let text = serde_json::to_string_pretty(&json).expect("plan serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        println!("plan       {}", path.display());
    }
    Ok(())
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let read = fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && has_image_extension(p))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Input(format!("{}: no .png or .tif images found", dir.display())));
    }
    Ok(paths)
}

pub fn cmd_synthesize(
    sharp_dir: &Path,
    out_dir: &Path,
    level: DistortionLevel,
    rng_seed: u64,
    cfg: &SynthesisConfig,
) -> Result<(), CliError> {
    let paths = list_images(sharp_dir)?;
    let mut images: Vec<Image> = Vec::with_capacity(paths.len());
    let mut depths = Vec::with_capacity(paths.len());
    for p in &paths {
        let (img, depth) = load_image(p).map_err(|e| CliError::Input(e.to_string()))?;
        images.push(img);
        depths.push(depth);
    }
    let blurred_dir = out_dir.join("blurred");
    fs::create_dir_all(&blurred_dir)
        .map_err(|e| CliError::Output(format!("{}: {e}", blurred_dir.display())))?;

    let start = Instant::now();
    let samples = make_level_dataset(&images, level, rng_seed, cfg).map_err(from_pipeline)?;
    let mut entries = Vec::with_capacity(samples.len());
    for ((path, depth), sample) in paths.iter().zip(&depths).zip(samples) {
        let name = path.file_name().expect("listed files have names");
        let rel = Path::new("blurred").join(name);
        save_image(&out_dir.join(&rel), &sample.blurred, *depth).map_err(|e| CliError::Output(e.to_string()))?;
        let sharp_path = fs::canonicalize(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        entries.push(ManifestEntry {
            blurred_path: rel,
            sharp_path,
            level,
            specs: sample.specs,
            rng_seed,
        });
    }
    let manifest = out_dir.join("manifest.json");
    write_manifest(&manifest, &entries).map_err(|e| CliError::Output(e.to_string()))?;
    println!(
        "synthesized {} image(s) at level {level} ({} blur(s) each) in {:.3} s",
        entries.len(),
        level.n_blurs(),
        start.elapsed().as_secs_f64()
    );
    println!("manifest    {}", manifest.display());
    Ok(())
}

pub fn cmd_evaluate(
    manifest: &Path,
    csv: Option<&Path>,
    cfg: &PipelineConfig,
    deterministic: bool,
) -> Result<(), CliError> {
    let entries = read_manifest(manifest).map_err(|e| CliError::Input(e.to_string()))?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let opts = BenchmarkOptions { zero_runtimes: deterministic };
    let report = run_benchmark(&entries, base, cfg, opts).map_err(from_pipeline)?;
    match csv {
        Some(path) => {
            fs::write(path, report.to_csv()).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            println!("csv    {}", path.display());
        }
        None => print!("{}", report.to_csv()),
    }
    println!();
    print!("{}", report.table());
    if report.rows.is_empty() && !report.skipped.is_empty() {
        return Err(CliError::Input(format!("none of the {} manifest entries could be scored", entries.len())));
    }
    Ok(())
}
