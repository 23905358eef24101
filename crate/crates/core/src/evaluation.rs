//! Scoring of enhancement results: full-reference PSNR for synthetic
//! experiments, a no-reference sharpness score for real images, and the
//! benchmark over a synthetic dataset manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DeblurError, Result};
use crate::image_core::io::load_image;
use crate::image_core::{gradients, to_grayscale, Image};
use crate::pipeline::{enhance, PipelineConfig};
use crate::synthesis::{DistortionLevel, ManifestEntry};

/// Header of the benchmark CSV.
pub const CSV_HEADER: &str = "image,level,psnr_blurred,psnr_enhanced,gain_db,runtime_s";

/// Gradient energy at which the sharpness score reaches `tanh(1/2)`.
const SHARPNESS_SCALE: f64 = 0.005;

/// `10 log10(1 / mse)` over all samples, with peak 1. Identical images give
/// `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(DeblurError::DimensionMismatch(format!(
            "psnr of {}x{}x{} and {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() })
}

/// Formats a PSNR value; infinity prints as `inf`.
pub fn format_db(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.4}")
    }
}

/// Mean squared forward-difference gradient of the grayscale image, mapped
/// to `[0, 1)` by `2 / (1 + exp(-e / s)) - 1`. Higher is sharper. This is a
/// contrast-dependent proxy, not a perceptual quality score.
pub fn sharpness_proxy(img: &Image) -> f64 {
    let gray = to_grayscale(img).channel(0);
    let g = gradients(&gray);
    let energy = g.sum_squares() / gray.data().len() as f64;
    2.0 / (1.0 + (-energy / SHARPNESS_SCALE).exp()) - 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub image: String,
    pub level: DistortionLevel,
    pub psnr_blurred: f64,
    pub psnr_enhanced: f64,
    pub gain_db: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub level: DistortionLevel,
    pub count: usize,
    pub mean_psnr_blurred: f64,
    pub mean_psnr_enhanced: f64,
    pub mean_gain_db: f64,
    pub std_gain_db: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Entries that could not be scored, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl EvalReport {
    pub fn levels(&self) -> Vec<LevelSummary> {
        let mut groups: BTreeMap<DistortionLevel, Vec<&EvalRow>> = BTreeMap::new();
        for row in &self.rows {
            groups.entry(row.level).or_default().push(row);
        }
        groups
            .into_iter()
            .map(|(level, rows)| {
                let n = rows.len() as f64;
                let mean = |f: fn(&EvalRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
                let mean_gain = mean(|r| r.gain_db);
                let var = rows.iter().map(|r| (r.gain_db - mean_gain).powi(2)).sum::<f64>() / n;
                LevelSummary {
                    level,
                    count: rows.len(),
                    mean_psnr_blurred: mean(|r| r.psnr_blurred),
                    mean_psnr_enhanced: mean(|r| r.psnr_enhanced),
                    mean_gain_db: mean_gain,
                    std_gain_db: var.sqrt(),
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let name = if r.image.contains([',', '"', '\n']) {
                format!("\"{}\"", r.image.replace('"', "\"\""))
            } else {
                r.image.clone()
            };
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{:.3}",
                r.level,
                format_db(r.psnr_blurred),
                format_db(r.psnr_enhanced),
                format_db(r.gain_db),
                r.runtime_s
            );
        }
        out
    }

    /// Human-readable per-level summary.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<6} {:>5} {:>12} {:>13} {:>10} {:>9}",
            "level", "n", "psnr_blur", "psnr_enh", "gain_dB", "std"
        );
        for s in self.levels() {
            let _ = writeln!(
                out,
                "{:<6} {:>5} {:>12.3} {:>13.3} {:>+10.3} {:>9.3}",
                s.level.to_string(),
                s.count,
                s.mean_psnr_blurred,
                s.mean_psnr_enhanced,
                s.mean_gain_db,
                s.std_gain_db
            );
        }
        for (name, why) in &self.skipped {
            let _ = writeln!(out, "skipped {name}: {why}");
        }
        out
    }
}

/// Enhances `blurred` and scores both it and the result against `sharp`.
/// Returns `(psnr_blurred, psnr_enhanced, seconds)`.
pub fn score_pair(blurred: &Image, sharp: &Image, cfg: &PipelineConfig) -> Result<(f64, f64, f64)> {
    let before = psnr(blurred, sharp)?;
    let start = Instant::now();
    let out = enhance(blurred, cfg)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok((before, psnr(&out.image, sharp)?, seconds))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BenchmarkOptions {
    /// Write 0 for every runtime so repeated runs give identical CSVs.
    pub zero_runtimes: bool,
}

/// Enhances and scores every manifest entry. Paths are resolved against
/// `base`. Unreadable or failing entries are skipped and listed.
pub fn run_benchmark(
    entries: &[ManifestEntry],
    base: &Path,
    cfg: &PipelineConfig,
    opts: BenchmarkOptions,
) -> Result<EvalReport> {
    cfg.validate()?;
    let outcomes: Vec<std::result::Result<EvalRow, (String, String)>> = entries
        .par_iter()
        .map(|entry| {
            let name = entry.blurred_path.display().to_string();
            let (blurred_path, sharp_path) = entry.resolve(base);
            let scored = load_image(&blurred_path).and_then(|(blurred, _)| {
                let (sharp, _) = load_image(&sharp_path)?;
                score_pair(&blurred, &sharp, cfg)
            });
            match scored {
                Ok((before, after, seconds)) => Ok(EvalRow {
                    image: name,
                    level: entry.level,
                    psnr_blurred: before,
                    psnr_enhanced: after,
                    gain_db: after - before,
                    runtime_s: if opts.zero_runtimes { 0.0 } else { seconds },
                }),
                Err(e) => {
                    log::warn!("skipping {name}: {e}");
                    Err((name, e.to_string()))
                }
            }
        })
        .collect();
    let mut report = EvalReport::default();
    for o in outcomes {
        match o {
            Ok(row) => report.rows.push(row),
            Err(skip) => report.skipped.push(skip),
        }
    }
    Ok(report)
}
