//! Synthetic spatially-variant Gaussian blur for quantitative evaluation.
//!
//! A blur field is a set of Gaussian "blobs" of blur strength; every pixel
//! is replaced by a normalized Gaussian average of its neighbourhood whose
//! width is the local field value.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DeblurError, Result};
use crate::image_core::{Image, Plane};

/// Default spatial decay constant of a blur blob.
pub const DEFAULT_SIGMA_L: f64 = 100.0;

/// Field values below this are treated as no blur.
pub const MIN_BLUR_SIGMA: f64 = 0.05;

/// One blob of the blur field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurSpec {
    /// Horizontal center, in pixels.
    pub x: f64,
    /// Vertical center, in pixels.
    pub y: f64,
    /// Peak blur standard deviation.
    pub sigma_s: f64,
    /// Decay constant inside the exponential, in squared pixels.
    pub sigma_l: f64,
}

impl BlurSpec {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if !(self.sigma_s > 0.0 && self.sigma_s.is_finite()) {
            return Err(DeblurError::InvalidConfig(format!("sigma_s must be positive, got {}", self.sigma_s)));
        }
        if !(self.sigma_l > 0.0 && self.sigma_l.is_finite()) {
            return Err(DeblurError::InvalidConfig(format!("sigma_l must be positive, got {}", self.sigma_l)));
        }
        let inside = |v: f64, len: usize| v >= 0.0 && v <= len.saturating_sub(1) as f64;
        if !inside(self.x, width) || !inside(self.y, height) {
            return Err(DeblurError::InvalidConfig(format!(
                "blur center ({}, {}) outside {width}x{height}",
                self.x, self.y
            )));
        }
        Ok(())
    }

    /// Blur strength at a pixel.
    pub fn strength_at(&self, row: f64, col: f64) -> f64 {
        let d2 = (col - self.x).powi(2) + (row - self.y).powi(2);
        self.sigma_s * (-d2 / (2.0 * self.sigma_l)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DistortionLevel {
    I,
    II,
    III,
    IV,
}

impl DistortionLevel {
    pub const ALL: [DistortionLevel; 4] = [Self::I, Self::II, Self::III, Self::IV];

    pub fn n_blurs(self) -> usize {
        match self {
            Self::I => 5,
            Self::II => 10,
            Self::III => 15,
            Self::IV => 20,
        }
    }

    /// Half-open range `(lo, hi]` of the peak blur strength.
    pub fn sigma_range(self) -> (f64, f64) {
        match self {
            Self::I => (0.5, 1.5),
            Self::II => (1.5, 2.5),
            Self::III => (2.5, 3.5),
            Self::IV => (3.5, 4.5),
        }
    }
}

impl fmt::Display for DistortionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::IV => "IV",
        };
        f.write_str(s)
    }
}

impl FromStr for DistortionLevel {
    type Err = DeblurError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Self::I),
            "II" | "2" => Ok(Self::II),
            "III" | "3" => Ok(Self::III),
            "IV" | "4" => Ok(Self::IV),
            other => Err(DeblurError::InvalidConfig(format!("unknown distortion level '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub sigma_l: f64,
    /// Divide drawn strengths by 255 (literal reading of the intensity
    /// convention); off by default.
    pub sigma_in_255_units: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            sigma_l: DEFAULT_SIGMA_L,
            sigma_in_255_units: false,
        }
    }
}

/// Per-pixel blur strength: the pointwise maximum over all blobs.
pub fn sigma_field(specs: &[BlurSpec], width: usize, height: usize) -> Result<Plane> {
    if specs.is_empty() {
        return Err(DeblurError::InvalidConfig("blur field needs at least one spec".into()));
    }
    Ok(Plane::from_fn(width, height, |r, c| {
        specs
            .iter()
            .map(|s| s.strength_at(r as f64, c as f64))
            .fold(0.0, f64::max)
    }))
}

fn gaussian_taps(sigma: f64, radius: usize) -> Vec<f64> {
    let inv = 1.0 / (2.0 * sigma * sigma);
    (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d * inv).exp()
        })
        .collect()
}

/// Blurs `sharp` with the field of `specs`: each output pixel is the
/// Gaussian-weighted average of the in-bounds pixels within `ceil(3 rho)`,
/// normalized by the sum of the weights used.
pub fn apply_variant_blur(sharp: &Image, specs: &[BlurSpec]) -> Result<Image> {
    let (w, h) = (sharp.width(), sharp.height());
    for s in specs {
        s.validate(w, h)?;
    }
    let field = sigma_field(specs, w, h)?;
    let planes = sharp.planes();
    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut out = vec![0.0; w * planes.len()];
            for c in 0..w {
                let rho = field.get(r, c);
                if rho < MIN_BLUR_SIGMA {
                    for (ch, p) in planes.iter().enumerate() {
                        out[ch * w + c] = p.get(r, c);
                    }
                    continue;
                }
                let radius = (3.0 * rho).ceil() as usize;
                let taps = gaussian_taps(rho, radius);
                let r0 = r.saturating_sub(radius);
                let r1 = (r + radius).min(h - 1);
                let c0 = c.saturating_sub(radius);
                let c1 = (c + radius).min(w - 1);
                let ty = &taps[r0 + radius - r..=r1 + radius - r];
                let tx = &taps[c0 + radius - c..=c1 + radius - c];
                let norm = ty.iter().sum::<f64>() * tx.iter().sum::<f64>();
                for (ch, p) in planes.iter().enumerate() {
                    let data = p.data();
                    let mut acc = 0.0;
                    for (rr, wy) in (r0..=r1).zip(ty) {
                        let row = &data[rr * w + c0..=rr * w + c1];
                        acc += wy * row.iter().zip(tx).map(|(v, wx)| v * wx).sum::<f64>();
                    }
                    out[ch * w + c] = acc / norm;
                }
            }
            out
        })
        .collect();
    let blurred = (0..planes.len())
        .map(|ch| {
            let mut data = Vec::with_capacity(w * h);
            for row in &rows {
                data.extend_from_slice(&row[ch * w..(ch + 1) * w]);
            }
            Plane::from_vec(w, h, data)
        })
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes_clamped(blurred)
}

/// Draws the blobs of one image at `level`: centers uniform over the image,
/// strengths uniform over the level's range.
pub fn draw_specs(
    rng: &mut impl Rng,
    width: usize,
    height: usize,
    level: DistortionLevel,
    cfg: &SynthesisConfig,
) -> Vec<BlurSpec> {
    let (lo, hi) = level.sigma_range();
    let scale = if cfg.sigma_in_255_units { 1.0 / 255.0 } else { 1.0 };
    (0..level.n_blurs())
        .map(|_| {
            let x = rng.gen::<f64>() * width.saturating_sub(1) as f64;
            let y = rng.gen::<f64>() * height.saturating_sub(1) as f64;
            // hi - u (hi - lo) with u in [0, 1) lands in (lo, hi]
            let sigma_s = hi - rng.gen::<f64>() * (hi - lo);
            BlurSpec {
                x,
                y,
                sigma_s: sigma_s * scale,
                sigma_l: cfg.sigma_l,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub blurred: Image,
    pub sharp: Image,
    pub specs: Vec<BlurSpec>,
}

/// Blurs every image at `level`. Deterministic in `rng_seed`.
pub fn make_level_dataset(
    sharp_images: &[Image],
    level: DistortionLevel,
    rng_seed: u64,
    cfg: &SynthesisConfig,
) -> Result<Vec<SyntheticSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let specs: Vec<Vec<BlurSpec>> = sharp_images
        .iter()
        .map(|img| draw_specs(&mut rng, img.width(), img.height(), level, cfg))
        .collect();
    sharp_images
        .par_iter()
        .zip(specs)
        .map(|(img, specs)| {
            Ok(SyntheticSample {
                blurred: apply_variant_blur(img, &specs)?,
                sharp: img.clone(),
                specs,
            })
        })
        .collect()
}

/// One replayable entry of a synthetic dataset. Relative paths are resolved
/// against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub blurred_path: PathBuf,
    pub sharp_path: PathBuf,
    pub level: DistortionLevel,
    pub specs: Vec<BlurSpec>,
    pub rng_seed: u64,
}

impl ManifestEntry {
    pub fn resolve(&self, base: &Path) -> (PathBuf, PathBuf) {
        (base.join(&self.blurred_path), base.join(&self.sharp_path))
    }
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let text = serde_json::to_string_pretty(entries).expect("manifest serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    serde_json::from_str(text).map_err(|e| {
        DeblurError::Manifest(format!("line {} column {}: {e}", e.line(), e.column()))
    })
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DeblurError::Manifest(format!("{}: {e}", path.display())))?;
    parse_manifest(&text).map_err(|e| match e {
        DeblurError::Manifest(msg) => DeblurError::Manifest(format!("{}: {msg}", path.display())),
        other => other,
    })
}
