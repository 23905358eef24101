use super::{Image, Plane};
use crate::error::{DeblurError, Result};

/// Smallest side allowed at the coarsest pyramid level.
pub const MIN_LEVEL_SIDE: usize = 16;

/// Coarse-to-fine image pyramid. `levels[0]` is the coarsest and the last
/// entry is the source image.
#[derive(Debug, Clone)]
pub struct Pyramid {
    pub levels: Vec<Image>,
    pub scale_factor: f64,
    /// Set when fewer levels than requested fit above the minimum size.
    pub reduced: bool,
}

impl Pyramid {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// 1-based level access: 1 is the coarsest.
    pub fn level(&self, omega: usize) -> &Image {
        &self.levels[omega - 1]
    }

    pub fn finest(&self) -> &Image {
        self.levels.last().expect("pyramid is never empty")
    }
}

/// Side of the next coarser level.
pub fn coarser_side(side: usize, scale_factor: f64) -> usize {
    ((side as f64 * scale_factor).ceil() as usize).max(1)
}

pub fn build_pyramid(img: &Image, levels: usize, scale_factor: f64) -> Result<Pyramid> {
    if levels == 0 {
        return Err(DeblurError::InvalidConfig("pyramid needs at least one level".into()));
    }
    if !(scale_factor > 0.0 && scale_factor < 1.0) {
        return Err(DeblurError::InvalidConfig(format!(
            "pyramid scale factor must lie in (0, 1), got {scale_factor}"
        )));
    }
    let mut dims = vec![(img.width(), img.height())];
    while dims.len() < levels {
        let (w, h) = *dims.last().unwrap();
        let next = (coarser_side(w, scale_factor), coarser_side(h, scale_factor));
        if next.0 < MIN_LEVEL_SIDE || next.1 < MIN_LEVEL_SIDE {
            break;
        }
        dims.push(next);
    }
    let reduced = dims.len() < levels;
    if reduced {
        log::warn!(
            "image {}x{} supports only {} of {} pyramid levels",
            img.width(),
            img.height(),
            dims.len(),
            levels
        );
    }
    let mut out = Vec::with_capacity(dims.len());
    out.push(img.clone());
    for &(w, h) in &dims[1..] {
        let finer = out.last().unwrap();
        let planes = finer.planes().iter().map(|p| resize_plane(p, w, h)).collect();
        out.push(Image::from_planes_clamped(planes)?);
    }
    out.reverse();
    Ok(Pyramid {
        levels: out,
        scale_factor,
        reduced,
    })
}

/// Bilinear resampling to `width x height`; downscaling applies a Gaussian
/// pre-filter along each shrinking axis.
pub fn resize_plane(p: &Plane, width: usize, height: usize) -> Plane {
    if p.dims() == (width, height) {
        return p.clone();
    }
    let sx = width as f64 / p.width() as f64;
    let sy = height as f64 / p.height() as f64;
    let mut src = p.clone();
    if sx < 1.0 {
        src = blur_axis(&src, antialias_sigma(sx), true);
    }
    if sy < 1.0 {
        src = blur_axis(&src, antialias_sigma(sy), false);
    }
    Plane::from_fn(width, height, |r, c| {
        let y = ((r as f64 + 0.5) / sy - 0.5).clamp(0.0, (p.height() - 1) as f64);
        let x = ((c as f64 + 0.5) / sx - 0.5).clamp(0.0, (p.width() - 1) as f64);
        let (y0, x0) = (y.floor() as usize, x.floor() as usize);
        let (y1, x1) = ((y0 + 1).min(p.height() - 1), (x0 + 1).min(p.width() - 1));
        let (fy, fx) = (y - y0 as f64, x - x0 as f64);
        let top = src.get(y0, x0) * (1.0 - fx) + src.get(y0, x1) * fx;
        let bottom = src.get(y1, x0) * (1.0 - fx) + src.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

fn antialias_sigma(scale: f64) -> f64 {
    0.5 * (1.0 / (scale * scale) - 1.0).max(0.0).sqrt()
}

fn blur_axis(p: &Plane, sigma: f64, horizontal: bool) -> Plane {
    if sigma < 1e-3 {
        return p.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Plane::from_fn(p.width(), p.height(), |r, c| {
        taps.iter()
            .zip(-radius..=radius)
            .map(|(t, d)| {
                let v = if horizontal {
                    p.get_clamped(r as isize, c as isize + d)
                } else {
                    p.get_clamped(r as isize + d, c as isize)
                };
                t * v
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_is_the_input() {
        let img = Image::filled(20, 20, 1, 0.3).unwrap();
        let pyr = build_pyramid(&img, 1, 0.5).unwrap();
        assert_eq!(pyr.len(), 1);
        assert_eq!(pyr.finest(), &img);
        assert!(!pyr.reduced);
    }

    #[test]
    fn level_sizes_use_sequential_ceil() {
        let img = Image::filled(512, 512, 1, 0.5).unwrap();
        let pyr = build_pyramid(&img, 5, 1.0 / 2f64.sqrt()).unwrap();
        let sizes: Vec<usize> = pyr.levels.iter().rev().map(|l| l.width()).collect();
        assert_eq!(sizes, vec![512, 363, 257, 182, 129]);
        assert_eq!(pyr.finest(), &img);
    }

    #[test]
    fn constant_image_stays_constant_at_every_level() {
        let img = Image::filled(100, 64, 1, 0.6).unwrap();
        let pyr = build_pyramid(&img, 4, 1.0 / 2f64.sqrt()).unwrap();
        for level in &pyr.levels {
            for &v in level.data() {
                assert!((v - 0.6).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_images_degrade_to_fewer_levels() {
        let img = Image::filled(30, 30, 1, 0.5).unwrap();
        let pyr = build_pyramid(&img, 5, 0.5).unwrap();
        assert!(pyr.reduced);
        assert_eq!(pyr.len(), 1);
        let pyr = build_pyramid(&img, 5, 0.75).unwrap();
        assert_eq!(pyr.len(), 3);
        assert!(pyr.levels[0].width() >= MIN_LEVEL_SIDE);
    }

    #[test]
    fn rejects_bad_parameters() {
        let img = Image::filled(30, 30, 1, 0.5).unwrap();
        assert!(build_pyramid(&img, 0, 0.5).is_err());
        assert!(build_pyramid(&img, 2, 1.0).is_err());
        assert!(build_pyramid(&img, 2, 0.0).is_err());
    }
}
