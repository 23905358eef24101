//! PNG/TIFF loading and saving with linear `[0, 1]` scaling.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use super::Image;
use crate::error::{DeblurError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// Loads an 8- or 16-bit PNG/TIFF. Alpha is dropped; other formats are
/// converted to 8-bit RGB first.
pub fn load_image(path: &Path) -> Result<(Image, BitDepth)> {
    let read_err = |msg: String| DeblurError::ImageRead {
        path: path.to_path_buf(),
        msg,
    };
    let dynimg = image::open(path).map_err(|e| read_err(e.to_string()))?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let (channels, depth, raw): (usize, BitDepth, Vec<f64>) = match dynimg {
        DynamicImage::ImageLuma8(b) => (1, BitDepth::Eight, b.pixels().map(|p| p.0[0] as f64).collect()),
        DynamicImage::ImageLumaA8(b) => (1, BitDepth::Eight, b.pixels().map(|p| p.0[0] as f64).collect()),
        DynamicImage::ImageLuma16(b) => (1, BitDepth::Sixteen, b.pixels().map(|p| p.0[0] as f64).collect()),
        DynamicImage::ImageLumaA16(b) => (1, BitDepth::Sixteen, b.pixels().map(|p| p.0[0] as f64).collect()),
        DynamicImage::ImageRgb16(b) => (3, BitDepth::Sixteen, interleaved(b.pixels().map(|p| p.0))),
        DynamicImage::ImageRgba16(b) => (
            3,
            BitDepth::Sixteen,
            interleaved(b.pixels().map(|p| [p.0[0], p.0[1], p.0[2]])),
        ),
        other => (3, BitDepth::Eight, interleaved(other.to_rgb8().pixels().map(|p| p.0))),
    };
    let scale = 1.0 / depth.max_value();
    let n = w * h;
    let mut data = vec![0.0; n * channels];
    for (i, v) in raw.iter().enumerate() {
        let (px, ch) = (i / channels, i % channels);
        data[ch * n + px] = v * scale;
    }
    let img = Image::new(w, h, channels, data).map_err(|e| read_err(e.to_string()))?;
    Ok((img, depth))
}

fn interleaved<T: Into<f64> + Copy>(pixels: impl Iterator<Item = [T; 3]>) -> Vec<f64> {
    pixels.flat_map(|p| p.map(Into::into)).collect()
}

/// Saves with round-to-nearest quantization; the format follows the file
/// extension.
pub fn save_image(path: &Path, img: &Image, depth: BitDepth) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let max = depth.max_value();
    let n = img.width() * img.height();
    let quantize = |v: f64| (v * max).round().clamp(0.0, max);
    let interleave = |i: usize| -> Vec<f64> {
        (0..img.channels())
            .map(|c| quantize(img.data()[c * n + i]))
            .collect()
    };
    let samples: Vec<f64> = (0..n).flat_map(interleave).collect();
    let dynimg = match (img.channels(), depth) {
        (1, BitDepth::Eight) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, samples.iter().map(|&v| v as u8).collect())
                .expect("buffer size"),
        ),
        (1, BitDepth::Sixteen) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, samples.iter().map(|&v| v as u16).collect())
                .expect("buffer size"),
        ),
        (_, BitDepth::Eight) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, samples.iter().map(|&v| v as u8).collect())
                .expect("buffer size"),
        ),
        (_, BitDepth::Sixteen) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, samples.iter().map(|&v| v as u16).collect())
                .expect("buffer size"),
        ),
    };
    dynimg.save(path).map_err(|e| DeblurError::ImageWrite {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_core::Plane;

    fn sample_image(channels: usize) -> Image {
        let planes = (0..channels)
            .map(|c| Plane::from_fn(13, 7, |r, col| ((r * 13 + col + c * 50) % 256) as f64 / 255.0))
            .collect();
        Image::from_planes(planes).unwrap()
    }

    #[test]
    fn png_and_tiff_round_trip_at_both_depths() {
        let dir = tempfile::tempdir().unwrap();
        for channels in [1, 3] {
            let img = sample_image(channels);
            for (ext, depth) in [
                ("png", BitDepth::Eight),
                ("png", BitDepth::Sixteen),
                ("tif", BitDepth::Eight),
                ("tif", BitDepth::Sixteen),
            ] {
                let path = dir.path().join(format!("x{channels}_{depth:?}.{ext}"));
                save_image(&path, &img, depth).unwrap();
                let (back, got_depth) = load_image(&path).unwrap();
                assert_eq!(got_depth, depth);
                assert_eq!(back.channels(), channels);
                for (a, b) in img.data().iter().zip(back.data()) {
                    assert!((a - b).abs() < 1e-12, "{ext} {depth:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_image(Path::new("/nonexistent/blurry.png")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/blurry.png"));
    }
}
