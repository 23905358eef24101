use rustfft::num_complex::Complex64;

use super::{Image, Plane};
use crate::error::{DeblurError, Result};
use crate::fft::{embed_centered, Fft2};
use crate::kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Samples outside the grid take the value of the nearest edge sample.
    #[default]
    Replicate,
    /// The grid wraps around (circular convolution).
    Periodic,
}

/// Kernel sides at or above this use the FFT path.
const FFT_MIN_SIDE: usize = 13;

fn check_fits(p: &Plane, k: &Kernel) -> Result<()> {
    if k.side() > p.width().min(p.height()) {
        return Err(DeblurError::InvalidConfig(format!(
            "kernel side {} exceeds image {}x{}",
            k.side(),
            p.width(),
            p.height()
        )));
    }
    Ok(())
}

/// `out(r, c) = sum k(a, b) * p(r - a, c - b)` over centered offsets.
pub fn convolve_plane(p: &Plane, k: &Kernel, mode: BoundaryMode) -> Result<Plane> {
    check_fits(p, k)?;
    if k.side() >= FFT_MIN_SIDE {
        convolve_plane_fft(p, k, mode)
    } else {
        convolve_plane_direct(p, k, mode)
    }
}

pub fn convolve_plane_direct(p: &Plane, k: &Kernel, mode: BoundaryMode) -> Result<Plane> {
    check_fits(p, k)?;
    let (w, h) = (p.width() as isize, p.height() as isize);
    let r = k.radius() as isize;
    let mut out = Plane::zeros(p.width(), p.height());
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let kv = k.at_offset(dy, dx);
                    if kv == 0.0 {
                        continue;
                    }
                    let (sr, sc) = (row - dy, col - dx);
                    let v = match mode {
                        BoundaryMode::Replicate => p.get_clamped(sr, sc),
                        BoundaryMode::Periodic => {
                            p.get(sr.rem_euclid(h) as usize, sc.rem_euclid(w) as usize)
                        }
                    };
                    acc += kv * v;
                }
            }
            out.set(row as usize, col as usize, acc);
        }
    }
    Ok(out)
}

pub fn convolve_plane_fft(p: &Plane, k: &Kernel, mode: BoundaryMode) -> Result<Plane> {
    check_fits(p, k)?;
    let r = k.radius();
    let padded = match mode {
        BoundaryMode::Replicate => pad_replicate(p, r),
        BoundaryMode::Periodic => p.clone(),
    };
    let (pw, ph) = padded.dims();
    let fft = Fft2::new(pw, ph);
    let mut spec = fft.forward_real(&padded);
    let mut kbuf = vec![Complex64::default(); pw * ph];
    embed_centered(&mut kbuf, pw, ph, k.weights(), k.side(), k.side());
    fft.forward(&mut kbuf);
    for (s, kv) in spec.iter_mut().zip(&kbuf) {
        *s *= kv;
    }
    let full = fft.inverse_real(spec);
    Ok(match mode {
        BoundaryMode::Replicate => full.crop(r, r, p.width(), p.height()),
        BoundaryMode::Periodic => full,
    })
}

/// Extends each side by `pad` samples replicating the edge.
pub fn pad_replicate(p: &Plane, pad: usize) -> Plane {
    let pad = pad as isize;
    Plane::from_fn(
        p.width() + 2 * pad as usize,
        p.height() + 2 * pad as usize,
        |r, c| p.get_clamped(r as isize - pad, c as isize - pad),
    )
}

/// Convolves each channel. A non-negative unit-sum kernel keeps samples in
/// `[0, 1]`; the clamp only absorbs rounding.
pub fn convolve2d(img: &Image, k: &Kernel, mode: BoundaryMode) -> Result<Image> {
    let planes = img
        .planes()
        .iter()
        .map(|p| convolve_plane(p, k, mode))
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes_clamped(planes)
}
