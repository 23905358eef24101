//! Procedural sharp test images resembling stained muscle cross-sections:
//! polygonal fibers with bright membranes, dark nuclei along the fiber
//! borders and fine intra-fiber texture. Used for fixtures and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image_core::{Image, Plane};

/// Stain colors (RGB) for the three-channel variant: fiber, membrane, nucleus.
const FIBER_RGB: [f64; 3] = [0.86, 0.55, 0.66];
const MEMBRANE_RGB: [f64; 3] = [0.97, 0.90, 0.93];
const NUCLEUS_RGB: [f64; 3] = [0.30, 0.18, 0.45];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomParams {
    /// Mean fiber diameter in pixels.
    pub fiber_size: f64,
    /// Membrane half-width in pixels.
    pub membrane: f64,
    /// Nuclei per fiber, on average.
    pub nuclei_per_fiber: f64,
    /// Amplitude of the fine texture.
    pub texture: f64,
    /// Width of the membrane and nucleus transitions in pixels; 0 gives
    /// pixel-sharp edges.
    pub edge_softness: f64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        Self {
            fiber_size: 36.0,
            membrane: 1.2,
            nuclei_per_fiber: 0.8,
            texture: 0.06,
            edge_softness: 0.0,
        }
    }
}

struct Layers {
    /// 0 inside fibers, 1 on membranes.
    membrane: Plane,
    /// 0 background, 1 inside a nucleus.
    nucleus: Plane,
    /// Per-fiber brightness with texture, roughly in [-1, 1].
    shade: Plane,
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    if e1 <= e0 {
        return if x < e0 { 0.0 } else { 1.0 };
    }
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn layers(width: usize, height: usize, params: &PhantomParams, seed: u64) -> Layers {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = params.fiber_size;
    let gw = (width as f64 / cell).ceil() as usize + 2;
    let gh = (height as f64 / cell).ceil() as usize + 2;
    // jittered grid of fiber centers, one per cell, offset by one cell
    let mut centers = Vec::with_capacity(gw * gh);
    let mut tone = Vec::with_capacity(gw * gh);
    for gy in 0..gh {
        for gx in 0..gw {
            let x = (gx as f64 - 1.0 + 0.15 + 0.7 * rng.gen::<f64>()) * cell;
            let y = (gy as f64 - 1.0 + 0.15 + 0.7 * rng.gen::<f64>()) * cell;
            centers.push((x, y));
            tone.push(rng.gen::<f64>() * 2.0 - 1.0);
        }
    }

    let waves: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            let angle = rng.gen::<f64>() * std::f64::consts::PI;
            let freq = 0.15 + 0.6 * rng.gen::<f64>();
            (angle.cos() * freq, angle.sin() * freq, rng.gen::<f64>() * 6.283, 0.5 + rng.gen::<f64>())
        })
        .collect();

    let mut membrane = Plane::zeros(width, height);
    let mut shade = Plane::zeros(width, height);
    for r in 0..height {
        for c in 0..width {
            let (x, y) = (c as f64, r as f64);
            let cx = (x / cell) as isize + 1;
            let cy = (y / cell) as isize + 1;
            let (mut d1, mut d2, mut owner) = (f64::MAX, f64::MAX, 0usize);
            for gy in (cy - 2).max(0)..=(cy + 2).min(gh as isize - 1) {
                for gx in (cx - 2).max(0)..=(cx + 2).min(gw as isize - 1) {
                    let i = gy as usize * gw + gx as usize;
                    let (px, py) = centers[i];
                    let d = ((px - x).powi(2) + (py - y).powi(2)).sqrt();
                    if d < d1 {
                        d2 = d1;
                        d1 = d;
                        owner = i;
                    } else if d < d2 {
                        d2 = d;
                    }
                }
            }
            // distance to the bisector between the two nearest centers
            let edge = 0.5 * (d2 - d1);
            membrane.set(r, c, 1.0 - smoothstep(params.membrane, params.membrane + params.edge_softness, edge));
            let fine: f64 = waves
                .iter()
                .map(|&(fx, fy, ph, a)| a * (fx * x + fy * y + ph).sin())
                .sum::<f64>()
                / waves.len() as f64;
            shade.set(r, c, 0.6 * tone[owner] + fine * 2.0);
        }
    }

    let mut nucleus = Plane::zeros(width, height);
    let expected = (width * height) as f64 / (cell * cell) * params.nuclei_per_fiber;
    let count = expected.round() as usize;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < count && attempts < count * 50 {
        attempts += 1;
        let x = rng.gen::<f64>() * width as f64;
        let y = rng.gen::<f64>() * height as f64;
        let (r, c) = (y as usize, x as usize);
        if membrane.get(r, c) < 0.5 {
            continue;
        }
        let radius = 2.0 + 1.5 * rng.gen::<f64>();
        let stretch = 1.0 + 0.6 * rng.gen::<f64>();
        let reach = (radius * stretch).ceil() as isize + 1;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (rr, cc) = (r as isize + dy, c as isize + dx);
                if rr < 0 || cc < 0 || rr >= height as isize || cc >= width as isize {
                    continue;
                }
                let d = ((dx as f64 / stretch).powi(2) + (dy as f64).powi(2)).sqrt();
                let v = 1.0 - smoothstep(radius - 0.8 * params.edge_softness, radius + 0.8 * params.edge_softness, d);
                let cur = nucleus.get(rr as usize, cc as usize);
                nucleus.set(rr as usize, cc as usize, cur.max(v));
            }
        }
        placed += 1;
    }
    Layers {
        membrane,
        nucleus,
        shade,
    }
}

/// Single-channel fiber phantom with samples in roughly `[0.1, 0.9]`.
pub fn fiber_phantom(width: usize, height: usize, seed: u64) -> Image {
    fiber_phantom_with(width, height, &PhantomParams::default(), seed)
}

pub fn fiber_phantom_with(width: usize, height: usize, params: &PhantomParams, seed: u64) -> Image {
    let l = layers(width, height, params, seed);
    let plane = Plane::from_fn(width, height, |r, c| {
        let fiber = 0.5 + params.texture * l.shade.get(r, c);
        let v = fiber * (1.0 - l.membrane.get(r, c)) + 0.88 * l.membrane.get(r, c);
        v * (1.0 - l.nucleus.get(r, c)) + 0.12 * l.nucleus.get(r, c)
    });
    Image::from_planes_clamped(vec![plane]).expect("phantom is a valid image")
}

/// Three-channel variant with stain-like colors.
pub fn fiber_phantom_rgb(width: usize, height: usize, seed: u64) -> Image {
    let params = PhantomParams::default();
    let l = layers(width, height, &params, seed);
    let planes = (0..3)
        .map(|ch| {
            Plane::from_fn(width, height, |r, c| {
                let fiber = FIBER_RGB[ch] * (1.0 + params.texture * l.shade.get(r, c));
                let m = l.membrane.get(r, c);
                let n = l.nucleus.get(r, c);
                let v = fiber * (1.0 - m) + MEMBRANE_RGB[ch] * m;
                v * (1.0 - n) + NUCLEUS_RGB[ch] * n
            })
        })
        .collect();
    Image::from_planes_clamped(planes).expect("phantom is a valid image")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phantom_is_deterministic_and_in_range() {
        let a = fiber_phantom(80, 60, 3);
        let b = fiber_phantom(80, 60, 3);
        assert_eq!(a, b);
        assert_ne!(a, fiber_phantom(80, 60, 4));
        let rgb = fiber_phantom_rgb(40, 30, 3);
        assert_eq!(rgb.channels(), 3);
        let (lo, hi) = a
            .data()
            .iter()
            .fold((1.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(hi - lo > 0.4, "phantom has too little contrast: {lo}..{hi}");
    }
}
