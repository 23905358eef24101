//! Thin 2-D FFT layer over `rustfft`, plus the kernel <-> transfer function
//! embedding used by every frequency-domain solve.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::image_core::Plane;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Planned forward/inverse transforms for one `width x height` grid.
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            Self {
                width,
                height,
                row_fwd: p.plan_fft_forward(width),
                row_inv: p.plan_fft_inverse(width),
                col_fwd: p.plan_fft_forward(height),
                col_inv: p.plan_fft_inverse(height),
            }
        })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let (w, h) = (self.width, self.height);
        let scratch_len = rows
            .get_inplace_scratch_len()
            .max(cols.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::default(); scratch_len];
        rows.process_with_scratch(data, &mut scratch[..rows.get_inplace_scratch_len()]);

        let mut t = vec![Complex64::default(); w * h];
        for r in 0..h {
            for c in 0..w {
                t[c * h + r] = data[r * w + c];
            }
        }
        cols.process_with_scratch(&mut t, &mut scratch[..cols.get_inplace_scratch_len()]);
        for c in 0..w {
            for r in 0..h {
                data[r * w + c] = t[c * h + r];
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform, normalized so that `inverse(forward(x)) == x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward_real(&self, p: &Plane) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = p.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Spectra of two real planes from a single complex transform.
    pub fn forward_real_pair(&self, a: &Plane, b: &Plane) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut z: Vec<Complex64> = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.forward(&mut z);
        let (w, h) = (self.width, self.height);
        let mut fa = vec![Complex64::default(); w * h];
        let mut fb = vec![Complex64::default(); w * h];
        for r in 0..h {
            let rn = (h - r) % h;
            for c in 0..w {
                let cn = (w - c) % w;
                let zk = z[r * w + c];
                let zn = z[rn * w + cn].conj();
                fa[r * w + c] = (zk + zn) * 0.5;
                // (zk - zn) / 2i
                let d = (zk - zn) * 0.5;
                fb[r * w + c] = Complex64::new(d.im, -d.re);
            }
        }
        (fa, fb)
    }

    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Plane {
        self.inverse(&mut spectrum);
        Plane::from_vec(
            self.width,
            self.height,
            spectrum.into_iter().map(|v| v.re).collect(),
        )
        .expect("spectrum has grid size")
    }

    /// Inverse of two spectra known to come from real planes, sharing one
    /// complex transform.
    pub fn inverse_real_pair(&self, fa: &[Complex64], fb: &[Complex64]) -> (Plane, Plane) {
        let i = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = fa.iter().zip(fb).map(|(&a, &b)| a + i * b).collect();
        self.inverse(&mut z);
        let a = z.iter().map(|v| v.re).collect();
        let b = z.iter().map(|v| v.im).collect();
        (
            Plane::from_vec(self.width, self.height, a).expect("grid size"),
            Plane::from_vec(self.width, self.height, b).expect("grid size"),
        )
    }

    /// Transfer function of a centered odd `side x side` filter, embedded
    /// with its center at the grid origin (circular convolution).
    pub fn transfer_function(&self, weights: &[f64], side: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); self.len()];
        embed_centered(&mut buf, self.width, self.height, weights, side, side);
        self.forward(&mut buf);
        buf
    }
}

/// Writes a centered `kw x kh` filter into a `w x h` grid with its center
/// tap at (0, 0), wrapping negative offsets.
pub(crate) fn embed_centered(
    buf: &mut [Complex64],
    w: usize,
    h: usize,
    weights: &[f64],
    kw: usize,
    kh: usize,
) {
    let (cx, cy) = ((kw / 2) as isize, (kh / 2) as isize);
    for a in 0..kh {
        for b in 0..kw {
            let r = (a as isize - cy).rem_euclid(h as isize) as usize;
            let c = (b as isize - cx).rem_euclid(w as isize) as usize;
            buf[r * w + c] += Complex64::new(weights[a * kw + b], 0.0);
        }
    }
}

/// Reads the centered `side x side` window around the origin of a
/// wrap-around spatial grid (the inverse of [`embed_centered`]).
pub(crate) fn crop_centered(p: &Plane, side: usize) -> Vec<f64> {
    let (w, h) = p.dims();
    let half = (side / 2) as isize;
    let mut out = Vec::with_capacity(side * side);
    for a in 0..side as isize {
        for b in 0..side as isize {
            let r = (a - half).rem_euclid(h as isize) as usize;
            let c = (b - half).rem_euclid(w as isize) as usize;
            out.push(p.get(r, c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::from_fn(w, h, |_, _| rng.gen::<f64>() - 0.5)
    }

    #[test]
    fn round_trip_non_power_of_two() {
        let p = random_plane(15, 12, 1);
        let f = Fft2::new(15, 12);
        let back = f.inverse_real(f.forward_real(&p));
        for (a, b) in p.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn paired_transform_matches_individual() {
        let a = random_plane(9, 6, 2);
        let b = random_plane(9, 6, 3);
        let f = Fft2::new(9, 6);
        let (fa, fb) = f.forward_real_pair(&a, &b);
        let ea = f.forward_real(&a);
        let eb = f.forward_real(&b);
        for i in 0..fa.len() {
            assert!((fa[i] - ea[i]).norm() < 1e-10);
            assert!((fb[i] - eb[i]).norm() < 1e-10);
        }
        let (ra, rb) = f.inverse_real_pair(&fa, &fb);
        for i in 0..a.data().len() {
            assert!((ra.data()[i] - a.data()[i]).abs() < 1e-12);
            assert!((rb.data()[i] - b.data()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn crop_inverts_embed() {
        let weights: Vec<f64> = (0..25).map(|v| v as f64).collect();
        let mut buf = vec![Complex64::default(); 11 * 8];
        embed_centered(&mut buf, 11, 8, &weights, 5, 5);
        let p = Plane::from_vec(11, 8, buf.iter().map(|v| v.re).collect()).unwrap();
        assert_eq!(crop_centered(&p, 5), weights);
    }
}
