//! Point-spread functions: odd, non-negative, unit-sum grids.

use std::fmt::Write as _;

use crate::error::{DeblurError, Result};

/// Tolerance on the unit-sum invariant.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    side: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Validates a row-major `side x side` weight grid.
    pub fn from_weights(side: usize, weights: Vec<f64>) -> Result<Self> {
        check_side(side)?;
        if weights.len() != side * side {
            return Err(DeblurError::InvalidConfig(format!(
                "kernel side {side} needs {} weights, got {}",
                side * side,
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(DeblurError::InvalidConfig(format!(
                "kernel weight {w} is negative or non-finite"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(DeblurError::InvalidConfig(format!(
                "kernel weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { side, weights })
    }

    /// Clamps negative lobes to zero and rescales to unit sum.
    pub fn from_raw(side: usize, mut raw: Vec<f64>) -> Result<Self> {
        check_side(side)?;
        if raw.len() != side * side {
            return Err(DeblurError::InvalidConfig(format!(
                "kernel side {side} needs {} weights, got {}",
                side * side,
                raw.len()
            )));
        }
        if raw.iter().any(|w| !w.is_finite()) {
            return Err(DeblurError::Singular("non-finite kernel weight".into()));
        }
        for w in raw.iter_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let sum: f64 = raw.iter().sum();
        if sum <= f64::MIN_POSITIVE {
            return Err(DeblurError::Singular(
                "kernel has no positive mass to normalize".into(),
            ));
        }
        for w in raw.iter_mut() {
            *w /= sum;
        }
        Ok(Self { side, weights: raw })
    }

    pub fn delta(side: usize) -> Self {
        let side = side.max(1) | 1;
        let mut weights = vec![0.0; side * side];
        weights[side * side / 2] = 1.0;
        Self { side, weights }
    }

    /// Sampled circular Gaussian, renormalized on the grid. `sigma <= 0`
    /// gives the delta kernel.
    pub fn gaussian(side: usize, sigma: f64) -> Self {
        let side = side.max(1) | 1;
        if sigma <= 0.0 || !sigma.is_finite() {
            return Self::delta(side);
        }
        let half = (side / 2) as f64;
        let inv = 1.0 / (2.0 * sigma * sigma);
        let mut weights = Vec::with_capacity(side * side);
        for a in 0..side {
            for b in 0..side {
                let y = a as f64 - half;
                let x = b as f64 - half;
                weights.push((-(x * x + y * y) * inv).exp());
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        Self { side, weights }
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.side / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(dy, dx)` from the center, zero outside the grid.
    pub fn at_offset(&self, dy: isize, dx: isize) -> f64 {
        let r = self.radius() as isize;
        if dy.abs() > r || dx.abs() > r {
            return 0.0;
        }
        self.weights[((dy + r) * self.side as isize + dx + r) as usize]
    }

    pub fn is_delta(&self) -> bool {
        self.weights[self.side * self.side / 2] == 1.0
    }

    pub fn sum_squares(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    /// 180 degree rotation.
    pub fn rotated(&self) -> Kernel {
        let mut weights = self.weights.clone();
        weights.reverse();
        Kernel {
            side: self.side,
            weights,
        }
    }

    /// Half the l1 distance between the two kernels, centers aligned.
    pub fn tv_distance(&self, other: &Kernel) -> f64 {
        let r = self.radius().max(other.radius()) as isize;
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                acc += (self.at_offset(dy, dx) - other.at_offset(dy, dx)).abs();
            }
        }
        0.5 * acc
    }

    /// Resamples onto a `side x side` grid whose pixels are `1 / scale`
    /// times the size of this kernel's pixels (`scale < 1` enlarges the
    /// footprint). Bilinear, zero outside, renormalized.
    pub fn resample(&self, side: usize, scale: f64) -> Kernel {
        let side = side.max(1) | 1;
        let half = (side / 2) as f64;
        let src_half = self.radius() as f64;
        let n = self.side as isize;
        let sample = |y: f64, x: f64| -> f64 {
            let y0 = y.floor();
            let x0 = x.floor();
            let fy = y - y0;
            let fx = x - x0;
            let mut acc = 0.0;
            for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
                    let r = y0 as isize + dy;
                    let c = x0 as isize + dx;
                    if r >= 0 && c >= 0 && r < n && c < n {
                        acc += wy * wx * self.weights[(r * n + c) as usize];
                    }
                }
            }
            acc
        };
        let mut raw = Vec::with_capacity(side * side);
        for a in 0..side {
            for b in 0..side {
                let y = (a as f64 - half) * scale + src_half;
                let x = (b as f64 - half) * scale + src_half;
                raw.push(sample(y, x));
            }
        }
        Kernel::from_raw(side, raw).unwrap_or_else(|_| Kernel::delta(side))
    }

    /// Plain-text form: the side on the first line, then one row per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.side);
        for row in self.weights.chunks(self.side) {
            let line: Vec<String> = row.iter().map(|w| format!("{w:.17e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(DeblurError::KernelParse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let side: usize = first.trim().parse().map_err(|e| DeblurError::KernelParse {
            line: 1,
            msg: format!("bad side: {e}"),
        })?;
        let mut weights = Vec::with_capacity(side * side);
        let mut rows = 0;
        for (idx, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| DeblurError::KernelParse {
                    line: idx + 1,
                    msg: format!("{e}"),
                })?;
            if row.len() != side {
                return Err(DeblurError::KernelParse {
                    line: idx + 1,
                    msg: format!("expected {side} values, got {}", row.len()),
                });
            }
            weights.extend(row);
            rows += 1;
        }
        if rows != side {
            return Err(DeblurError::KernelParse {
                line: rows + 2,
                msg: format!("expected {side} rows, got {rows}"),
            });
        }
        Kernel::from_weights(side, weights)
    }
}

fn check_side(side: usize) -> Result<()> {
    if side == 0 || side % 2 == 0 {
        return Err(DeblurError::InvalidConfig(format!(
            "kernel side must be odd, got {side}"
        )));
    }
    Ok(())
}

/// Nearest odd integer to `x`, at least `min`.
pub fn round_to_odd(x: f64, min: usize) -> usize {
    let k = ((x - 1.0) / 2.0).round().max(0.0) as usize;
    (2 * k + 1).max(min | 1)
}
