use super::Plane;
use crate::error::Result;

/// Horizontal and vertical forward differences of a plane.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: Plane,
    pub gy: Plane,
}

impl GradientField {
    pub fn new(gx: Plane, gy: Plane) -> Result<Self> {
        gx.check_same_dims(&gy, "gradient components")?;
        Ok(Self { gx, gy })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            gx: Plane::zeros(width, height),
            gy: Plane::zeros(width, height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.gx.dims()
    }

    pub fn components(&self) -> [&Plane; 2] {
        [&self.gx, &self.gy]
    }

    pub fn sum_squares(&self) -> f64 {
        self.gx.sum_squares() + self.gy.sum_squares()
    }

    pub fn sum_abs(&self) -> f64 {
        self.gx.sum_abs() + self.gy.sum_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.gx.is_finite() && self.gy.is_finite()
    }
}

/// `gx(r, c) = p(r, c + 1) - p(r, c)` and `gy(r, c) = p(r + 1, c) - p(r, c)`.
///
/// The last column of `gx` and last row of `gy` are zero (replicated edge).
pub fn gradients(p: &Plane) -> GradientField {
    let (w, h) = p.dims();
    let gx = Plane::from_fn(w, h, |r, c| {
        if c + 1 < w {
            p.get(r, c + 1) - p.get(r, c)
        } else {
            0.0
        }
    });
    let gy = Plane::from_fn(w, h, |r, c| {
        if r + 1 < h {
            p.get(r + 1, c) - p.get(r, c)
        } else {
            0.0
        }
    });
    GradientField { gx, gy }
}
