use super::Plane;

/// Smallest `m >= n` whose only prime factors are 2, 3 and 5.
pub fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Embeds `p` at `(offset, offset)` in a `width x height` grid and fills the
/// remainder so the result is continuous when wrapped around: every row and
/// then every column of the margin ramps linearly from the last edge sample
/// back to the first one.
pub fn pad_smooth_periodic(p: &Plane, width: usize, height: usize, offset: usize) -> Plane {
    let (w, h) = p.dims();
    assert!(width >= w + offset && height >= h + offset, "padding target too small");
    let ramp = |first: f64, last: f64, gap: usize, j: usize| -> f64 {
        // j in 1..=gap: position after `last` going around to `first`.
        last + (first - last) * j as f64 / (gap + 1) as f64
    };

    let gap_x = width - w;
    let mut wide = Plane::zeros(width, h);
    for r in 0..h {
        let (first, last) = (p.get(r, 0), p.get(r, w - 1));
        for c in 0..width {
            let v = if c >= offset && c < offset + w {
                p.get(r, c - offset)
            } else {
                let j = (c + width - (offset + w - 1)) % width;
                ramp(first, last, gap_x, j)
            };
            wide.set(r, c, v);
        }
    }

    let gap_y = height - h;
    let mut out = Plane::zeros(width, height);
    for c in 0..width {
        let (first, last) = (wide.get(0, c), wide.get(h - 1, c));
        for r in 0..height {
            let v = if r >= offset && r < offset + h {
                wide.get(r - offset, c)
            } else {
                let j = (r + height - (offset + h - 1)) % height;
                ramp(first, last, gap_y, j)
            };
            out.set(r, c, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_len_is_five_smooth() {
        assert_eq!(fast_len(127), 128);
        assert_eq!(fast_len(254), 256);
        assert_eq!(fast_len(241), 243);
        assert_eq!(fast_len(60), 60);
        assert_eq!(fast_len(1), 1);
    }

    #[test]
    fn padding_keeps_interior_and_constants() {
        let p = Plane::from_fn(5, 4, |r, c| (r * 5 + c) as f64);
        let out = pad_smooth_periodic(&p, 9, 8, 2);
        for r in 0..4 {
            for c in 0..5 {
                assert_eq!(out.get(r + 2, c + 2), p.get(r, c));
            }
        }
        let flat = pad_smooth_periodic(&Plane::filled(5, 4, 0.3), 12, 9, 3);
        assert!(flat.data().iter().all(|&v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn wrapped_jumps_are_small() {
        let p = Plane::from_fn(6, 6, |_, c| if c < 3 { 0.0 } else { 1.0 });
        let out = pad_smooth_periodic(&p, 16, 6, 0);
        // around the wrap the ramp steps by 1 / (gap + 1)
        for c in 0..16 {
            let next = out.get(0, (c + 1) % 16);
            assert!((next - out.get(0, c)).abs() <= 1.0 + 1e-12);
        }
        let max_margin_step = (6..16)
            .map(|c| (out.get(0, (c + 1) % 16) - out.get(0, c)).abs())
            .fold(0.0, f64::max);
        assert!(max_margin_step <= 1.0 / 11.0 + 1e-12);
    }
}
