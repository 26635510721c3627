//! Gradient-orientation wavefront estimator: Sobel gradients, non-maximum
//! suppression and a relative magnitude threshold.

use mlct_core::{angle_bin, DigitalWavefrontSet, DwfMode, GridImage, Sinogram};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateThresholds {
    /// Fraction of the largest gradient magnitude a pixel must reach.
    pub rel: f64,
}

impl Default for EstimateThresholds {
    fn default() -> Self {
        Self { rel: 0.25 }
    }
}

/// Gradients (physical units) over a `width x height` grid; `None` marks
/// pixels whose stencil is unavailable.
fn sobel(
    width: usize,
    height: usize,
    h: (f64, f64),
    sample: impl Fn(i64, i64) -> Option<f64>,
) -> Vec<Option<[f64; 2]>> {
    let mut out = vec![None; width * height];
    for i2 in 0..height as i64 {
        for i1 in 0..width as i64 {
            let mut v = [[0.0; 3]; 3];
            let mut ok = true;
            for (b, row) in v.iter_mut().enumerate() {
                for (a, cell) in row.iter_mut().enumerate() {
                    match sample(i1 + a as i64 - 1, i2 + b as i64 - 1) {
                        Some(x) => *cell = x,
                        None => ok = false,
                    }
                }
            }
            if !ok {
                continue;
            }
            let gx = (v[0][2] + 2.0 * v[1][2] + v[2][2] - v[0][0] - 2.0 * v[1][0] - v[2][0]) / (8.0 * h.0);
            let gy = (v[2][0] + 2.0 * v[2][1] + v[2][2] - v[0][0] - 2.0 * v[0][1] - v[0][2]) / (8.0 * h.1);
            out[i2 as usize * width + i1 as usize] = Some([gx, gy]);
        }
    }
    out
}

fn suppress(
    width: usize,
    height: usize,
    h: (f64, f64),
    grad: &[Option<[f64; 2]>],
    bins: usize,
    thr: &EstimateThresholds,
    scale: f64,
) -> DigitalWavefrontSet {
    let mag: Vec<f64> = grad.iter().map(|g| g.map_or(0.0, |g| g[0].hypot(g[1]))).collect();
    let max = mag.iter().cloned().fold(0.0, f64::max);
    let mut dwf = DigitalWavefrontSet::empty(width, height, bins, DwfMode::Hard);
    if max <= 0.0 {
        return dwf;
    }
    // gradients at rounding level are not edges
    let floor = 1e-9 * scale / h.0.min(h.1);
    let level = (thr.rel * max).max(floor);
    let at = |i1: i64, i2: i64| -> f64 {
        if i1 < 0 || i2 < 0 || i1 >= width as i64 || i2 >= height as i64 {
            0.0
        } else {
            mag[i2 as usize * width + i1 as usize]
        }
    };
    for i2 in 0..height {
        for i1 in 0..width {
            let Some(g) = grad[i2 * width + i1] else { continue };
            let m = mag[i2 * width + i1];
            if m <= 0.0 || m < level {
                continue;
            }
            // step along the gradient in index units, quantised to 45 degrees
            let a = (g[1] * h.1).atan2(g[0] * h.0).rem_euclid(std::f64::consts::PI);
            let sector = ((a / std::f64::consts::FRAC_PI_4).round() as i64) % 4;
            let (d1, d2) = match sector {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            let (x, y) = (i1 as i64, i2 as i64);
            if m >= at(x - d1, y - d2) && m > at(x + d1, y + d2) {
                dwf.mark(i1, i2, angle_bin(g[1].atan2(g[0]), bins));
            }
        }
    }
    dwf
}

/// Estimated wavefront set of an image: marked pixels carry the bin of their
/// gradient direction.
pub fn dwf_estimate(f: &GridImage, bins: usize, thr: &EstimateThresholds) -> DigitalWavefrontSet {
    let (w, hgt) = (f.n1(), f.n2());
    let h = (f.h1(), f.h2());
    let grad = sobel(w, hgt, h, |i1, i2| {
        Some(f.get(i1.clamp(0, w as i64 - 1) as usize, i2.clamp(0, hgt as i64 - 1) as usize))
    });
    suppress(w, hgt, h, &grad, bins, thr, f.field().max_abs())
}

/// Estimated wavefront set of a sinogram in `(s, phi)` coordinates. Rows wrap
/// antipodally across `phi = pi`; pixels next to masked angles are skipped.
pub fn dwf_estimate_sinogram(g: &Sinogram, bins: usize, thr: &EstimateThresholds) -> DigitalWavefrontSet {
    let (m1, m2) = (g.m1(), g.m2());
    let dphi = std::f64::consts::PI / m2 as f64;
    let h = (g.ds(), dphi);
    let grad = sobel(m1, m2, h, |k, l| {
        let (k, l) = if l < 0 {
            (m1 as i64 - 1 - k, l + m2 as i64)
        } else if l >= m2 as i64 {
            (m1 as i64 - 1 - k, l - m2 as i64)
        } else {
            (k, l)
        };
        if !g.mask()[l as usize] {
            return None;
        }
        Some(g.get(k.clamp(0, m1 as i64 - 1) as usize, l as usize))
    });
    suppress(m1, m2, h, &grad, bins, thr, g.field().max_abs())
}
