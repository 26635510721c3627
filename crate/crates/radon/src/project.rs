//! Ray-driven projector with bilinear interpolation and its exact transpose.

use mlct_core::{Field, GridImage, Sinogram};
use rayon::prelude::*;

use crate::geometry::Geometry;
use crate::Result;

/// Angles per partial image in the transpose; partials are summed in a fixed
/// order so the result does not depend on the thread count.
const ANGLE_CHUNK: usize = 16;

struct Ray {
    c: f64,
    s: f64,
}

impl Geometry {
    /// Step along each ray: half the finer pixel spacing.
    pub fn ray_step(&self) -> f64 {
        self.h1().min(self.h2()) / 2.0
    }

    /// Call `visit(pixel, weight)` for every bilinear stencil entry of ray
    /// `(k, l)`; weights already include the step length.
    #[inline]
    fn trace(&self, ray: &Ray, s: f64, mut visit: impl FnMut(usize, f64)) {
        let (n1, n2) = (self.n1(), self.n2());
        let (h1, h2) = (self.h1(), self.h2());
        let dt = self.ray_step();
        // x(t) = s * (c, s) + t * (-s, c), clipped to the square
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (base, dir) in [(s * ray.c, -ray.s), (s * ray.s, ray.c)] {
            if dir.abs() < 1e-15 {
                if base.abs() > 1.0 {
                    return;
                }
            } else {
                let (a, b) = ((-1.0 - base) / dir, (1.0 - base) / dir);
                lo = lo.max(a.min(b));
                hi = hi.min(a.max(b));
            }
        }
        if lo > hi {
            return;
        }
        let j0 = (lo / dt).ceil() as i64;
        let j1 = (hi / dt).floor() as i64;
        // pixel coordinates are affine in the step index
        let (u0, du) = ((s * ray.c + 1.0) / h1, -ray.s * dt / h1);
        let (v0, dv) = ((s * ray.s + 1.0) / h2, ray.c * dt / h2);
        for j in j0..=j1 {
            let u = u0 + j as f64 * du;
            let v = v0 + j as f64 * dv;
            let i = (u.floor().max(0.0) as usize).min(n1 - 2);
            let m = (v.floor().max(0.0) as usize).min(n2 - 2);
            let a = (u - i as f64).clamp(0.0, 1.0);
            let b = (v - m as f64).clamp(0.0, 1.0);
            let p = m * n1 + i;
            visit(p, (1.0 - a) * (1.0 - b) * dt);
            visit(p + 1, a * (1.0 - b) * dt);
            visit(p + n1, (1.0 - a) * b * dt);
            visit(p + n1 + 1, a * b * dt);
        }
    }

    fn rays(&self) -> Vec<Ray> {
        self.angles().iter().map(|&th| Ray { c: th.cos(), s: th.sin() }).collect()
    }

    /// Forward projection of raw image values (`n1 * n2`, row-major) into raw
    /// sinogram values (`m1 * m2`). Masked angles give zero rows.
    pub fn forward_raw(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n1() * self.n2(), "image length");
        let m1 = self.m1();
        let rays = self.rays();
        let mut out = vec![0.0; m1 * self.m2()];
        out.par_chunks_mut(m1).enumerate().for_each(|(l, row)| {
            if !self.mask()[l] {
                return;
            }
            for (k, cell) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                self.trace(&rays[l], self.detectors()[k], |p, w| acc += w * f[p]);
                *cell = acc;
            }
        });
        out
    }

    /// Exact transpose of [`Geometry::forward_raw`].
    pub fn transpose_raw(&self, g: &[f64]) -> Vec<f64> {
        self.weighted_transpose(g, &vec![1.0; self.m2()])
    }

    fn weighted_transpose(&self, g: &[f64], weights: &[f64]) -> Vec<f64> {
        let (m1, m2) = (self.m1(), self.m2());
        assert_eq!(g.len(), m1 * m2, "sinogram length");
        let rays = self.rays();
        let size = self.n1() * self.n2();
        let starts: Vec<usize> = (0..m2).step_by(ANGLE_CHUNK).collect();
        let partials: Vec<Vec<f64>> = starts
            .par_iter()
            .map(|&start| {
                let mut part = vec![0.0; size];
                for l in start..(start + ANGLE_CHUNK).min(m2) {
                    if !self.mask()[l] {
                        continue;
                    }
                    for k in 0..m1 {
                        let v = g[l * m1 + k] * weights[l];
                        if v != 0.0 {
                            self.trace(&rays[l], self.detectors()[k], |p, w| part[p] += w * v);
                        }
                    }
                }
                part
            })
            .collect();
        let mut out = vec![0.0; size];
        for part in &partials {
            for (o, p) in out.iter_mut().zip(part) {
                *o += p;
            }
        }
        out
    }

    /// Per-angle factor turning the transpose into the back-projection
    /// `sum_l w_l g(x . omega_l, theta_l)`.
    pub fn backprojection_scale(&self) -> Vec<f64> {
        let c = self.ds() / (self.h1() * self.h2());
        self.angle_weights().into_iter().map(|w| w * c).collect()
    }

    pub fn backproject_raw(&self, g: &[f64]) -> Vec<f64> {
        self.weighted_transpose(g, &self.backprojection_scale())
    }

    /// Transpose of [`Geometry::backproject_raw`].
    pub fn backproject_transpose_raw(&self, f: &[f64]) -> Vec<f64> {
        let mut out = self.forward_raw(f);
        let m1 = self.m1();
        for (row, c) in out.chunks_mut(m1).zip(self.backprojection_scale()) {
            row.iter_mut().for_each(|v| *v *= c);
        }
        out
    }
}

/// Line integrals of the bilinear interpolant of `f`.
pub fn radon(f: &GridImage, geo: &Geometry) -> Result<Sinogram> {
    geo.check_image(f.n1(), f.n2())?;
    let values = geo.forward_raw(f.values());
    geo.sinogram(Field::from_vec(geo.m1(), geo.m2(), values)?)
}

/// Plain matrix transpose of [`radon`].
pub fn radon_transpose(g: &Sinogram, geo: &Geometry) -> Result<GridImage> {
    geo.check_sinogram(g)?;
    Ok(GridImage::new(geo.n1(), geo.n2(), geo.transpose_raw(g.values()))?)
}

/// Back-projection over the available angles, the transpose of [`radon`]
/// rescaled by the angular and detector quadrature weights.
pub fn backproject(g: &Sinogram, geo: &Geometry) -> Result<GridImage> {
    geo.check_sinogram(g)?;
    Ok(GridImage::new(geo.n1(), geo.n2(), geo.backproject_raw(g.values()))?)
}
