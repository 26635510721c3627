use mlct_core::{GridImage, Sinogram};
use mlct_radon::{radon_transpose, Geometry};
use serde::Serialize;

use crate::{check_lambda, dot, ReconError, Result};

/// Default regularisation weight, tuned on the synthetic disk and cartoon
/// phantoms at 64x64.
pub const TV_DEFAULT_LAMBDA: f64 = 0.01;

/// Consecutive energy increases treated as divergence.
pub const DIVERGENCE_WINDOW: usize = 50;

const POWER_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct TvReport {
    #[serde(skip)]
    pub image: GridImage,
    /// Objective value after every iteration.
    pub energy: Vec<f64>,
    /// Estimate of `||[R; grad]||` used for the step sizes.
    pub operator_norm: f64,
}

/// Forward differences with zero flux across the last row and column.
fn grad(f: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for i2 in 0..h {
        for i1 in 0..w {
            let p = i2 * w + i1;
            if i1 + 1 < w {
                gx[p] = f[p + 1] - f[p];
            }
            if i2 + 1 < h {
                gy[p] = f[p + w] - f[p];
            }
        }
    }
    (gx, gy)
}

/// Adjoint of [`grad`], i.e. minus the divergence.
fn grad_adjoint(px: &[f64], py: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for i2 in 0..h {
        for i1 in 0..w {
            let p = i2 * w + i1;
            if i1 + 1 < w {
                out[p] -= px[p];
                out[p + 1] += px[p];
            }
            if i2 + 1 < h {
                out[p] -= py[p];
                out[p + w] += py[p];
            }
        }
    }
    out
}

/// Isotropic total variation with forward differences on the pixel lattice.
pub fn total_variation(f: &GridImage) -> f64 {
    let (gx, gy) = grad(f.values(), f.n1(), f.n2());
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
}

/// Power-method estimate of the norm of `f -> (R f, grad f)`.
pub fn operator_norm(geo: &Geometry) -> f64 {
    let (w, h) = (geo.n1(), geo.n2());
    let n = w * h;
    // a fixed, non-symmetric start so the estimate is reproducible
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let norm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let (gx, gy) = grad(&x, w, h);
        let mut y = geo.transpose_raw(&geo.forward_raw(&x));
        for (a, b) in y.iter_mut().zip(grad_adjoint(&gx, &gy, w, h)) {
            *a += b;
        }
        est = dot(&x, &y).sqrt();
        x = y;
    }
    est
}

fn energy(rf: &[f64], f: &[f64], g: &[f64], lambda: f64, w: usize, h: usize) -> f64 {
    let data: f64 = rf.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 2.0;
    let (gx, gy) = grad(f, w, h);
    data + lambda * gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum::<f64>()
}

/// Minimise `||R f - g||^2 / 2 + lambda TV(f)` with the primal-dual hybrid
/// gradient method.
///
/// `lambda` scales the isotropic TV on the pixel lattice; see
/// [`TV_DEFAULT_LAMBDA`].
pub fn recon_tv(g: &Sinogram, geo: &Geometry, lambda: f64, iterations: usize) -> Result<TvReport> {
    check_lambda(lambda)?;
    radon_transpose(g, geo)?;
    let (w, h) = (geo.n1(), geo.n2());
    let n = w * h;
    let data = g.values();
    let l = operator_norm(geo) * 1.01;
    let tau = 1.0 / l;
    let sigma = 1.0 / l;
    let mut f = vec![0.0; n];
    let mut rf = vec![0.0; data.len()];
    let mut rfbar = rf.clone();
    let mut fbar = f.clone();
    let mut q = vec![0.0; data.len()];
    let (mut px, mut py) = (vec![0.0; n], vec![0.0; n]);
    let mut trace = Vec::with_capacity(iterations);
    let mut rising = 0;
    for it in 0..iterations {
        for ((qi, r), d) in q.iter_mut().zip(&rfbar).zip(data) {
            *qi = (*qi + sigma * (r - d)) / (1.0 + sigma);
        }
        let (gx, gy) = grad(&fbar, w, h);
        for p in 0..n {
            let (a, b) = (px[p] + sigma * gx[p], py[p] + sigma * gy[p]);
            let s = (a.hypot(b) / lambda).max(1.0);
            px[p] = a / s;
            py[p] = b / s;
        }
        let mut step = geo.transpose_raw(&q);
        for (a, b) in step.iter_mut().zip(grad_adjoint(&px, &py, w, h)) {
            *a += b;
        }
        for p in 0..n {
            let old = f[p];
            f[p] -= tau * step[p];
            fbar[p] = 2.0 * f[p] - old;
        }
        // R is linear, so R fbar follows from R f at two consecutive steps
        let rf_new = geo.forward_raw(&f);
        for ((b, new), old) in rfbar.iter_mut().zip(&rf_new).zip(&rf) {
            *b = 2.0 * new - old;
        }
        rf = rf_new;
        let e = energy(&rf, &f, data, lambda, w, h);
        if !e.is_finite() {
            return Err(ReconError::Diverged { iteration: it, detail: "non-finite energy".into() });
        }
        if trace.last().is_some_and(|&prev| e > prev) {
            rising += 1;
            if rising >= DIVERGENCE_WINDOW {
                return Err(ReconError::Diverged {
                    iteration: it,
                    detail: format!("energy rose for {rising} consecutive steps, now {e:.6e}"),
                });
            }
        } else {
            rising = 0;
        }
        trace.push(e);
    }
    Ok(TvReport { image: GridImage::new(w, h, f)?, energy: trace, operator_norm: l })
}
