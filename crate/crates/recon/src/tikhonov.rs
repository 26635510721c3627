use mlct_core::{GridImage, Sinogram};
use mlct_radon::{radon_transpose, Geometry};
use serde::Serialize;

use crate::{check_lambda, dot, Result};

/// Relative normal-equation residual at which conjugate gradients stop.
pub const CG_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct TikhonovReport {
    #[serde(skip)]
    pub image: GridImage,
    /// `||(R^T R + lambda I) f - R^T g|| / ||R^T g||` of the returned image.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimise `||R f - g||^2 + lambda ||f||^2` by conjugate gradients on the
/// normal equations. On hitting the iteration cap the iterate with the
/// smallest residual is returned.
pub fn recon_tikhonov(g: &Sinogram, geo: &Geometry, lambda: f64, iterations: usize) -> Result<TikhonovReport> {
    check_lambda(lambda)?;
    let rhs = radon_transpose(g, geo)?.into_field().data;
    let n = rhs.len();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = geo.transpose_raw(&geo.forward_raw(x));
        for (a, b) in y.iter_mut().zip(x) {
            *a += lambda * b;
        }
        y
    };
    let b_norm = dot(&rhs, &rhs).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(TikhonovReport { image: GridImage::new(geo.n1(), geo.n2(), x)?, residual: 0.0, iterations: 0, converged: true });
    }
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let (mut best, mut best_res) = (x.clone(), 1.0);
    let mut done = 0;
    while done < iterations && rr.sqrt() / b_norm > CG_TOLERANCE {
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        done += 1;
        let res = rr.sqrt() / b_norm;
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&x);
        }
    }
    // the recursive residual drifts; report the true one
    let ax = apply(&best);
    let true_res = ax.iter().zip(&rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / b_norm;
    let converged = best_res <= CG_TOLERANCE;
    if !converged {
        log::warn!("tikhonov: no convergence after {done} iterations, residual {true_res:.3e}");
    }
    Ok(TikhonovReport { image: GridImage::new(geo.n1(), geo.n2(), best)?, residual: true_res, iterations: done, converged })
}
