//! Element-wise canonical relations.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::{MicrolocalError, Result};

/// Wavefront element of an image: position and the angle `theta` of the
/// element as it enters the canonical relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageWfElement {
    pub x: [f64; 2],
    pub theta: f64,
}

/// Wavefront element of a sinogram: line `(s, phi)` and orientation `vartheta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinoWfElement {
    pub s: f64,
    pub phi: f64,
    pub vartheta: f64,
}

fn omega(t: f64) -> [f64; 2] {
    [t.cos(), t.sin()]
}

fn omega_perp(t: f64) -> [f64; 2] {
    [-t.sin(), t.cos()]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `(x; omega(theta)) -> ((x . omega_perp(theta), theta + pi/2); omega(arctan(-x . omega(theta))))`,
/// normalised so that `phi` lies in `[0, pi)`; crossing `pi` flips the signs of
/// `s` and `vartheta`.
pub fn canon_fwd(e: ImageWfElement) -> SinoWfElement {
    let theta = e.theta.rem_euclid(PI);
    let mut s = dot(e.x, omega_perp(theta));
    let mut phi = theta + FRAC_PI_2;
    let mut vartheta = (-dot(e.x, omega(theta))).atan();
    if phi >= PI {
        phi -= PI;
        s = -s;
        vartheta = -vartheta;
    }
    SinoWfElement { s, phi, vartheta }
}

/// Inverse of [`canon_fwd`].
pub fn canon_bwd(e: SinoWfElement) -> Result<ImageWfElement> {
    if !(e.vartheta.abs() < FRAC_PI_2) {
        return Err(MicrolocalError::Grazing);
    }
    let t = e.vartheta.tan();
    let (c, s) = (e.phi.cos(), e.phi.sin());
    let x = [e.s * c - t * s, e.s * s + t * c];
    Ok(ImageWfElement { x, theta: (e.phi - FRAC_PI_2).rem_euclid(PI) })
}
