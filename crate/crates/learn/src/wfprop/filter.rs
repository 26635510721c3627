//! Change of basis between 3x3 filters and the coefficients of the
//! differential operator they discretise.
//!
//! With `e = [0, 1, 0]`, `d = [1, 0, -1]` and `s = [1, -2, 1]`, the basis
//! filters are outer products `v (x) u` with `v` along rows (second axis) and
//! `u` along columns (first axis):
//!
//! | name | filter      | scale       |
//! |------|-------------|-------------|
//! | 11   | `e (x) e`   | `1`         |
//! | 12   | `d (x) e`   | `1 / 2h`    |
//! | 13   | `-s (x) e`  | `1 / h^2`   |
//! | 21   | `e (x) d`   | `1 / 2h`    |
//! | 22   | `d (x) d`   | `1 / 4h^2`  |
//! | 23   | `d (x) s`   | `1 / 2h^3`  |
//! | 31   | `e (x) s`   | `1 / h^2`   |
//! | 32   | `s (x) d`   | `1 / 2h^3`  |
//! | 33   | `s (x) -s`  | `1 / h^4`   |

use serde::{Deserialize, Serialize};

pub type Filter3 = [[f64; 3]; 3];

const E: [f64; 3] = [0.0, 1.0, 0.0];
const D: [f64; 3] = [1.0, 0.0, -1.0];
const S: [f64; 3] = [1.0, -2.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterBasisCoeffs {
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
    pub b13: f64,
    pub b31: f64,
    pub b23: f64,
    pub b32: f64,
    pub b33: f64,
    pub h: f64,
}

fn outer(v: [f64; 3], u: [f64; 3]) -> Filter3 {
    std::array::from_fn(|r| std::array::from_fn(|c| v[r] * u[c]))
}

/// Coefficients of `x` in the `(e, d, s)` basis.
fn split(x: [f64; 3]) -> [f64; 3] {
    let (a, b, c) = (x[0], x[1], x[2]);
    [b + a + c, 0.5 * (a - c), 0.5 * (a + c)]
}

/// Unit basis filter `(i, j)` with `i, j` in `1..=3`, before scaling.
pub fn basis_filter(i: usize, j: usize) -> Filter3 {
    match (i, j) {
        (1, 1) => outer(E, E),
        (1, 2) => outer(D, E),
        (1, 3) => outer(S.map(|v| -v), E),
        (2, 1) => outer(E, D),
        (2, 2) => outer(D, D),
        (2, 3) => outer(D, S),
        (3, 1) => outer(E, S),
        (3, 2) => outer(S, D),
        (3, 3) => outer(S, S.map(|v| -v)),
        _ => panic!("basis index ({i}, {j}) out of range"),
    }
}

impl FilterBasisCoeffs {
    pub fn zero(h: f64) -> Self {
        Self { b11: 0.0, b12: 0.0, b21: 0.0, b22: 0.0, b13: 0.0, b31: 0.0, b23: 0.0, b32: 0.0, b33: 0.0, h }
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `[b11, b12, b21, b22, b13, b31, b23, b32, b33]`.
    pub fn values(&self) -> [f64; 9] {
        [self.b11, self.b12, self.b21, self.b22, self.b13, self.b31, self.b23, self.b32, self.b33]
    }

    pub fn from_values(v: [f64; 9], h: f64) -> Self {
        Self { b11: v[0], b12: v[1], b21: v[2], b22: v[3], b13: v[4], b31: v[5], b23: v[6], b32: v[7], b33: v[8], h }
    }
}

pub fn decompose_filter(theta: &Filter3, h: f64) -> FilterBasisCoeffs {
    assert!(h > 0.0, "grid step must be positive");
    // split columns along each row, then rows along each coefficient
    let rows: [[f64; 3]; 3] = std::array::from_fn(|r| split(theta[r]));
    let c: [[f64; 3]; 3] = std::array::from_fn(|a| split([rows[0][a], rows[1][a], rows[2][a]]));
    // c[horizontal][vertical]
    let coef = |v: usize, u: usize| c[u][v];
    let (h2, h3, h4) = (h * h, h * h * h, h * h * h * h);
    FilterBasisCoeffs {
        b11: coef(0, 0),
        b12: coef(1, 0) * 2.0 * h,
        b13: -coef(2, 0) * h2,
        b21: coef(0, 1) * 2.0 * h,
        b22: coef(1, 1) * 4.0 * h2,
        b23: coef(1, 2) * 2.0 * h3,
        b31: coef(0, 2) * h2,
        b32: coef(2, 1) * 2.0 * h3,
        b33: -coef(2, 2) * h4,
        h,
    }
}

pub fn recompose_filter(b: &FilterBasisCoeffs) -> Filter3 {
    let h = b.h;
    let (h2, h3, h4) = (h * h, h * h * h, h * h * h * h);
    let terms = [
        (b.b11, 1.0, (1, 1)),
        (b.b12, 2.0 * h, (1, 2)),
        (b.b21, 2.0 * h, (2, 1)),
        (b.b22, 4.0 * h2, (2, 2)),
        (b.b13, h2, (1, 3)),
        (b.b31, h2, (3, 1)),
        (b.b32, 2.0 * h3, (3, 2)),
        (b.b23, 2.0 * h3, (2, 3)),
        (b.b33, h4, (3, 3)),
    ];
    let mut out = [[0.0; 3]; 3];
    for (beta, scale, (i, j)) in terms {
        if beta == 0.0 {
            continue;
        }
        let f = basis_filter(i, j);
        for r in 0..3 {
            for c in 0..3 {
                out[r][c] += beta / scale * f[r][c];
            }
        }
    }
    out
}

/// Filter stored as nine row-major values.
pub fn filter_from_slice(v: &[f64]) -> Filter3 {
    std::array::from_fn(|r| std::array::from_fn(|c| v[r * 3 + c]))
}

/// Symbol polynomial of the operator.
pub fn symbol_eval(b: &FilterBasisCoeffs, xi: [f64; 2]) -> f64 {
    let (x1, x2) = (xi[0], xi[1]);
    b.b11
        + b.b12 * x2
        + b.b21 * x1
        + b.b22 * x1 * x2
        + b.b13 * x2 * x2
        + b.b31 * x1 * x1
        + b.b23 * x2 * x2 * x1
        + b.b32 * x1 * x1 * x2
        + b.b33 * x1 * x1 * x2 * x2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Ellipticity {
    Elliptic,
    NonElliptic { witness: [f64; 2] },
}

impl Ellipticity {
    pub fn is_elliptic(&self) -> bool {
        matches!(self, Self::Elliptic)
    }
}

pub const ELLIPTIC_DIRECTIONS: usize = 360;
pub const RADIUS_RANGE: (f64, f64) = (1e-3, 1e3);

fn horner(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * r + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

/// Real roots of the polynomial `c` (ascending powers) inside `(lo, hi)`,
/// found by splitting at the roots of the derivative into monotone pieces.
fn roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let deg = c.iter().rposition(|&a| a != 0.0).unwrap_or(0);
    if deg == 0 {
        return Vec::new();
    }
    let c = &c[..=deg];
    let mut cuts = vec![lo];
    cuts.extend(roots_in(&derivative(c), lo, hi));
    cuts.push(hi);
    let mut roots = Vec::new();
    for w in cuts.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (horner(c, a), horner(c, b));
        if fa == 0.0 {
            if a > lo {
                roots.push(a);
            }
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        let up = fb > fa;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (horner(c, m) < 0.0) == up {
                a = m;
            } else {
                b = m;
            }
        }
        let r = 0.5 * (a + b);
        if r > lo && r < hi {
            roots.push(r);
        }
    }
    roots
}

/// Minimum of `|p|` along the ray `r * (cos phi, sin phi)` for `r` in
/// [`RADIUS_RANGE`], with its radius.
fn ray_minimum(b: &FilterBasisCoeffs, phi: f64) -> (f64, f64) {
    let (c, s) = (phi.cos(), phi.sin());
    let poly = [
        b.b11,
        b.b12 * s + b.b21 * c,
        b.b22 * c * s + b.b13 * s * s + b.b31 * c * c,
        b.b23 * s * s * c + b.b32 * c * c * s,
        b.b33 * c * c * s * s,
    ];
    let (lo, hi) = RADIUS_RANGE;
    let mut best = (f64::INFINITY, lo);
    let mut consider = |r: f64| {
        let v = horner(&poly, r).abs();
        if v < best.0 {
            best = (v, r);
        }
    };
    consider(lo);
    consider(hi);
    for r in roots_in(&poly, lo, hi) {
        consider(r);
    }
    for r in roots_in(&derivative(&poly), lo, hi) {
        consider(r);
    }
    best
}

/// Checks `|p(xi)| > tolerance * (1 + max |beta|)` on the annulus
/// `1e-3 <= |xi| <= 1e3`, minimising exactly along 360 directions, refining
/// every local minimum over the angle, and treating any sign change between
/// directions as a zero.
pub fn is_elliptic(b: &FilterBasisCoeffs, tolerance: f64) -> Ellipticity {
    assert!(tolerance > 0.0, "tolerance must be positive");
    let threshold = tolerance * (1.0 + b.max_abs());
    let n = ELLIPTIC_DIRECTIONS;
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut sign = 0.0;
    let mut mixed = false;
    let mut rays = Vec::with_capacity(n);
    for k in 0..n {
        let phi = step * k as f64;
        rays.push(ray_minimum(b, phi));
        let p = symbol_eval(b, [phi.cos(), phi.sin()]).signum();
        if sign == 0.0 {
            sign = p;
        } else if p != sign {
            mixed = true;
        }
    }
    let witness = |phi: f64, r: f64| [r * phi.cos(), r * phi.sin()];
    let mut best = (f64::INFINITY, [RADIUS_RANGE.0, 0.0]);
    for k in 0..n {
        let (v, r) = rays[k];
        if v < best.0 {
            best = (v, witness(step * k as f64, r));
        }
        let (prev, next) = (rays[(k + n - 1) % n].0, rays[(k + 1) % n].0);
        if v > prev || v > next {
            continue;
        }
        // golden-section search between the neighbouring directions
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut c) = (step * (k as f64 - 1.0), step * (k as f64 + 1.0));
        for _ in 0..40 {
            let x1 = c - g * (c - a);
            let x2 = a + g * (c - a);
            if ray_minimum(b, x1).0 <= ray_minimum(b, x2).0 {
                c = x2;
            } else {
                a = x1;
            }
        }
        let phi = 0.5 * (a + c);
        let (v, r) = ray_minimum(b, phi);
        if v < best.0 {
            best = (v, witness(phi, r));
        }
    }
    if mixed || best.0 <= threshold {
        Ellipticity::NonElliptic { witness: best.1 }
    } else {
        Ellipticity::Elliptic
    }
}
