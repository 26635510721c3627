use mlct_core::{angle_bin, DigitalWavefrontSet, DwfMode, Field};
use serde::{Deserialize, Serialize};

use crate::{LearnError, Result};

/// Physical sample spacing along the two grid axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacing {
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelClass {
    /// The feature is positive on the whole 3x3 neighbourhood.
    IntSuppPlus,
    /// No neighbour is positive and the feature does not change sign
    /// across the neighbourhood; the activation vanishes here.
    SuppNegZero,
    /// Zero crossing with a non-vanishing gradient.
    Regular,
    /// Zero crossing where the gradient vanishes.
    CornerOrSingular,
}

impl PixelClass {
    pub const ALL: [PixelClass; 4] =
        [PixelClass::IntSuppPlus, PixelClass::SuppNegZero, PixelClass::Regular, PixelClass::CornerOrSingular];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Relative thresholds; the absolute ones are these times `max |f|` and
/// `max |grad f|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReluThresholds {
    pub eps_val: f64,
    pub eps_grad: f64,
}

impl Default for ReluThresholds {
    fn default() -> Self {
        Self { eps_val: 1e-3, eps_grad: 1e-3 }
    }
}

impl ReluThresholds {
    /// Absolute `(eps_val, eps_grad)` for `feature`.
    pub fn resolve(&self, feature: &Field, sp: Spacing) -> (f64, f64) {
        let (g1, g2) = gradient(feature, sp);
        let gmax = g1.iter().zip(&g2).fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)));
        (self.eps_val * feature.max_abs(), self.eps_grad * gmax)
    }
}

/// Central differences, one-sided on the border.
pub fn gradient(f: &Field, sp: Spacing) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (f.width, f.height);
    let mut g1 = vec![0.0; w * h];
    let mut g2 = vec![0.0; w * h];
    for i2 in 0..h {
        for i1 in 0..w {
            let p = i2 * w + i1;
            g1[p] = diff(w, i1, sp.h1, |j| f.data[i2 * w + j]);
            g2[p] = diff(h, i2, sp.h2, |j| f.data[j * w + i1]);
        }
    }
    (g1, g2)
}

#[inline]
fn diff(n: usize, i: usize, step: f64, at: impl Fn(usize) -> f64) -> f64 {
    if n < 2 {
        0.0
    } else if i == 0 {
        (at(1) - at(0)) / step
    } else if i == n - 1 {
        (at(n - 1) - at(n - 2)) / step
    } else {
        (at(i + 1) - at(i - 1)) / (2.0 * step)
    }
}

/// Adjoint of [`gradient`]: `dz += D1^T d1 + D2^T d2`.
pub fn gradient_adjoint(dz: &mut [f64], d1: &[f64], d2: &[f64], w: usize, h: usize, sp: Spacing) {
    for i2 in 0..h {
        for i1 in 0..w {
            let p = i2 * w + i1;
            diff_adjoint(w, i1, sp.h1, d1[p], |j, v| dz[i2 * w + j] += v);
            diff_adjoint(h, i2, sp.h2, d2[p], |j, v| dz[j * w + i1] += v);
        }
    }
}

#[inline]
fn diff_adjoint(n: usize, i: usize, step: f64, g: f64, mut add: impl FnMut(usize, f64)) {
    if n < 2 || g == 0.0 {
        return;
    }
    if i == 0 {
        add(1, g / step);
        add(0, -g / step);
    } else if i == n - 1 {
        add(n - 1, g / step);
        add(n - 2, -g / step);
    } else {
        add(i + 1, g / (2.0 * step));
        add(i - 1, -g / (2.0 * step));
    }
}

/// Indices of the in-bounds 3x3 neighbourhood of `p`.
pub(crate) fn neighbourhood(w: usize, h: usize, i1: usize, i2: usize) -> impl Iterator<Item = usize> {
    let (a0, a1) = (i1.saturating_sub(1), (i1 + 1).min(w - 1));
    let (b0, b1) = (i2.saturating_sub(1), (i2 + 1).min(h - 1));
    (b0..=b1).flat_map(move |b| (a0..=a1).map(move |a| b * w + a))
}

/// Per-pixel classes of `feature` for the activation rule.
pub fn classify_pixels(feature: &Field, sp: Spacing, eps_val: f64, eps_grad: f64) -> Vec<PixelClass> {
    let (w, h) = (feature.width, feature.height);
    let (g1, g2) = gradient(feature, sp);
    let mut out = Vec::with_capacity(w * h);
    for i2 in 0..h {
        for i1 in 0..w {
            let mut pos = 0;
            let mut total = 0;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for q in neighbourhood(w, h, i1, i2) {
                let v = feature.data[q];
                total += 1;
                if v > eps_val {
                    pos += 1;
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let p = i2 * w + i1;
            out.push(if pos == total {
                PixelClass::IntSuppPlus
            } else if pos == 0 && !(lo < 0.0 && hi > 0.0) {
                PixelClass::SuppNegZero
            } else if g1[p].hypot(g2[p]) > eps_grad {
                PixelClass::Regular
            } else {
                PixelClass::CornerOrSingular
            });
        }
    }
    out
}

fn check_grid(dwf: &DigitalWavefrontSet, feature: &Field) -> Result<()> {
    if dwf.width() != feature.width || dwf.height() != feature.height {
        return Err(LearnError::Shape(format!(
            "wavefront set {}x{} vs feature {}x{}",
            dwf.width(),
            dwf.height(),
            feature.width,
            feature.height
        )));
    }
    Ok(())
}

/// Wavefront set of `relu(f)` given that of `f`, written into `out` as a
/// union (so several channels can share one accumulator). Returns the
/// classes used.
pub fn prop_relu_into(
    out: &mut DigitalWavefrontSet,
    dwf: &DigitalWavefrontSet,
    feature: &Field,
    sp: Spacing,
    eps_val: f64,
    eps_grad: f64,
) -> Result<Vec<PixelClass>> {
    check_grid(dwf, feature)?;
    dwf.check_same_grid(out)?;
    let classes = classify_pixels(feature, sp, eps_val, eps_grad);
    let (g1, g2) = gradient(feature, sp);
    let bins = dwf.bins();
    let w = feature.width;
    for (p, class) in classes.iter().enumerate() {
        let (i1, i2) = (p % w, p / w);
        match class {
            PixelClass::SuppNegZero => {}
            PixelClass::IntSuppPlus => {
                let src = dwf.pixel(i1, i2).to_vec();
                for (o, s) in out.pixel_mut(i1, i2).iter_mut().zip(src) {
                    *o = o.max(s);
                }
            }
            PixelClass::Regular => {
                let k = angle_bin(g2[p].atan2(g1[p]), bins);
                out.mark(i1, i2, k);
            }
            PixelClass::CornerOrSingular => out.pixel_mut(i1, i2).iter_mut().for_each(|v| *v = 1.0),
        }
    }
    Ok(classes)
}

/// Hard activation rule with explicit absolute thresholds.
pub fn prop_relu(
    dwf: &DigitalWavefrontSet,
    feature: &Field,
    sp: Spacing,
    eps_val: f64,
    eps_grad: f64,
) -> Result<DigitalWavefrontSet> {
    let mut out = DigitalWavefrontSet::empty(dwf.width(), dwf.height(), dwf.bins(), DwfMode::Hard);
    prop_relu_into(&mut out, &dwf.to_hard(), feature, sp, eps_val, eps_grad)?;
    Ok(out)
}
