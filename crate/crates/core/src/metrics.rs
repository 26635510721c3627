//! Image quality metrics.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::GridImage;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 300.0;

/// SSIM window side length.
pub const SSIM_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub psnr: f64,
    pub ssim: f64,
    pub l2_relative_error: f64,
}

impl MetricsReport {
    /// Compare a reconstruction against ground truth; the PSNR peak is the
    /// ground-truth dynamic range (or 1 for a constant image).
    pub fn compute(ground_truth: &GridImage, reconstruction: &GridImage) -> Result<Self> {
        let (lo, hi) = ground_truth.field().min_max();
        let range = if hi > lo { hi - lo } else { 1.0 };
        Ok(Self {
            psnr: psnr(ground_truth, reconstruction, range)?,
            ssim: ssim(ground_truth, reconstruction)?,
            l2_relative_error: l2_relative_error(ground_truth, reconstruction)?,
        })
    }
}

pub fn mse(a: &GridImage, b: &GridImage) -> Result<f64> {
    a.check_same_shape(b)?;
    let n = a.values().len() as f64;
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
}

/// `10 log10(range^2 / mse)`, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &GridImage, b: &GridImage, data_range: f64) -> Result<f64> {
    if !(data_range > 0.0) {
        return Err(CoreError::Invalid(format!("data range must be positive, got {data_range}")));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (data_range * data_range / m).log10()).min(PSNR_CAP_DB))
}

/// `||a - b|| / ||a||`; `a` is the reference. Zero reference gives `||b||`.
pub fn l2_relative_error(a: &GridImage, b: &GridImage) -> Result<f64> {
    a.check_same_shape(b)?;
    let diff: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum();
    let reference = a.field().norm();
    Ok(if reference > 0.0 { diff.sqrt() / reference } else { diff.sqrt() })
}

/// Mean structural similarity over all 8x8 windows.
///
/// Window statistics use population (1/N) moments. The stabilisers are
/// `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2` with `L` the joint dynamic range of the
/// two images, floored at `1e-12`.
pub fn ssim(a: &GridImage, b: &GridImage) -> Result<f64> {
    a.check_same_shape(b)?;
    let (w, h) = (a.n1(), a.n2());
    let win = SSIM_WINDOW.min(w).min(h);
    let (alo, ahi) = a.field().min_max();
    let (blo, bhi) = b.field().min_max();
    let l = (ahi.max(bhi) - alo.min(blo)).max(1e-12);
    let c1 = (0.01 * l).powi(2);
    let c2 = (0.03 * l).powi(2);

    let x = a.values();
    let y = b.values();
    let sx = SummedArea::new(w, h, |i| x[i]);
    let sy = SummedArea::new(w, h, |i| y[i]);
    let sxx = SummedArea::new(w, h, |i| x[i] * x[i]);
    let syy = SummedArea::new(w, h, |i| y[i] * y[i]);
    let sxy = SummedArea::new(w, h, |i| x[i] * y[i]);

    let n = (win * win) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for j in 0..=h - win {
        for i in 0..=w - win {
            let mx = sx.rect(i, j, win) / n;
            let my = sy.rect(i, j, win) / n;
            let vx = (sxx.rect(i, j, win) / n - mx * mx).max(0.0);
            let vy = (syy.rect(i, j, win) / n - my * my).max(0.0);
            let cxy = sxy.rect(i, j, win) / n - mx * my;
            let s = ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            total += s;
            count += 1;
        }
    }
    Ok((total / count as f64).clamp(-1.0, 1.0))
}

/// Inclusive prefix sums with a zero border row and column.
struct SummedArea {
    stride: usize,
    table: Vec<f64>,
}

impl SummedArea {
    fn new(w: usize, h: usize, value: impl Fn(usize) -> f64) -> Self {
        let stride = w + 1;
        let mut table = vec![0.0; (w + 1) * (h + 1)];
        for j in 0..h {
            let mut row = 0.0;
            for i in 0..w {
                row += value(j * w + i);
                table[(j + 1) * stride + i + 1] = table[j * stride + i + 1] + row;
            }
        }
        Self { stride, table }
    }

    fn rect(&self, i: usize, j: usize, win: usize) -> f64 {
        let s = self.stride;
        self.table[(j + win) * s + i + win] - self.table[j * s + i + win] - self.table[(j + win) * s + i]
            + self.table[j * s + i]
    }
}
