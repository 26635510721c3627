use std::f64::consts::PI;

use mlct_core::{Field, Sinogram};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    None,
    Hann,
}

/// Frequency response of the band-limited ramp (Ram-Lak) kernel on `len`
/// points with detector spacing `ds`, DC removed.
fn ramp_response(len: usize, ds: f64, window: Window) -> Vec<Complex64> {
    let mut kernel = vec![Complex64::new(0.0, 0.0); len];
    for (i, v) in kernel.iter_mut().enumerate() {
        let n = if i <= len / 2 { i as i64 } else { i as i64 - len as i64 };
        let value = if n == 0 {
            1.0 / (4.0 * ds * ds)
        } else if n % 2 != 0 {
            -1.0 / (PI * PI * (n * n) as f64 * ds * ds)
        } else {
            0.0
        };
        *v = Complex64::new(value, 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut kernel);
    kernel[0] = Complex64::new(0.0, 0.0);
    if window == Window::Hann {
        for (i, v) in kernel.iter_mut().enumerate() {
            let f = if i <= len / 2 { i } else { len - i } as f64 / len as f64;
            *v *= 0.5 * (1.0 + (2.0 * PI * f).cos());
        }
    }
    kernel
}

/// Ramp-filter the detector rows of raw `m1 x m2` values. Rows are padded to a
/// power of two at least `2 * m1` by repeating their end values.
pub fn ramp_filter_raw(values: &[f64], m1: usize, ds: f64, window: Window) -> Vec<f64> {
    let len = (2 * m1).next_power_of_two();
    let response = ramp_response(len, ds, window);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut out = vec![0.0; values.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let pad = len - m1;
    for (row, dst) in values.chunks(m1).zip(out.chunks_mut(m1)) {
        if row.iter().all(|&v| v == 0.0) {
            continue;
        }
        for (i, b) in buf.iter_mut().enumerate() {
            let v = if i < m1 {
                row[i]
            } else if i - m1 < pad / 2 {
                row[m1 - 1]
            } else {
                row[0]
            };
            *b = Complex64::new(v, 0.0);
        }
        fwd.process(&mut buf);
        for (b, r) in buf.iter_mut().zip(&response) {
            *b *= r;
        }
        inv.process(&mut buf);
        // inverse FFT is unnormalised; the convolution sum carries one ds
        let scale = ds / len as f64;
        for (d, b) in dst.iter_mut().zip(&buf) {
            *d = b.re * scale;
        }
    }
    out
}

pub fn ramp_filter(g: &Sinogram, window: Window) -> Sinogram {
    let values = ramp_filter_raw(g.values(), g.m1(), g.ds(), window);
    g.with_values(Field::from_vec(g.m1(), g.m2(), values).expect("same shape")).expect("finite filtered values")
}
