//! Zero-padded, stride-1 3x3 convolutions on row-major channel buffers.
//!
//! A filter is nine values `theta[r * 3 + c]`; row `r` runs along the second
//! grid axis. The convolution is a true convolution:
//! `out(i1, i2) = sum theta[r][c] * in(i1 + 1 - c, i2 + 1 - r)`.

#[inline]
fn range(len: usize, shift: isize) -> (usize, usize) {
    let lo = (-shift).max(0) as usize;
    let hi = (len as isize - shift.max(0)).max(0) as usize;
    (lo.min(len), hi.max(lo.min(len)))
}

#[inline]
fn taps() -> impl Iterator<Item = (usize, isize, isize)> {
    (0..9).map(|t| (t, 1 - (t % 3) as isize, 1 - (t / 3) as isize))
}

/// `out += theta * input`.
pub fn conv_acc(out: &mut [f64], input: &[f64], width: usize, height: usize, theta: &[f64]) {
    debug_assert_eq!(out.len(), width * height);
    debug_assert_eq!(input.len(), width * height);
    for (t, dx, dy) in taps() {
        let w = theta[t];
        if w == 0.0 {
            continue;
        }
        let (x0, x1) = range(width, dx);
        let (y0, y1) = range(height, dy);
        for i2 in y0..y1 {
            let src = ((i2 as isize + dy) as usize) * width;
            let o = &mut out[i2 * width + x0..i2 * width + x1];
            let s = &input[(src as isize + x0 as isize + dx) as usize..(src as isize + x1 as isize + dx) as usize];
            for (a, b) in o.iter_mut().zip(s) {
                *a += w * b;
            }
        }
    }
}

/// `grad_in += theta^T * grad_out`, the adjoint of [`conv_acc`] in its input.
pub fn conv_transpose_acc(grad_in: &mut [f64], grad_out: &[f64], width: usize, height: usize, theta: &[f64]) {
    for (t, dx, dy) in taps() {
        let w = theta[t];
        if w == 0.0 {
            continue;
        }
        let (x0, x1) = range(width, dx);
        let (y0, y1) = range(height, dy);
        for i2 in y0..y1 {
            let dst = ((i2 as isize + dy) as usize) * width;
            let g = &grad_out[i2 * width + x0..i2 * width + x1];
            let d = &mut grad_in[(dst as isize + x0 as isize + dx) as usize..(dst as isize + x1 as isize + dx) as usize];
            for (a, b) in d.iter_mut().zip(g) {
                *a += w * b;
            }
        }
    }
}

/// `grad_theta += d/dtheta <grad_out, theta * input>`.
pub fn conv_filter_grad(grad_theta: &mut [f64], grad_out: &[f64], input: &[f64], width: usize, height: usize) {
    for (t, dx, dy) in taps() {
        let (x0, x1) = range(width, dx);
        let (y0, y1) = range(height, dy);
        let mut acc = 0.0;
        for i2 in y0..y1 {
            let src = ((i2 as isize + dy) as usize) * width;
            let g = &grad_out[i2 * width + x0..i2 * width + x1];
            let s = &input[(src as isize + x0 as isize + dx) as usize..(src as isize + x1 as isize + dx) as usize];
            acc += g.iter().zip(s).map(|(a, b)| a * b).sum::<f64>();
        }
        grad_theta[t] += acc;
    }
}
