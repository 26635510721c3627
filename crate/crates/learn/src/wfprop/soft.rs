//! Differentiable relaxation of the propagation rules, used to train
//! through the wavefront loss.
//!
//! For a feature `z` with `a = sigmoid(z / (tau max|z|))`, a pixel is inside
//! the positive support with weight `A = min a` over its 3x3 neighbourhood,
//! outside with weight `1 - max a`, and on the boundary with weight
//! `Bd = max a - min a`. On the boundary the gradient gate
//! `G = sigmoid((|grad z| - eps) / (tau max|grad z|))` blends the regular
//! rule (a von Mises bump one bin wide around the gradient orientation) with
//! the all-bins rule. Unions are probabilistic ORs.

use std::f64::consts::PI;

use mlct_core::{DigitalWavefrontSet, DwfMode, Field};
use mlct_radon::Geometry;
use serde::{Deserialize, Serialize};

use super::hard::{check_lpd_inputs, image_spacing, layer_groups, sinogram_spacing, LpdMaps};
use super::relu::{gradient, gradient_adjoint, neighbourhood, Spacing};
use crate::lpd::{LpdCapture, LpdFeatureGrads, LpdParams};
use crate::resnet::{ResNetCapture, ResNetParams};
use crate::{LearnError, Result};

/// Bins beyond this distance from the bump centre are treated as zero.
const BUMP_REACH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoftConfig {
    pub tau: f64,
    /// Gradient threshold relative to `max |grad z|`.
    pub eps_grad: f64,
}

impl Default for SoftConfig {
    fn default() -> Self {
        Self { tau: 1e-2, eps_grad: 1e-3 }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Gate values of one channel.
#[derive(Debug, Clone)]
struct Gates {
    a: Vec<f64>,
    imin: Vec<u32>,
    imax: Vec<u32>,
    inside: Vec<f64>,
    boundary: Vec<f64>,
    gate: Vec<f64>,
    alpha: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
    gnorm: Vec<f64>,
    inv_scale: f64,
    gate_scale: f64,
    /// Arg max of `|z|` and of the gradient norm.
    zarg: usize,
    garg: usize,
    z: Vec<f64>,
}

impl Gates {
    fn new(z: &Field, sp: Spacing, cfg: &SoftConfig) -> Self {
        let (w, h) = (z.width, z.height);
        let zarg = argmax(z.data.iter().map(|v| v.abs()));
        let smax = z.max_abs();
        let inv_scale = if smax > 0.0 { 1.0 / (cfg.tau * smax) } else { 0.0 };
        let a: Vec<f64> = z.data.iter().map(|&v| sigmoid(v * inv_scale)).collect();
        let (g1, g2) = gradient(z, sp);
        let gnorm: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| x.hypot(*y)).collect();
        let garg = argmax(gnorm.iter().copied());
        let gmax = gnorm.get(garg).copied().unwrap_or(0.0);
        let gate_scale = if gmax > 0.0 { 1.0 / (cfg.tau * gmax) } else { 0.0 };
        let eps = cfg.eps_grad * gmax;
        let n = w * h;
        let mut g = Self {
            a,
            imin: vec![0; n],
            imax: vec![0; n],
            inside: vec![0.0; n],
            boundary: vec![0.0; n],
            gate: vec![0.0; n],
            alpha: vec![0.0; n],
            g1,
            g2,
            gnorm,
            inv_scale,
            gate_scale,
            zarg,
            garg,
            z: z.data.clone(),
        };
        for i2 in 0..h {
            for i1 in 0..w {
                let p = i2 * w + i1;
                let (mut lo, mut hi) = (p, p);
                for q in neighbourhood(w, h, i1, i2) {
                    if g.a[q] < g.a[lo] {
                        lo = q;
                    }
                    if g.a[q] > g.a[hi] {
                        hi = q;
                    }
                }
                g.imin[p] = lo as u32;
                g.imax[p] = hi as u32;
                g.inside[p] = g.a[lo];
                g.boundary[p] = g.a[hi] - g.a[lo];
                g.gate[p] = if gmax > 0.0 { sigmoid((g.gnorm[p] - eps) * gate_scale) } else { 0.0 };
                g.alpha[p] = g.g2[p].atan2(g.g1[p]);
            }
        }
        g
    }

    /// Gradient in `z` from gradients in `(inside, boundary, gate, alpha)`.
    fn backward(&self, d: &GateGrads, w: usize, h: usize, sp: Spacing) -> Field {
        let n = w * h;
        let mut da = vec![0.0; n];
        let mut dg1 = vec![0.0; n];
        let mut dg2 = vec![0.0; n];
        let gmax = self.gnorm.get(self.garg).copied().unwrap_or(0.0);
        let mut dgmax = 0.0;
        for p in 0..n {
            let (lo, hi) = (self.imin[p] as usize, self.imax[p] as usize);
            da[lo] += d.inside[p] - d.boundary[p];
            da[hi] += d.boundary[p];
            let gn = self.gnorm[p];
            if gn > 0.0 {
                let (x, y) = (self.g1[p], self.g2[p]);
                let gg = self.gate[p];
                let dn = d.gate[p] * gg * (1.0 - gg) * self.gate_scale;
                dgmax -= dn * gn / gmax;
                dg1[p] += dn * x / gn - d.alpha[p] * y / (gn * gn);
                dg2[p] += dn * y / gn + d.alpha[p] * x / (gn * gn);
            }
        }
        if gmax > 0.0 {
            let gn = self.gnorm[self.garg];
            dg1[self.garg] += dgmax * self.g1[self.garg] / gn;
            dg2[self.garg] += dgmax * self.g2[self.garg] / gn;
        }
        let mut dz = vec![0.0; n];
        let mut dsmax = 0.0;
        for q in 0..n {
            let a = self.a[q];
            let t = da[q] * a * (1.0 - a) * self.inv_scale;
            dz[q] = t;
            dsmax -= t * self.z[q];
        }
        if self.inv_scale > 0.0 {
            let zmax = self.z[self.zarg];
            dz[self.zarg] += dsmax * zmax.signum() / zmax.abs();
        }
        gradient_adjoint(&mut dz, &dg1, &dg2, w, h, sp);
        Field { width: w, height: h, data: dz }
    }
}

struct GateGrads {
    inside: Vec<f64>,
    boundary: Vec<f64>,
    gate: Vec<f64>,
    alpha: Vec<f64>,
}

impl GateGrads {
    fn zeros(n: usize) -> Self {
        Self { inside: vec![0.0; n], boundary: vec![0.0; n], gate: vec![0.0; n], alpha: vec![0.0; n] }
    }
}

/// Orientation bump around `alpha` and its derivative in `alpha`.
struct Bump {
    bins: usize,
    kappa: f64,
}

impl Bump {
    fn new(bins: usize) -> Self {
        Self { bins, kappa: (bins * bins) as f64 / (4.0 * PI * PI) }
    }

    /// Calls `visit(bin, value, d value / d alpha)` for bins near `alpha`.
    fn for_each(&self, alpha: f64, mut visit: impl FnMut(usize, f64, f64)) {
        let m = self.bins;
        let step = PI / m as f64;
        let mut one = |b: usize| {
            let d = 2.0 * (b as f64 * step - alpha);
            let v = (self.kappa * (d.cos() - 1.0)).exp();
            visit(b, v, v * self.kappa * 2.0 * d.sin());
        };
        if 2 * BUMP_REACH + 1 >= m {
            (0..m).for_each(&mut one);
        } else {
            let centre = (alpha.rem_euclid(PI) / step).round() as isize;
            for off in -(BUMP_REACH as isize)..=BUMP_REACH as isize {
                one((centre + off).rem_euclid(m as isize) as usize);
            }
        }
    }
}

/// Layer state kept for the reverse pass.
#[derive(Debug, Clone)]
struct SoftLayer {
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    /// Union feeding each group, `cells * bins`.
    unions: Vec<Vec<f64>>,
    gates: Vec<Gates>,
}

/// Everything [`soft_resnet_backward`] needs.
#[derive(Debug, Clone)]
pub struct SoftResNetTape {
    width: usize,
    height: usize,
    bins: usize,
    sp: Spacing,
    inputs: Vec<Vec<f64>>,
    layers: Vec<SoftLayer>,
    outputs: usize,
}

fn or_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a = *a + b - *a * b;
    }
}

/// Activation outputs of every channel at one pixel, `values[c * bins + b]`.
fn activations_at(layer: &SoftLayer, bump: &Bump, p: usize, bins: usize, values: &mut [f64]) {
    for (c, g) in layer.gates.iter().enumerate() {
        let u = &layer.unions[layer.group_of[c]][p * bins..(p + 1) * bins];
        let (a, bd, gg) = (g.inside[p], g.boundary[p], g.gate[p]);
        let row = &mut values[c * bins..(c + 1) * bins];
        let base = bd * (1.0 - gg);
        for (r, &x) in row.iter_mut().zip(u) {
            *r = a * x + base;
        }
        if bd * gg != 0.0 {
            bump.for_each(g.alpha[p], |b, v, _| row[b] += bd * gg * v);
        }
    }
}

pub fn soft_resnet_forward(
    dwf_in: &[&[f64]],
    shape: (usize, usize, usize),
    params: &ResNetParams,
    capture: &ResNetCapture,
    sp: Spacing,
    cfg: &SoftConfig,
) -> Result<(Vec<Vec<f64>>, SoftResNetTape)> {
    let plan = params.plan();
    let (w, h, bins) = shape;
    let cells = w * h;
    if dwf_in.len() != plan[0] || dwf_in.iter().any(|d| d.len() != cells * bins) {
        return Err(LearnError::Shape(format!("expected {} channels of {w}x{h}x{bins}", plan[0])));
    }
    for (j, z) in capture.pre.iter().enumerate().take(3) {
        if z.len() != plan[j + 1] || z.iter().any(|f| f.width != w || f.height != h) {
            return Err(LearnError::Capture(format!("layer {} features do not match the network", j + 1)));
        }
    }
    let bump = Bump::new(bins);
    let (groups, group_of) = layer_groups(params, 0);
    let unions = groups
        .iter()
        .map(|m| {
            let mut u = vec![0.0; cells * bins];
            for &i in m {
                or_into(&mut u, dwf_in[i]);
            }
            u
        })
        .collect();
    let mut layers = vec![SoftLayer { groups, group_of, unions, gates: Vec::new() }];
    let mut values = vec![0.0; plan.iter().max().copied().unwrap_or(0) * bins];
    for j in 0..3 {
        let gates: Vec<Gates> = capture.pre[j].iter().map(|z| Gates::new(z, sp, cfg)).collect();
        layers[j].gates = gates;
        let (groups, group_of) = layer_groups(params, j + 1);
        let mut unions: Vec<Vec<f64>> = groups.iter().map(|_| vec![0.0; cells * bins]).collect();
        let k = plan[j + 1];
        for p in 0..cells {
            activations_at(&layers[j], &bump, p, bins, &mut values[..k * bins]);
            for (m, u) in groups.iter().zip(unions.iter_mut()) {
                let u = &mut u[p * bins..(p + 1) * bins];
                for (b, ub) in u.iter_mut().enumerate() {
                    let keep: f64 = m.iter().map(|&c| 1.0 - values[c * bins + b]).product();
                    *ub = 1.0 - keep;
                }
            }
        }
        layers.push(SoftLayer { groups, group_of, unions, gates: Vec::new() });
    }
    let last = &layers[3];
    let outputs = (0..plan[4])
        .map(|o| {
            let u = &last.unions[last.group_of[o]];
            u.iter().zip(dwf_in[o]).map(|(a, b)| a + b - a * b).collect()
        })
        .collect();
    let tape = SoftResNetTape {
        width: w,
        height: h,
        bins,
        sp,
        inputs: dwf_in.iter().map(|d| d.to_vec()).collect(),
        layers,
        outputs: plan[4],
    };
    Ok((outputs, tape))
}

/// Gradients of a product-OR `1 - prod(1 - x_c)` at one bin: writes
/// `prod_{c' != c} (1 - x_c')` for each member into `out`.
fn leave_one_out(xs: impl Iterator<Item = f64>, out: &mut Vec<f64>) {
    out.clear();
    let ones: Vec<f64> = xs.map(|x| 1.0 - x).collect();
    let mut prefix = 1.0;
    for &o in &ones {
        out.push(prefix);
        prefix *= o;
    }
    let mut suffix = 1.0;
    for (i, &o) in ones.iter().enumerate().rev() {
        out[i] *= suffix;
        suffix *= o;
    }
}

/// Returns gradients on the input channels and on the captured features of
/// layers 1 to 3.
pub fn soft_resnet_backward(tape: &SoftResNetTape, grad_out: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, [Vec<Field>; 3])> {
    let (w, h, bins) = (tape.width, tape.height, tape.bins);
    let cells = w * h;
    if grad_out.len() != tape.outputs || grad_out.iter().any(|g| g.len() != cells * bins) {
        return Err(LearnError::Shape(format!("expected {} output gradients", tape.outputs)));
    }
    let bump = Bump::new(bins);
    let mut d_inputs: Vec<Vec<f64>> = tape.inputs.iter().map(|d| vec![0.0; d.len()]).collect();
    // gradient on the unions feeding layer 4
    let last = &tape.layers[3];
    let mut d_unions: Vec<Vec<f64>> = last.unions.iter().map(|u| vec![0.0; u.len()]).collect();
    for (o, d) in grad_out.iter().enumerate() {
        let g = last.group_of[o];
        let u = &last.unions[g];
        let x = &tape.inputs[o];
        for i in 0..d.len() {
            d_unions[g][i] += d[i] * (1.0 - x[i]);
            d_inputs[o][i] += d[i] * (1.0 - u[i]);
        }
    }
    let mut features: Vec<Vec<Field>> = Vec::new();
    let mut loo = Vec::new();
    for j in (0..3).rev() {
        let layer = &tape.layers[j];
        let next = &tape.layers[j + 1];
        let k = layer.gates.len();
        let mut values = vec![0.0; k * bins];
        let mut dvals = vec![0.0; k * bins];
        let mut d_prev: Vec<Vec<f64>> = layer.unions.iter().map(|u| vec![0.0; u.len()]).collect();
        let mut gg: Vec<GateGrads> = (0..k).map(|_| GateGrads::zeros(cells)).collect();
        for p in 0..cells {
            activations_at(layer, &bump, p, bins, &mut values);
            dvals.iter_mut().for_each(|v| *v = 0.0);
            for (m, du) in next.groups.iter().zip(&d_unions) {
                for b in 0..bins {
                    let up = du[p * bins + b];
                    if up == 0.0 {
                        continue;
                    }
                    leave_one_out(m.iter().map(|&c| values[c * bins + b]), &mut loo);
                    for (&c, &l) in m.iter().zip(&loo) {
                        dvals[c * bins + b] += up * l;
                    }
                }
            }
            for (c, g) in layer.gates.iter().enumerate() {
                let dv = &dvals[c * bins..(c + 1) * bins];
                if dv.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let grp = layer.group_of[c];
                let u = &layer.unions[grp][p * bins..(p + 1) * bins];
                let (a, bd, gt) = (g.inside[p], g.boundary[p], g.gate[p]);
                let du = &mut d_prev[grp][p * bins..(p + 1) * bins];
                let mut d_inside = 0.0;
                let mut sum_dv = 0.0;
                for b in 0..bins {
                    du[b] += a * dv[b];
                    d_inside += dv[b] * u[b];
                    sum_dv += dv[b];
                }
                let mut bump_dot = 0.0;
                let mut bump_dalpha = 0.0;
                bump.for_each(g.alpha[p], |b, v, dvda| {
                    bump_dot += dv[b] * v;
                    bump_dalpha += dv[b] * dvda;
                });
                let q = &mut gg[c];
                q.inside[p] += d_inside;
                q.boundary[p] += gt * bump_dot + (1.0 - gt) * sum_dv;
                q.gate[p] += bd * (bump_dot - sum_dv);
                q.alpha[p] += bd * gt * bump_dalpha;
            }
        }
        features.push(layer.gates.iter().zip(&gg).map(|(g, d)| g.backward(d, w, h, tape.sp)).collect());
        d_unions = d_prev;
    }
    // unions feeding layer 1 are ORs of the raw inputs
    let first = &tape.layers[0];
    for (m, du) in first.groups.iter().zip(&d_unions) {
        for i in 0..cells * bins {
            if du[i] == 0.0 {
                continue;
            }
            leave_one_out(m.iter().map(|&c| tape.inputs[c][i]), &mut loo);
            for (&c, &l) in m.iter().zip(&loo) {
                d_inputs[c][i] += du[i] * l;
            }
        }
    }
    features.reverse();
    let features: [Vec<Field>; 3] = features.try_into().expect("three layers");
    Ok((d_inputs, features))
}

/// State of a soft LPD propagation kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct SoftLpdTape {
    dual: Vec<SoftResNetTape>,
    primal: Vec<SoftResNetTape>,
    /// Inputs of each map application.
    to_sino_in: Vec<DigitalWavefrontSet>,
    to_image_in: Vec<DigitalWavefrontSet>,
    state: usize,
    image: (usize, usize, usize),
    sino: (usize, usize, usize),
}

/// Soft counterpart of the hard LPD propagation; the output is masked to
/// the visible bins.
pub fn soft_prop_lpd(
    dwf_g: &DigitalWavefrontSet,
    params: &LpdParams,
    capture: &LpdCapture,
    geo: &Geometry,
    maps: &LpdMaps,
    cfg: &SoftConfig,
) -> Result<(DigitalWavefrontSet, SoftLpdTape)> {
    check_lpd_inputs(dwf_g, params, capture, geo, maps)?;
    let s = params.shape().state;
    let image = (geo.n1(), geo.n2(), maps.bins);
    let sino = (geo.m1(), geo.m2(), maps.sino_bins);
    let mut f: Vec<Vec<f64>> = vec![vec![0.0; image.0 * image.1 * image.2]; s];
    let g = dwf_g.data().to_vec();
    let mut h: Vec<Vec<f64>> = vec![g.clone(); s];
    let mut tape = SoftLpdTape {
        dual: Vec::new(),
        primal: Vec::new(),
        to_sino_in: Vec::new(),
        to_image_in: Vec::new(),
        state: s,
        image,
        sino,
    };
    let soft = |shape: (usize, usize, usize), data: Vec<f64>| {
        DigitalWavefrontSet::from_vec(shape.0, shape.1, shape.2, DwfMode::Soft, data)
    };
    for i in 0..params.shape().iterations {
        let f0 = soft(image, f[0].clone())?;
        let rf = maps.to_sino.apply_soft(&f0)?;
        tape.to_sino_in.push(f0);
        let rf = rf.into_data();
        let mut din: Vec<&[f64]> = h.iter().map(Vec::as_slice).collect();
        din.push(&rf);
        din.push(&g);
        let (hn, td) = soft_resnet_forward(&din, sino, &params.dual[i], &capture.dual[i], sinogram_spacing(geo), cfg)?;
        h = hn;
        let h0 = soft(sino, h[0].clone())?;
        let bp = maps.to_image.apply_soft(&h0)?.into_data();
        tape.to_image_in.push(h0);
        let mut pin: Vec<&[f64]> = f.iter().map(Vec::as_slice).collect();
        pin.push(&bp);
        let (fnew, tp) =
            soft_resnet_forward(&pin, image, &params.primal[i], &capture.primal[i], image_spacing(geo), cfg)?;
        f = fnew;
        tape.dual.push(td);
        tape.primal.push(tp);
    }
    let bins = maps.bins;
    let mut out = f.swap_remove(0);
    for (i, v) in out.iter_mut().enumerate() {
        if !maps.visible[i % bins] {
            *v = 0.0;
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok((soft(image, out)?, tape))
}

/// Feature gradients of `<grad_out, soft_prop_lpd(...)>`.
pub fn soft_prop_lpd_backward(tape: &SoftLpdTape, maps: &LpdMaps, grad_out: &[f64]) -> Result<LpdFeatureGrads> {
    let (image, sino, s) = (tape.image, tape.sino, tape.state);
    let n_img = image.0 * image.1 * image.2;
    if grad_out.len() != n_img {
        return Err(LearnError::Shape(format!("{} output gradients for {n_img} cells", grad_out.len())));
    }
    let bins = maps.bins;
    let mut df: Vec<Vec<f64>> = vec![vec![0.0; n_img]; s];
    df[0] = grad_out.iter().enumerate().map(|(i, &v)| if maps.visible[i % bins] { v } else { 0.0 }).collect();
    let mut dh: Vec<Vec<f64>> = vec![vec![0.0; sino.0 * sino.1 * sino.2]; s];
    let n = tape.dual.len();
    let mut dual_feats = Vec::with_capacity(n);
    let mut primal_feats = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let (dpin, fp) = soft_resnet_backward(&tape.primal[i], &df)?;
        primal_feats.push(fp);
        let dbp = maps.to_image.backward_soft(&tape.to_image_in[i], &dpin[s])?;
        df = dpin[..s].to_vec();
        for (a, b) in dh[0].iter_mut().zip(&dbp) {
            *a += b;
        }
        let (ddin, fd) = soft_resnet_backward(&tape.dual[i], &dh)?;
        dual_feats.push(fd);
        let drf = maps.to_sino.backward_soft(&tape.to_sino_in[i], &ddin[s])?;
        dh = ddin[..s].to_vec();
        for (a, b) in df[0].iter_mut().zip(&drf) {
            *a += b;
        }
    }
    dual_feats.reverse();
    primal_feats.reverse();
    Ok(LpdFeatureGrads { dual: dual_feats, primal: primal_feats })
}
