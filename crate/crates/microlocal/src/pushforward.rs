//! Discrete canonical relations between image-grid and sinogram-grid
//! wavefront sets.
//!
//! Image bins hold the normal direction `nu` of a singularity; it enters the
//! canonical relation as `theta = nu + pi/2`, which places it on the line with
//! normal `nu` through `x`. Sinogram bins hold the covector direction in the
//! `(s, phi)` plane, which is `-vartheta` for the relation's `vartheta`.

use std::f64::consts::{FRAC_PI_2, PI};

use log::warn;
use mlct_core::{angle_bin, DigitalWavefrontSet, DwfMode};
use mlct_radon::Geometry;

use crate::canon::{canon_bwd, canon_fwd, ImageWfElement, SinoWfElement};
use crate::{MicrolocalError, Result};

const OUTSIDE: u32 = u32::MAX;
const MASKED: u32 = u32::MAX - 1;
const GRAZING: u32 = u32::MAX - 2;

/// Elements mapped and dropped by one application of a [`CellMap`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MapStats {
    pub mapped: usize,
    pub outside: usize,
    pub masked: usize,
    pub grazing: usize,
}

/// Shape `(width, height, bins)` of a wavefront-set grid.
pub type GridShape = (usize, usize, usize);

/// Lookup table from every source cell `(i1, i2, k)` to its target cell.
#[derive(Debug, Clone)]
pub struct CellMap {
    source: GridShape,
    target: GridShape,
    targets: Vec<u32>,
    /// Source cells grouped by target, CSR style.
    offsets: Vec<u32>,
    sources: Vec<u32>,
}

/// Nearest angle index to `phi` in `[0, pi)`, with a flag telling whether the
/// match wraps around `pi` (which flips `s` and the orientation).
fn nearest_angle(angles: &[f64], phi: f64) -> (usize, bool) {
    let m = angles.len();
    let p = angles.partition_point(|&a| a < phi);
    let mut best = (usize::MAX, false, f64::INFINITY);
    let mut consider = |l: usize, d: f64, wrap: bool| {
        if d < best.2 {
            best = (l, wrap, d);
        }
    };
    if p < m {
        consider(p, (angles[p] - phi).abs(), false);
    }
    if p > 0 {
        consider(p - 1, (phi - angles[p - 1]).abs(), false);
    }
    consider(0, (angles[0] + PI - phi).abs(), true);
    consider(m - 1, (phi + PI - angles[m - 1]).abs(), true);
    (best.0, best.1)
}

fn nearest_index(value: f64, start: f64, step: f64, len: usize) -> Option<usize> {
    let i = ((value - start) / step).round();
    (i >= 0.0 && i < len as f64).then_some(i as usize)
}

impl CellMap {
    fn build(source: GridShape, target: GridShape, targets: Vec<u32>) -> Self {
        let cells = target.0 * target.1 * target.2;
        let mut offsets = vec![0u32; cells + 1];
        for &t in &targets {
            if (t as usize) < cells {
                offsets[t as usize + 1] += 1;
            }
        }
        for i in 0..cells {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut sources = vec![0u32; offsets[cells] as usize];
        for (i, &t) in targets.iter().enumerate() {
            if (t as usize) < cells {
                sources[fill[t as usize] as usize] = i as u32;
                fill[t as usize] += 1;
            }
        }
        Self { source, target, targets, offsets, sources }
    }

    /// Image grid of `geo` with `bins` normal bins onto the sinogram grid with
    /// `sino_bins` orientation bins.
    pub fn image_to_sino(geo: &Geometry, bins: usize, sino_bins: usize) -> Self {
        let (n1, n2) = (geo.n1(), geo.n2());
        let (m1, m2) = (geo.m1(), geo.m2());
        let (h1, h2) = (geo.h1(), geo.h2());
        let ds = geo.ds();
        let limit = FRAC_PI_2 - PI / sino_bins as f64;
        let mut targets = Vec::with_capacity(n1 * n2 * bins);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                let x = [-1.0 + i1 as f64 * h1, -1.0 + i2 as f64 * h2];
                for k in 0..bins {
                    let nu = k as f64 * PI / bins as f64;
                    let e = canon_fwd(ImageWfElement { x, theta: nu + FRAC_PI_2 });
                    if e.vartheta.abs() > limit {
                        targets.push(GRAZING);
                        continue;
                    }
                    let (l, wrap) = nearest_angle(geo.angles(), e.phi);
                    let (s, vartheta) = if wrap { (-e.s, -e.vartheta) } else { (e.s, e.vartheta) };
                    if !geo.mask()[l] {
                        targets.push(MASKED);
                        continue;
                    }
                    let Some(kd) = nearest_index(s, geo.detectors()[0], ds, m1) else {
                        targets.push(OUTSIDE);
                        continue;
                    };
                    let j = angle_bin(-vartheta, sino_bins);
                    targets.push(((l * m1 + kd) * sino_bins + j) as u32);
                }
            }
        }
        Self::build((n1, n2, bins), (m1, m2, sino_bins), targets)
    }

    /// Sinogram grid of `geo` with `sino_bins` bins back onto the image grid
    /// with `bins` normal bins. Masked angles and grazing orientations
    /// (within one bin of `pi/2`) are dropped.
    pub fn sino_to_image(geo: &Geometry, sino_bins: usize, bins: usize) -> Self {
        let (n1, n2) = (geo.n1(), geo.n2());
        let (m1, m2) = (geo.m1(), geo.m2());
        let (h1, h2) = (geo.h1(), geo.h2());
        let limit = FRAC_PI_2 - PI / sino_bins as f64 - 1e-12;
        let mut targets = Vec::with_capacity(m1 * m2 * sino_bins);
        for l in 0..m2 {
            let phi = geo.angles()[l];
            for kd in 0..m1 {
                let s = geo.detectors()[kd];
                for j in 0..sino_bins {
                    if !geo.mask()[l] {
                        targets.push(MASKED);
                        continue;
                    }
                    let mut cov = j as f64 * PI / sino_bins as f64;
                    if cov > FRAC_PI_2 {
                        cov -= PI;
                    }
                    let vartheta = -cov;
                    if vartheta.abs() >= limit {
                        targets.push(GRAZING);
                        continue;
                    }
                    let e = canon_bwd(SinoWfElement { s, phi, vartheta }).expect("bounded orientation");
                    let i1 = nearest_index(e.x[0], -1.0, h1, n1);
                    let i2 = nearest_index(e.x[1], -1.0, h2, n2);
                    let (Some(i1), Some(i2)) = (i1, i2) else {
                        targets.push(OUTSIDE);
                        continue;
                    };
                    let k = angle_bin(e.theta - FRAC_PI_2, bins);
                    targets.push(((i2 * n1 + i1) * bins + k) as u32);
                }
            }
        }
        Self::build((m1, m2, sino_bins), (n1, n2, bins), targets)
    }

    pub fn source_shape(&self) -> GridShape {
        self.source
    }

    pub fn target_shape(&self) -> GridShape {
        self.target
    }

    /// Target cell of a source cell, if it is not dropped.
    pub fn target_of(&self, cell: usize) -> Option<usize> {
        let t = self.targets[cell];
        (t < GRAZING).then_some(t as usize)
    }

    fn check(&self, dwf: &DigitalWavefrontSet) -> Result<()> {
        if (dwf.width(), dwf.height(), dwf.bins()) != self.source {
            return Err(MicrolocalError::Shape(format!(
                "wavefront set {}x{}x{} vs map source {:?}",
                dwf.width(),
                dwf.height(),
                dwf.bins(),
                self.source
            )));
        }
        Ok(())
    }

    fn empty_target(&self, mode: DwfMode) -> DigitalWavefrontSet {
        DigitalWavefrontSet::empty(self.target.0, self.target.1, self.target.2, mode)
    }

    /// Push the set elements of a hard wavefront set through the map;
    /// collisions merge.
    pub fn apply_hard(&self, dwf: &DigitalWavefrontSet) -> Result<(DigitalWavefrontSet, MapStats)> {
        self.check(dwf)?;
        let hard = dwf.to_hard();
        let mut out = self.empty_target(DwfMode::Hard);
        let mut stats = MapStats::default();
        let data = out.data_mut();
        for (i, &v) in hard.data().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            match self.targets[i] {
                OUTSIDE => stats.outside += 1,
                MASKED => stats.masked += 1,
                GRAZING => stats.grazing += 1,
                t => {
                    stats.mapped += 1;
                    data[t as usize] = 1.0;
                }
            }
        }
        if stats.grazing > 0 {
            warn!("{} grazing wavefront elements dropped", stats.grazing);
        }
        Ok((out, stats))
    }

    /// Soft push: each target is the probabilistic OR `1 - prod(1 - x)` of
    /// its sources.
    pub fn apply_soft(&self, dwf: &DigitalWavefrontSet) -> Result<DigitalWavefrontSet> {
        self.check(dwf)?;
        let mut out = self.empty_target(DwfMode::Soft);
        let x = dwf.data();
        for (t, o) in out.data_mut().iter_mut().enumerate() {
            let (a, b) = (self.offsets[t] as usize, self.offsets[t + 1] as usize);
            if a == b {
                continue;
            }
            let keep: f64 = self.sources[a..b].iter().map(|&i| 1.0 - x[i as usize]).product();
            *o = (1.0 - keep).clamp(0.0, 1.0);
        }
        Ok(out)
    }

    /// Gradient of [`CellMap::apply_soft`] with respect to its input, given
    /// the gradient `upstream` on the output.
    pub fn backward_soft(&self, input: &DigitalWavefrontSet, upstream: &[f64]) -> Result<Vec<f64>> {
        self.check(input)?;
        let x = input.data();
        let mut grad = vec![0.0; x.len()];
        for (t, &u) in upstream.iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            let group = &self.sources[self.offsets[t] as usize..self.offsets[t + 1] as usize];
            for (p, &i) in group.iter().enumerate() {
                let others: f64 =
                    group.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, &o)| 1.0 - x[o as usize]).product();
                grad[i as usize] += u * others;
            }
        }
        Ok(grad)
    }
}

/// Push an image-grid wavefront set to the sinogram grid of `geo`.
pub fn dwf_image_to_sino(
    dwf: &DigitalWavefrontSet,
    geo: &Geometry,
    sino_bins: usize,
) -> Result<(DigitalWavefrontSet, MapStats)> {
    CellMap::image_to_sino(geo, dwf.bins(), sino_bins).apply_hard(dwf)
}

/// Pull a sinogram-grid wavefront set back to the image grid of `geo`.
pub fn dwf_sino_to_image(
    dwf: &DigitalWavefrontSet,
    geo: &Geometry,
    bins: usize,
) -> Result<(DigitalWavefrontSet, MapStats)> {
    CellMap::sino_to_image(geo, dwf.bins(), bins).apply_hard(dwf)
}
