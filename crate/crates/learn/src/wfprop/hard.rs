use mlct_core::{DigitalWavefrontSet, DwfMode};
use mlct_microlocal::{visible_orientations, CellMap, MapStats};
use mlct_radon::Geometry;
use serde::Serialize;

use super::filter::{decompose_filter, filter_from_slice, is_elliptic, FilterBasisCoeffs};
use super::relu::{prop_relu_into, PixelClass, ReluThresholds, Spacing};
use crate::lpd::{LpdCapture, LpdParams};
use crate::resnet::{ResNetCapture, ResNetParams};
use crate::{LearnError, Result};

/// Settings shared by the hard propagation rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropConfig {
    /// Ellipticity tolerance for [`is_elliptic`].
    pub tolerance: f64,
    pub thresholds: ReluThresholds,
}

impl Default for PropConfig {
    fn default() -> Self {
        Self { tolerance: 1e-6, thresholds: ReluThresholds::default() }
    }
}

/// A convolution leaves the wavefront set unchanged when its symbol is
/// elliptic; otherwise the unchanged set is only an upper bound and the
/// returned flag is set.
pub fn prop_conv(dwf: &DigitalWavefrontSet, coeffs: &FilterBasisCoeffs, tolerance: f64) -> (DigitalWavefrontSet, bool) {
    (dwf.clone(), !is_elliptic(coeffs, tolerance).is_elliptic())
}

/// Wavefront set of a sum: the pointwise union, or the probabilistic OR when
/// either input is soft.
pub fn prop_sum(a: &DigitalWavefrontSet, b: &DigitalWavefrontSet) -> Result<DigitalWavefrontSet> {
    a.check_same_grid(b)?;
    if a.mode() == DwfMode::Hard && b.mode() == DwfMode::Hard {
        let mut out = a.clone();
        out.union_with(b)?;
        return Ok(out);
    }
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y - x * y).collect();
    Ok(DigitalWavefrontSet::from_vec(a.width(), a.height(), a.bins(), DwfMode::Soft, data)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerTrace {
    pub layer: usize,
    /// Per filter `(o, i)` at `o * k_in + i`: `None` for an all-zero filter.
    pub elliptic: Vec<Option<bool>>,
    /// Some active filter was non-elliptic, so this layer's set is an upper
    /// bound.
    pub over_estimate: bool,
    /// Pixel counts per [`PixelClass`] summed over channels; zero after the
    /// last layer.
    pub class_histogram: [usize; 4],
    #[serde(skip)]
    pub classes: Vec<Vec<PixelClass>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResNetTrace {
    pub layers: Vec<LayerTrace>,
    /// Element counts of the channel-union snapshots.
    pub snapshot_counts: Vec<usize>,
    /// Union over channels of the input, each activation and the output.
    #[serde(skip)]
    pub snapshots: Vec<DigitalWavefrontSet>,
}

impl ResNetTrace {
    pub fn over_estimates(&self) -> usize {
        self.layers.iter().filter(|l| l.over_estimate).count()
    }
}

/// Input channels feeding each output channel of `layer`, grouped so equal
/// masks share one union.
pub(crate) fn layer_groups(params: &ResNetParams, layer: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let plan = params.plan();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = Vec::with_capacity(plan[layer + 1]);
    for o in 0..plan[layer + 1] {
        let members: Vec<usize> = (0..plan[layer]).filter(|&i| params.is_active(layer, o, i)).collect();
        let g = match groups.iter().position(|m| *m == members) {
            Some(g) => g,
            None => {
                groups.push(members);
                groups.len() - 1
            }
        };
        group_of.push(g);
    }
    (groups, group_of)
}

fn layer_flags(params: &ResNetParams, layer: usize, h: f64, tolerance: f64) -> Vec<Option<bool>> {
    let plan = params.plan();
    let mut flags = Vec::with_capacity(plan[layer] * plan[layer + 1]);
    for o in 0..plan[layer + 1] {
        for i in 0..plan[layer] {
            flags.push(params.is_active(layer, o, i).then(|| {
                let b = decompose_filter(&filter_from_slice(params.filter(layer, o, i)), h);
                is_elliptic(&b, tolerance).is_elliptic()
            }));
        }
    }
    flags
}

fn check_capture(params: &ResNetParams, capture: &ResNetCapture, w: usize, h: usize) -> Result<()> {
    let plan = params.plan();
    for (j, z) in capture.pre.iter().enumerate() {
        if z.len() != plan[j + 1] || z.iter().any(|f| f.width != w || f.height != h) {
            return Err(LearnError::Capture(format!("layer {} features do not match the network", j + 1)));
        }
    }
    Ok(())
}

fn check_channels(dwf_in: &[DigitalWavefrontSet], k0: usize) -> Result<()> {
    if dwf_in.len() != k0 {
        return Err(LearnError::Shape(format!("{} wavefront channels, network expects {k0}", dwf_in.len())));
    }
    for d in &dwf_in[1..] {
        d.check_same_grid(&dwf_in[0])?;
    }
    Ok(())
}

/// Hard propagation through one residual block, driven by the features of
/// an actual forward pass. Returns the `k4` output channel sets.
pub fn prop_resnet(
    dwf_in: &[DigitalWavefrontSet],
    params: &ResNetParams,
    capture: &ResNetCapture,
    sp: Spacing,
    cfg: &PropConfig,
) -> Result<(Vec<DigitalWavefrontSet>, ResNetTrace)> {
    let plan = params.plan();
    check_channels(dwf_in, plan[0])?;
    let (w, h, bins) = (dwf_in[0].width(), dwf_in[0].height(), dwf_in[0].bins());
    check_capture(params, capture, w, h)?;
    let empty = || DigitalWavefrontSet::empty(w, h, bins, DwfMode::Hard);
    let inputs: Vec<DigitalWavefrontSet> = dwf_in.iter().map(DigitalWavefrontSet::to_hard).collect();

    let mut snapshot = empty();
    for d in &inputs {
        snapshot.union_with(d)?;
    }
    let mut trace = ResNetTrace { layers: Vec::new(), snapshot_counts: vec![snapshot.count()], snapshots: vec![snapshot] };

    // unions feeding layer 1
    let (groups, mut group_of) = layer_groups(params, 0);
    let mut unions: Vec<DigitalWavefrontSet> = groups
        .iter()
        .map(|m| {
            let mut u = empty();
            for &i in m {
                u.union_with(&inputs[i]).expect("same grid");
            }
            u
        })
        .collect();

    for j in 0..3 {
        let flags = layer_flags(params, j, sp.h1, cfg.tolerance);
        let (next_groups, next_of) = layer_groups(params, j + 1);
        let mut next: Vec<DigitalWavefrontSet> = next_groups.iter().map(|_| empty()).collect();
        let mut snapshot = empty();
        let mut hist = [0usize; 4];
        let mut classes = Vec::with_capacity(plan[j + 1]);
        for o in 0..plan[j + 1] {
            let z = &capture.pre[j][o];
            let (ev, eg) = cfg.thresholds.resolve(z, sp);
            let mut r = empty();
            let cls = prop_relu_into(&mut r, &unions[group_of[o]], z, sp, ev, eg)?;
            for c in &cls {
                hist[c.index()] += 1;
            }
            classes.push(cls);
            for (g, m) in next_groups.iter().enumerate() {
                if m.contains(&o) {
                    next[g].union_with(&r)?;
                }
            }
            snapshot.union_with(&r)?;
        }
        trace.layers.push(LayerTrace {
            layer: j + 1,
            over_estimate: flags.iter().any(|f| *f == Some(false)),
            elliptic: flags,
            class_histogram: hist,
            classes,
        });
        trace.snapshot_counts.push(snapshot.count());
        trace.snapshots.push(snapshot);
        unions = next;
        group_of = next_of;
    }

    let flags = layer_flags(params, 3, sp.h1, cfg.tolerance);
    trace.layers.push(LayerTrace {
        layer: 4,
        over_estimate: flags.iter().any(|f| *f == Some(false)),
        elliptic: flags,
        class_histogram: [0; 4],
        classes: Vec::new(),
    });
    let mut outputs = Vec::with_capacity(plan[4]);
    let mut snapshot = empty();
    for (o, input) in inputs.iter().enumerate().take(plan[4]) {
        let out = prop_sum(&unions[group_of[o]], input)?;
        snapshot.union_with(&out)?;
        outputs.push(out);
    }
    trace.snapshot_counts.push(snapshot.count());
    trace.snapshots.push(snapshot);
    Ok((outputs, trace))
}

/// Grid spacings used for features on the image grid of `geo`.
pub fn image_spacing(geo: &Geometry) -> Spacing {
    Spacing { h1: geo.h1(), h2: geo.h2() }
}

/// Grid spacings used for features on the sinogram grid of `geo`.
pub fn sinogram_spacing(geo: &Geometry) -> Spacing {
    Spacing { h1: geo.ds(), h2: std::f64::consts::PI / geo.m2() as f64 }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct MapCounts {
    pub mapped: usize,
    pub outside: usize,
    pub masked: usize,
    pub grazing: usize,
}

impl From<MapStats> for MapCounts {
    fn from(s: MapStats) -> Self {
        Self { mapped: s.mapped, outside: s.outside, masked: s.masked, grazing: s.grazing }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LpdTrace {
    pub dual: Vec<ResNetTrace>,
    pub primal: Vec<ResNetTrace>,
    pub to_sinogram: Vec<MapCounts>,
    pub to_image: Vec<MapCounts>,
    /// Output elements removed by the visibility mask.
    pub invisible_dropped: usize,
}

impl LpdTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialises")
    }

    pub fn over_estimates(&self) -> usize {
        self.dual.iter().chain(&self.primal).map(ResNetTrace::over_estimates).sum()
    }
}

/// Cell maps between the two grids of an LPD network and the visibility mask
/// of its image bins.
#[derive(Debug, Clone)]
pub struct LpdMaps {
    pub to_sino: CellMap,
    pub to_image: CellMap,
    pub visible: Vec<bool>,
    pub bins: usize,
    pub sino_bins: usize,
}

impl LpdMaps {
    pub fn new(geo: &Geometry, bins: usize, sino_bins: usize) -> Self {
        Self {
            to_sino: CellMap::image_to_sino(geo, bins, sino_bins),
            to_image: CellMap::sino_to_image(geo, sino_bins, bins),
            visible: visible_orientations(geo, bins),
            bins,
            sino_bins,
        }
    }
}

pub(crate) fn check_lpd_inputs(
    dwf_g: &DigitalWavefrontSet,
    params: &LpdParams,
    capture: &LpdCapture,
    geo: &Geometry,
    maps: &LpdMaps,
) -> Result<()> {
    if dwf_g.width() != geo.m1() || dwf_g.height() != geo.m2() || dwf_g.bins() != maps.sino_bins {
        return Err(LearnError::Shape(format!(
            "sinogram wavefront set {}x{}x{} vs grid {}x{}x{}",
            dwf_g.width(),
            dwf_g.height(),
            dwf_g.bins(),
            geo.m1(),
            geo.m2(),
            maps.sino_bins
        )));
    }
    let n = params.shape().iterations;
    if capture.dual.len() != n || capture.primal.len() != n {
        return Err(LearnError::Capture(format!("capture holds {} iterations, network has {n}", capture.dual.len())));
    }
    Ok(())
}

/// Hard propagation through a whole LPD network; the result is restricted to
/// the visible orientation bins.
pub fn prop_lpd(
    dwf_g: &DigitalWavefrontSet,
    params: &LpdParams,
    capture: &LpdCapture,
    geo: &Geometry,
    maps: &LpdMaps,
    cfg: &PropConfig,
) -> Result<(DigitalWavefrontSet, LpdTrace)> {
    check_lpd_inputs(dwf_g, params, capture, geo, maps)?;
    let s = params.shape().state;
    let g = dwf_g.to_hard();
    let mut f: Vec<DigitalWavefrontSet> =
        (0..s).map(|_| DigitalWavefrontSet::empty(geo.n1(), geo.n2(), maps.bins, DwfMode::Hard)).collect();
    let mut h: Vec<DigitalWavefrontSet> = vec![g.clone(); s];
    let mut trace =
        LpdTrace { dual: Vec::new(), primal: Vec::new(), to_sinogram: Vec::new(), to_image: Vec::new(), invisible_dropped: 0 };
    for i in 0..params.shape().iterations {
        let (rf, st) = maps.to_sino.apply_hard(&f[0])?;
        trace.to_sinogram.push(st.into());
        let mut din = std::mem::take(&mut h);
        din.push(rf);
        din.push(g.clone());
        let (hn, tr) = prop_resnet(&din, &params.dual[i], &capture.dual[i], sinogram_spacing(geo), cfg)?;
        trace.dual.push(tr);
        h = hn;
        let (bp, st) = maps.to_image.apply_hard(&h[0])?;
        trace.to_image.push(st.into());
        let mut pin = std::mem::take(&mut f);
        pin.push(bp);
        let (fnew, tr) = prop_resnet(&pin, &params.primal[i], &capture.primal[i], image_spacing(geo), cfg)?;
        trace.primal.push(tr);
        f = fnew;
    }
    let out = f.swap_remove(0);
    let visible = out.restrict_bins(&maps.visible)?;
    trace.invisible_dropped = out.count() - visible.count();
    Ok((visible, trace))
}
