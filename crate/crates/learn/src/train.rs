use std::path::Path;

use log::info;
use mlct_core::io::{read_dwf, read_image};
use mlct_core::{derive_seed, DigitalWavefrontSet, DwfMode, Field, GridImage, Sinogram};
use mlct_microlocal::{dwf_estimate_sinogram, EstimateThresholds};
use mlct_phantom::dataset::{dataset_len, dwf_path, image_path};
use mlct_radon::{add_noise, radon, Geometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::loss::{loss_inp, loss_inp_grad, loss_joint, loss_rec, loss_rec_grad};
use crate::lpd::{lpd_backward, lpd_forward, LpdParams};
use crate::optim::{Optimizer, OptimizerKind};
use crate::wfprop::{soft_prop_lpd, soft_prop_lpd_backward, LpdMaps, SoftConfig};
use crate::{LearnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub steps: usize,
    pub batch: usize,
    /// Weight of the reconstruction loss; below one the wavefront loss is on.
    pub lambda: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub soft: SoftConfig,
    pub eps_clip: f64,
    /// Orientation bins of the sinogram-grid wavefront sets.
    pub sino_bins: usize,
    /// Radius of the neighbourhood maximum applied to the propagated set
    /// before the wavefront loss; zero compares cell by cell.
    pub dilation: usize,
    /// Relative noise level added to the training sinograms.
    pub noise: f64,
    /// Relative threshold of the gradient estimator that extracts the data
    /// wavefront set fed to the propagation.
    pub estimate_rel: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            steps: 500,
            batch: 4,
            lambda: 1.0,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            soft: SoftConfig::default(),
            eps_clip: 1e-7,
            sino_bins: 64,
            dilation: 1,
            noise: 0.05,
            estimate_rel: 0.25,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(LearnError::Invalid(format!("lambda {} outside (0, 1]", self.lambda)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(LearnError::Invalid(format!("learning rate {} must be positive", self.lr)));
        }
        if self.batch == 0 || self.sino_bins < 2 {
            return Err(LearnError::Invalid("batch size and sinogram bins must be positive".into()));
        }
        if !(self.estimate_rel > 0.0 && self.estimate_rel < 1.0) {
            return Err(LearnError::Invalid(format!("estimate threshold {} outside (0, 1)", self.estimate_rel)));
        }
        if !(self.soft.tau > 0.0) || !(self.noise >= 0.0) {
            return Err(LearnError::Invalid("temperature must be positive and noise non-negative".into()));
        }
        Ok(())
    }

    pub fn joint(&self) -> bool {
        self.lambda < 1.0
    }
}

/// One training pair with the data needed by the wavefront loss.
#[derive(Debug, Clone)]
pub struct Sample {
    pub image: GridImage,
    pub sinogram: Sinogram,
    /// Ground-truth image wavefront set restricted to visible bins.
    pub target: DigitalWavefrontSet,
    /// Wavefront set estimated from the measured sinogram.
    pub dwf_g: DigitalWavefrontSet,
}

/// Measured data for `image`: projection on `geo` plus noise.
pub fn simulate(image: &GridImage, geo: &Geometry, noise: f64, seed: u64) -> Result<Sinogram> {
    let g = radon(image, geo)?;
    Ok(if noise > 0.0 { add_noise(&g, noise, seed)? } else { g })
}

/// Build a sample from an image and its analytic wavefront set.
pub fn make_sample(
    image: GridImage,
    dwf: &DigitalWavefrontSet,
    geo: &Geometry,
    maps: &LpdMaps,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Sample> {
    let sinogram = simulate(&image, geo, cfg.noise, seed)?;
    let target = dwf.to_hard().restrict_bins(&maps.visible)?;
    let thr = EstimateThresholds { rel: cfg.estimate_rel };
    let dwf_g = dwf_estimate_sinogram(&sinogram, maps.sino_bins, &thr);
    Ok(Sample { image, sinogram, target, dwf_g })
}

/// Load items `range` of a phantom dataset and simulate their data; item
/// `i` gets noise seed `derive_seed(seed, i)`.
pub fn load_samples(
    dir: &Path,
    range: std::ops::Range<usize>,
    geo: &Geometry,
    maps: &LpdMaps,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<Sample>> {
    let available = dataset_len(dir);
    if range.end > available {
        return Err(LearnError::Invalid(format!("dataset holds {available} items, asked for {range:?}")));
    }
    range
        .into_par_iter()
        .map(|i| {
            let image = read_image(image_path(dir, i))?;
            let (dwf, _) = read_dwf(dwf_path(dir, i))?;
            if image.n1() != geo.n1() || image.n2() != geo.n2() || dwf.bins() != maps.bins {
                return Err(LearnError::Shape(format!("item {i} does not match the geometry")));
            }
            make_sample(image, &dwf, geo, maps, cfg, derive_seed(seed, i as u64))
        })
        .collect()
}

/// Neighbourhood maximum over `radius` pixels and bins (bins wrap), with
/// the index of each maximum.
pub fn dilate(dwf: &DigitalWavefrontSet, radius: usize) -> (Vec<f64>, Vec<u32>) {
    let (w, h, m) = (dwf.width(), dwf.height(), dwf.bins());
    let x = dwf.data();
    let r = radius as isize;
    let mut val = vec![0.0; x.len()];
    let mut arg = vec![0u32; x.len()];
    for i2 in 0..h as isize {
        for i1 in 0..w as isize {
            for k in 0..m as isize {
                let mut best = (f64::NEG_INFINITY, 0usize);
                for d2 in -r..=r {
                    let j2 = i2 + d2;
                    if j2 < 0 || j2 >= h as isize {
                        continue;
                    }
                    for d1 in -r..=r {
                        let j1 = i1 + d1;
                        if j1 < 0 || j1 >= w as isize {
                            continue;
                        }
                        for dk in -r..=r {
                            let kk = (k + dk).rem_euclid(m as isize);
                            let q = ((j2 as usize * w) + j1 as usize) * m + kk as usize;
                            if x[q] > best.0 {
                                best = (x[q], q);
                            }
                        }
                    }
                }
                let p = ((i2 as usize * w) + i1 as usize) * m + k as usize;
                val[p] = best.0;
                arg[p] = best.1 as u32;
            }
        }
    }
    (val, arg)
}

/// Losses of one sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleLoss {
    pub rec: f64,
    pub inp: f64,
    pub joint: f64,
}

/// Wavefront loss of the propagated set against the sample target.
fn inp_loss(
    params: &LpdParams,
    sample: &Sample,
    capture: &crate::lpd::LpdCapture,
    geo: &Geometry,
    maps: &LpdMaps,
    cfg: &TrainConfig,
    with_grad: bool,
) -> Result<(f64, Option<crate::lpd::LpdFeatureGrads>)> {
    let (pred, tape) = soft_prop_lpd(&sample.dwf_g, params, capture, geo, maps, &cfg.soft)?;
    let (vals, arg) = dilate(&pred, cfg.dilation);
    let psi = DigitalWavefrontSet::from_vec(pred.width(), pred.height(), pred.bins(), DwfMode::Soft, vals)?;
    let loss = loss_inp(&sample.target, &psi, cfg.eps_clip)?;
    if !with_grad {
        return Ok((loss, None));
    }
    let dpsi = loss_inp_grad(&sample.target, &psi, cfg.eps_clip)?;
    let mut dpred = vec![0.0; dpsi.len()];
    for (i, &d) in dpsi.iter().enumerate() {
        if d != 0.0 {
            dpred[arg[i] as usize] += d * (1.0 - cfg.lambda);
        }
    }
    let feats = soft_prop_lpd_backward(&tape, maps, &dpred)?;
    Ok((loss, Some(feats)))
}

/// Losses and parameter gradient of one sample.
pub fn sample_gradient(
    params: &LpdParams,
    sample: &Sample,
    geo: &Geometry,
    maps: &LpdMaps,
    cfg: &TrainConfig,
) -> Result<(SampleLoss, LpdParams)> {
    let (rec, capture) = lpd_forward(params, &sample.sinogram, geo)?;
    let l_rec = loss_rec(&rec, &sample.image)?;
    let mut d = loss_rec_grad(&rec, &sample.image)?;
    d.iter_mut().for_each(|v| *v *= cfg.lambda);
    let (l_inp, feats) =
        if cfg.joint() { inp_loss(params, sample, &capture, geo, maps, cfg, true)? } else { (0.0, None) };
    let grad_out = Field { width: rec.n1(), height: rec.n2(), data: d };
    let grads = lpd_backward(params, &capture, geo, &grad_out, feats.as_ref())?;
    Ok((SampleLoss { rec: l_rec, inp: l_inp, joint: loss_joint(l_rec, l_inp, cfg.lambda) }, grads))
}

/// Mean losses over `samples`; the wavefront loss is computed whenever
/// `with_inp` is set, whatever `cfg.lambda` says.
pub fn evaluate(
    params: &LpdParams,
    samples: &[Sample],
    geo: &Geometry,
    maps: &LpdMaps,
    cfg: &TrainConfig,
    with_inp: bool,
) -> Result<SampleLoss> {
    let losses: Vec<SampleLoss> = samples
        .par_iter()
        .map(|s| {
            let (rec, capture) = lpd_forward(params, &s.sinogram, geo)?;
            let l_rec = loss_rec(&rec, &s.image)?;
            let l_inp = if with_inp { inp_loss(params, s, &capture, geo, maps, cfg, false)?.0 } else { 0.0 };
            Ok(SampleLoss { rec: l_rec, inp: l_inp, joint: loss_joint(l_rec, l_inp, cfg.lambda) })
        })
        .collect::<Result<_>>()?;
    Ok(mean(&losses))
}

fn mean(losses: &[SampleLoss]) -> SampleLoss {
    let n = losses.len().max(1) as f64;
    let mut m = SampleLoss::default();
    for l in losses {
        m.rec += l.rec / n;
        m.inp += l.inp / n;
        m.joint += l.joint / n;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: usize,
    pub loss_rec: f64,
    pub loss_inp: f64,
    pub loss_joint: f64,
}

/// Minibatch training. Batches are drawn with a generator seeded from
/// `cfg.seed`; per-sample gradients are summed in batch order, so the result
/// does not depend on the thread count.
pub fn train(
    init: &LpdParams,
    samples: &[Sample],
    geo: &Geometry,
    maps: &LpdMaps,
    cfg: &TrainConfig,
) -> Result<(LpdParams, Vec<LogRow>)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut params = init.clone();
    let mut flat = params.to_flat();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, flat.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let batch: Vec<usize> = (0..cfg.batch).map(|_| rng.random_range(0..samples.len())).collect();
        let results: Vec<(SampleLoss, LpdParams)> =
            batch.par_iter().map(|&i| sample_gradient(&params, &samples[i], geo, maps, cfg)).collect::<Result<_>>()?;
        let mut grad = params.zeros_like();
        for (_, g) in &results {
            grad.axpy(1.0 / cfg.batch as f64, g);
        }
        let losses: Vec<SampleLoss> = results.iter().map(|r| r.0).collect();
        let m = mean(&losses);
        if !m.joint.is_finite() || !grad.is_finite() {
            return Err(LearnError::Diverged { step, detail: format!("loss {:?}", m) });
        }
        opt.step(&mut flat, &grad.to_flat());
        params.set_flat(&flat)?;
        if step % 50 == 0 {
            info!("step {step}: rec {:.4} inp {:.4} joint {:.4}", m.rec, m.inp, m.joint);
        }
        log.push(LogRow { step, loss_rec: m.rec, loss_inp: m.inp, loss_joint: m.joint });
    }
    Ok((params, log))
}

pub fn write_log(rows: &[LogRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
