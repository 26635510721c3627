use std::f64::consts::PI;

use mlct_core::{angle_bin, DigitalWavefrontSet, DwfMode, Field, GridImage};
use mlct_learn::lpd::{lpd_forward, LpdParams, LpdShape};
use mlct_learn::resnet::{resnet_forward, ResNetParams};
use mlct_learn::wfprop::{
    basis_filter, classify_pixels, decompose_filter, prop_conv, prop_lpd, prop_relu, prop_resnet, prop_sum,
    soft_prop_lpd, soft_prop_lpd_backward, soft_resnet_backward, soft_resnet_forward, LpdMaps, PixelClass,
    PropConfig, ReluThresholds, SoftConfig, Spacing,
};
use mlct_phantom::{analytic_dwf, rasterize, sample_phantom, PhantomConfig};
use mlct_radon::{radon, restrict, Geometry, Restriction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid_field(n: usize, f: impl Fn(f64, f64) -> f64) -> (Field, Spacing) {
    let img = GridImage::from_fn(n, n, f).unwrap();
    let h = img.h1();
    (img.into_field(), Spacing { h1: h, h2: h })
}

fn thresholds(f: &Field, sp: Spacing) -> (f64, f64) {
    ReluThresholds::default().resolve(f, sp)
}

/// Circle of radius `r` with radial normals, sampled densely.
fn circle_dwf(n: usize, r: f64, bins: usize) -> DigitalWavefrontSet {
    let h = 2.0 / (n as f64 - 1.0);
    let mut d = DigitalWavefrontSet::empty(n, n, bins, DwfMode::Hard);
    let steps = (2.0 * PI * r / (h / 8.0)).ceil() as usize;
    for s in 0..steps {
        let t = 2.0 * PI * s as f64 / steps as f64;
        let (x, y) = (r * t.cos(), r * t.sin());
        let i1 = ((x + 1.0) / h).round();
        let i2 = ((y + 1.0) / h).round();
        if i1 >= 0.0 && i2 >= 0.0 && (i1 as usize) < n && (i2 as usize) < n {
            d.mark(i1 as usize, i2 as usize, angle_bin(t, bins));
        }
    }
    d
}

fn random_hard(w: usize, h: usize, bins: usize, p: f64, rng: &mut impl Rng) -> DigitalWavefrontSet {
    let data = (0..w * h * bins).map(|_| if rng.random_bool(p) { 1.0 } else { 0.0 }).collect();
    DigitalWavefrontSet::from_vec(w, h, bins, DwfMode::Hard, data).unwrap()
}

fn contains(big: &DigitalWavefrontSet, small: &DigitalWavefrontSet) -> bool {
    small.data().iter().zip(big.data()).all(|(s, b)| *s <= *b)
}

#[test]
fn positive_image_is_interior() {
    let (f, sp) = grid_field(16, |x, y| 2.0 + x * y);
    let (ev, eg) = thresholds(&f, sp);
    assert!(classify_pixels(&f, sp, ev, eg).iter().all(|c| *c == PixelClass::IntSuppPlus));
}

#[test]
fn paraboloid_boundary_is_regular_and_radial() {
    let n = 128;
    let bins = 36;
    let (f, sp) = grid_field(n, |x, y| 1.0 - x * x - y * y);
    let (ev, eg) = thresholds(&f, sp);
    let classes = classify_pixels(&f, sp, ev, eg);
    let h = sp.h1;
    let mut regular = 0;
    for (p, c) in classes.iter().enumerate() {
        let (x, y) = (-1.0 + (p % n) as f64 * h, -1.0 + (p / n) as f64 * h);
        let r = x.hypot(y);
        match c {
            PixelClass::Regular => {
                regular += 1;
                assert!((r - 1.0).abs() < 2.0 * h, "regular pixel at radius {r}");
            }
            PixelClass::CornerOrSingular => panic!("no vanishing gradient on the circle"),
            _ => assert!((r - 1.0).abs() > 0.5 * h || r > 1.0, "pixel at radius {r} is {c:?}"),
        }
    }
    assert!(regular > 300);
    let out = prop_relu(&DigitalWavefrontSet::empty(n, n, bins, DwfMode::Hard), &f, sp, ev, eg).unwrap();
    for (i1, i2, k) in out.elements() {
        let (x, y) = (-1.0 + i1 as f64 * h, -1.0 + i2 as f64 * h);
        let radial = angle_bin(y.atan2(x), bins);
        assert!(mlct_core::bin_distance(k, radial, bins) <= 1);
    }
}

#[test]
fn saddle_origin_is_corner() {
    let n = 65;
    let (f, sp) = grid_field(n, |x, y| x * y);
    let (ev, eg) = thresholds(&f, sp);
    let classes = classify_pixels(&f, sp, ev, eg);
    assert_eq!(classes[32 * n + 32], PixelClass::CornerOrSingular);
    assert_eq!(classes[32 * n + 50], PixelClass::Regular);
    assert_eq!(classes[50 * n + 50], PixelClass::IntSuppPlus);
    assert_eq!(classes[50 * n + 10], PixelClass::SuppNegZero);
}

#[test]
fn relu_rule_on_constant_features() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = random_hard(10, 10, 8, 0.2, &mut rng);
    let sp = Spacing { h1: 0.1, h2: 0.1 };
    let plus = Field { width: 10, height: 10, data: vec![1.0; 100] };
    let minus = Field { width: 10, height: 10, data: vec![-1.0; 100] };
    assert_eq!(prop_relu(&d, &plus, sp, 1e-3, 1e-3).unwrap(), d);
    assert!(prop_relu(&d, &minus, sp, 1e-3, 1e-3).unwrap().is_empty());
}

/// F1 score of `pred` against `truth` with one pixel and one bin of slack.
fn f1(pred: &DigitalWavefrontSet, truth: &DigitalWavefrontSet) -> f64 {
    let precision = pred.covered_fraction(truth, 1, 1).unwrap();
    let recall = truth.covered_fraction(pred, 1, 1).unwrap();
    2.0 * precision * recall / (precision + recall)
}

#[test]
fn relu_of_paraboloid_matches_circle() {
    let n = 128;
    let bins = 36;
    let (f, sp) = grid_field(n, |x, y| 1.0 - x * x - y * y);
    let (ev, eg) = thresholds(&f, sp);
    let out = prop_relu(&DigitalWavefrontSet::empty(n, n, bins, DwfMode::Hard), &f, sp, ev, eg).unwrap();
    let truth = circle_dwf(n, 1.0, bins);
    let score = f1(&out, &truth);
    assert!(score >= 0.9, "F1 {score}");
}

#[test]
fn relu_rule_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (f, sp) = grid_field(24, |x, y| (3.0 * x).sin() + y * y - 0.3);
    let (ev, eg) = thresholds(&f, sp);
    let small = random_hard(24, 24, 12, 0.1, &mut rng);
    let mut big = small.clone();
    big.union_with(&random_hard(24, 24, 12, 0.2, &mut rng)).unwrap();
    let a = prop_relu(&small, &f, sp, ev, eg).unwrap();
    let b = prop_relu(&big, &f, sp, ev, eg).unwrap();
    assert!(contains(&b, &a));
    let classes = classify_pixels(&f, sp, ev, eg);
    for (p, c) in classes.iter().enumerate() {
        let (i1, i2) = (p % 24, p / 24);
        match c {
            PixelClass::SuppNegZero => assert!(a.pixel(i1, i2).iter().all(|&v| v == 0.0)),
            PixelClass::IntSuppPlus => assert_eq!(a.pixel(i1, i2), small.pixel(i1, i2)),
            _ => {}
        }
    }
}

#[test]
fn sum_rule_is_a_union() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_hard(9, 7, 6, 0.2, &mut rng);
    let b = random_hard(9, 7, 6, 0.2, &mut rng);
    let c = random_hard(9, 7, 6, 0.2, &mut rng);
    let empty = DigitalWavefrontSet::empty(9, 7, 6, DwfMode::Hard);
    assert_eq!(prop_sum(&a, &empty).unwrap(), a);
    assert_eq!(prop_sum(&a, &a).unwrap(), a);
    assert_eq!(prop_sum(&a, &b).unwrap(), prop_sum(&b, &a).unwrap());
    assert_eq!(
        prop_sum(&prop_sum(&a, &b).unwrap(), &c).unwrap(),
        prop_sum(&a, &prop_sum(&b, &c).unwrap()).unwrap()
    );
    let u = prop_sum(&a, &b).unwrap();
    assert_eq!(u.count(), a.data().iter().zip(b.data()).filter(|(x, y)| **x == 1.0 || **y == 1.0).count());
    assert!(prop_sum(&a, &DigitalWavefrontSet::empty(9, 7, 5, DwfMode::Hard)).is_err());
    let mut s = DigitalWavefrontSet::empty(2, 1, 1, DwfMode::Soft);
    s.set_value(0, 0, 0, 0.5);
    let mut t = s.clone();
    t.set_value(0, 0, 0, 0.25);
    assert_eq!(prop_sum(&s, &t).unwrap().get(0, 0, 0), 0.625);
}

#[test]
fn disjoint_edges_sum_exactly() {
    let n = 64;
    let bins = 36;
    let a = circle_dwf(n, 0.3, bins);
    let mut b = DigitalWavefrontSet::empty(n, n, bins, DwfMode::Hard);
    for i1 in 40..60 {
        b.mark(i1, 50, 18);
    }
    let u = prop_sum(&a, &b).unwrap();
    assert_eq!(u.count(), a.count() + b.count());
}

#[test]
fn conv_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = random_hard(6, 6, 4, 0.3, &mut rng);
    let id = decompose_filter(&basis_filter(1, 1), 0.1);
    assert_eq!(prop_conv(&d, &id, 1e-6), (d.clone(), false));
    let lap = decompose_filter(&basis_filter(3, 1), 0.1);
    let (out, flag) = prop_conv(&d, &lap, 1e-6);
    assert_eq!(out, d);
    assert!(flag);
    let empty = DigitalWavefrontSet::empty(6, 6, 4, DwfMode::Hard);
    assert!(prop_conv(&empty, &id, 1e-6).0.is_empty());
}

fn disk_setup(n: usize) -> (GridImage, DigitalWavefrontSet) {
    let img = GridImage::from_fn(n, n, |x, y| if x * x + y * y < 0.25 { 1.0 } else { 0.0 }).unwrap();
    (img, circle_dwf(n, 0.5, 36))
}

#[test]
fn zero_resnet_passes_first_channel_set() {
    let (img, d) = disk_setup(32);
    let p = ResNetParams::zeros([2, 3, 3, 3, 1], false).unwrap();
    let x = vec![img.field().clone(), img.field().clone()];
    let (_, cap) = resnet_forward(&p, &x).unwrap();
    let other = DigitalWavefrontSet::empty(32, 32, 36, DwfMode::Hard);
    let sp = Spacing { h1: img.h1(), h2: img.h2() };
    let (out, trace) = prop_resnet(&[d.clone(), other], &p, &cap, sp, &PropConfig::default()).unwrap();
    assert_eq!(out[0], d);
    assert_eq!(trace.snapshots.len(), trace.layers.len() + 1);
    assert!(trace.layers.iter().all(|l| l.elliptic.iter().all(Option::is_none)));
}

#[test]
fn identity_resnet_on_positive_features_keeps_set() {
    let mut p = ResNetParams::zeros([1, 1, 1, 1, 1], false).unwrap();
    for j in 0..4 {
        p.filter_mut(j, 0, 0)[4] = 1.0;
    }
    let img = GridImage::from_fn(20, 20, |x, y| 2.0 + 0.5 * x - 0.25 * y).unwrap();
    let (_, cap) = resnet_forward(&p, &[img.field().clone()]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = random_hard(20, 20, 10, 0.1, &mut rng);
    let sp = Spacing { h1: img.h1(), h2: img.h2() };
    let (out, trace) = prop_resnet(&[d.clone()], &p, &cap, sp, &PropConfig::default()).unwrap();
    assert_eq!(out[0], d);
    assert_eq!(trace.over_estimates(), 0);
    assert_eq!(trace.layers[0].class_histogram, [400, 0, 0, 0]);
}

#[test]
fn random_resnet_contains_disk_set() {
    let (img, d) = disk_setup(64);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = ResNetParams::random([1, 4, 4, 4, 1], false, 1.0, 1.0, &mut rng).unwrap();
    let (_, cap) = resnet_forward(&p, &[img.field().clone()]).unwrap();
    let sp = Spacing { h1: img.h1(), h2: img.h2() };
    let (out, trace) = prop_resnet(&[d.clone()], &p, &cap, sp, &PropConfig::default()).unwrap();
    assert!(d.covered_fraction(&out[0], 0, 0).unwrap() >= 0.99);
    let json = serde_json::to_string(&trace).unwrap();
    assert!(json.contains("class_histogram"));
    assert!(json.contains("elliptic"));
    assert!(prop_resnet(&[d.clone(), d], &p, &cap, sp, &PropConfig::default()).is_err());
}

struct LpdCase {
    geo: Geometry,
    maps: LpdMaps,
    truth: DigitalWavefrontSet,
    dwf_g: DigitalWavefrontSet,
    g: mlct_core::Sinogram,
}

fn lpd_case(n: usize, wedge: bool, seed: u64, sino_bins: usize) -> LpdCase {
    let full = Geometry::parallel(n, 60);
    let geo = if wedge {
        Restriction::LimitedAngle { center_deg: 90.0, width_deg: 40.0 }.apply_geometry(&full).unwrap()
    } else {
        full
    };
    let ph = sample_phantom(seed, &PhantomConfig::default()).unwrap();
    let img = rasterize(&ph, n, n, 2).unwrap();
    let truth = analytic_dwf(&ph, n, n, 36).unwrap();
    let maps = LpdMaps::new(&geo, 36, sino_bins);
    let (dwf_g, _) = maps.to_sino.apply_hard(&truth).unwrap();
    let g = restrict(&radon(&img, &Geometry::parallel(n, 60)).unwrap(), &Restriction::LimitedAngle {
        center_deg: 90.0,
        width_deg: if wedge { 40.0 } else { 0.0 },
    })
    .unwrap();
    LpdCase { geo, maps, truth, dwf_g, g }
}

#[test]
fn zero_lpd_propagates_nothing() {
    let c = lpd_case(32, false, 1, 64);
    let p = LpdParams::zeros(LpdShape::default()).unwrap();
    let (_, cap) = lpd_forward(&p, &c.g, &c.geo).unwrap();
    let (out, trace) = prop_lpd(&c.dwf_g, &p, &cap, &c.geo, &c.maps, &PropConfig::default()).unwrap();
    assert!(out.is_empty());
    assert_eq!(trace.dual.len(), 2);
    assert!(trace.to_json().contains("invisible_dropped"));
}

#[test]
fn limited_angle_output_has_no_invisible_bins() {
    let c = lpd_case(32, true, 2, 64);
    assert!(c.maps.visible.iter().any(|v| !v));
    let p = LpdParams::random(LpdShape { hidden: 6, ..LpdShape::default() }, 3).unwrap();
    let (_, cap) = lpd_forward(&p, &c.g, &c.geo).unwrap();
    let (out, _) = prop_lpd(&c.dwf_g, &p, &cap, &c.geo, &c.maps, &PropConfig::default()).unwrap();
    assert!(!out.is_empty());
    for (_, _, k) in out.elements() {
        assert!(c.maps.visible[k]);
    }
    let full = lpd_case(32, false, 2, 64);
    assert!(full.maps.visible.iter().all(|&v| v));
}

#[test]
fn random_lpd_covers_visible_truth() {
    for seed in 0..3 {
        let c = lpd_case(64, true, 10 + seed, 256);
        let p = LpdParams::random(LpdShape { hidden: 8, ..LpdShape::default() }, seed).unwrap();
        let (_, cap) = lpd_forward(&p, &c.g, &c.geo).unwrap();
        let (out, _) = prop_lpd(&c.dwf_g, &p, &cap, &c.geo, &c.maps, &PropConfig::default()).unwrap();
        let visible = c.truth.restrict_bins(&c.maps.visible).unwrap();
        let cov = visible.covered_fraction(&out, 1, 1).unwrap();
        assert!(cov >= 0.9, "seed {seed}: coverage {cov}");
    }
}

fn random_soft(w: usize, h: usize, bins: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..w * h * bins).map(|_| rng.random_range(0.05..0.95)).collect()
}

#[test]
fn soft_resnet_gradients_match_finite_differences() {
    let (w, h, bins) = (6, 5, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = ResNetParams::random([2, 3, 3, 3, 2], false, 1.0, 1.0, &mut rng).unwrap();
    let x: Vec<Field> =
        (0..2).map(|_| Field { width: w, height: h, data: (0..w * h).map(|_| rng.random_range(-1.0..1.0)).collect() }).collect();
    let (_, cap) = resnet_forward(&p, &x).unwrap();
    let d: Vec<Vec<f64>> = (0..2).map(|_| random_soft(w, h, bins, &mut rng)).collect();
    let wt: Vec<Vec<f64>> = (0..2).map(|_| random_soft(w, h, bins, &mut rng)).collect();
    let sp = Spacing { h1: 0.3, h2: 0.4 };
    let cfg = SoftConfig { tau: 0.5, eps_grad: 0.1 };
    let objective = |d: &[Vec<f64>], cap: &mlct_learn::ResNetCapture| {
        let refs: Vec<&[f64]> = d.iter().map(Vec::as_slice).collect();
        let (out, _) = soft_resnet_forward(&refs, (w, h, bins), &p, cap, sp, &cfg).unwrap();
        out.iter().zip(&wt).map(|(o, t)| o.iter().zip(t).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>()
    };
    let refs: Vec<&[f64]> = d.iter().map(Vec::as_slice).collect();
    let (_, tape) = soft_resnet_forward(&refs, (w, h, bins), &p, &cap, sp, &cfg).unwrap();
    let (din, dfeat) = soft_resnet_backward(&tape, &wt).unwrap();
    let eps = 1e-6;
    for c in 0..2 {
        for i in (0..d[c].len()).step_by(7) {
            let mut dp = d.clone();
            dp[c][i] += eps;
            let mut dm = d.clone();
            dm[c][i] -= eps;
            let fd = (objective(&dp, &cap) - objective(&dm, &cap)) / (2.0 * eps);
            assert!((fd - din[c][i]).abs() < 1e-6 * (1.0 + fd.abs()), "input {c}/{i}: {fd} vs {}", din[c][i]);
        }
    }
    for j in 0..3 {
        for o in 0..3 {
            for q in 0..w * h {
                let mut cp = cap.clone();
                cp.pre[j][o].data[q] += eps;
                let mut cm = cap.clone();
                cm.pre[j][o].data[q] -= eps;
                let fd = (objective(&d, &cp) - objective(&d, &cm)) / (2.0 * eps);
                let an = dfeat[j][o].data[q];
                assert!((fd - an).abs() < 1e-5 * (1.0 + fd.abs()), "feature {j}/{o}/{q}: {fd} vs {an}");
            }
        }
    }
}

#[test]
fn soft_lpd_gradients_match_finite_differences() {
    let c = lpd_case(16, true, 4, 16);
    let maps = LpdMaps::new(&c.geo, 36, 16);
    let p = LpdParams::random(LpdShape { iterations: 2, state: 2, hidden: 3, bias: false }, 4).unwrap();
    let (_, cap) = lpd_forward(&p, &c.g, &c.geo).unwrap();
    let cfg = SoftConfig { tau: 0.5, eps_grad: 0.1 };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let wt: Vec<f64> = (0..16 * 16 * 36).map(|_| rng.random_range(-1.0..1.0)).collect();
    let objective = |cap: &mlct_learn::LpdCapture| {
        let (out, _) = soft_prop_lpd(&c.dwf_g, &p, cap, &c.geo, &maps, &cfg).unwrap();
        out.data().iter().zip(&wt).map(|(a, b)| a * b).sum::<f64>()
    };
    let (_, tape) = soft_prop_lpd(&c.dwf_g, &p, &cap, &c.geo, &maps, &cfg).unwrap();
    let grads = soft_prop_lpd_backward(&tape, &maps, &wt).unwrap();
    let eps = 1e-6;
    let mut checked = 0;
    let mut kinks = 0;
    for it in 0..2 {
        for (block, feats) in [(0, &grads.dual[it]), (1, &grads.primal[it])] {
            for j in 0..3 {
                let len = feats[j][0].data.len();
                for q in (0..len).step_by(len / 7 + 1) {
                    let bump = |s: f64| {
                        let mut cp = cap.clone();
                        let target = if block == 0 { &mut cp.dual[it] } else { &mut cp.primal[it] };
                        target.pre[j][1].data[q] += s;
                        objective(&cp)
                    };
                    let (up, mid, down) = (bump(eps), bump(0.0), bump(-eps));
                    let (right, left) = ((up - mid) / eps, (mid - down) / eps);
                    // min/max ties in the gates make the map non-smooth here
                    if (right - left).abs() > 1e-3 * (right.abs() + left.abs()) + 1e-7 {
                        kinks += 1;
                        continue;
                    }
                    let fd = (up - down) / (2.0 * eps);
                    let an = feats[j][1].data[q];
                    assert!((fd - an).abs() < 1e-5 * (1.0 + fd.abs()), "{it}/{block}/{j}/{q}: {fd} vs {an}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 40 && kinks < checked / 4, "{checked} checked, {kinks} kinks");
}
