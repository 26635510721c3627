use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use mlct_core::{angle_bin, bin_distance, orientation_distance, DigitalWavefrontSet, DwfMode, GridImage};
use mlct_microlocal::*;
use mlct_phantom::{analytic_dwf, rasterize, CartoonPhantom, Region};
use mlct_radon::{radon, Geometry, Restriction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk(r: f64) -> CartoonPhantom {
    let pts = (0..24)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / 24.0;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    let region = Region { degree: 3, control_points: pts, poly: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], scale: 1.0 };
    CartoonPhantom { seed: 0, regions: vec![region] }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn forward_examples() {
    for theta in [0.0, 0.3, 1.2, 2.9] {
        let e = canon_fwd(ImageWfElement { x: [0.0, 0.0], theta });
        assert!(close(e.s, 0.0) && close(e.vartheta, 0.0));
        assert!(close(e.phi, (theta + FRAC_PI_2).rem_euclid(PI)));
    }
    let e = canon_fwd(ImageWfElement { x: [1.0, 0.0], theta: 0.0 });
    assert!(close(e.s, 0.0) && close(e.phi, FRAC_PI_2) && close(e.vartheta, -FRAC_PI_4));
    let e = canon_fwd(ImageWfElement { x: [0.0, 1.0], theta: 0.0 });
    assert!(close(e.s, 1.0) && close(e.phi, FRAC_PI_2) && close(e.vartheta, 0.0));
}

#[test]
fn backward_examples() {
    let e = canon_bwd(SinoWfElement { s: 0.0, phi: FRAC_PI_2, vartheta: 0.0 }).unwrap();
    assert!(close(e.x[0], 0.0) && close(e.x[1], 0.0) && close(e.theta, 0.0));
    let e = canon_bwd(SinoWfElement { s: 0.0, phi: FRAC_PI_2, vartheta: -FRAC_PI_4 }).unwrap();
    assert!(close(e.x[0], 1.0) && close(e.x[1], 0.0) && close(e.theta, 0.0));
    let err = canon_bwd(SinoWfElement { s: 0.0, phi: 0.5, vartheta: FRAC_PI_2 }).unwrap_err();
    assert_eq!(err.to_string(), "grazing orientation");
}

#[test]
fn relations_invert_each_other() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10_000 {
        let e = ImageWfElement { x: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], theta: rng.random_range(0.0..PI) };
        let s = canon_fwd(e);
        assert!((0.0..PI).contains(&s.phi));
        let back = canon_bwd(s).unwrap();
        assert!((back.x[0] - e.x[0]).abs() < 1e-12 && (back.x[1] - e.x[1]).abs() < 1e-12);
        assert!(orientation_distance(back.theta, e.theta) < 1e-12);
    }
}

#[test]
fn wrap_flips_line_and_orientation() {
    // theta + pi/2 >= pi wraps: (s, phi) -> (-s, phi - pi)
    let e = canon_fwd(ImageWfElement { x: [0.3, -0.4], theta: 2.0 });
    let phi = 2.0 + FRAC_PI_2 - PI;
    assert!(close(e.phi, phi));
    let s_unwrapped = 0.3 * -(2.0f64).sin() + -0.4 * (2.0f64).cos();
    assert!(close(e.s, -s_unwrapped));
}

#[test]
fn full_view_is_fully_visible() {
    let geo = Geometry::parallel(32, 180);
    assert!(visible_orientations(&geo, 36).iter().all(|&v| v));
    assert!(visible_orientations(&geo, 360).iter().all(|&v| v));
}

#[test]
fn wedge_hides_the_matching_normals() {
    let geo = Restriction::LimitedAngle { center_deg: 90.0, width_deg: 80.0 }
        .apply_geometry(&Geometry::parallel(32, 180))
        .unwrap();
    let vis = visible_orientations(&geo, 180);
    for (k, &v) in vis.iter().enumerate() {
        // normals in the missing wedge [50, 130) degrees are invisible
        assert_eq!(v, !(50..130).contains(&k), "bin {k}");
    }
}

#[test]
fn single_angle_visibility() {
    let full = Geometry::parallel(16, 36);
    let mut mask = vec![false; 36];
    mask[9] = true; // 45 degrees
    let geo = full.with_mask(mask).unwrap();
    let vis = visible_orientations(&geo, 36);
    let visible: Vec<usize> = (0..36).filter(|&k| vis[k]).collect();
    assert_eq!(visible, vec![9]);
}

#[test]
fn shrinking_the_angle_set_never_adds_bins() {
    let full = Geometry::parallel(16, 90);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let a: Vec<bool> = (0..90).map(|_| rng.random_bool(0.6)).collect();
        let b: Vec<bool> = a.iter().map(|&m| m && rng.random_bool(0.5)).collect();
        if !b.iter().any(|&m| m) {
            continue;
        }
        let va = visible_orientations(&full.with_mask(a).unwrap(), 48);
        let vb = visible_orientations(&full.with_mask(b).unwrap(), 48);
        assert!(va.iter().zip(&vb).all(|(&x, &y)| x || !y));
    }
}

#[test]
fn empty_maps_to_empty() {
    let geo = Geometry::parallel(32, 30);
    let img = DigitalWavefrontSet::empty(32, 32, 12, DwfMode::Hard);
    let (sino, stats) = dwf_image_to_sino(&img, &geo, 24).unwrap();
    assert!(sino.is_empty() && stats.mapped == 0);
    let (back, _) = dwf_sino_to_image(&sino, &geo, 12).unwrap();
    assert!(back.is_empty());
}

#[test]
fn origin_element_lands_on_the_centre_detector() {
    let geo = Geometry::parallel(33, 180);
    let bins = 36;
    let mut img = DigitalWavefrontSet::empty(33, 33, bins, DwfMode::Hard);
    // normal at 90 degrees, i.e. the relation's theta = 0
    img.mark(16, 16, angle_bin(FRAC_PI_2, bins));
    let (sino, stats) = dwf_image_to_sino(&img, &geo, 24).unwrap();
    assert_eq!(stats.mapped, 1);
    let elems: Vec<_> = sino.elements().collect();
    assert_eq!(elems, vec![((geo.m1() - 1) / 2, 90, 0)]);
}

fn disk_setup(n: usize, m2: usize, bins: usize) -> (Geometry, DigitalWavefrontSet, GridImage) {
    let p = disk(0.5);
    let geo = Geometry::parallel(n, m2);
    (geo, analytic_dwf(&p, n, n, bins).unwrap(), rasterize(&p, n, n, 4).unwrap())
}

#[test]
fn disk_pushforward_matches_detected_sinogram_edges() {
    let (geo, dwf, image) = disk_setup(128, 180, 180);
    let (pushed, stats) = dwf_image_to_sino(&dwf, &geo, 90).unwrap();
    assert!(stats.mapped > 0 && stats.grazing == 0);
    let g = radon(&image, &geo).unwrap();
    let detected = dwf_estimate_sinogram(&g, 90, &EstimateThresholds::default());
    let near = |k: usize, l: usize| {
        (-2i64..=2).any(|dl| {
            let l2 = (l as i64 + dl).rem_euclid(geo.m2() as i64) as usize;
            let flip = l as i64 + dl != l2 as i64;
            (-2i64..=2).any(|dk| {
                let mut k2 = k as i64 + dk;
                if flip {
                    k2 = geo.m1() as i64 - 1 - k2;
                }
                (0..geo.m1() as i64).contains(&k2) && (0..90).any(|j| detected.is_set(k2 as usize, l2, j))
            })
        })
    };
    let elems: Vec<_> = pushed.elements().collect();
    let hits = elems.iter().filter(|&&(k, l, _)| near(k, l)).count();
    assert!(hits as f64 >= 0.9 * elems.len() as f64, "{hits} of {}", elems.len());
    // every angle sees both edges |s| ~ r
    for l in 0..geo.m2() {
        let ks: Vec<usize> = elems.iter().filter(|e| e.1 == l).map(|e| e.0).collect();
        assert!(!ks.is_empty());
        assert!(ks.iter().all(|&k| (geo.detectors()[k].abs() - 0.5).abs() < 0.03));
    }
}

#[test]
fn disk_round_trip_recovers_visible_elements() {
    let (geo, dwf, _) = disk_setup(64, 180, 36);
    let (sino, _) = dwf_image_to_sino(&dwf, &geo, 256).unwrap();
    let (back, _) = dwf_sino_to_image(&sino, &geo, 36).unwrap();
    let vis = visible_orientations(&geo, 36);
    let near = |i1: usize, i2: usize, k: usize| {
        (-1i64..=1).any(|a| {
            (-1i64..=1).any(|b| {
                let (x, y) = (i1 as i64 + a, i2 as i64 + b);
                x >= 0 && y >= 0 && x < 64 && y < 64 && (0..36).any(|j| bin_distance(j, k, 36) <= 1 && back.is_set(x as usize, y as usize, j))
            })
        })
    };
    let elems: Vec<_> = dwf.elements().filter(|e| vis[e.2]).collect();
    let hits = elems.iter().filter(|&&(a, b, k)| near(a, b, k)).count();
    assert!(hits as f64 >= 0.95 * elems.len() as f64, "{hits} of {}", elems.len());
}

#[test]
fn invisible_bins_push_to_nothing() {
    let (full, dwf, _) = disk_setup(64, 180, 36);
    let geo = Restriction::LimitedAngle { center_deg: 90.0, width_deg: 80.0 }.apply_geometry(&full).unwrap();
    let vis = visible_orientations(&geo, 36);
    let hidden = dwf.restrict_bins(&vis.iter().map(|v| !v).collect::<Vec<_>>()).unwrap();
    assert!(!hidden.is_empty());
    let (sino, stats) = dwf_image_to_sino(&hidden, &geo, 90).unwrap();
    assert!(sino.is_empty());
    assert!(stats.masked > 0);
}

#[test]
fn pullback_lands_on_visible_bins() {
    let (full, dwf, _) = disk_setup(64, 180, 36);
    let geo = Restriction::LimitedAngle { center_deg: 90.0, width_deg: 80.0 }.apply_geometry(&full).unwrap();
    let (sino, _) = dwf_image_to_sino(&dwf, &full, 90).unwrap();
    let (back, _) = dwf_sino_to_image(&sino, &geo, 36).unwrap();
    let vis = visible_orientations(&geo, 36);
    assert!(!back.is_empty());
    assert!(back.elements().all(|(_, _, k)| vis[k]));
}

#[test]
fn grazing_sinogram_orientations_are_dropped() {
    let geo = Geometry::parallel(32, 30);
    let sb = 16;
    let mut sino = DigitalWavefrontSet::empty(geo.m1(), geo.m2(), sb, DwfMode::Hard);
    sino.mark(10, 3, sb / 2);
    sino.mark(11, 3, sb / 2 + 1);
    sino.mark(12, 3, 0);
    let (_, stats) = dwf_sino_to_image(&sino, &geo, 12).unwrap();
    assert_eq!(stats.grazing, 2);
    assert_eq!(stats.mapped + stats.outside, 1);
}

#[test]
fn soft_map_agrees_with_hard_map_and_has_exact_gradient() {
    let geo = Geometry::parallel(16, 12);
    let map = CellMap::sino_to_image(&geo, 8, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, h, b) = map.source_shape();
    let hard: Vec<f64> = (0..w * h * b).map(|_| if rng.random_bool(0.05) { 1.0 } else { 0.0 }).collect();
    let hard = DigitalWavefrontSet::from_vec(w, h, b, DwfMode::Hard, hard).unwrap();
    let soft = map.apply_soft(&hard.to_soft()).unwrap();
    assert_eq!(soft.data(), map.apply_hard(&hard).unwrap().0.data());

    let x: Vec<f64> = (0..w * h * b).map(|_| rng.random_range(0.0..1.0)).collect();
    let input = DigitalWavefrontSet::from_vec(w, h, b, DwfMode::Soft, x.clone()).unwrap();
    let weights: Vec<f64> = (0..soft.data().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loss = |d: &DigitalWavefrontSet| -> f64 {
        map.apply_soft(d).unwrap().data().iter().zip(&weights).map(|(a, b)| a * b).sum()
    };
    let grad = map.backward_soft(&input, &weights).unwrap();
    for i in (0..x.len()).step_by(97) {
        let e = 1e-6;
        let mut p = x.clone();
        p[i] = (x[i] + e).min(1.0);
        let mut m = x.clone();
        m[i] = (x[i] - e).max(0.0);
        let fd = (loss(&DigitalWavefrontSet::from_vec(w, h, b, DwfMode::Soft, p.clone()).unwrap())
            - loss(&DigitalWavefrontSet::from_vec(w, h, b, DwfMode::Soft, m.clone()).unwrap()))
            / (p[i] - m[i]);
        assert!((fd - grad[i]).abs() < 1e-6, "cell {i}: {fd} vs {}", grad[i]);
    }
}

#[test]
fn estimator_examples() {
    let flat = GridImage::from_fn(32, 32, |_, _| 0.7).unwrap();
    assert!(dwf_estimate(&flat, 12, &EstimateThresholds::default()).is_empty());

    let step = GridImage::from_fn(33, 33, |x, _| if x > 0.01 { 1.0 } else { 0.0 }).unwrap();
    let d = dwf_estimate(&step, 12, &EstimateThresholds::default());
    assert!(!d.is_empty());
    assert!(d.elements().all(|(_, _, k)| k == 0));

    let (n, bins) = (128, 36);
    let img = rasterize(&disk(0.5), n, n, 4).unwrap();
    let d = dwf_estimate(&img, bins, &EstimateThresholds::default());
    let h = img.h1();
    let elems: Vec<_> = d.elements().collect();
    let good = elems
        .iter()
        .filter(|&&(i1, i2, k)| {
            let (x, y) = img.world(i1, i2);
            (x.hypot(y) - 0.5).abs() <= h * 1.5 && bin_distance(k, angle_bin(y.atan2(x), bins), bins) <= 1
        })
        .count();
    assert!(good as f64 >= 0.9 * elems.len() as f64, "{good} of {}", elems.len());
}
