use mlct_core::{l2_relative_error, psnr, GridImage};
use mlct_phantom::{rasterize, sample_phantom, PhantomConfig};
use mlct_radon::{radon, radon_transpose, restrict, Geometry, Restriction, Window};
use mlct_recon::{operator_norm, recon_fbp, recon_tikhonov, recon_tv, total_variation, ReconError, TV_DEFAULT_LAMBDA};

fn disk(n: usize, r: f64) -> GridImage {
    GridImage::from_fn(n, n, |x, y| if x * x + y * y <= r * r { 1.0 } else { 0.0 }).unwrap()
}

fn wedge() -> Restriction {
    Restriction::LimitedAngle { center_deg: 90.0, width_deg: 40.0 }
}

fn norm(f: &GridImage) -> f64 {
    f.field().norm()
}

#[test]
fn zero_data_gives_zero_image() {
    let geo = Geometry::parallel(24, 30);
    let g = geo.zero_sinogram();
    assert!(recon_fbp(&g, &geo, Window::None).unwrap().values().iter().all(|&v| v == 0.0));
    let t = recon_tikhonov(&g, &geo, 0.1, 50).unwrap();
    assert!(t.image.values().iter().all(|&v| v == 0.0));
    assert!(t.converged);
    let v = recon_tv(&g, &geo, 0.1, 20).unwrap();
    assert!(v.image.values().iter().all(|&v| v == 0.0));
}

#[test]
fn invalid_weights_are_rejected() {
    let geo = Geometry::parallel(16, 10);
    let g = geo.zero_sinogram();
    for lambda in [0.0, -1.0, f64::NAN] {
        assert!(matches!(recon_tikhonov(&g, &geo, lambda, 5), Err(ReconError::Invalid(_))));
        assert!(matches!(recon_tv(&g, &geo, lambda, 5), Err(ReconError::Invalid(_))));
    }
    let other = Geometry::parallel(16, 12);
    assert!(recon_tikhonov(&other.zero_sinogram(), &geo, 1.0, 5).is_err());
}

#[test]
fn fbp_disk_and_missing_wedge() {
    let n = 128;
    let truth = disk(n, 0.5);
    let geo = Geometry::parallel(n, 180);
    let g = radon(&truth, &geo).unwrap();
    let full = l2_relative_error(&truth, &recon_fbp(&g, &geo, Window::None).unwrap()).unwrap();
    assert!(full < 0.10, "{full}");
    let limited_geo = wedge().apply_geometry(&geo).unwrap();
    let gl = restrict(&g, &wedge()).unwrap();
    let limited = l2_relative_error(&truth, &recon_fbp(&gl, &limited_geo, Window::None).unwrap()).unwrap();
    assert!(limited > full, "{limited} vs {full}");
    let hann = l2_relative_error(&truth, &recon_fbp(&g, &geo, Window::Hann).unwrap()).unwrap();
    assert!(hann < 0.15, "{hann}");
}

#[test]
fn tikhonov_solves_normal_equations() {
    let n = 48;
    let truth = disk(n, 0.5);
    let geo = Geometry::parallel(n, 60);
    let g = radon(&truth, &geo).unwrap();
    let lambda = 0.05;
    let t = recon_tikhonov(&g, &geo, lambda, 2000).unwrap();
    assert!(t.converged);
    assert!(t.residual < 1e-6, "{}", t.residual);
    // independent residual from the public operators
    let f = t.image.values();
    let mut lhs = geo.transpose_raw(&geo.forward_raw(f));
    lhs.iter_mut().zip(f).for_each(|(a, b)| *a += lambda * b);
    let rhs = radon_transpose(&g, &geo).unwrap();
    let diff: f64 = lhs.iter().zip(rhs.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    assert!(diff / norm(&rhs) < 1e-6);
    let err = l2_relative_error(&truth, &t.image).unwrap();
    assert!(err < 0.2, "{err}");
}

#[test]
fn tikhonov_large_weight_shrinks_to_zero() {
    let n = 32;
    let geo = Geometry::parallel(n, 40);
    let g = radon(&disk(n, 0.5), &geo).unwrap();
    let fbp = recon_fbp(&g, &geo, Window::None).unwrap();
    let t = recon_tikhonov(&g, &geo, 1e6, 100).unwrap();
    assert!(norm(&t.image) < 1e-3 * norm(&fbp));
}

#[test]
fn tikhonov_iteration_cap_returns_best_iterate() {
    let n = 32;
    let geo = Geometry::parallel(n, 40);
    let g = radon(&disk(n, 0.5), &geo).unwrap();
    let t = recon_tikhonov(&g, &geo, 1e-4, 3).unwrap();
    assert!(!t.converged);
    assert_eq!(t.iterations, 3);
    assert!(t.residual < 1.0);
}

#[test]
fn tv_energy_is_monotone_after_burn_in() {
    let n = 64;
    let geo = Geometry::parallel(n, 90);
    let g = radon(&disk(n, 0.5), &geo).unwrap();
    let r = recon_tv(&g, &geo, TV_DEFAULT_LAMBDA, 200).unwrap();
    let e = &r.energy;
    for k in 11..e.len() {
        assert!(e[k] <= e[k - 1] * (1.0 + 1e-12), "step {k}: {} > {}", e[k], e[k - 1]);
    }
    assert!(e[e.len() - 1] < e[0]);
}

#[test]
fn tv_beats_fbp_on_cartoon() {
    let n = 64;
    let geo = Geometry::parallel(n, 90);
    for seed in 0..2 {
        let truth = rasterize(&sample_phantom(seed, &PhantomConfig::default()).unwrap(), n, n, 2).unwrap();
        let g = radon(&truth, &geo).unwrap();
        let (lo, hi) = truth.field().min_max();
        let range = hi - lo;
        let fbp = psnr(&truth, &recon_fbp(&g, &geo, Window::None).unwrap(), range).unwrap();
        let tv = psnr(&truth, &recon_tv(&g, &geo, TV_DEFAULT_LAMBDA, 200).unwrap().image, range).unwrap();
        assert!(tv >= fbp, "seed {seed}: tv {tv} fbp {fbp}");
    }
}

#[test]
fn total_variation_of_a_step() {
    // a unit step between columns 1 and 2 across three rows
    let f = GridImage::new(4, 3, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
    assert_eq!(total_variation(&f), 3.0);
    assert_eq!(total_variation(&GridImage::new(2, 2, vec![2.0; 4]).unwrap()), 0.0);
    let geo = Geometry::parallel(16, 8);
    assert!(operator_norm(&geo) > 0.0);
}

#[test]
fn reconstructions_are_deterministic() {
    let n = 32;
    let geo = Geometry::parallel(n, 30);
    let g = radon(&disk(n, 0.4), &geo).unwrap();
    assert_eq!(recon_tv(&g, &geo, 0.1, 30).unwrap().image, recon_tv(&g, &geo, 0.1, 30).unwrap().image);
    assert_eq!(recon_tikhonov(&g, &geo, 0.1, 30).unwrap().image, recon_tikhonov(&g, &geo, 0.1, 30).unwrap().image);
}
