use mlct_learn::wfprop::{
    basis_filter, decompose_filter, is_elliptic, recompose_filter, symbol_eval, Ellipticity, Filter3,
    FilterBasisCoeffs,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The nine scaled basis filters written out entry by entry.
fn literal_basis(h: f64) -> Vec<Filter3> {
    let (h2, h3, h4) = (h * h, h * h * h, h * h * h * h);
    let scale = |m: [[f64; 3]; 3], s: f64| m.map(|r| r.map(|v| v * s));
    vec![
        scale([[0., 0., 0.], [0., 1., 0.], [0., 0., 0.]], 1.0),
        scale([[0., 1., 0.], [0., 0., 0.], [0., -1., 0.]], 1.0 / (2.0 * h)),
        scale([[0., 0., 0.], [1., 0., -1.], [0., 0., 0.]], 1.0 / (2.0 * h)),
        scale([[1., 0., -1.], [0., 0., 0.], [-1., 0., 1.]], 1.0 / (4.0 * h2)),
        scale([[0., -1., 0.], [0., 2., 0.], [0., -1., 0.]], 1.0 / h2),
        scale([[0., 0., 0.], [1., -2., 1.], [0., 0., 0.]], 1.0 / h2),
        scale([[1., -2., 1.], [0., 0., 0.], [-1., 2., -1.]], 1.0 / (2.0 * h3)),
        scale([[1., 0., -1.], [-2., 0., 2.], [1., 0., -1.]], 1.0 / (2.0 * h3)),
        scale([[-1., 2., -1.], [2., -4., 2.], [-1., 2., -1.]], 1.0 / h4),
    ]
}

/// Solve the 9x9 system `sum_k beta_k B_k = theta` by Gaussian elimination.
fn solve_coeffs(theta: &Filter3, h: f64) -> [f64; 9] {
    let basis = literal_basis(h);
    let mut a = [[0.0; 10]; 9];
    for e in 0..9 {
        let (r, c) = (e / 3, e % 3);
        for k in 0..9 {
            a[e][k] = basis[k][r][c];
        }
        a[e][9] = theta[r][c];
    }
    for col in 0..9 {
        let piv = (col..9).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        for row in 0..9 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..10 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    std::array::from_fn(|k| a[k][9] / a[k][k])
}

fn random_filter(rng: &mut impl Rng) -> Filter3 {
    std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
}

#[test]
fn identity_filter_is_b11() {
    let b = decompose_filter(&basis_filter(1, 1), 1.0);
    assert_eq!(b.values(), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn fourth_order_filter_is_b33() {
    // the standard stencil of the mixed fourth derivative
    let theta = [[-1.0, 2.0, -1.0], [2.0, -4.0, 2.0], [-1.0, 2.0, -1.0]];
    let b = decompose_filter(&theta, 1.0);
    let v = b.values();
    assert!((v[8] - 1.0).abs() < 1e-15);
    assert!(v[..8].iter().all(|&x| x.abs() < 1e-15), "{v:?}");
}

#[test]
fn decomposition_matches_linear_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 0.01;
    let theta = random_filter(&mut rng);
    let b = decompose_filter(&theta, h);
    let oracle = solve_coeffs(&theta, h);
    for (x, y) in b.values().iter().zip(oracle) {
        assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{x} vs {y}");
    }
    let back = recompose_filter(&b);
    for r in 0..3 {
        for c in 0..3 {
            assert!((back[r][c] - theta[r][c]).abs() < 1e-12);
        }
    }
}

#[test]
fn round_trip_thousand_filters() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..1000 {
        let h = 10f64.powf(rng.random_range(-3.0..0.0));
        let mag = 10f64.powf(rng.random_range(-3.0..3.0));
        let theta = random_filter(&mut rng).map(|r| r.map(|v| v * mag));
        let back = recompose_filter(&decompose_filter(&theta, h));
        for r in 0..3 {
            for c in 0..3 {
                assert!((back[r][c] - theta[r][c]).abs() < 1e-12, "{} vs {}", back[r][c], theta[r][c]);
            }
        }
    }
}

#[test]
fn every_basis_element_decomposes_to_itself() {
    let h = 0.25;
    for (k, m) in literal_basis(h).iter().enumerate() {
        let v = decompose_filter(m, h).values();
        for (j, x) in v.iter().enumerate() {
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((x - want).abs() < 1e-12, "element {k}: {v:?}");
        }
    }
}

fn only(index: usize, value: f64) -> FilterBasisCoeffs {
    let mut v = [0.0; 9];
    v[index] = value;
    FilterBasisCoeffs::from_values(v, 1.0)
}

#[test]
fn symbol_examples() {
    assert_eq!(symbol_eval(&only(0, 1.0), [3.0, -7.0]), 1.0);
    let mut lap = [0.0; 9];
    lap[4] = 1.0;
    lap[5] = 1.0;
    assert_eq!(symbol_eval(&FilterBasisCoeffs::from_values(lap, 1.0), [1.0, 1.0]), 2.0);
    assert_eq!(symbol_eval(&only(4, 1.0), [1.0, 0.0]), 0.0);
}

#[test]
fn ellipticity_examples() {
    assert_eq!(is_elliptic(&only(0, 1.0), 1e-6), Ellipticity::Elliptic);
    match is_elliptic(&only(4, 1.0), 1e-6) {
        Ellipticity::NonElliptic { witness } => {
            assert!(witness[1].abs() < 1e-9 * witness[0].abs().max(1e-300), "{witness:?}");
            assert!(witness[0] != 0.0);
        }
        e => panic!("{e:?}"),
    }
}

/// Dense grid oracle: 3600 directions by 70 log-spaced radii; non-elliptic
/// when the sampled symbol changes sign or its minimum is below threshold.
fn oracle_elliptic(b: &FilterBasisCoeffs, tol: f64) -> bool {
    let threshold = tol * (1.0 + b.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let mut sign = 0.0;
    let mut min = f64::INFINITY;
    for k in 0..3600 {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / 3600.0;
        for j in 0..70 {
            let r = 10f64.powf(-3.0 + 6.0 * j as f64 / 69.0);
            let p = symbol_eval(b, [r * phi.cos(), r * phi.sin()]);
            min = min.min(p.abs());
            if p != 0.0 {
                if sign == 0.0 {
                    sign = p.signum();
                } else if p.signum() != sign {
                    return false;
                }
            }
        }
    }
    min > threshold
}

#[test]
fn ellipticity_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tol = 1e-3;
    let mut elliptic = 0;
    for case in 0..1000 {
        let mut v = [0.0; 9];
        for x in v.iter_mut() {
            if rng.random_bool(0.4) {
                *x = rng.random_range(-1.0..1.0);
            }
        }
        let b = FilterBasisCoeffs::from_values(v, 1.0);
        let fast = is_elliptic(&b, tol).is_elliptic();
        let slow = oracle_elliptic(&b, tol);
        assert_eq!(fast, slow, "case {case}: {v:?}");
        elliptic += fast as usize;
    }
    assert!(elliptic > 20 && elliptic < 980, "{elliptic} elliptic cases");
}
