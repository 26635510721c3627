use std::f64::consts::PI;

use mlct_core::orientation_distance;
use mlct_radon::Geometry;

const TOL: f64 = 1e-12;

/// Image orientation bins (normal directions `k * pi / bins`) whose canonical
/// image lies on a measured line: the normal is within half an angular cell of
/// an available angle, or an available angle falls inside the bin's cell.
pub fn visible_orientations(geo: &Geometry, bins: usize) -> Vec<bool> {
    let cells = geo.angle_weights();
    let half_bin = PI / (2.0 * bins as f64);
    (0..bins)
        .map(|k| {
            let nu = k as f64 * PI / bins as f64;
            geo.available().any(|l| {
                let d = orientation_distance(nu, geo.angles()[l]);
                d <= cells[l] / 2.0 + TOL || d <= half_bin + TOL
            })
        })
        .collect()
}
