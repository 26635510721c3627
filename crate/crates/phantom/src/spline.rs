//! Closed uniform B-spline curves.

/// Cardinal B-spline of degree `d`, supported on `[0, d+1)`.
pub fn cardinal(d: usize, x: f64) -> f64 {
    if x < 0.0 || x >= (d + 1) as f64 {
        return 0.0;
    }
    if d == 0 {
        return 1.0;
    }
    let df = d as f64;
    (x * cardinal(d - 1, x) + (df + 1.0 - x) * cardinal(d - 1, x - 1.0)) / df
}

fn cardinal_derivative(d: usize, x: f64) -> f64 {
    if d == 0 {
        return 0.0;
    }
    cardinal(d - 1, x) - cardinal(d - 1, x - 1.0)
}

/// Closed curve `C(u) = sum_j P_j N_d(u - j)` with period `n = P.len()`.
#[derive(Debug, Clone)]
pub struct ClosedSpline<'a> {
    pub degree: usize,
    pub points: &'a [[f64; 2]],
}

impl ClosedSpline<'_> {
    pub fn period(&self) -> f64 {
        self.points.len() as f64
    }

    fn accumulate(&self, u: f64, basis: impl Fn(f64) -> f64) -> [f64; 2] {
        let n = self.points.len() as f64;
        let u = u.rem_euclid(n);
        let support = (self.degree + 1) as f64;
        let mut out = [0.0; 2];
        for (j, p) in self.points.iter().enumerate() {
            // every periodic copy of the basis function that overlaps u
            let mut x = (u - j as f64).rem_euclid(n);
            while x < support {
                let w = basis(x);
                out[0] += w * p[0];
                out[1] += w * p[1];
                x += n;
            }
        }
        out
    }

    pub fn eval(&self, u: f64) -> [f64; 2] {
        self.accumulate(u, |x| cardinal(self.degree, x))
    }

    pub fn derivative(&self, u: f64) -> [f64; 2] {
        self.accumulate(u, |x| cardinal_derivative(self.degree, x))
    }

    /// Closed polyline with `per_span` samples per unit parameter; the last
    /// vertex repeats the first.
    pub fn polyline(&self, per_span: usize) -> Vec<[f64; 2]> {
        let total = per_span * self.points.len();
        let mut out: Vec<[f64; 2]> = (0..total).map(|i| self.eval(i as f64 / per_span as f64)).collect();
        out.push(out[0]);
        out
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, collinear overlaps included.
pub fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True if any two non-adjacent edges of a closed polyline (last vertex equal
/// to the first) touch.
pub fn polyline_self_intersects(poly: &[[f64; 2]]) -> bool {
    let edges = poly.len().saturating_sub(1);
    if edges < 4 {
        return false;
    }
    let bbox = |i: usize| {
        let (a, b) = (poly[i], poly[i + 1]);
        [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
    };
    let boxes: Vec<[f64; 4]> = (0..edges).map(bbox).collect();
    for i in 0..edges {
        for j in i + 2..edges {
            if i == 0 && j == edges - 1 {
                continue;
            }
            let (p, q) = (boxes[i], boxes[j]);
            if p[1] < q[0] || q[1] < p[0] || p[3] < q[2] || q[3] < p[2] {
                continue;
            }
            if segments_intersect(poly[i], poly[i + 1], poly[j], poly[j + 1]) {
                return true;
            }
        }
    }
    false
}

/// Signed shoelace area of a closed polyline.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    poly.windows(2).map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1]).sum::<f64>() / 2.0
}

/// Even-odd containment against a closed polyline.
pub fn polygon_contains(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_a_partition_of_unity() {
        for d in 0..=4 {
            for i in 0..50 {
                let u = i as f64 * 0.137;
                let s: f64 = (-6..14).map(|j| cardinal(d, u - j as f64)).sum();
                assert!((s - 1.0).abs() < 1e-12, "degree {d} at {u}: {s}");
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let pts = [[0.3, 0.1], [0.0, 0.5], [-0.4, 0.2], [-0.2, -0.4], [0.3, -0.3]];
        for d in 1..=4 {
            let c = ClosedSpline { degree: d, points: &pts };
            for i in 0..20 {
                let u = 0.05 + i as f64 * 0.23;
                let e = 1e-6;
                let (a, b) = (c.eval(u + e), c.eval(u - e));
                let dv = c.derivative(u);
                for t in 0..2 {
                    assert!(((a[t] - b[t]) / (2.0 * e) - dv[t]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn crossing_segments() {
        assert!(segments_intersect([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
        let bowtie = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        assert!(polyline_self_intersects(&bowtie));
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
        assert!(!polyline_self_intersects(&square));
        assert!((polygon_area(&square) - 1.0).abs() < 1e-15);
        assert!(polygon_contains(&square, [0.5, 0.5]));
        assert!(!polygon_contains(&square, [1.5, 0.5]));
    }
}
