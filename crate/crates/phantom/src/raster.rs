use mlct_core::grid::spacing;
use mlct_core::{angle_bin, DigitalWavefrontSet, DwfMode, GridImage};

use crate::model::{CartoonPhantom, Region};
use crate::spline::polygon_contains;
use crate::{PhantomError, Result};

pub const MIN_SIZE: usize = 16;

fn check_size(n1: usize, n2: usize) -> Result<()> {
    if n1 < MIN_SIZE || n2 < MIN_SIZE {
        return Err(PhantomError::Invalid(format!("image size {n1}x{n2} below {MIN_SIZE}")));
    }
    Ok(())
}

/// Boundary polylines with bounding boxes, shared by the rasterizer and the
/// wavefront-set marker.
struct Outline<'a> {
    region: &'a Region,
    poly: Vec<[f64; 2]>,
    bbox: [f64; 4],
}

impl<'a> Outline<'a> {
    fn new(region: &'a Region) -> Self {
        let poly = region.polyline();
        let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in &poly {
            bbox[0] = bbox[0].min(p[0]);
            bbox[1] = bbox[1].max(p[0]);
            bbox[2] = bbox[2].min(p[1]);
            bbox[3] = bbox[3].max(p[1]);
        }
        Self { region, poly, bbox }
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.bbox[0]
            && p[0] <= self.bbox[1]
            && p[1] >= self.bbox[2]
            && p[1] <= self.bbox[3]
            && polygon_contains(&self.poly, p)
    }

    /// Sorted x coordinates where the horizontal line at `y` crosses the outline.
    fn crossings(&self, y: f64, out: &mut Vec<f64>) {
        out.clear();
        if y < self.bbox[2] || y > self.bbox[3] {
            return;
        }
        for w in self.poly.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a[1] > y) != (b[1] > y) {
                out.push(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        out.sort_by(f64::total_cmp);
    }
}

fn outlines(phantom: &CartoonPhantom) -> Vec<Outline<'_>> {
    phantom.regions.iter().map(Outline::new).collect()
}

/// Index of the last region containing `p`.
fn owner(outlines: &[Outline<'_>], p: [f64; 2]) -> Option<usize> {
    outlines.iter().rposition(|o| o.contains(p))
}

fn owner_value(outlines: &[Outline<'_>], owner: Option<usize>, p: [f64; 2]) -> f64 {
    owner.map_or(0.0, |i| outlines[i].region.value(p[0], p[1]))
}

/// Composited phantom value at a world point.
pub fn evaluate(phantom: &CartoonPhantom, x: f64, y: f64) -> f64 {
    let o = outlines(phantom);
    owner_value(&o, owner(&o, [x, y]), [x, y])
}

/// Pixel values are averages over `ss x ss` sub-samples of the composited
/// phantom, later regions overwriting earlier ones.
pub fn rasterize(phantom: &CartoonPhantom, n1: usize, n2: usize, ss: usize) -> Result<GridImage> {
    check_size(n1, n2)?;
    if ss == 0 {
        return Err(PhantomError::Invalid("supersampling factor must be at least 1".into()));
    }
    let (h1, h2) = (spacing(n1), spacing(n2));
    let outlines = outlines(phantom);
    let offset = |a: usize, h: f64| ((a as f64 + 0.5) / ss as f64 - 0.5) * h;
    let xs: Vec<f64> = (0..n1 * ss).map(|j| -1.0 + (j / ss) as f64 * h1 + offset(j % ss, h1)).collect();
    let mut values = vec![0.0; n1 * n2];
    let mut row = vec![0.0; n1 * ss];
    let mut cross = Vec::new();
    let weight = 1.0 / (ss * ss) as f64;
    for i2 in 0..n2 {
        for b in 0..ss {
            let y = -1.0 + i2 as f64 * h2 + offset(b, h2);
            row.iter_mut().for_each(|v| *v = 0.0);
            for o in &outlines {
                o.crossings(y, &mut cross);
                for pair in cross.chunks_exact(2) {
                    let start = xs.partition_point(|&x| x <= pair[0]);
                    let end = xs.partition_point(|&x| x < pair[1]);
                    for j in start..end {
                        row[j] = o.region.value(xs[j], y);
                    }
                }
            }
            let out = &mut values[i2 * n1..(i2 + 1) * n1];
            for (j, v) in row.iter().enumerate() {
                out[j / ss] += v * weight;
            }
        }
    }
    Ok(GridImage::new(n1, n2, values)?)
}

/// Jumps smaller than this are not singularities.
pub const JUMP_TOL: f64 = 1e-9;

/// Hard wavefront set read off the boundaries: every visible boundary point
/// marks its nearest pixel with the bin of the curve normal.
pub fn analytic_dwf(phantom: &CartoonPhantom, n1: usize, n2: usize, bins: usize) -> Result<DigitalWavefrontSet> {
    check_size(n1, n2)?;
    if bins == 0 {
        return Err(PhantomError::Invalid("bin count must be positive".into()));
    }
    let (h1, h2) = (spacing(n1), spacing(n2));
    let h = h1.min(h2);
    let outlines = outlines(phantom);
    let mut dwf = DigitalWavefrontSet::empty(n1, n2, bins, DwfMode::Hard);
    let delta = h / 4.0;
    for o in &outlines {
        let spline = o.region.spline();
        let period = spline.period();
        // bound the speed from the dense polyline so that consecutive samples
        // sit at most h/8 apart
        let coarse = o.poly.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).fold(0.0, f64::max);
        let max_speed = coarse * crate::model::POLYLINE_PER_SPAN as f64 * 1.5;
        let samples = ((8.0 * max_speed * period / h).ceil() as usize).max(16);
        for s in 0..samples {
            let u = period * s as f64 / samples as f64;
            let p = spline.eval(u);
            let t = spline.derivative(u);
            let speed = t[0].hypot(t[1]);
            if speed < 1e-14 {
                continue;
            }
            let i1 = ((p[0] + 1.0) / h1).round();
            let i2 = ((p[1] + 1.0) / h2).round();
            if i1 < 0.0 || i2 < 0.0 || i1 >= n1 as f64 || i2 >= n2 as f64 {
                continue;
            }
            let nrm = [t[1] / speed, -t[0] / speed];
            let a = [p[0] + delta * nrm[0], p[1] + delta * nrm[1]];
            let b = [p[0] - delta * nrm[0], p[1] - delta * nrm[1]];
            let (oa, ob) = (owner(&outlines, a), owner(&outlines, b));
            if oa == ob {
                continue;
            }
            let jump = owner_value(&outlines, oa, p) - owner_value(&outlines, ob, p);
            if jump.abs() <= JUMP_TOL {
                continue;
            }
            dwf.mark(i1 as usize, i2 as usize, angle_bin(nrm[1].atan2(nrm[0]), bins));
        }
    }
    Ok(dwf)
}
