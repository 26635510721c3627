use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::spline::{polyline_self_intersects, ClosedSpline};
use crate::{PhantomError, Result};

/// Polyline resolution used for the self-intersection test and containment.
pub const POLYLINE_PER_SPAN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub degree: usize,
    pub control_points: Vec<[f64; 2]>,
    /// `[c00, c10, c01, c20, c11, c02]`.
    pub poly: [f64; 6],
    pub scale: f64,
}

impl Region {
    pub fn spline(&self) -> ClosedSpline<'_> {
        ClosedSpline { degree: self.degree, points: &self.control_points }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let c = &self.poly;
        self.scale * (c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y)
    }

    pub fn polyline(&self) -> Vec<[f64; 2]> {
        self.spline().polyline(POLYLINE_PER_SPAN)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.degree) {
            return Err(PhantomError::Invalid(format!("spline degree {} outside 1..=4", self.degree)));
        }
        if self.control_points.len() < 3 {
            return Err(PhantomError::Invalid("a boundary needs at least 3 control points".into()));
        }
        let finite = self.control_points.iter().flatten().chain(self.poly.iter()).all(|v| v.is_finite());
        if !finite || !self.scale.is_finite() {
            return Err(PhantomError::Invalid("non-finite region parameter".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartoonPhantom {
    pub seed: u64,
    pub regions: Vec<Region>,
}

impl CartoonPhantom {
    pub fn empty(seed: u64) -> Self {
        Self { seed, regions: Vec::new() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("phantom serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        for r in &p.regions {
            r.validate()?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    /// Inclusive range of region counts.
    pub regions: [usize; 2],
    pub control_points: [usize; 2],
    pub degree: [usize; 2],
    /// Range of `|scale|`; the sign is random.
    pub amplitude: [f64; 2],
    /// Base radius range of the star-shaped template.
    pub radius: [f64; 2],
    /// Relative radial jitter of the control points.
    pub jitter: f64,
    /// Magnitude bound of the non-constant polynomial coefficients.
    pub poly_strength: f64,
    pub max_retries: usize,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            regions: [2, 5],
            control_points: [5, 10],
            degree: [2, 4],
            amplitude: [0.2, 1.0],
            radius: [0.15, 0.5],
            jitter: 0.3,
            poly_strength: 0.3,
            max_retries: 200,
        }
    }
}

impl PhantomConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(PhantomError::Invalid(msg.to_string()));
        if self.regions[0] < 1 || self.regions[0] > self.regions[1] {
            return bad("region count range must satisfy 1 <= min <= max");
        }
        if self.control_points[0] < 3 || self.control_points[0] > self.control_points[1] {
            return bad("control point range must satisfy 3 <= min <= max");
        }
        if self.degree[0] < 1 || self.degree[1] > 4 || self.degree[0] > self.degree[1] {
            return bad("degree range must lie in 1..=4");
        }
        if !(self.amplitude[0] > 0.0 && self.amplitude[0] <= self.amplitude[1]) {
            return bad("amplitude range must be positive and ordered");
        }
        if !(self.radius[0] > 0.0 && self.radius[0] <= self.radius[1] && self.radius[1] < 0.9) {
            return bad("radius range must lie in (0, 0.9)");
        }
        if !(0.0..1.0).contains(&self.jitter) || !(self.poly_strength >= 0.0) {
            return bad("jitter must lie in [0, 1) and poly_strength must be non-negative");
        }
        Ok(())
    }
}

const CONTROL_BOUND: f64 = 0.95;

fn sample_region(rng: &mut ChaCha8Rng, cfg: &PhantomConfig) -> Option<Region> {
    let count = rng.random_range(cfg.control_points[0]..=cfg.control_points[1]);
    let degree = rng.random_range(cfg.degree[0]..=cfg.degree[1]);
    let radius = rng.random_range(cfg.radius[0]..=cfg.radius[1]);
    let reach = CONTROL_BOUND - radius * (1.0 + cfg.jitter);
    let centre = if reach > 0.0 {
        [rng.random_range(-reach..=reach), rng.random_range(-reach..=reach)]
    } else {
        [0.0, 0.0]
    };
    let phase = rng.random_range(0.0..TAU);
    let control_points: Vec<[f64; 2]> = (0..count)
        .map(|j| {
            let a = phase + TAU * (j as f64 + rng.random_range(-0.25..0.25)) / count as f64;
            let r = radius * (1.0 + rng.random_range(-cfg.jitter..=cfg.jitter));
            [centre[0] + r * a.cos(), centre[1] + r * a.sin()]
        })
        .collect();
    if control_points.iter().flatten().any(|v| v.abs() > CONTROL_BOUND) {
        return None;
    }
    let s = cfg.poly_strength;
    let mut poly = [1.0; 6];
    for c in poly.iter_mut().skip(1) {
        *c = if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 };
    }
    let magnitude = rng.random_range(cfg.amplitude[0]..=cfg.amplitude[1]);
    let scale = if rng.random_bool(0.75) { magnitude } else { -magnitude };
    let region = Region { degree, control_points, poly, scale };
    if polyline_self_intersects(&region.polyline()) {
        return None;
    }
    Some(region)
}

/// Draw a random cartoon phantom; a pure function of `(seed, cfg)`.
pub fn sample_phantom(seed: u64, cfg: &PhantomConfig) -> Result<CartoonPhantom> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(cfg.regions[0]..=cfg.regions[1]);
    let mut regions = Vec::with_capacity(count);
    for _ in 0..count {
        let mut tries = 0;
        let region = loop {
            if let Some(r) = sample_region(&mut rng, cfg) {
                break r;
            }
            tries += 1;
            if tries >= cfg.max_retries {
                return Err(PhantomError::RetryCap(cfg.max_retries));
            }
        };
        regions.push(region);
    }
    Ok(CartoonPhantom { seed, regions })
}
