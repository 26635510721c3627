use mlct_core::io::{decode_weights, encode_weights};
use mlct_core::{Field, GridImage, Sinogram};
use mlct_radon::Geometry;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::resnet::{resnet_backward, resnet_forward, ChannelPlan, ResNetCapture, ResNetParams};
use crate::{LearnError, Result};

/// Architecture of a Learned Primal-Dual network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpdShape {
    pub iterations: usize,
    /// Primal and dual state channels.
    pub state: usize,
    pub hidden: usize,
    pub bias: bool,
}

impl Default for LpdShape {
    fn default() -> Self {
        Self { iterations: 2, state: 5, hidden: 16, bias: false }
    }
}

impl LpdShape {
    /// Dual block: `h` channels, `R f`, `g` in; `h` channels out.
    pub fn dual_plan(&self) -> ChannelPlan {
        [self.state + 2, self.hidden, self.hidden, self.hidden, self.state]
    }

    /// Primal block: `f` channels and the back-projected dual channel in.
    pub fn primal_plan(&self) -> ChannelPlan {
        [self.state + 1, self.hidden, self.hidden, self.hidden, self.state]
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.state == 0 || self.hidden == 0 {
            return Err(LearnError::Invalid(format!("degenerate network shape {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpdParams {
    shape: LpdShape,
    pub dual: Vec<ResNetParams>,
    pub primal: Vec<ResNetParams>,
}

/// Every block's capture from one [`lpd_forward`] pass.
#[derive(Debug, Clone)]
pub struct LpdCapture {
    pub dual: Vec<ResNetCapture>,
    pub primal: Vec<ResNetCapture>,
}

impl LpdParams {
    pub fn zeros(shape: LpdShape) -> Result<Self> {
        shape.validate()?;
        let dual = (0..shape.iterations).map(|_| ResNetParams::zeros(shape.dual_plan(), shape.bias)).collect::<Result<_>>()?;
        let primal =
            (0..shape.iterations).map(|_| ResNetParams::zeros(shape.primal_plan(), shape.bias)).collect::<Result<_>>()?;
        Ok(Self { shape, dual, primal })
    }

    /// Random initialisation with a damped last layer so each block starts
    /// close to the identity.
    pub fn random(shape: LpdShape, seed: u64) -> Result<Self> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dual = Vec::new();
        let mut primal = Vec::new();
        for _ in 0..shape.iterations {
            dual.push(ResNetParams::random(shape.dual_plan(), shape.bias, 1.0, 0.1, &mut rng)?);
            primal.push(ResNetParams::random(shape.primal_plan(), shape.bias, 1.0, 0.1, &mut rng)?);
        }
        Ok(Self { shape, dual, primal })
    }

    pub fn shape(&self) -> LpdShape {
        self.shape
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.shape).expect("shape already validated")
    }

    /// Blocks in declaration order: dual 1, primal 1, dual 2, ...
    pub fn blocks(&self) -> impl Iterator<Item = &ResNetParams> {
        self.dual.iter().zip(&self.primal).flat_map(|(d, p)| [d, p])
    }

    pub fn blocks_mut(&mut self) -> impl Iterator<Item = &mut ResNetParams> {
        self.dual.iter_mut().zip(self.primal.iter_mut()).flat_map(|(d, p)| [d, p])
    }

    pub fn len(&self) -> usize {
        self.blocks().map(ResNetParams::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().flat_map(|b| b.flat().copied()).collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(LearnError::Shape(format!("{} values for {} parameters", values.len(), self.len())));
        }
        let mut it = values.iter();
        for b in self.blocks_mut() {
            for v in b.flat_mut() {
                *v = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.blocks_mut().zip(other.blocks()) {
            a.axpy(alpha, b);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().all(ResNetParams::is_finite)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let s = self.shape;
        let meta = json!({
            "iterations": s.iterations,
            "state": s.state,
            "hidden": s.hidden,
            "bias": s.bias,
            "dual_plan": s.dual_plan(),
            "primal_plan": s.primal_plan(),
        });
        Ok(encode_weights(meta, &self.to_flat())?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (meta, values) = decode_weights(bytes)?;
        let field = |k: &str| {
            meta.get(k).ok_or_else(|| LearnError::Invalid(format!("weights header lacks `{k}`")))
        };
        let int = |k: &str| -> Result<usize> {
            field(k)?.as_u64().map(|v| v as usize).ok_or_else(|| LearnError::Invalid(format!("`{k}` is not a count")))
        };
        let shape = LpdShape {
            iterations: int("iterations")?,
            state: int("state")?,
            hidden: int("hidden")?,
            bias: field("bias")?.as_bool().ok_or_else(|| LearnError::Invalid("`bias` is not a flag".into()))?,
        };
        if shape.iterations > 64 || shape.state > 256 || shape.hidden > 1024 {
            return Err(LearnError::Invalid(format!("implausible network shape {shape:?}")));
        }
        let mut p = Self::zeros(shape)?;
        p.set_flat(&values)?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn check_geometry(geo: &Geometry, g: &Sinogram) -> Result<()> {
    if g.m1() != geo.m1() || g.m2() != geo.m2() {
        return Err(LearnError::Shape(format!(
            "sinogram {}x{} vs geometry {}x{}",
            g.m1(),
            g.m2(),
            geo.m1(),
            geo.m2()
        )));
    }
    Ok(())
}

/// Unrolled primal-dual reconstruction of `g`.
pub fn lpd_forward(params: &LpdParams, g: &Sinogram, geo: &Geometry) -> Result<(GridImage, LpdCapture)> {
    check_geometry(geo, g)?;
    let s = params.shape.state;
    let (n1, n2, m1, m2) = (geo.n1(), geo.n2(), geo.m1(), geo.m2());
    let gf = g.field().clone();
    let mut f: Vec<Field> = (0..s).map(|_| Field::zeros(n1, n2)).collect();
    let mut h: Vec<Field> = (0..s).map(|_| gf.clone()).collect();
    let mut capture = LpdCapture { dual: Vec::new(), primal: Vec::new() };
    for (dual, primal) in params.dual.iter().zip(&params.primal) {
        let rf = Field { width: m1, height: m2, data: geo.forward_raw(&f[0].data) };
        let mut din = h.clone();
        din.push(rf);
        din.push(gf.clone());
        let (hn, cd) = resnet_forward(dual, &din)?;
        h = hn;
        let bp = Field { width: n1, height: n2, data: geo.backproject_raw(&h[0].data) };
        let mut pin = f.clone();
        pin.push(bp);
        let (fnew, cp) = resnet_forward(primal, &pin)?;
        f = fnew;
        capture.dual.push(cd);
        capture.primal.push(cp);
    }
    let out = GridImage::from_field(f.swap_remove(0))?;
    Ok((out, capture))
}

/// Extra gradients on the captured pre-activations of every block, laid
/// out like [`LpdCapture`].
#[derive(Debug, Clone)]
pub struct LpdFeatureGrads {
    pub dual: Vec<[Vec<Field>; 3]>,
    pub primal: Vec<[Vec<Field>; 3]>,
}

/// Parameter gradient of `<grad_out, lpd_forward(params, g)>` plus any
/// feature gradients.
pub fn lpd_backward(
    params: &LpdParams,
    capture: &LpdCapture,
    geo: &Geometry,
    grad_out: &Field,
    features: Option<&LpdFeatureGrads>,
) -> Result<LpdParams> {
    let n = params.shape.iterations;
    if capture.dual.len() != n || capture.primal.len() != n {
        return Err(LearnError::Capture(format!("capture holds {} iterations, network has {n}", capture.dual.len())));
    }
    let s = params.shape.state;
    let (n1, n2, m1, m2) = (geo.n1(), geo.n2(), geo.m1(), geo.m2());
    if grad_out.width != n1 || grad_out.height != n2 {
        return Err(LearnError::Shape("output gradient does not match the image grid".into()));
    }
    let mut grads = params.zeros_like();
    let mut df: Vec<Field> = (0..s).map(|_| Field::zeros(n1, n2)).collect();
    df[0] = grad_out.clone();
    let mut dh: Vec<Field> = (0..s).map(|_| Field::zeros(m1, m2)).collect();
    for i in (0..n).rev() {
        let (gp, dpin) = resnet_backward(&params.primal[i], &capture.primal[i], &df, features.map(|x| &x.primal[i]))?;
        grads.primal[i] = gp;
        df = dpin[..s].to_vec();
        let dbp = geo.backproject_transpose_raw(&dpin[s].data);
        for (a, b) in dh[0].data.iter_mut().zip(&dbp) {
            *a += b;
        }
        let (gd, ddin) = resnet_backward(&params.dual[i], &capture.dual[i], &dh, features.map(|x| &x.dual[i]))?;
        grads.dual[i] = gd;
        dh = ddin[..s].to_vec();
        let drf = geo.transpose_raw(&ddin[s].data);
        for (a, b) in df[0].data.iter_mut().zip(&drf) {
            *a += b;
        }
    }
    Ok(grads)
}
