use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// First-order optimiser over a flat parameter vector.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64, t: u64, m: Vec<f64>, v: Vec<f64> },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, len: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::Sgd { lr },
            OptimizerKind::Adam => {
                Self::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; len], v: vec![0.0; len] }
            }
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len(), "parameter and gradient lengths");
        match self {
            Self::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= *lr * g;
                }
            }
            Self::Adam { lr, beta1, beta2, eps, t, m, v } => {
                *t += 1;
                let c1 = 1.0 - beta1.powi(*t as i32);
                let c2 = 1.0 - beta2.powi(*t as i32);
                for i in 0..params.len() {
                    m[i] = *beta1 * m[i] + (1.0 - *beta1) * grads[i];
                    v[i] = *beta2 * v[i] + (1.0 - *beta2) * grads[i] * grads[i];
                    params[i] -= *lr * (m[i] / c1) / ((v[i] / c2).sqrt() + *eps);
                }
            }
        }
    }
}
