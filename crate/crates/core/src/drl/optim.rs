use crate::netmodel::OptimizerKind;

use super::mlp::{Grads, Mlp};

/// Gradient-descent optimiser state for one network.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64, t: u64, m: Vec<Vec<f64>>, v: Vec<Vec<f64>> },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, net: &Mlp) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => {
                let zeros: Vec<Vec<f64>> = net.param_slices().iter().map(|s| vec![0.0; s.len()]).collect();
                Optimizer::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: zeros.clone(), v: zeros }
            }
        }
    }

    /// One descent step on `net` along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) {
        let g = grads.slices();
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in net.param_slices_mut().into_iter().zip(g) {
                    for (p, &g) in p.iter_mut().zip(g) {
                        *p -= *lr * g;
                    }
                }
            }
            Optimizer::Adam { lr, beta1, beta2, eps, t, m, v } => {
                *t += 1;
                let c1 = 1.0 - beta1.powi(*t as i32);
                let c2 = 1.0 - beta2.powi(*t as i32);
                for (((p, g), m), v) in net.param_slices_mut().into_iter().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                    for i in 0..p.len() {
                        m[i] = *beta1 * m[i] + (1.0 - *beta1) * g[i];
                        v[i] = *beta2 * v[i] + (1.0 - *beta2) * g[i] * g[i];
                        p[i] -= *lr * (m[i] / c1) / ((v[i] / c2).sqrt() + *eps);
                    }
                }
            }
        }
    }
}
