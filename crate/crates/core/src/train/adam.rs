use crate::grad::GradientMap;
use crate::model::{Block, ParameterStore};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Dense Adam over every parameter block. Rows absent from a gradient map
/// are updated with a zero gradient, so their moments keep decaying.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(store: &ParameterStore, lr: f64) -> Self {
        let zeros = || Block::ALL.iter().map(|&b| vec![0.0; store.block_len(b)]).collect();
        Adam {
            lr,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, store: &mut ParameterStore, grads: &GradientMap) {
        self.step += 1;
        let bias1 = 1.0 - BETA1.powi(self.step as i32);
        let bias2 = 1.0 - BETA2.powi(self.step as i32);
        for (i, &block) in Block::ALL.iter().enumerate() {
            let row_len = store.row_len(block);
            let mut g = vec![0.0; store.block_len(block)];
            for (slot, grad) in grads.iter().filter(|(s, _)| s.block == block) {
                g[slot.row * row_len..(slot.row + 1) * row_len].copy_from_slice(grad);
            }
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (((p, g), m), v) in store.block_mut(block).iter_mut().zip(&g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + EPS);
            }
        }
    }
}
