use std::collections::HashMap;

use super::config::Optimizer;
use crate::policy::{Grad, PolicyParams};

/// Moment estimates for Adam; rows are created on first touch.
#[derive(Debug, Clone, Default)]
struct Moments {
    rows: HashMap<usize, Vec<f64>>,
    embeddings: Vec<f64>,
    pointers: Vec<f64>,
    value: HashMap<usize, f64>,
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: Optimizer,
    steps: u64,
    m: Moments,
    v: Moments,
}

fn adam_update(m: &mut f64, v: &mut f64, g: f64, b1: f64, b2: f64, c1: f64, c2: f64, eps: f64) -> f64 {
    *m = b1 * *m + (1.0 - b1) * g;
    *v = b2 * *v + (1.0 - b2) * g * g;
    (*m / c1) / ((*v / c2).sqrt() + eps)
}

impl OptimizerState {
    pub fn new(kind: Optimizer) -> Self {
        Self {
            kind,
            steps: 0,
            m: Moments::default(),
            v: Moments::default(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One descent step along `grad` (a loss gradient).
    pub fn step(&mut self, params: &mut PolicyParams, grad: &Grad, lr: f64) {
        self.steps += 1;
        let Optimizer::Adam { beta1, beta2, eps } = self.kind else {
            params.apply_step(grad, lr);
            return;
        };
        let t = self.steps as i32;
        let (c1, c2) = (1.0 - beta1.powi(t), 1.0 - beta2.powi(t));
        let upd = |m: &mut f64, v: &mut f64, g: f64| adam_update(m, v, g, beta1, beta2, c1, c2, eps);
        let mut dir = Grad::zeros(params);
        for (&r, g) in &grad.rows {
            let m = self.m.rows.entry(r).or_insert_with(|| vec![0.0; g.len()]);
            let v = self.v.rows.entry(r).or_insert_with(|| vec![0.0; g.len()]);
            let d = g
                .iter()
                .enumerate()
                .map(|(i, &gi)| upd(&mut m[i], &mut v[i], gi))
                .collect();
            dir.rows.insert(r, d);
        }
        for (src, (m, v), out) in [
            (&grad.embeddings, (&mut self.m.embeddings, &mut self.v.embeddings), &mut dir.embeddings),
            (&grad.pointers, (&mut self.m.pointers, &mut self.v.pointers), &mut dir.pointers),
        ] {
            m.resize(src.len(), 0.0);
            v.resize(src.len(), 0.0);
            for i in 0..src.len() {
                out[i] = upd(&mut m[i], &mut v[i], src[i]);
            }
        }
        for (&r, &g) in &grad.value {
            let m = self.m.value.entry(r).or_insert(0.0);
            let v = self.v.value.entry(r).or_insert(0.0);
            dir.value.insert(r, upd(m, v, g));
        }
        params.apply_step(&dir, lr);
    }
}

/// Rescales `grad` so its norm is at most `max_norm`; 0 disables.
pub fn clip_grad_norm(grad: &mut Grad, max_norm: f64) -> f64 {
    let norm = grad.sq_norm().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        grad.scale(max_norm / norm);
    }
    norm
}
