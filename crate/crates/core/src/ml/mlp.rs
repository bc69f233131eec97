//! One-hidden-layer perceptron: logistic hidden units, softmax output,
//! cross-entropy loss with an L2 penalty on the weights, trained by plain
//! mini-batch gradient descent.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    /// Rows per gradient step; `0` means the whole training set.
    pub batch_size: usize,
    /// Initial weights are uniform in `[-init_range, init_range]`.
    pub init_range: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 15,
            learning_rate: 0.001,
            l2: 1e-5,
            max_epochs: 200,
            batch_size: 1,
            init_range: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// hidden × inputs
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    /// classes × hidden
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    pub l2: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct Grads {
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
}

impl Mlp {
    pub fn init(n_inputs: usize, n_classes: usize, p: &MlpParams, rng: &mut Rng) -> Self {
        let r = p.init_range;
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-r..=r)).collect() };
        let w1 = (0..p.hidden).map(|_| draw(n_inputs)).collect();
        let b1 = draw(p.hidden);
        let w2 = (0..n_classes).map(|_| draw(p.hidden)).collect();
        let b2 = draw(n_classes);
        Self { w1, b1, w2, b2, l2: p.l2 }
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(w, b)| sigmoid(super::linear::dot(w, x) + b))
            .collect()
    }

    fn softmax_out(&self, h: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = self
            .w2
            .iter()
            .zip(&self.b2)
            .map(|(w, b)| super::linear::dot(w, h) + b)
            .collect();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.softmax_out(&self.hidden(x))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        crate::pdfmodel::argmax(&self.predict_proba(x))
    }

    fn weight_norm_sq(&self) -> f64 {
        self.w1
            .iter()
            .chain(&self.w2)
            .flatten()
            .map(|w| w * w)
            .sum()
    }

    /// Mean cross-entropy over `rows` plus `0.5·l2·‖W‖² / |rows|`.
    pub fn objective(&self, x: &[Vec<f64>], y: &[usize], rows: &[usize]) -> f64 {
        let n = rows.len() as f64;
        let ce: f64 = rows
            .iter()
            .map(|&i| -self.predict_proba(&x[i])[y[i]].max(1e-300).ln())
            .sum();
        ce / n + 0.5 * self.l2 * self.weight_norm_sq() / n
    }

    fn gradients(&self, x: &[Vec<f64>], y: &[usize], rows: &[usize]) -> Grads {
        let n_in = self.w1.first().map_or(0, Vec::len);
        let nh = self.b1.len();
        let nc = self.b2.len();
        let mut g = Grads {
            w1: vec![vec![0.0; n_in]; nh],
            b1: vec![0.0; nh],
            w2: vec![vec![0.0; nh]; nc],
            b2: vec![0.0; nc],
        };
        for &i in rows {
            let h = self.hidden(&x[i]);
            let mut delta_out = self.softmax_out(&h);
            delta_out[y[i]] -= 1.0;
            for c in 0..nc {
                g.b2[c] += delta_out[c];
                for (gw, hj) in g.w2[c].iter_mut().zip(&h) {
                    *gw += delta_out[c] * hj;
                }
            }
            for j in 0..nh {
                let back: f64 = (0..nc).map(|c| delta_out[c] * self.w2[c][j]).sum();
                let dz = back * h[j] * (1.0 - h[j]);
                g.b1[j] += dz;
                for (gw, xv) in g.w1[j].iter_mut().zip(&x[i]) {
                    *gw += dz * xv;
                }
            }
        }
        let n = rows.len() as f64;
        let scale = |v: &mut Vec<f64>| v.iter_mut().for_each(|e| *e /= n);
        g.w1.iter_mut().for_each(scale);
        g.w2.iter_mut().for_each(scale);
        scale(&mut g.b1);
        scale(&mut g.b2);
        for (gw, w) in g.w1.iter_mut().flatten().zip(self.w1.iter().flatten()) {
            *gw += self.l2 * w / n;
        }
        for (gw, w) in g.w2.iter_mut().flatten().zip(self.w2.iter().flatten()) {
            *gw += self.l2 * w / n;
        }
        g
    }

    fn step(&mut self, g: &Grads, lr: f64) {
        for (w, d) in self.w1.iter_mut().flatten().zip(g.w1.iter().flatten()) {
            *w -= lr * d;
        }
        for (w, d) in self.w2.iter_mut().flatten().zip(g.w2.iter().flatten()) {
            *w -= lr * d;
        }
        for (w, d) in self.b1.iter_mut().zip(&g.b1) {
            *w -= lr * d;
        }
        for (w, d) in self.b2.iter_mut().zip(&g.b2) {
            *w -= lr * d;
        }
    }
}

/// Trains from seeded initial weights. Returns the network and the
/// full-data objective after every epoch.
pub fn fit_mlp(x: &[Vec<f64>], y: &[usize], n_classes: usize, p: &MlpParams, rng: &mut Rng) -> (Mlp, Vec<f64>) {
    let n_in = x.first().map_or(0, Vec::len);
    let mut net = Mlp::init(n_in, n_classes, p, rng);
    let all: Vec<usize> = (0..x.len()).collect();
    let batch = if p.batch_size == 0 { x.len() } else { p.batch_size.min(x.len()) };
    let mut order = all.clone();
    let mut history = Vec::with_capacity(p.max_epochs);
    for _ in 0..p.max_epochs {
        if batch < x.len() {
            order.shuffle(rng);
        }
        for chunk in order.chunks(batch) {
            let g = net.gradients(x, y, chunk);
            net.step(&g, p.learning_rate);
        }
        history.push(net.objective(x, y, &all));
    }
    (net, history)
}
