//! Linear models: one-vs-rest perceptron, one-vs-rest hinge-loss SVM and
//! ordinary least squares.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptronParams {
    pub learning_rate: f64,
    pub max_epochs: usize,
}

impl Default for PerceptronParams {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            max_epochs: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearRegressionParams {
    /// Added to the Gram diagonal when it is numerically singular.
    pub ridge_jitter: f64,
}

impl Default for LinearRegressionParams {
    fn default() -> Self {
        Self { ridge_jitter: 1e-8 }
    }
}

/// One weight vector and bias per class; predicts the highest score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsRest {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl OneVsRest {
    pub fn decision(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| dot(w, x) + b)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        crate::pdfmodel::argmax(&self.decision(x))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign_for(label: usize, class: usize) -> f64 {
    if label == class {
        1.0
    } else {
        -1.0
    }
}

/// Rosenblatt updates on shuffled rows, one binary problem per class,
/// stopping a class early once an epoch passes without mistakes.
pub fn fit_perceptron(x: &[Vec<f64>], y: &[usize], n_classes: usize, p: &PerceptronParams, rng: &mut Rng) -> OneVsRest {
    let d = x.first().map_or(0, Vec::len);
    let mut weights = Vec::with_capacity(n_classes);
    let mut bias = Vec::with_capacity(n_classes);
    let mut order: Vec<usize> = (0..x.len()).collect();

    for c in 0..n_classes {
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        for _ in 0..p.max_epochs {
            order.shuffle(rng);
            let mut mistakes = 0;
            for &i in &order {
                let t = sign_for(y[i], c);
                if t * (dot(&w, &x[i]) + b) <= 0.0 {
                    mistakes += 1;
                    for (wj, xj) in w.iter_mut().zip(&x[i]) {
                        *wj += p.learning_rate * t * xj;
                    }
                    b += p.learning_rate * t;
                }
            }
            if mistakes == 0 {
                break;
            }
        }
        weights.push(w);
        bias.push(b);
    }
    OneVsRest { weights, bias }
}

/// Pegasos-style stochastic subgradient descent on the L2-regularized hinge
/// loss, one binary problem per class. The bias is an extra constant input.
pub fn fit_linear_svm(x: &[Vec<f64>], y: &[usize], n_classes: usize, p: &SvmParams, rng: &mut Rng) -> OneVsRest {
    let d = x.first().map_or(0, Vec::len);
    let mut weights = Vec::with_capacity(n_classes);
    let mut bias = Vec::with_capacity(n_classes);
    let mut order: Vec<usize> = (0..x.len()).collect();

    for c in 0..n_classes {
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut step = 0u64;
        for _ in 0..p.epochs {
            order.shuffle(rng);
            for &i in &order {
                step += 1;
                let eta = 1.0 / (p.lambda * step as f64);
                let t = sign_for(y[i], c);
                let margin = t * (dot(&w, &x[i]) + b);
                let shrink = 1.0 - eta * p.lambda;
                w.iter_mut().for_each(|wj| *wj *= shrink);
                b *= shrink;
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(&x[i]) {
                        *wj += eta * t * xj;
                    }
                    b += eta * t;
                }
            }
        }
        weights.push(w);
        bias.push(b);
    }
    OneVsRest { weights, bias }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        dot(&self.coef, x) + self.intercept
    }
}

/// Least squares with intercept via the normal equations. A numerically
/// singular Gram matrix is retried with `ridge_jitter` on the diagonal.
pub fn fit_linear_regression(x: &[Vec<f64>], y: &[f64], p: &LinearRegressionParams) -> Result<LinearFit> {
    let d = x.first().map_or(0, Vec::len);
    let m = d + 1;
    // Gram matrix of [x, 1]
    let mut gram = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for (row, &t) in x.iter().zip(y) {
        for a in 0..m {
            let va = if a < d { row[a] } else { 1.0 };
            rhs[a] += va * t;
            for b in a..m {
                let vb = if b < d { row[b] } else { 1.0 };
                gram[a][b] += va * vb;
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
    }

    let beta = match solve(gram.clone(), rhs.clone(), true) {
        Some(beta) => beta,
        None => {
            for (i, row) in gram.iter_mut().enumerate() {
                row[i] += p.ridge_jitter;
            }
            solve(gram, rhs, false).ok_or_else(|| Error::invalid("normal equations are singular even with ridge jitter"))?
        }
    };
    Ok(LinearFit {
        intercept: beta[d],
        coef: beta[..d].to_vec(),
    })
}

/// Gaussian elimination with partial pivoting. With `strict`, pivots
/// smaller than 1e-12 of the largest diagonal entry count as singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, strict: bool) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(1.0);
    let tol = if strict { 1e-12 * scale } else { 0.0 };
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= tol {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut out = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * out[c]).sum();
        out[r] = (b[r] - s) / a[r][r];
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn separable_2d() -> (Vec<Vec<f64>>, Vec<usize>) {
        // classes split by the line x0 + x1 = 1
        let x = vec![
            vec![0.0, 0.0],
            vec![0.2, 0.3],
            vec![0.5, 0.1],
            vec![0.1, 0.6],
            vec![1.0, 1.0],
            vec![0.9, 0.6],
            vec![0.4, 1.2],
            vec![1.5, 0.2],
        ];
        (x, vec![0, 0, 0, 0, 1, 1, 1, 1])
    }

    #[test]
    fn perceptron_separates_toy_data() {
        let (x, y) = separable_2d();
        let m = fit_perceptron(&x, &y, 2, &PerceptronParams::default(), &mut seeded(0));
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(m.predict(row), label);
        }
    }

    #[test]
    fn svm_separates_toy_data() {
        let (x, y) = separable_2d();
        let m = fit_linear_svm(&x, &y, 2, &SvmParams::default(), &mut seeded(0));
        let correct = x.iter().zip(&y).filter(|(r, &l)| m.predict(r) == l).count();
        assert_eq!(correct, 8);
    }

    #[test]
    fn constant_target_is_intercept_only() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64 % 7.0]).collect();
        let y = vec![0.5; 10];
        let fit = fit_linear_regression(&x, &y, &LinearRegressionParams::default()).unwrap();
        for row in &x {
            assert!((fit.predict(row) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicated_column_falls_back_to_ridge() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| 0.1 * i as f64).collect();
        let fit = fit_linear_regression(&x, &y, &LinearRegressionParams::default()).unwrap();
        for (row, t) in x.iter().zip(&y) {
            assert!((fit.predict(row) - t).abs() < 1e-6);
        }
    }

    proptest::proptest! {
        #[test]
        fn normal_equations_residual(seed in 0u64..500) {
            use rand::Rng as _;
            let mut rng = seeded(seed);
            let x: Vec<Vec<f64>> = (0..40).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
            let y: Vec<f64> = x.iter().map(|r| 0.3 * r[0] - 0.2 * r[2] + 0.1 + 0.05 * rng.random::<f64>()).collect();
            let fit = fit_linear_regression(&x, &y, &LinearRegressionParams::default()).unwrap();
            // X^T (X beta - y) for the augmented design
            let mut grad = vec![0.0; 5];
            for (r, t) in x.iter().zip(&y) {
                let e = fit.predict(r) - t;
                for j in 0..4 {
                    grad[j] += r[j] * e;
                }
                grad[4] += e;
            }
            proptest::prop_assert!(grad.iter().all(|g| g.abs() <= 1e-6), "{grad:?}");
        }
    }
}
