//! Multinomial logistic regression by full-batch gradient descent.
//!
//! Fixed training recipe so scores are reproducible across implementations:
//! inputs standardized with train-split statistics, weights and biases start
//! at zero, learning rate 0.1, 500 epochs, L2 penalty 1e-4 on the weights
//! (never the biases). Prediction ties resolve to the lowest class index.

#[derive(Debug, Clone, Copy)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

/// Per-feature affine map fitted on the training split. Features with zero
/// spread map to zero so dead inputs cannot influence training.
#[derive(Debug, Clone)]
pub struct Standardizer {
    means: Vec<f64>,
    inv_stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &[f64], d: usize) -> Standardizer {
        let n = features.len() / d;
        let mut means = vec![0.0f64; d];
        for row in features.chunks_exact(d) {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut vars = vec![0.0f64; d];
        for row in features.chunks_exact(d) {
            for j in 0..d {
                let diff = row[j] - means[j];
                vars[j] += diff * diff;
            }
        }
        let inv_stds = vars
            .iter()
            .map(|&v| {
                let std = (v / n as f64).sqrt();
                if std > 0.0 {
                    1.0 / std
                } else {
                    0.0
                }
            })
            .collect();
        Standardizer { means, inv_stds }
    }

    pub fn transform(&self, features: &[f64]) -> Vec<f64> {
        let d = self.means.len();
        features
            .chunks_exact(d)
            .flat_map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| (v - self.means[j]) * self.inv_stds[j])
                    .collect::<Vec<f64>>()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct LogisticModel {
    weights: Vec<f64>, // d × c, row-major by feature
    bias: Vec<f64>,    // c
    d: usize,
    classes: usize,
}

impl LogisticModel {
    /// `features` is n×d row-major and already standardized.
    pub fn fit(features: &[f64], d: usize, labels: &[u32], classes: usize, cfg: LogRegConfig) -> Self {
        assert!(classes >= 1);
        let n = labels.len();
        assert_eq!(features.len(), n * d);
        let mut weights = vec![0.0f64; d * classes];
        let mut bias = vec![0.0f64; classes];
        let mut probs = vec![0.0f64; n * classes];

        for _ in 0..cfg.epochs {
            // Forward: stable softmax per row.
            for (row_idx, row) in features.chunks_exact(d).enumerate() {
                let logits = &mut probs[row_idx * classes..(row_idx + 1) * classes];
                for (c, logit) in logits.iter_mut().enumerate() {
                    let mut acc = bias[c];
                    for (j, &x) in row.iter().enumerate() {
                        acc += x * weights[j * classes + c];
                    }
                    *logit = acc;
                }
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for logit in logits.iter_mut() {
                    *logit = (*logit - max).exp();
                    total += *logit;
                }
                for logit in logits.iter_mut() {
                    *logit /= total;
                }
            }
            // probs now holds p - y after subtracting the one-hot labels.
            for (row_idx, &label) in labels.iter().enumerate() {
                probs[row_idx * classes + label as usize] -= 1.0;
            }
            let scale = cfg.learning_rate / n as f64;
            for (row_idx, row) in features.chunks_exact(d).enumerate() {
                let delta = &probs[row_idx * classes..(row_idx + 1) * classes];
                for (j, &x) in row.iter().enumerate() {
                    if x != 0.0 {
                        let w = &mut weights[j * classes..(j + 1) * classes];
                        for (c, dv) in delta.iter().enumerate() {
                            w[c] -= scale * x * dv;
                        }
                    }
                }
                for (c, dv) in delta.iter().enumerate() {
                    bias[c] -= scale * dv;
                }
            }
            if cfg.l2 > 0.0 {
                let decay = cfg.learning_rate * cfg.l2;
                for w in &mut weights {
                    *w -= decay * *w;
                }
            }
        }
        LogisticModel {
            weights,
            bias,
            d,
            classes,
        }
    }

    pub fn predict(&self, row: &[f64]) -> u32 {
        debug_assert_eq!(row.len(), self.d);
        let mut best = 0usize;
        let mut best_logit = f64::NEG_INFINITY;
        for c in 0..self.classes {
            let mut acc = self.bias[c];
            for (j, &x) in row.iter().enumerate() {
                acc += x * self.weights[j * self.classes + c];
            }
            if acc > best_logit {
                best_logit = acc;
                best = c;
            }
        }
        best as u32
    }

    pub fn accuracy(&self, features: &[f64], labels: &[u32]) -> f64 {
        let mut correct = 0usize;
        for (row, &label) in features.chunks_exact(self.d).zip(labels) {
            if self.predict(row) == label {
                correct += 1;
            }
        }
        correct as f64 / labels.len() as f64
    }
}
