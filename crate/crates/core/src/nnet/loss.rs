use serde::{Deserialize, Serialize};

/// Loss constants and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Problems per parameter update.
    pub batch_size: usize,
    /// Fraction of problems held out for model selection.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            beta: 0.08,
            delta: 1.0,
            s_lo: 0.05,
            s_hi: 0.17,
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 1,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub l1: f64,
    pub l2: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Emphasis on small sizes; 1/2 at `s_lo`.
pub fn weight_low(s: f64, cfg: &TrainConfig) -> f64 {
    sigmoid(-(s - cfg.s_lo) / cfg.beta)
}

/// Emphasis on large sizes; 1/2 at `s_hi`.
pub fn weight_high(s: f64, cfg: &TrainConfig) -> f64 {
    sigmoid((s - cfg.s_hi) / cfg.beta)
}

/// Unnormalized importance of a predicted size: high near 0 and 1, low in
/// the band between the thresholds. Returns the value and its derivative.
fn importance(s: f64, cfg: &TrainConfig) -> (f64, f64) {
    let lo = weight_low(s, cfg);
    let hi = weight_high(s, cfg);
    (lo + hi, (-lo * (1.0 - lo) + hi * (1.0 - hi)) / cfg.beta)
}

/// Per-node weights scaled to mean 1.
pub fn importance_weights(pred: &[f64], cfg: &TrainConfig) -> Vec<f64> {
    let a: Vec<f64> = pred.iter().map(|&s| importance(s, cfg).0).collect();
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    a.iter().map(|x| x / mean).collect()
}

/// Loss and its gradient with respect to the predictions.
pub fn loss_with_grad(pred: &[f64], target: &[f64], cfg: &TrainConfig) -> (LossParts, Vec<f64>) {
    assert_eq!(pred.len(), target.len(), "prediction and reference lengths differ");
    let n = pred.len() as f64;
    let mut l1 = 0.0;
    let mut grad = vec![0.0; pred.len()];
    let (mut s_num, mut s_den) = (0.0, 0.0);
    let imp: Vec<(f64, f64)> = pred.iter().map(|&s| importance(s, cfg)).collect();
    for (p, (&s, &t)) in pred.iter().zip(target).enumerate() {
        let d = s - t;
        if d.abs() < cfg.delta {
            l1 += 0.5 * d * d;
            grad[p] = d / n;
        } else {
            l1 += cfg.delta * (d.abs() - 0.5 * cfg.delta);
            grad[p] = cfg.delta * d.signum() / n;
        }
        s_num += imp[p].0 * d * d;
        s_den += imp[p].0;
    }
    l1 /= n;
    let l2 = s_num / s_den;
    for (p, (&s, &t)) in pred.iter().zip(target).enumerate() {
        let d = s - t;
        let (a, da) = imp[p];
        grad[p] += cfg.alpha * (2.0 * a * d + da * (d * d - l2)) / s_den;
    }
    (LossParts { total: l1 + cfg.alpha * l2, l1, l2 }, grad)
}

pub fn loss(pred: &[f64], target: &[f64], cfg: &TrainConfig) -> LossParts {
    loss_with_grad(pred, target, cfg).0
}
