use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Rng;

use super::graph::GraphBatch;
use super::loss::{loss_with_grad, LossParts, TrainConfig};
use super::net::{NetConfig, NetParams};
use super::NnetError;

/// One training problem: graph plus reference normalized sizes per node.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub graph: GraphBatch,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the lowest validation loss seen.
    pub params: NetParams,
    /// Training-set loss before the first update.
    pub initial_loss: f64,
    pub curve: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Loss on one problem and its gradient, flattened like `NetParams::flat`.
pub fn gradients(params: &NetParams, g: &GraphBatch, target: &[f64], cfg: &TrainConfig) -> Result<(LossParts, Vec<f64>), NnetError> {
    if target.len() != g.len() {
        return Err(NnetError::DimensionMismatch(format!("{} targets for {} nodes", target.len(), g.len())));
    }
    let mut parts = LossParts::default();
    let (_, grads) = params.backward(g, |out| {
        let (p, d) = loss_with_grad(out, target, cfg);
        parts = p;
        d
    })?;
    let mut flat = Vec::with_capacity(params.count());
    for l in &grads {
        for r in 0..l.w.nrows() {
            flat.extend(l.w.row(r).iter());
        }
        flat.extend(l.b.iter());
    }
    if !parts.total.is_finite() {
        return Err(NnetError::TrainingDiverged("non-finite loss".into()));
    }
    Ok((parts, flat))
}

fn mean_loss(params: &NetParams, set: &[&TrainSample], cfg: &TrainConfig) -> Result<f64, NnetError> {
    let losses: Vec<f64> = set
        .par_iter()
        .map(|s| params.forward(&s.graph).map(|o| super::loss(&o, &s.target, cfg).total))
        .collect::<Result<_, _>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, x: &mut [f64], g: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g[i] * g[i];
            x[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Adam over shuffled mini-batches of problems. The output bias starts at
/// the mean target, which also becomes the isolated-node fallback.
pub fn train(data: &[TrainSample], net: NetConfig, cfg: &TrainConfig, rng: &mut Rng) -> Result<TrainOutcome, NnetError> {
    if data.is_empty() {
        return Err(NnetError::EmptyDataset);
    }
    for s in data {
        if s.target.len() != s.graph.len() {
            return Err(NnetError::DimensionMismatch(format!("{} targets for {} nodes", s.target.len(), s.graph.len())));
        }
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let n_val = if data.len() < 2 { 0 } else { ((data.len() as f64 * cfg.validation_fraction).round() as usize).min(data.len() - 1) };
    let val: Vec<&TrainSample> = order[..n_val].iter().map(|&i| &data[i]).collect();
    let mut tr: Vec<&TrainSample> = order[n_val..].iter().map(|&i| &data[i]).collect();
    let select: Vec<&TrainSample> = if val.is_empty() { tr.clone() } else { val };

    let mut params = NetParams::init(net, rng);
    let (sum, count) = tr.iter().fold((0.0, 0usize), |(s, c), t| (s + t.target.iter().sum::<f64>(), c + t.target.len()));
    let mean_target = sum / count.max(1) as f64;
    params.fallback = mean_target.clamp(0.0, 1.0);
    params.layers.last_mut().expect("network has layers").b[0] = mean_target;

    let initial_loss = mean_loss(&params, &tr, cfg)?;
    let mut best = (mean_loss(&params, &select, cfg)?, params.clone(), 0);
    let mut flat = params.flat();
    let mut adam = Adam { m: vec![0.0; flat.len()], v: vec![0.0; flat.len()], t: 0 };
    let batch = cfg.batch_size.max(1);
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        tr.shuffle(rng);
        let mut epoch_loss = 0.0;
        for chunk in tr.chunks(batch) {
            let results: Vec<(LossParts, Vec<f64>)> =
                chunk.par_iter().map(|s| gradients(&params, &s.graph, &s.target, cfg)).collect::<Result<_, _>>()?;
            // fixed-order reduction
            let mut g = vec![0.0; flat.len()];
            for (parts, gi) in &results {
                epoch_loss += parts.total;
                for (a, b) in g.iter_mut().zip(gi) {
                    *a += b / chunk.len() as f64;
                }
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(NnetError::TrainingDiverged(format!("non-finite gradient in epoch {epoch}")));
            }
            adam.step(&mut flat, &g, cfg.learning_rate);
            params.set_flat(&flat);
        }
        let train_loss = epoch_loss / tr.len() as f64;
        let val_loss = mean_loss(&params, &select, cfg)?;
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
        curve.push(EpochStats { epoch, train_loss, val_loss });
        if val_loss < best.0 {
            best = (val_loss, params.clone(), epoch);
        }
    }
    Ok(TrainOutcome { params: best.1, initial_loss, curve, best_epoch: best.2 })
}

pub fn write_curve(curve: &[EpochStats], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in curve {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
