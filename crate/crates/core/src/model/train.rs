use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{softmax_cross_entropy, Network, NetworkConfig, Phase};
use crate::{Error, Mode, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.batch_size > 0
            && self.epochs > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("invalid training config {self:?}")))
        }
    }

    /// Log a warning for every hyperparameter that departs from the reference
    /// setup (the seed is free).
    pub fn warn_overrides(&self) {
        let d = TrainConfig::default();
        let fields = [
            ("learning_rate", self.learning_rate, d.learning_rate),
            ("beta1", self.beta1, d.beta1),
            ("beta2", self.beta2, d.beta2),
            ("epsilon", self.epsilon, d.epsilon),
            ("batch_size", self.batch_size as f64, d.batch_size as f64),
            ("epochs", self.epochs as f64, d.epochs as f64),
        ];
        for (name, v, reference) in fields {
            if v != reference {
                log::warn!("training {name} = {v} overrides the reference value {reference}");
            }
        }
    }
}

struct Adam {
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    t: i32,
}

impl Adam {
    fn new(net: &Network<f32>) -> Self {
        let zeros: Vec<Vec<f32>> = net.params().iter().map(|p| vec![0.0; p.data.len()]).collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, net: &mut Network<f32>, grads: &[Vec<f32>], cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1 as f32, cfg.beta2 as f32);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let (lr, eps) = (cfg.learning_rate as f32, cfg.epsilon as f32);
        for (i, p) in net.params_mut().iter_mut().enumerate() {
            let (m, v, g) = (&mut self.m[i], &mut self.v[i], &grads[i]);
            for j in 0..p.data.len() {
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                p.data[j] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

/// Trained network plus the mean training loss of every epoch.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub network: Network<f32>,
    pub loss_curve: Vec<f64>,
}

/// Train a fresh network on `(input, label)` pairs with Adam and
/// cross-entropy. Deterministic for fixed configs.
pub fn train(net_cfg: &NetworkConfig, cfg: &TrainConfig, data: &[(Vec<f32>, usize)]) -> Result<TrainedModel> {
    cfg.validate()?;
    let mut net = Network::<f32>::new(net_cfg)?;
    let classes = net_cfg.classes;
    for c in 0..classes {
        if !data.iter().any(|(_, y)| *y == c) {
            let name = Mode::from_index(c).map_or("unknown", Mode::name);
            return Err(Error::MissingClass(name));
        }
    }
    if let Some((x, _)) = data.iter().find(|(x, _)| x.len() != net_cfg.input_len) {
        return Err(Error::InvalidParam(format!("input of length {} for a network expecting {}", x.len(), net_cfg.input_len)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(&net);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let len = net_cfg.input_len;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut x = Vec::with_capacity(chunk.len() * len);
            let mut y = Vec::with_capacity(chunk.len());
            for &i in chunk {
                x.extend_from_slice(&data[i].0);
                y.push(data[i].1);
            }
            let (logits, trace) = net.forward(&x, chunk.len(), Phase::Train);
            let (loss, dlogits) = softmax_cross_entropy(&logits, &y, classes);
            let grads = net.backward(&trace, &dlogits);
            net.update_running_stats(&trace.batch_stats);
            adam.step(&mut net, &grads, cfg);
            total += loss as f64 * chunk.len() as f64;
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::InvalidParam(format!("training loss diverged at epoch {epoch}")));
        }
        log::debug!("epoch {epoch}: loss {mean:.5}");
        loss_curve.push(mean);
    }
    Ok(TrainedModel { network: net, loss_curve })
}

/// Class scores for each input row, evaluated with running statistics.
pub fn predict_logits(net: &Network<f32>, inputs: &[Vec<f32>]) -> Vec<Vec<f32>> {
    let classes = net.config().classes;
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(64) {
        let x: Vec<f32> = chunk.iter().flat_map(|r| r.iter().copied()).collect();
        let (logits, _) = net.forward(&x, chunk.len(), Phase::Eval);
        out.extend(logits.chunks(classes).map(|r| r.to_vec()));
    }
    out
}

pub fn predict(net: &Network<f32>, inputs: &[Vec<f32>]) -> Vec<usize> {
    predict_logits(net, inputs)
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f32::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                .0
        })
        .collect()
}

/// Training loss of a network in evaluation phase, for before/after checks.
pub fn mean_loss(net: &Network<f32>, data: &[(Vec<f32>, usize)]) -> f64 {
    let inputs: Vec<Vec<f32>> = data.iter().map(|(x, _)| x.clone()).collect();
    let labels: Vec<usize> = data.iter().map(|(_, y)| *y).collect();
    let logits: Vec<f32> = predict_logits(net, &inputs).concat();
    softmax_cross_entropy(&logits, &labels, net.config().classes).0 as f64
}
