//! Fully convolutional 1-D classifier: blocks of conv → batch-norm → ReLU →
//! max-pool, then global average pooling and a linear map to class logits.
//!
//! Activations are stored channel-major as `[C][B·L]` so every convolution is
//! one im2col GEMM over the whole batch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scalar::{matmul, Scalar};
use crate::{Error, Result};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub input_len: usize,
    pub first_kernel: usize,
    pub channels: Vec<usize>,
    pub pools: Vec<usize>,
    pub classes: usize,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            input_len: 512,
            first_kernel: 3,
            channels: vec![128, 128, 256, 512],
            pools: vec![4, 4, 4, 2],
            classes: 3,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    /// Small channel plan used by gradient checks and quick tests.
    pub fn reduced() -> Self {
        NetworkConfig {
            channels: vec![8, 8, 16, 32],
            ..Self::default()
        }
    }

    /// No convolution blocks: global average of the input, then the linear map.
    pub fn linear_only() -> Self {
        NetworkConfig {
            channels: vec![],
            pools: vec![],
            ..Self::default()
        }
    }

    pub fn pool_product(&self) -> usize {
        self.pools.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.channels.len() != self.pools.len() {
            return bad(format!("{} channel entries but {} pool factors", self.channels.len(), self.pools.len()));
        }
        if ![3, 80].contains(&self.first_kernel) {
            return bad(format!("first_kernel must be 3 or 80, got {}", self.first_kernel));
        }
        if self.channels.contains(&0) || self.pools.contains(&0) {
            return bad("channels and pool factors must be positive".into());
        }
        if self.input_len == 0 || self.input_len % self.pool_product() != 0 {
            return bad(format!("pool product {} does not divide input_len {}", self.pool_product(), self.input_len));
        }
        if self.classes < 2 {
            return bad("need at least two classes".into());
        }
        Ok(())
    }

    fn kernel(&self, block: usize) -> usize {
        if block == 0 {
            self.first_kernel
        } else {
            3
        }
    }

    fn in_channels(&self, block: usize) -> usize {
        if block == 0 {
            1
        } else {
            self.channels[block - 1]
        }
    }

    fn feature_channels(&self) -> usize {
        self.channels.last().copied().unwrap_or(1)
    }
}

/// A named parameter or buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    fn filled(name: String, shape: Vec<usize>, v: S) -> Self {
        let n = shape.iter().product();
        Tensor { name, shape, data: vec![v; n] }
    }
}

#[derive(Debug, Clone)]
pub struct Network<S> {
    cfg: NetworkConfig,
    /// Per block `conv.weight [out,in,k]`, `conv.bias`, `bn.weight`, `bn.bias`;
    /// then `fc.weight [classes, C]`, `fc.bias`.
    params: Vec<Tensor<S>>,
    /// Per block `bn.running_mean`, `bn.running_var`.
    buffers: Vec<Tensor<S>>,
}

/// Whether batch-norm uses batch statistics or running estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

struct BlockTrace<S> {
    len: usize,
    col: Vec<S>,
    xhat: Vec<S>,
    inv_std: Vec<S>,
    act: Vec<S>,
    argmax: Vec<u32>,
}

/// Everything the backward pass needs from one forward pass.
pub struct Trace<S> {
    batch: usize,
    blocks: Vec<BlockTrace<S>>,
    gap: Vec<S>,
    final_len: usize,
    /// Batch mean and unbiased variance per block (training phase only).
    pub batch_stats: Vec<(Vec<S>, Vec<S>)>,
}

impl<S: Scalar> Trace<S> {
    /// ReLU on/off pattern and pooling winners; equal signatures mean the
    /// loss is locally smooth between the two parameter settings.
    pub fn signature(&self) -> Vec<u32> {
        let mut sig = Vec::new();
        for b in &self.blocks {
            let n = b.act.len() / b.inv_std.len();
            let m = b.argmax.len() / b.inv_std.len();
            for (o, &j) in b.argmax.iter().enumerate() {
                let on = b.act[(o / m) * n + j as usize] > S::zero();
                sig.push(2 * j + on as u32);
            }
        }
        sig
    }
}

impl<S: Scalar> Network<S> {
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut params = Vec::new();
        let mut buffers = Vec::new();
        let mut uniform = |name: String, shape: Vec<usize>, fan_in: usize| {
            let bound = (6.0 / fan_in as f64).sqrt();
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| S::of(rng.gen_range(-bound..bound))).collect();
            Tensor { name, shape, data }
        };
        for (i, &out) in cfg.channels.iter().enumerate() {
            let (cin, k) = (cfg.in_channels(i), cfg.kernel(i));
            params.push(uniform(format!("conv{i}.weight"), vec![out, cin, k], cin * k));
            params.push(Tensor::filled(format!("conv{i}.bias"), vec![out], S::zero()));
            params.push(Tensor::filled(format!("bn{i}.weight"), vec![out], S::one()));
            params.push(Tensor::filled(format!("bn{i}.bias"), vec![out], S::zero()));
            buffers.push(Tensor::filled(format!("bn{i}.running_mean"), vec![out], S::zero()));
            buffers.push(Tensor::filled(format!("bn{i}.running_var"), vec![out], S::one()));
        }
        let c = cfg.feature_channels();
        params.push(uniform("fc.weight".into(), vec![cfg.classes, c], c));
        params.push(Tensor::filled("fc.bias".into(), vec![cfg.classes], S::zero()));
        Ok(Network {
            cfg: cfg.clone(),
            params,
            buffers,
        })
    }

    /// Rebuild from stored tensors, checking names and shapes.
    pub fn from_tensors(cfg: &NetworkConfig, params: Vec<Tensor<S>>, buffers: Vec<Tensor<S>>) -> Result<Self> {
        let fresh = Network::<S>::new(cfg)?;
        let check = |want: &[Tensor<S>], got: &[Tensor<S>]| -> Result<()> {
            if want.len() != got.len() {
                return Err(Error::Checkpoint(format!("expected {} tensors, found {}", want.len(), got.len())));
            }
            for (w, g) in want.iter().zip(got) {
                if w.name != g.name || w.shape != g.shape || g.data.len() != w.data.len() {
                    return Err(Error::Checkpoint(format!("tensor {} {:?} does not match {} {:?}", g.name, g.shape, w.name, w.shape)));
                }
            }
            Ok(())
        };
        check(&fresh.params, &params)?;
        check(&fresh.buffers, &buffers)?;
        Ok(Network {
            cfg: cfg.clone(),
            params,
            buffers,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn params(&self) -> &[Tensor<S>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<S>] {
        &mut self.params
    }

    pub fn buffers(&self) -> &[Tensor<S>] {
        &self.buffers
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|t| t.data.len()).sum()
    }

    /// Logits `[batch][classes]` for row-major inputs `[batch][input_len]`.
    pub fn forward(&self, x: &[S], batch: usize, phase: Phase) -> (Vec<S>, Trace<S>) {
        let cfg = &self.cfg;
        assert_eq!(x.len(), batch * cfg.input_len, "input shape");
        let mut a = x.to_vec(); // [1][B·L] is the row-major input itself
        let mut len = cfg.input_len;
        let mut blocks = Vec::with_capacity(cfg.channels.len());
        let mut batch_stats = Vec::new();
        for i in 0..cfg.channels.len() {
            let (cin, cout, k, pool) = (cfg.in_channels(i), cfg.channels[i], cfg.kernel(i), cfg.pools[i]);
            let n = batch * len;
            let col = im2col(&a, cin, batch, len, k);
            let w = &self.params[4 * i].data;
            let bias = &self.params[4 * i + 1].data;
            let mut z = vec![S::zero(); cout * n];
            for (c, row) in z.chunks_mut(n).enumerate() {
                row.iter_mut().for_each(|v| *v = bias[c]);
            }
            matmul(false, false, cout, n, cin * k, S::one(), w, &col, S::one(), &mut z);

            let gamma = &self.params[4 * i + 2].data;
            let beta = &self.params[4 * i + 3].data;
            let eps = S::of(BN_EPS);
            let mut inv_std = vec![S::zero(); cout];
            let (mut means, mut vars) = (vec![S::zero(); cout], vec![S::zero(); cout]);
            for (c, row) in z.chunks_mut(n).enumerate() {
                let (mean, var) = match phase {
                    Phase::Train => {
                        let nn = S::of(n as f64);
                        let mean = row.iter().fold(S::zero(), |s, &v| s + v) / nn;
                        let var = row.iter().fold(S::zero(), |s, &v| s + (v - mean) * (v - mean)) / nn;
                        means[c] = mean;
                        vars[c] = if n > 1 { var * nn / S::of((n - 1) as f64) } else { var };
                        (mean, var)
                    }
                    Phase::Eval => (self.buffers[2 * i].data[c], self.buffers[2 * i + 1].data[c]),
                };
                inv_std[c] = S::one() / (var + eps).sqrt();
                row.iter_mut().for_each(|v| *v = (*v - mean) * inv_std[c]);
            }
            if phase == Phase::Train {
                batch_stats.push((means, vars));
            }
            let xhat = z;
            let mut act = vec![S::zero(); cout * n];
            for c in 0..cout {
                for j in 0..n {
                    let y = gamma[c] * xhat[c * n + j] + beta[c];
                    act[c * n + j] = if y > S::zero() { y } else { S::zero() };
                }
            }
            let out_len = len / pool;
            let m = batch * out_len;
            let mut pooled = vec![S::zero(); cout * m];
            let mut argmax = vec![0u32; cout * m];
            for c in 0..cout {
                for o in 0..m {
                    let start = c * n + o * pool; // windows never straddle samples
                    let mut best = start;
                    for j in start + 1..start + pool {
                        if act[j] > act[best] {
                            best = j;
                        }
                    }
                    pooled[c * m + o] = act[best];
                    argmax[c * m + o] = (best - c * n) as u32;
                }
            }
            blocks.push(BlockTrace {
                len,
                col,
                xhat,
                inv_std,
                act,
                argmax,
            });
            a = pooled;
            len = out_len;
        }

        let c = cfg.feature_channels();
        let inv_len = S::one() / S::of(len as f64);
        let mut gap = vec![S::zero(); batch * c];
        for ch in 0..c {
            for b in 0..batch {
                let s = a[ch * batch * len + b * len..ch * batch * len + (b + 1) * len]
                    .iter()
                    .fold(S::zero(), |s, &v| s + v);
                gap[b * c + ch] = s * inv_len;
            }
        }
        let nb = cfg.channels.len();
        let (fw, fb) = (&self.params[4 * nb].data, &self.params[4 * nb + 1].data);
        let mut logits = vec![S::zero(); batch * cfg.classes];
        for row in logits.chunks_mut(cfg.classes) {
            row.copy_from_slice(fb);
        }
        matmul(false, true, batch, cfg.classes, c, S::one(), &gap, fw, S::one(), &mut logits);
        (
            logits,
            Trace {
                batch,
                blocks,
                gap,
                final_len: len,
                batch_stats,
            },
        )
    }

    /// Fold batch statistics into the running estimates.
    pub fn update_running_stats(&mut self, stats: &[(Vec<S>, Vec<S>)]) {
        let mom = S::of(BN_MOMENTUM);
        for (i, (mean, var)) in stats.iter().enumerate() {
            for (r, &m) in self.buffers[2 * i].data.iter_mut().zip(mean) {
                *r = (S::one() - mom) * *r + mom * m;
            }
            for (r, &v) in self.buffers[2 * i + 1].data.iter_mut().zip(var) {
                *r = (S::one() - mom) * *r + mom * v;
            }
        }
    }

    /// Parameter gradients given `d loss / d logits`, in `params()` order.
    /// Valid for traces from the training phase.
    pub fn backward(&self, trace: &Trace<S>, dlogits: &[S]) -> Vec<Vec<S>> {
        let cfg = &self.cfg;
        let batch = trace.batch;
        let nb = cfg.channels.len();
        let c = cfg.feature_channels();
        let mut grads: Vec<Vec<S>> = self.params.iter().map(|t| vec![S::zero(); t.data.len()]).collect();

        let fw = &self.params[4 * nb].data;
        matmul(true, false, cfg.classes, c, batch, S::one(), dlogits, &trace.gap, S::zero(), &mut grads[4 * nb]);
        for row in dlogits.chunks(cfg.classes) {
            for (g, &d) in grads[4 * nb + 1].iter_mut().zip(row) {
                *g = *g + d;
            }
        }
        if nb == 0 {
            return grads;
        }
        let mut dgap = vec![S::zero(); batch * c];
        matmul(false, false, batch, c, cfg.classes, S::one(), dlogits, fw, S::zero(), &mut dgap);
        let len = trace.final_len;
        let inv_len = S::one() / S::of(len as f64);
        let mut da = vec![S::zero(); c * batch * len];
        for ch in 0..c {
            for b in 0..batch {
                let g = dgap[b * c + ch] * inv_len;
                da[ch * batch * len + b * len..ch * batch * len + (b + 1) * len]
                    .iter_mut()
                    .for_each(|v| *v = g);
            }
        }

        for i in (0..nb).rev() {
            let t = &trace.blocks[i];
            let (cin, cout, k) = (cfg.in_channels(i), cfg.channels[i], cfg.kernel(i));
            let n = batch * t.len;
            let m = n / cfg.pools[i];
            let gamma = &self.params[4 * i + 2].data;

            let mut dz = vec![S::zero(); cout * n];
            for ch in 0..cout {
                for o in 0..m {
                    let j = ch * n + t.argmax[ch * m + o] as usize;
                    if t.act[j] > S::zero() {
                        dz[j] = dz[j] + da[ch * m + o];
                    }
                }
            }
            // dz holds dL/dy; turn it into dL/dz through batch-norm
            let nn = S::of(n as f64);
            for ch in 0..cout {
                let dy = &mut dz[ch * n..(ch + 1) * n];
                let xh = &t.xhat[ch * n..(ch + 1) * n];
                let (mut sum_dy, mut sum_dy_xh) = (S::zero(), S::zero());
                for (&d, &x) in dy.iter().zip(xh) {
                    sum_dy = sum_dy + d;
                    sum_dy_xh = sum_dy_xh + d * x;
                }
                grads[4 * i + 2][ch] = sum_dy_xh;
                grads[4 * i + 3][ch] = sum_dy;
                let scale = gamma[ch] * t.inv_std[ch] / nn;
                for (d, &x) in dy.iter_mut().zip(xh) {
                    *d = scale * (nn * *d - sum_dy - x * sum_dy_xh);
                }
            }
            for ch in 0..cout {
                grads[4 * i + 1][ch] = dz[ch * n..(ch + 1) * n].iter().fold(S::zero(), |s, &v| s + v);
            }
            matmul(false, true, cout, cin * k, n, S::one(), &dz, &t.col, S::zero(), &mut grads[4 * i]);
            if i > 0 {
                let mut dcol = vec![S::zero(); cin * k * n];
                matmul(true, false, cin * k, n, cout, S::one(), &self.params[4 * i].data, &dz, S::zero(), &mut dcol);
                da = col2im(&dcol, cin, batch, t.len, k);
            }
        }
        grads
    }
}

fn pad_left(k: usize) -> usize {
    (k - 1) / 2
}

/// `[Cin][B·L]` → `[Cin·K][B·L]` with zero "same" padding per sample.
fn im2col<S: Scalar>(a: &[S], cin: usize, batch: usize, len: usize, k: usize) -> Vec<S> {
    let n = batch * len;
    let pad = pad_left(k) as isize;
    let mut col = vec![S::zero(); cin * k * n];
    for ci in 0..cin {
        for kk in 0..k {
            let off = kk as isize - pad;
            let dst = &mut col[(ci * k + kk) * n..(ci * k + kk + 1) * n];
            for b in 0..batch {
                let src = &a[ci * n + b * len..ci * n + (b + 1) * len];
                let (lo, hi) = ((-off).max(0) as usize, (len as isize - off).min(len as isize).max(0) as usize);
                for t in lo..hi {
                    dst[b * len + t] = src[(t as isize + off) as usize];
                }
            }
        }
    }
    col
}

fn col2im<S: Scalar>(col: &[S], cin: usize, batch: usize, len: usize, k: usize) -> Vec<S> {
    let n = batch * len;
    let pad = pad_left(k) as isize;
    let mut a = vec![S::zero(); cin * n];
    for ci in 0..cin {
        for kk in 0..k {
            let off = kk as isize - pad;
            let src = &col[(ci * k + kk) * n..(ci * k + kk + 1) * n];
            for b in 0..batch {
                let dst = &mut a[ci * n + b * len..ci * n + (b + 1) * len];
                let (lo, hi) = ((-off).max(0) as usize, (len as isize - off).min(len as isize).max(0) as usize);
                for t in lo..hi {
                    let j = (t as isize + off) as usize;
                    dst[j] = dst[j] + src[b * len + t];
                }
            }
        }
    }
    a
}

/// Mean softmax cross-entropy and its gradient w.r.t. the logits.
pub fn softmax_cross_entropy<S: Scalar>(logits: &[S], labels: &[usize], classes: usize) -> (S, Vec<S>) {
    let batch = labels.len();
    let inv_b = S::one() / S::of(batch as f64);
    let mut loss = S::zero();
    let mut grad = vec![S::zero(); logits.len()];
    for (b, &y) in labels.iter().enumerate() {
        let row = &logits[b * classes..(b + 1) * classes];
        let mx = row.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
        let z = row.iter().fold(S::zero(), |s, &v| s + (v - mx).exp());
        loss = loss + (z.ln() + mx - row[y]) * inv_b;
        for j in 0..classes {
            let p = (row[j] - mx).exp() / z;
            grad[b * classes + j] = (p - if j == y { S::one() } else { S::zero() }) * inv_b;
        }
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_of_default_plan() {
        let net = Network::<f32>::new(&NetworkConfig::default()).unwrap();
        assert_eq!(net.param_count(), 545_667);
    }

    #[test]
    fn output_shape() {
        let net = Network::<f32>::new(&NetworkConfig::reduced()).unwrap();
        let (logits, _) = net.forward(&vec![0.1; 5 * 512], 5, Phase::Eval);
        assert_eq!(logits.len(), 5 * 3);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            NetworkConfig {
                pools: vec![4, 4, 4, 3],
                ..NetworkConfig::default()
            },
            NetworkConfig {
                first_kernel: 5,
                ..NetworkConfig::default()
            },
            NetworkConfig {
                pools: vec![4, 4],
                ..NetworkConfig::default()
            },
        ];
        for cfg in bad {
            assert!(Network::<f32>::new(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn im2col_col2im_adjoint() {
        let (cin, batch, len, k) = (2, 3, 7, 3);
        let a: Vec<f64> = (0..cin * batch * len).map(|i| (i as f64 * 0.3).sin()).collect();
        let c: Vec<f64> = (0..cin * k * batch * len).map(|i| (i as f64 * 0.7).cos()).collect();
        let lhs: f64 = im2col(&a, cin, batch, len, k).iter().zip(&c).map(|(x, y)| x * y).sum();
        let rhs: f64 = a.iter().zip(col2im(&c, cin, batch, len, k).iter()).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_of_uniform_logits() {
        let (l, g) = softmax_cross_entropy(&[0.0f64; 6], &[0, 2], 3);
        assert!((l - 3f64.ln()).abs() < 1e-12);
        assert!((g[0] - (1.0 / 3.0 - 1.0) / 2.0).abs() < 1e-12);
    }
}
