use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{softmax_cross_entropy, Network, Phase};

pub const FD_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Samples whose ±h perturbation flipped a ReLU or a pooling winner.
    pub skipped: usize,
    pub worst: Option<(String, usize)>,
}

fn loss_and_signature(net: &Network<f64>, x: &[f64], labels: &[usize]) -> (f64, Vec<u32>) {
    let (logits, trace) = net.forward(x, labels.len(), Phase::Train);
    let (loss, _) = softmax_cross_entropy(&logits, labels, net.config().classes);
    (loss, trace.signature())
}

/// Compare analytic gradients against central differences for `per_tensor`
/// random entries of every parameter tensor (all entries when the tensor is
/// smaller). Batch-norm uses batch statistics, as during training.
pub fn gradient_check(net: &Network<f64>, x: &[f64], labels: &[usize], per_tensor: usize, seed: u64) -> GradCheck {
    let (logits, trace) = net.forward(x, labels.len(), Phase::Train);
    let (_, dlogits) = softmax_cross_entropy(&logits, labels, net.config().classes);
    let analytic = net.backward(&trace, &dlogits);
    let base_sig = trace.signature();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = net.clone();
    let mut out = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
        worst: None,
    };
    for t in 0..net.params().len() {
        let n = net.params()[t].data.len();
        let picks: Vec<usize> = if n <= per_tensor {
            (0..n).collect()
        } else {
            sample(&mut rng, n, per_tensor).into_vec()
        };
        for j in picks {
            let orig = probe.params()[t].data[j];
            probe.params_mut()[t].data[j] = orig + FD_STEP;
            let (lp, sp) = loss_and_signature(&probe, x, labels);
            probe.params_mut()[t].data[j] = orig - FD_STEP;
            let (lm, sm) = loss_and_signature(&probe, x, labels);
            probe.params_mut()[t].data[j] = orig;
            if sp != base_sig || sm != base_sig {
                out.skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * FD_STEP);
            let a = analytic[t][j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            out.checked += 1;
            if rel > out.max_rel_error {
                out.max_rel_error = rel;
                out.worst = Some((net.params()[t].name.clone(), j));
            }
        }
    }
    out
}
