//! Cumulative-mean-normalized difference function and thresholded trough
//! candidates with a Beta prior over thresholds.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use statrs::distribution::{Beta, ContinuousCDF};

use super::TrackerParams;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub bin: usize,
    pub freq: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct FrameCandidates {
    pub candidates: Vec<Candidate>,
    pub voiced_prob: f64,
}

const CHUNK: usize = 256;

struct Workspace {
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    spec: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    energy: Vec<f64>,
    diff: Vec<f64>,
    cmndf: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, fft: Arc<dyn Fft<f64>>, ifft: Arc<dyn Fft<f64>>) -> Self {
        let scratch_len = fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len());
        Workspace {
            fft,
            ifft,
            buf: vec![Complex::default(); n],
            spec: vec![Complex::default(); n],
            scratch: vec![Complex::default(); scratch_len],
            energy: vec![0.0; n + 1],
            diff: Vec::new(),
            cmndf: Vec::new(),
        }
    }
}

pub(crate) struct Prior {
    beta_probs: Vec<f64>,
    thresholds: Vec<f64>,
}

impl Prior {
    pub fn new(p: &TrackerParams) -> Prior {
        let beta = Beta::new(p.beta_a, p.beta_b).expect("validated beta parameters");
        let n = p.n_thresholds;
        let thresholds: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let cdf: Vec<f64> = thresholds.iter().map(|&t| beta.cdf(t)).collect();
        Prior {
            beta_probs: cdf.windows(2).map(|w| w[1] - w[0]).collect(),
            thresholds: thresholds[1..].to_vec(),
        }
    }
}

/// YIN difference function `d[tau]` for `tau in 0..=max_lag` over an
/// integration window of `win` samples, via one complex FFT of both operands.
fn difference(frame: &[f32], win: usize, max_lag: usize, ws: &mut Workspace) -> Vec<f64> {
    let n = ws.buf.len();
    let span = win + max_lag + 1;
    debug_assert!(span <= frame.len() && span <= n);
    // pack a = frame[..win] (real) and b = frame[..span] (imag)
    for (i, z) in ws.buf.iter_mut().enumerate() {
        let a = if i < win { frame[i] as f64 } else { 0.0 };
        let b = if i < span { frame[i] as f64 } else { 0.0 };
        *z = Complex::new(a, b);
    }
    ws.fft.process_with_scratch(&mut ws.buf, &mut ws.scratch);
    for k in 0..n {
        let zk = ws.buf[k];
        let zn = ws.buf[(n - k) % n].conj();
        let a = (zk + zn) * 0.5;
        let b = (zk - zn) * Complex::new(0.0, -0.5);
        ws.spec[k] = a.conj() * b;
    }
    ws.ifft.process_with_scratch(&mut ws.spec, &mut ws.scratch);
    let scale = 1.0 / n as f64;

    ws.energy[0] = 0.0;
    for i in 0..span {
        let v = frame[i] as f64;
        ws.energy[i + 1] = ws.energy[i] + v * v;
    }
    let e0 = ws.energy[win];
    (0..=max_lag)
        .map(|tau| {
            let et = ws.energy[tau + win] - ws.energy[tau];
            (e0 + et - 2.0 * ws.spec[tau].re * scale).max(0.0)
        })
        .collect()
}

/// Cumulative mean normalization; frames without energy map to 1 everywhere.
fn normalize(diff: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    let mut cum = 0.0;
    for (tau, &d) in diff.iter().enumerate().skip(1) {
        cum += d;
        out.push(if cum > 1e-12 { d * tau as f64 / cum } else { 1.0 });
    }
}

fn frame_candidates(
    frame: &[f32],
    rate: f64,
    p: &TrackerParams,
    prior: &Prior,
    ws: &mut Workspace,
) -> FrameCandidates {
    let win = p.frame_size / 2;
    let min_period = ((rate / p.fmax).floor() as usize).max(1);
    let max_period = ((rate / p.fmin).ceil() as usize).min(p.frame_size - win - 2);
    let diff = difference(frame, win, max_period + 1, ws);
    let mut cmndf = std::mem::take(&mut ws.cmndf);
    normalize(&diff, &mut cmndf);
    ws.diff = diff;

    // troughs over [min_period, max_period]
    let y = &cmndf[min_period..=max_period];
    let mut troughs: Vec<usize> = Vec::new();
    if y.len() > 1 && y[0] < y[1] {
        troughs.push(0);
    }
    for i in 1..y.len().saturating_sub(1) {
        if y[i] < y[i - 1] && y[i] <= y[i + 1] {
            troughs.push(i);
        }
    }
    let mut out = FrameCandidates::default();
    if troughs.is_empty() {
        ws.cmndf = cmndf;
        return out;
    }

    let heights: Vec<f64> = troughs.iter().map(|&t| y[t]).collect();
    let mut probs = vec![0.0; troughs.len()];
    let global_min = heights
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let lambda = p.boltzmann;
    for (thr, &bp) in prior.thresholds.iter().zip(&prior.beta_probs) {
        let below: Vec<usize> = (0..troughs.len()).filter(|&i| heights[i] < *thr).collect();
        if below.is_empty() {
            probs[global_min] += p.no_trough_prob * bp;
            continue;
        }
        let nb = below.len() as f64;
        let z = (1.0 - (-lambda).exp()) / (1.0 - (-lambda * nb).exp());
        for (rank, &i) in below.iter().enumerate() {
            probs[i] += bp * z * (-lambda * rank as f64).exp();
        }
    }

    let bins_per_octave = 1200.0 / p.resolution_cents;
    let n_bins = p.n_pitch_bins();
    for (&t, &prob) in troughs.iter().zip(&probs) {
        if prob <= 0.0 {
            continue;
        }
        let tau = min_period + t;
        // parabolic refinement on the normalized function
        let shift = if tau > 0 && tau + 1 < cmndf.len() {
            let (l, c, r) = (cmndf[tau - 1], cmndf[tau], cmndf[tau + 1]);
            let a = l + r - 2.0 * c;
            let b = 0.5 * (r - l);
            if b.abs() < a.abs() {
                -b / a
            } else {
                0.0
            }
        } else {
            0.0
        };
        let freq = rate / (tau as f64 + shift);
        let bin = (bins_per_octave * (freq / p.fmin).log2()).round().clamp(0.0, (n_bins - 1) as f64) as usize;
        out.candidates.push(Candidate { bin, freq, prob });
        out.voiced_prob += prob;
    }
    out.voiced_prob = out.voiced_prob.clamp(0.0, 1.0);
    ws.cmndf = cmndf;
    out
}

/// Candidates for every frame of `samples` (hop [`super::HOP`]).
pub(crate) fn candidates(samples: &[f32], rate: f64, p: &TrackerParams) -> Vec<FrameCandidates> {
    let n_frames = super::frame_count(samples.len(), p.frame_size);
    let prior = Prior::new(p);
    let n = p.frame_size;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let n_chunks = n_frames.div_ceil(CHUNK);
    par::map_range(p.exec, n_chunks, |c| {
        let mut ws = Workspace::new(n, fft.clone(), ifft.clone());
        let start = c * CHUNK;
        let end = (start + CHUNK).min(n_frames);
        (start..end)
            .map(|f| {
                let off = f * super::HOP;
                frame_candidates(&samples[off..off + n], rate, p, &prior, &mut ws)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}
