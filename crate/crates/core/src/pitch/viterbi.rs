//! Viterbi decoding over `n_bins` voiced pitch states plus `n_bins` unvoiced
//! twins. Pitch transitions decay as `exp(-|Δcents| / scale)`; the max over
//! source states is a 1-D distance transform, so each frame costs O(states).

use super::yin::FrameCandidates;
use super::TrackerParams;

const LOG_FLOOR: f64 = -690.0; // ~ ln(1e-300)

fn ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}

/// `out[j] = max_i (score[i] - slope * |i - j|)` with the maximizing `i`.
fn distance_transform(score: &[f64], slope: f64, best: &mut [f64], arg: &mut [usize]) {
    let n = score.len();
    for j in 0..n {
        best[j] = score[j];
        arg[j] = j;
        if j > 0 && best[j - 1] - slope > best[j] {
            best[j] = best[j - 1] - slope;
            arg[j] = arg[j - 1];
        }
    }
    for j in (0..n.saturating_sub(1)).rev() {
        if best[j + 1] - slope > best[j] {
            best[j] = best[j + 1] - slope;
            arg[j] = arg[j + 1];
        }
    }
}

/// Most likely state per frame; states `< n_bins` are voiced.
pub(crate) fn decode(frames: &[FrameCandidates], n_bins: usize, p: &TrackerParams) -> Vec<usize> {
    let n_frames = frames.len();
    if n_frames == 0 {
        return Vec::new();
    }
    let n_states = 2 * n_bins;
    assert!(n_states <= u16::MAX as usize, "pitch grid too fine");
    let slope = p.resolution_cents / p.transition_scale_cents;
    // per-source normalizer of the truncated exponential kernel
    let log_z: Vec<f64> = (0..n_bins)
        .map(|i| {
            (0..n_bins)
                .map(|j| (-slope * (i as f64 - j as f64).abs()).exp())
                .sum::<f64>()
                .ln()
        })
        .collect();
    let stay = (1.0 - p.switch_prob).ln();
    let switch = p.switch_prob.ln();

    let observe = |f: &FrameCandidates, voiced: &mut [f64]| -> f64 {
        voiced.iter_mut().for_each(|v| *v = 0.0);
        for c in &f.candidates {
            voiced[c.bin] += c.prob;
        }
        voiced.iter_mut().for_each(|v| *v = ln(*v));
        ln((1.0 - f.voiced_prob) / n_bins as f64)
    };

    let mut obs_v = vec![0.0; n_bins];
    let init = -(n_states as f64).ln();
    let obs_u = observe(&frames[0], &mut obs_v);
    let mut vv: Vec<f64> = obs_v.iter().map(|o| init + o).collect();
    let mut vu: Vec<f64> = vec![init + obs_u; n_bins];

    let mut back = vec![0u16; n_frames * n_states];
    let mut a = vec![0.0; n_bins];
    let mut b = vec![0.0; n_bins];
    let mut src_a = vec![0usize; n_bins];
    let mut src_b = vec![0usize; n_bins];
    let mut best = vec![0.0; n_bins];
    let mut arg = vec![0usize; n_bins];

    for t in 1..n_frames {
        for i in 0..n_bins {
            let (to_v_from_v, to_v_from_u) = (vv[i] + stay, vu[i] + switch);
            if to_v_from_v >= to_v_from_u {
                a[i] = to_v_from_v - log_z[i];
                src_a[i] = i;
            } else {
                a[i] = to_v_from_u - log_z[i];
                src_a[i] = n_bins + i;
            }
            let (to_u_from_v, to_u_from_u) = (vv[i] + switch, vu[i] + stay);
            if to_u_from_u >= to_u_from_v {
                b[i] = to_u_from_u - log_z[i];
                src_b[i] = n_bins + i;
            } else {
                b[i] = to_u_from_v - log_z[i];
                src_b[i] = i;
            }
        }
        let obs_u = observe(&frames[t], &mut obs_v);
        let row = &mut back[t * n_states..(t + 1) * n_states];

        distance_transform(&a, slope, &mut best, &mut arg);
        for j in 0..n_bins {
            vv[j] = best[j] + obs_v[j];
            row[j] = src_a[arg[j]] as u16;
        }
        distance_transform(&b, slope, &mut best, &mut arg);
        for j in 0..n_bins {
            vu[j] = best[j] + obs_u;
            row[n_bins + j] = src_b[arg[j]] as u16;
        }
        let m = vv.iter().chain(vu.iter()).fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        vv.iter_mut().chain(vu.iter_mut()).for_each(|x| *x -= m);
    }

    let mut state = vv
        .iter()
        .chain(vu.iter())
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1).then(y.0.cmp(&x.0)))
        .map(|(i, _)| i)
        .unwrap();
    let mut path = vec![0usize; n_frames];
    for t in (0..n_frames).rev() {
        path[t] = state;
        if t > 0 {
            state = back[t * n_states + state] as usize;
        }
    }
    path
}
