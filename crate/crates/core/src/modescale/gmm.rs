use serde::{Deserialize, Serialize};

use crate::features::{bin_center, PitchDistribution, BIN_WIDTH_CENTS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmComponent {
    pub mu: f64,
    pub var: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmParams {
    pub init_var: f64,
    pub var_floor: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for GmmParams {
    fn default() -> Self {
        GmmParams {
            init_var: 400.0,
            var_floor: 1.0,
            tolerance: 1e-8,
            max_iter: 500,
        }
    }
}

/// Components sorted by mean plus the log-likelihood after every iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    pub components: Vec<GmmComponent>,
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
}

const MIN_WEIGHT: f64 = 1e-12;

fn log_normal(x: f64, mu: f64, var: f64) -> f64 {
    -0.5 * ((x - mu) * (x - mu) / var + var.ln() + (2.0 * std::f64::consts::PI).ln())
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// EM on bin centres weighted by bin mass, one component per initial mean.
pub fn fit_gmm(dist: &PitchDistribution, init_means: &[f64], p: &GmmParams) -> Result<GmmFit> {
    if init_means.is_empty() {
        return Err(Error::InvalidParam("need at least one initial mean".into()));
    }
    let data: Vec<(f64, f64)> = dist
        .bins
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0.0)
        .map(|(i, &m)| (bin_center(i), m))
        .collect();
    let total: f64 = data.iter().map(|d| d.1).sum();
    if data.is_empty() || total <= 0.0 {
        return Err(Error::EmptyDistribution);
    }
    let k = init_means.len();
    let mut comps: Vec<GmmComponent> = init_means
        .iter()
        .map(|&mu| GmmComponent {
            mu,
            var: p.init_var.max(p.var_floor),
            weight: 1.0 / k as f64,
        })
        .collect();
    let mut trace = Vec::new();
    let mut resp = vec![0.0; k];
    let mut converged = false;
    let mut r = vec![0.0; data.len() * k];
    for iter in 0..p.max_iter {
        let mut ll = 0.0f64;
        let mut nk = vec![0.0f64; k];
        for (n, &(x, m)) in data.iter().enumerate() {
            for (lr, c) in resp.iter_mut().zip(&comps) {
                *lr = c.weight.ln() + log_normal(x, c.mu, c.var);
            }
            let lse = log_sum_exp(&resp);
            ll += m * lse;
            for j in 0..k {
                r[n * k + j] = m * (resp[j] - lse).exp();
                nk[j] += r[n * k + j];
            }
        }
        trace.push(ll / total);
        if !ll.is_finite() {
            return Err(Error::EmDiverged { iteration: iter, trace });
        }
        let t = trace.len();
        if t >= 2 && (trace[t - 1] - trace[t - 2]).abs() < p.tolerance {
            converged = true;
            break;
        }
        for (j, c) in comps.iter_mut().enumerate() {
            if nk[j] > 1e-300 {
                let mu = data.iter().enumerate().map(|(n, d)| r[n * k + j] * d.0).sum::<f64>() / nk[j];
                let var = data.iter().enumerate().map(|(n, d)| r[n * k + j] * (d.0 - mu).powi(2)).sum::<f64>() / nk[j];
                c.mu = mu;
                c.var = var.max(p.var_floor);
            }
            c.weight = (nk[j] / total).max(MIN_WEIGHT);
        }
        let ws: f64 = comps.iter().map(|c| c.weight).sum();
        comps.iter_mut().for_each(|c| c.weight /= ws);
        if comps.iter().any(|c| !(c.mu.is_finite() && c.var.is_finite() && c.weight.is_finite())) {
            return Err(Error::EmDiverged { iteration: iter, trace });
        }
    }
    comps.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    Ok(GmmFit {
        components: comps,
        log_likelihood: trace,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakParams {
    pub smoothing_cents: f64,
    pub prominence: f64,
    pub min_separation_cents: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams {
            smoothing_cents: 30.0,
            prominence: 0.005,
            min_separation_cents: 100.0,
        }
    }
}

pub(crate) fn smooth(bins: &[f64], sigma_bins: f64) -> Vec<f64> {
    if sigma_bins <= 0.0 {
        return bins.to_vec();
    }
    let half = (4.0 * sigma_bins).ceil() as i64;
    let kernel: Vec<f64> = (-half..=half).map(|d| (-(d as f64).powi(2) / (2.0 * sigma_bins * sigma_bins)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    let n = bins.len() as i64;
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for (o, w) in (-half..=half).zip(&kernel) {
                let j = i + o;
                if (0..n).contains(&j) {
                    s += bins[j as usize] * w;
                }
            }
            s / norm
        })
        .collect()
}

/// Topographic prominence of the peak at `i`.
fn prominence(s: &[f64], i: usize) -> f64 {
    let h = s[i];
    let mut left_min = h;
    for j in (0..i).rev() {
        if s[j] > h {
            break;
        }
        left_min = left_min.min(s[j]);
    }
    let mut right_min = h;
    for &v in &s[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Means for [`fit_gmm`]: maxima of the smoothed distribution that are
/// prominent enough, thinned greedily from the tallest so that kept peaks are
/// at least the minimum separation apart. Sorted ascending, in cents.
pub fn peak_init(dist: &PitchDistribution, p: &PeakParams) -> Vec<f64> {
    let s = smooth(&dist.bins, p.smoothing_cents / BIN_WIDTH_CENTS);
    let n = s.len();
    let mut peaks: Vec<usize> = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if s[i] > s[i - 1] {
            // walk across a plateau, take its middle
            let mut j = i;
            while j + 1 < n && s[j + 1] == s[i] {
                j += 1;
            }
            if j + 1 < n && s[j + 1] < s[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks.retain(|&i| prominence(&s, i) >= p.prominence);
    peaks.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let sep = p.min_separation_cents / BIN_WIDTH_CENTS;
    let mut kept: Vec<usize> = Vec::new();
    for c in peaks {
        if kept.iter().all(|&k| (k as f64 - c as f64).abs() >= sep) {
            kept.push(c);
        }
    }
    let mut out: Vec<f64> = kept.into_iter().map(bin_center).collect();
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::N_BINS;

    fn mixture(parts: &[(f64, f64, f64)]) -> PitchDistribution {
        PitchDistribution::from_bins(
            (0..N_BINS)
                .map(|i| {
                    let x = bin_center(i);
                    parts
                        .iter()
                        .map(|&(mu, var, w)| w * (-(x - mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
                        .sum()
                })
                .collect(),
        )
    }

    #[test]
    fn single_bump() {
        let fit = fit_gmm(&mixture(&[(1200.0, 25.0, 1.0)]), &[1150.0], &GmmParams::default()).unwrap();
        let c = fit.components[0];
        assert!((c.mu - 1200.0).abs() < 2.0, "{c:?}");
        assert!((c.var - 25.0).abs() < 5.0, "{c:?}");
        assert!((c.weight - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_bumps() {
        let d = mixture(&[(900.0, 100.0, 0.5), (1400.0, 100.0, 0.5)]);
        let fit = fit_gmm(&d, &[1450.0, 880.0], &GmmParams::default()).unwrap();
        let [a, b] = [fit.components[0], fit.components[1]];
        assert!((a.mu - 900.0).abs() < 3.0 && (b.mu - 1400.0).abs() < 3.0, "{fit:?}");
        assert!((a.weight - 0.5).abs() < 0.05 && (b.weight - 0.5).abs() < 0.05);
        assert!(fit.converged);
        for w in fit.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_gmm(&PitchDistribution::zeros(), &[100.0], &GmmParams::default()), Err(Error::EmptyDistribution)));
        assert!(fit_gmm(&mixture(&[(1200.0, 25.0, 1.0)]), &[], &GmmParams::default()).is_err());
    }

    #[test]
    fn peaks() {
        let p = PeakParams::default();
        let one = peak_init(&mixture(&[(1234.0, 100.0, 1.0)]), &p);
        assert_eq!(one.len(), 1);
        assert!((one[0] - 1234.0).abs() <= 10.0);
        assert!(peak_init(&PitchDistribution::from_bins(vec![1.0; N_BINS]), &p).is_empty());
        let two = peak_init(&mixture(&[(800.0, 50.0, 0.5), (1300.0, 50.0, 0.5)]), &p);
        assert_eq!(two.len(), 2);
        // 60 cents apart: merged by the separation rule
        let close = peak_init(&mixture(&[(800.0, 4.0, 0.5), (860.0, 4.0, 0.5)]), &PeakParams { smoothing_cents: 0.0, ..p });
        assert_eq!(close.len(), 1);
    }
}
