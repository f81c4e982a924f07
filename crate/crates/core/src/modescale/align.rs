use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::features::{PitchDistribution, N_BINS};
use crate::par::{self, ExecMode};
use crate::{Error, Result};

pub const DEFAULT_MAX_SHIFT: usize = 120;

/// `R[ξ] = Σ_n p[n]·q[n-ξ]`, summed in increasing `n` so that
/// `xcorr(p, q, ξ)` and `xcorr(q, p, -ξ)` are bit-identical.
fn xcorr(p: &[f64], q: &[f64], xi: i64) -> f64 {
    let n = p.len() as i64;
    let lo = xi.max(0);
    let hi = (n + xi).min(n);
    let mut s = 0.0;
    for i in lo..hi {
        s += p[i as usize] * q[(i - xi) as usize];
    }
    s
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Shift `ξ` (bins) that moves `q` onto `p`, with its cross-correlation. Ties
/// go to the smaller `|ξ|`; a remaining `±ξ` tie is split by comparing the
/// two inputs, which keeps the result antisymmetric.
pub fn optimal_shift_bins(p: &[f64], q: &[f64], max_shift: usize) -> Result<(i64, f64)> {
    if p.iter().all(|&v| v == 0.0) || q.iter().all(|&v| v == 0.0) {
        return Err(Error::EmptyDistribution);
    }
    let m = max_shift.min(p.len().max(q.len()) - 1) as i64;
    let mut best = (0i64, xcorr(p, q, 0));
    let positive_first = lex_cmp(p, q) == Ordering::Less;
    for a in 1..=m {
        let order = if positive_first { [a, -a] } else { [-a, a] };
        for xi in order {
            let r = xcorr(p, q, xi);
            if r > best.1 {
                best = (xi, r);
            }
        }
    }
    Ok(best)
}

/// Integer bin shift that moves `q` onto `p`.
pub fn optimal_shift(p: &PitchDistribution, q: &PitchDistribution, max_shift: usize) -> Result<i64> {
    optimal_shift_bins(&p.bins, &q.bins, max_shift).map(|(xi, _)| xi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub anchor: usize,
    /// Per recording, the shift that moves it onto the anchor.
    pub shifts: Vec<i64>,
    /// Peak normalized cross-correlation for every pair (diagonal 1).
    pub correlation: Vec<Vec<f64>>,
    /// `pairwise[i][j]` moves recording `j` onto recording `i`.
    pub pairwise: Vec<Vec<i64>>,
}

/// Pairwise alignment, anchor choice (highest mean correlation with the
/// others, lowest index on ties) and shifts onto the anchor.
pub fn align(dists: &[PitchDistribution], max_shift: usize, exec: ExecMode) -> Result<AlignmentResult> {
    let n = dists.len();
    if n < 2 {
        return Err(Error::TooFewRecordings { needed: 2, got: n });
    }
    let energy: Vec<f64> = dists.iter().map(|d| d.bins.iter().map(|v| v * v).sum()).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let results = par::map(exec, &pairs, |&(i, j)| optimal_shift_bins(&dists[i].bins, &dists[j].bins, max_shift));
    let mut correlation = vec![vec![1.0; n]; n];
    let mut pairwise = vec![vec![0i64; n]; n];
    for (&(i, j), r) in pairs.iter().zip(results) {
        let (xi, r) = r?;
        let c = r / (energy[i] * energy[j]).sqrt();
        correlation[i][j] = c;
        correlation[j][i] = c;
        pairwise[i][j] = xi;
        pairwise[j][i] = -xi;
    }
    let mean = |i: usize| (0..n).filter(|&j| j != i).map(|j| correlation[i][j]).sum::<f64>() / (n - 1) as f64;
    let mut anchor = 0;
    for i in 1..n {
        if mean(i) > mean(anchor) {
            anchor = i;
        }
    }
    let shifts = (0..n).map(|j| pairwise[anchor][j]).collect();
    Ok(AlignmentResult {
        anchor,
        shifts,
        correlation,
        pairwise,
    })
}

/// Anchor index only; see [`align`].
pub fn select_anchor(dists: &[PitchDistribution], max_shift: usize) -> Result<usize> {
    align(dists, max_shift, ExecMode::Sequential).map(|a| a.anchor)
}

/// Mean of the shifted distributions, renormalized, and the mean mass lost
/// past either end of the bin range.
pub fn aligned_average(dists: &[PitchDistribution], shifts: &[i64]) -> (PitchDistribution, f64) {
    assert_eq!(dists.len(), shifts.len());
    let mut acc = vec![0.0; N_BINS];
    let mut lost = 0.0;
    for (d, &s) in dists.iter().zip(shifts) {
        let (bins, l) = d.shifted(s);
        acc.iter_mut().zip(&bins).for_each(|(a, b)| *a += b);
        lost += l;
    }
    let n = dists.len().max(1) as f64;
    let mut out = PitchDistribution::from_bins(acc);
    out.n_frames = dists.iter().map(|d| d.n_frames).sum();
    (out, lost / n)
}
