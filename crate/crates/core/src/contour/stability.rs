use serde::{Deserialize, Serialize};

use super::CentContour;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityMethod {
    None,
    Morphetic,
    Masking,
}

impl StabilityMethod {
    pub const ALL: [StabilityMethod; 3] = [StabilityMethod::None, StabilityMethod::Morphetic, StabilityMethod::Masking];

    pub fn name(self) -> &'static str {
        match self {
            StabilityMethod::None => "none",
            StabilityMethod::Morphetic => "morphetic",
            StabilityMethod::Masking => "masking",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskingParams {
    /// Maximum pitch excursion inside the window, cents.
    pub tau_cents: f64,
    pub window_s: f64,
}

impl Default for MaskingParams {
    fn default() -> Self {
        MaskingParams {
            tau_cents: 25.0,
            window_s: 0.12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorpheticParams {
    /// Maximum deviation from the running median, cents.
    pub tau_cents: f64,
    pub median_s: f64,
    pub min_run_s: f64,
}

impl Default for MorpheticParams {
    fn default() -> Self {
        MorpheticParams {
            tau_cents: 25.0,
            median_s: 0.25,
            min_run_s: 0.1,
        }
    }
}

/// Per-frame stable flags. `stable[i]` implies the frame is voiced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMask {
    pub stable: Vec<bool>,
    pub method: StabilityMethod,
    /// `(tau_cents, window_s, min_run_s)`; `min_run_s` is 0 for masking.
    pub params: (f64, f64, f64),
}

impl StabilityMask {
    /// Mask that keeps every voiced frame.
    pub fn voiced(c: &CentContour) -> StabilityMask {
        StabilityMask {
            stable: c.voiced.clone(),
            method: StabilityMethod::None,
            params: (0.0, 0.0, 0.0),
        }
    }

    pub fn count(&self) -> usize {
        self.stable.iter().filter(|&&s| s).count()
    }
}

fn half_window(window_s: f64, hop_s: f64) -> usize {
    (0.5 * window_s / hop_s).round() as usize
}

/// Frame `t` is stable when every frame of the centred window is voiced and
/// the window's pitch range is within `tau_cents`. Frames whose window runs
/// past either end are unstable.
pub fn stabilize_masking(c: &CentContour, p: &MaskingParams) -> Result<StabilityMask> {
    if !(p.tau_cents > 0.0) || p.window_s < 3.0 * c.hop_s {
        return Err(Error::InvalidParam("masking needs tau > 0 and a window of at least 3 hops".into()));
    }
    let h = half_window(p.window_s, c.hop_s);
    let n = c.len();
    let mut stable = vec![false; n];
    for t in h..n.saturating_sub(h) {
        let w = &c.cents[t - h..=t + h];
        if !c.voiced[t - h..=t + h].iter().all(|&v| v) {
            continue;
        }
        let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        stable[t] = hi - lo <= p.tau_cents;
    }
    Ok(StabilityMask {
        stable,
        method: StabilityMethod::Masking,
        params: (p.tau_cents, p.window_s, 0.0),
    })
}

/// Frame `t` is stable when it is within `tau_cents` of the median of the
/// voiced frames in the centred window of `median_s`; stable runs shorter
/// than `min_run_s` are then erased.
pub fn stabilize_morphetic(c: &CentContour, p: &MorpheticParams) -> Result<StabilityMask> {
    if !(p.tau_cents > 0.0) || p.median_s < 3.0 * c.hop_s || p.min_run_s < 0.0 {
        return Err(Error::InvalidParam("morphetic needs tau > 0, a median window of at least 3 hops and min_run >= 0".into()));
    }
    let h = half_window(p.median_s, c.hop_s);
    let n = c.len();
    let mut stable = vec![false; n];
    let mut buf = Vec::with_capacity(2 * h + 1);
    for t in 0..n {
        if !c.voiced[t] {
            continue;
        }
        buf.clear();
        let lo = t.saturating_sub(h);
        let hi = (t + h).min(n - 1);
        buf.extend((lo..=hi).filter(|&i| c.voiced[i]).map(|i| c.cents[i]));
        buf.sort_by(f64::total_cmp);
        let m = buf.len();
        let median = if m % 2 == 1 { buf[m / 2] } else { 0.5 * (buf[m / 2 - 1] + buf[m / 2]) };
        stable[t] = (c.cents[t] - median).abs() <= p.tau_cents;
    }
    let min_run = (p.min_run_s / c.hop_s).ceil() as usize;
    let mut t = 0;
    while t < n {
        if !stable[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < n && stable[t] {
            t += 1;
        }
        if t - start < min_run {
            stable[start..t].iter_mut().for_each(|s| *s = false);
        }
    }
    Ok(StabilityMask {
        stable,
        method: StabilityMethod::Morphetic,
        params: (p.tau_cents, p.median_s, p.min_run_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOP: f64 = 128.0 / 22_050.0;

    fn contour(f: impl Fn(f64) -> Option<f64>, secs: f64) -> CentContour {
        let n = (secs / HOP) as usize;
        let v: Vec<Option<f64>> = (0..n).map(|i| f(i as f64 * HOP)).collect();
        CentContour::from_frames(&v, HOP)
    }

    #[test]
    fn constant_contour() {
        let c = contour(|_| Some(1200.0), 2.0);
        let m = stabilize_masking(&c, &MaskingParams::default()).unwrap();
        let h = half_window(0.12, HOP);
        for (i, &s) in m.stable.iter().enumerate() {
            assert_eq!(s, i >= h && i + h < c.len(), "frame {i}");
        }
        let mo = stabilize_morphetic(&c, &MorpheticParams::default()).unwrap();
        assert!(mo.stable.iter().all(|&s| s));
        // the two masks differ only within the masking half-window at the edges
        for i in h..c.len() - h {
            assert_eq!(m.stable[i], mo.stable[i]);
        }
    }

    #[test]
    fn square_wave_never_stable() {
        // ±50 cents at 5 Hz: every 0.12 s window spans a 100-cent jump
        let c = contour(|t| Some(if (t * 10.0).floor() as i64 % 2 == 0 { 1250.0 } else { 1150.0 }), 3.0);
        let m = stabilize_masking(&c, &MaskingParams::default()).unwrap();
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn steady_note_then_glide() {
        // 1 s at 1200 cents, then a 600-cent glide over 1 s
        let f = |t: f64| Some(if t < 1.0 { 1200.0 } else { 1200.0 + 600.0 * (t - 1.0) });
        let c = contour(f, 2.0);
        let p = MaskingParams::default();
        let m = stabilize_masking(&c, &p).unwrap();
        // brute-force oracle: window range check at each frame
        let h = half_window(p.window_s, HOP) as i64;
        for t in 0..c.len() as i64 {
            let ok = t - h >= 0
                && t + h < c.len() as i64
                && {
                    let w: Vec<f64> = (t - h..=t + h).map(|i| c.cents[i as usize]).collect();
                    w.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - w.iter().cloned().fold(f64::INFINITY, f64::min) <= 25.0
                };
            assert_eq!(m.stable[t as usize], ok);
        }
        let stable_t: Vec<f64> = (0..c.len()).filter(|&i| m.stable[i]).map(|i| i as f64 * HOP).collect();
        assert!(stable_t.iter().all(|&t| t < 1.0 + 0.12));
        assert!(stable_t.iter().any(|&t| t > 0.5 && t < 0.9));
    }

    #[test]
    fn morphetic_rejects_short_spike() {
        // 30 ms, 300-cent ornament in the middle of a 1 s note
        let c = contour(|t| Some(if (0.5..0.53).contains(&t) { 1500.0 } else { 1200.0 }), 1.0);
        let m = stabilize_morphetic(&c, &MorpheticParams::default()).unwrap();
        for i in 0..c.len() {
            assert_eq!(m.stable[i], c.cents[i] == 1200.0, "frame {i}");
        }
    }

    #[test]
    fn morphetic_slow_glide_stable() {
        let c = contour(|t| Some(1000.0 + 10.0 * t), 3.0);
        let m = stabilize_morphetic(&c, &MorpheticParams::default()).unwrap();
        assert_eq!(m.count(), c.len());
    }

    #[test]
    fn unvoiced_never_stable_and_params_checked() {
        let c = contour(|t| if t < 0.5 { None } else { Some(900.0) }, 1.0);
        let m = stabilize_morphetic(&c, &MorpheticParams::default()).unwrap();
        assert!(m.stable.iter().zip(&c.voiced).all(|(&s, &v)| !s || v));
        assert!(stabilize_masking(&c, &MaskingParams { tau_cents: 0.0, ..Default::default() }).is_err());
        assert!(stabilize_masking(&c, &MaskingParams { window_s: 0.01, ..Default::default() }).is_err());
    }
}
