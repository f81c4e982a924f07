//! Published per-mode pitch sets: GMM means (cents above 82.4 Hz), variances
//! (cents²) and weights, including the out-of-octave representatives.

use crate::mode::Mode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetPitch {
    pub name: &'static str,
    pub mu: f64,
    pub var: f64,
    pub weight: f64,
    /// Inside the mode's one-octave representative set.
    pub in_octave: bool,
}

const fn p(name: &'static str, mu: f64, var: f64, weight: f64, in_octave: bool) -> PresetPitch {
    PresetPitch {
        name,
        mu,
        var,
        weight,
        in_octave,
    }
}

pub const GEEZ: [PresetPitch; 5] = [
    p("G3", 361.0, 11.0, 0.034, false),
    p("g1", 847.0, 21.0, 0.211, true),
    p("g2", 1171.0, 7.0, 0.171, true),
    p("g3", 1571.0, 14.0, 0.419, true),
    p("ġ1", 2047.0, 18.0, 0.112, false),
];

pub const EZIL: [PresetPitch; 9] = [
    p("E4", 189.0, 6.0, 0.022, false),
    p("E5", 447.0, 14.0, 0.023, false),
    p("e1", 670.0, 6.0, 0.106, true),
    p("e2", 940.0, 7.0, 0.151, true),
    p("e3", 1174.0, 7.0, 0.123, true),
    p("e4", 1406.0, 3.0, 0.416, true),
    p("e5", 1674.0, 15.0, 0.068, true),
    p("ė1", 1878.0, 5.0, 0.059, false),
    p("ė2", 2139.0, 5.0, 0.013, false),
];

pub const ARARAY: [PresetPitch; 7] = [
    p("A5", 173.0, 3.0, 0.008, false),
    p("a1", 520.0, 6.0, 0.318, true),
    p("a2", 692.0, 8.0, 0.173, true),
    p("a3", 910.0, 10.0, 0.176, true),
    p("a4", 1207.0, 5.0, 0.134, true),
    p("a5", 1381.0, 4.0, 0.027, true),
    p("ȧ1", 1716.0, 5.0, 0.084, false),
];

pub fn pitch_set(mode: Mode) -> &'static [PresetPitch] {
    match mode {
        Mode::Geez => &GEEZ,
        Mode::Ezil => &EZIL,
        Mode::Araray => &ARARAY,
    }
}

/// Weights renormalized to the simplex.
pub fn normalized_weights(mode: Mode) -> Vec<f64> {
    let set = pitch_set(mode);
    let total: f64 = set.iter().map(|p| p.weight).sum();
    set.iter().map(|p| p.weight / total).collect()
}

/// Recording counts per mode of the published corpus.
pub fn published_counts(mode: Mode) -> usize {
    match mode {
        Mode::Geez => 75,
        Mode::Ezil => 176,
        Mode::Araray => 118,
    }
}

/// Shortest and longest published recording durations, in seconds.
pub const DURATION_RANGE_S: (f64, f64) = (20.142, 177.476);
