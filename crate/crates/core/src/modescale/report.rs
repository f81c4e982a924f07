use serde::{Deserialize, Serialize};

use super::gmm::GmmComponent;
use crate::{Error, Mode, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportParams {
    /// Components with variance at or above this (cents²) are not representative.
    pub var_threshold: f64,
    pub octave_cents: f64,
    /// Allowed deviation from an exact octave when naming out-of-set pitches.
    pub octave_tolerance_cents: f64,
}

impl Default for ReportParams {
    fn default() -> Self {
        ReportParams {
            var_threshold: 100.0,
            octave_cents: 1200.0,
            octave_tolerance_cents: 60.0,
        }
    }
}

impl ReportParams {
    /// Maximum span of the in-octave set. Keeping it below an octave minus the
    /// naming tolerance means the set never holds two octave-equivalent pitches.
    pub fn window_span(&self) -> f64 {
        self.octave_cents - self.octave_tolerance_cents
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPitch {
    pub name: String,
    pub mu_cents: f64,
    pub var: f64,
    pub weight: f64,
    pub in_octave: bool,
    /// Distance to the next lower representative pitch.
    pub delta_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchSetReport {
    pub mode: Mode,
    /// Representative pitches, ascending.
    pub pitches: Vec<NamedPitch>,
    pub excluded: Vec<GmmComponent>,
}

impl PitchSetReport {
    pub fn in_octave(&self) -> impl Iterator<Item = &NamedPitch> {
        self.pitches.iter().filter(|p| p.in_octave)
    }

    /// Successive intervals between the in-octave pitches.
    pub fn in_octave_intervals(&self) -> Vec<f64> {
        let mus: Vec<f64> = self.in_octave().map(|p| p.mu_cents).collect();
        mus.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn dotted(letter: char) -> char {
    match letter {
        'g' => 'ġ',
        'e' => 'ė',
        'a' => 'ȧ',
        c => c,
    }
}

/// Representative pitch set of one mode from GMM components sorted by mean.
pub fn pitch_set_report(components: &[GmmComponent], mode: Mode, p: &ReportParams) -> Result<PitchSetReport> {
    let (reps, excluded): (Vec<GmmComponent>, Vec<GmmComponent>) = components.iter().partition(|c| c.var < p.var_threshold);
    if reps.is_empty() {
        return Err(Error::NoRepresentativeComponents { threshold: p.var_threshold });
    }
    let mut reps = reps;
    reps.sort_by(|a, b| a.mu.total_cmp(&b.mu));

    let span = p.window_span();
    let (mut best_start, mut best_end, mut best_w) = (0, 0, f64::NEG_INFINITY);
    for s in 0..reps.len() {
        let mut e = s;
        let mut w = 0.0;
        while e < reps.len() && reps[e].mu - reps[s].mu < span {
            w += reps[e].weight;
            e += 1;
        }
        if w > best_w {
            (best_start, best_end, best_w) = (s, e, w);
        }
    }

    let letter = mode.letter();
    let window = &reps[best_start..best_end];
    let mut pitches = Vec::with_capacity(reps.len());
    for (i, c) in reps.iter().enumerate() {
        let in_octave = (best_start..best_end).contains(&i);
        let name = if in_octave {
            format!("{letter}{}", i - best_start + 1)
        } else {
            let offset = |dir: f64| {
                window
                    .iter()
                    .enumerate()
                    .map(|(k, w)| (k, (c.mu - (w.mu + dir * p.octave_cents)).abs()))
                    .filter(|&(_, d)| d <= p.octave_tolerance_cents)
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(k, _)| k + 1)
            };
            if c.mu < window[0].mu {
                match offset(-1.0) {
                    Some(k) => format!("{}{k}", letter.to_ascii_uppercase()),
                    None => format!("{}?", letter.to_ascii_uppercase()),
                }
            } else {
                match offset(1.0) {
                    Some(k) => format!("{}{k}", dotted(letter)),
                    None => format!("{}?", dotted(letter)),
                }
            }
        };
        pitches.push(NamedPitch {
            name,
            mu_cents: c.mu,
            var: c.var,
            weight: c.weight,
            in_octave,
            delta_mu: (i > 0).then(|| c.mu - reps[i - 1].mu),
        });
    }
    Ok(PitchSetReport { mode, pitches, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn from_presets(mode: Mode) -> Vec<GmmComponent> {
        presets::pitch_set(mode)
            .iter()
            .map(|p| GmmComponent {
                mu: p.mu,
                var: p.var,
                weight: p.weight,
            })
            .collect()
    }

    #[test]
    fn published_sets_are_named_back() {
        for mode in Mode::ALL {
            let r = pitch_set_report(&from_presets(mode), mode, &ReportParams::default()).unwrap();
            let names: Vec<&str> = r.pitches.iter().map(|p| p.name.as_str()).collect();
            let want: Vec<&str> = presets::pitch_set(mode).iter().map(|p| p.name).collect();
            assert_eq!(names, want, "{mode}");
            for (got, p) in r.pitches.iter().zip(presets::pitch_set(mode)) {
                assert_eq!(got.in_octave, p.in_octave);
            }
        }
    }

    #[test]
    fn geez_intervals() {
        let r = pitch_set_report(&from_presets(Mode::Geez), Mode::Geez, &ReportParams::default()).unwrap();
        assert_eq!(r.in_octave_intervals(), vec![324.0, 400.0]);
        assert_eq!(r.pitches[0].delta_mu, None);
        assert_eq!(r.pitches[1].delta_mu, Some(486.0));
    }

    #[test]
    fn broad_components_excluded() {
        let mut c = from_presets(Mode::Geez);
        c[2].var = 150.0;
        let r = pitch_set_report(&c, Mode::Geez, &ReportParams::default()).unwrap();
        assert_eq!(r.excluded.len(), 1);
        assert_eq!(r.pitches.len(), 4);
        c.iter_mut().for_each(|x| x.var = 100.0);
        assert!(matches!(
            pitch_set_report(&c, Mode::Geez, &ReportParams::default()),
            Err(Error::NoRepresentativeComponents { .. })
        ));
    }
}
