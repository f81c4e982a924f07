use proptest::prelude::*;
use yezema::features::{bin_center, PitchDistribution, N_BINS};
use yezema::modescale::{aligned_average, fit_gmm, optimal_shift, pitch_set_report, GmmComponent, GmmParams, ReportParams};
use yezema::Mode;

fn bumps(centres: &[(f64, f64, f64)]) -> PitchDistribution {
    let bins = (0..N_BINS)
        .map(|i| {
            let x = bin_center(i);
            centres.iter().map(|&(mu, var, w)| w * (-(x - mu) * (x - mu) / (2.0 * var)).exp() / var.sqrt()).sum()
        })
        .collect();
    PitchDistribution::from_bins(bins)
}

fn components() -> impl Strategy<Value = Vec<GmmComponent>> {
    prop::collection::vec((0.0f64..3500.0, 1.0f64..150.0, 0.01f64..1.0), 1..12).prop_map(|v| {
        let total: f64 = v.iter().map(|c| c.2).sum();
        let mut c: Vec<GmmComponent> = v.into_iter().map(|(mu, var, w)| GmmComponent { mu, var, weight: w / total }).collect();
        c.sort_by(|a, b| a.mu.total_cmp(&b.mu));
        c
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn report_is_invariant_to_a_global_shift(c in components(), k in -5i64..=5) {
        let p = ReportParams::default();
        let shift = 10.0 * k as f64;
        let moved: Vec<GmmComponent> = c.iter().map(|x| GmmComponent { mu: x.mu + shift, ..*x }).collect();
        match (pitch_set_report(&c, Mode::Ezil, &p), pitch_set_report(&moved, Mode::Ezil, &p)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.pitches.len(), b.pitches.len());
                for (x, y) in a.pitches.iter().zip(&b.pitches) {
                    prop_assert_eq!(&x.name, &y.name);
                    prop_assert_eq!(x.in_octave, y.in_octave);
                    prop_assert!((y.mu_cents - x.mu_cents - shift).abs() < 1e-9);
                    match (x.delta_mu, y.delta_mu) {
                        (Some(d), Some(e)) => prop_assert!((d - e).abs() < 1e-9),
                        (None, None) => {}
                        other => prop_assert!(false, "{:?}", other),
                    }
                }
                let span = p.window_span();
                let inside: Vec<f64> = a.in_octave().map(|x| x.mu_cents).collect();
                prop_assert!(inside.last().unwrap() - inside[0] < span);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "shift changed the outcome"),
        }
    }

    #[test]
    fn alignment_is_antisymmetric(
        a in prop::collection::vec((500.0f64..3000.0, 20.0f64..400.0, 0.1f64..1.0), 1..5),
        b in prop::collection::vec((500.0f64..3000.0, 20.0f64..400.0, 0.1f64..1.0), 1..5),
    ) {
        let p = bumps(&a);
        let q = bumps(&b);
        prop_assert_eq!(optimal_shift(&p, &q, 120).unwrap(), -optimal_shift(&q, &p, 120).unwrap());
        prop_assert_eq!(optimal_shift(&p, &p, 120).unwrap(), 0);
    }

    #[test]
    fn em_recovers_separated_components(m1 in 400.0f64..1500.0, gap in 250.0f64..900.0, w in 0.25f64..0.75) {
        let truth: [(f64, f64, f64); 2] = [(m1, 120.0, w), (m1 + gap, 60.0, 1.0 - w)];
        let d = bumps(&truth);
        let fit = fit_gmm(&d, &[m1 - 60.0, m1 + gap + 60.0], &GmmParams::default()).unwrap();
        for (c, (m, _, w)) in fit.components.iter().zip(truth) {
            prop_assert!((c.mu - m).abs() < 2.0, "{:?}", fit.components);
            prop_assert!((c.weight - w).abs() < 0.02, "{:?}", fit.components);
        }
    }
}

#[test]
fn unshifted_average_of_copies_is_the_copy() {
    let d = bumps(&[(900.0, 50.0, 1.0), (1300.0, 30.0, 0.5)]);
    let (avg, lost) = aligned_average(&[d.clone(), d.clone(), d.clone()], &[0, 0, 0]);
    assert_eq!(lost, 0.0);
    for (a, b) in avg.bins.iter().zip(&d.bins) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn shifted_copies_realign() {
    let d = bumps(&[(1200.0, 40.0, 1.0), (1500.0, 40.0, 0.7)]);
    for k in [-40i64, -3, 7, 55] {
        let (bins, _) = d.shifted(k);
        let moved = PitchDistribution::from_bins(bins);
        assert_eq!(optimal_shift(&moved, &d, 120).unwrap(), -optimal_shift(&d, &moved, 120).unwrap());
        let s = optimal_shift(&moved, &d, 120).unwrap();
        assert_eq!(s.abs(), k.abs(), "{k}");
    }
}
