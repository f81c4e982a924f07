use proptest::prelude::*;
use yezema::ingest::{resample, synthesize, AudioBuffer, SynthSpec};
use yezema::pitch::{contour_stats, extract_contour, frame_count, TrackerParams, FRAME_SIZE};
use yezema::Mode;

fn tone(hz: f64, secs: f64, rate: f64) -> Vec<f32> {
    (0..(secs * rate) as usize)
        .map(|i| {
            let t = i as f64 / rate;
            (0.3 * (1..=4).map(|k| (2.0 * std::f64::consts::PI * hz * k as f64 * t).sin() / k as f64).sum::<f64>()) as f32
        })
        .collect()
}

fn median_voiced_cents(samples: Vec<f32>) -> f64 {
    let c = extract_contour(&AudioBuffer::new(samples, 22_050, "t"), &TrackerParams::default()).unwrap();
    let mut v: Vec<f64> = (0..c.len()).filter(|&i| c.voiced[i]).map(|i| 1200.0 * (c.f0_hz[i] / 82.4).log2()).collect();
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn frame_count_formula(len in 0usize..12_000) {
        let a = AudioBuffer::new((0..len).map(|i| ((i * 31) % 17) as f32 / 40.0 - 0.2).collect(), 22_050, "n");
        match extract_contour(&a, &TrackerParams::default()) {
            Ok(c) => {
                prop_assert_eq!(c.len(), (len - FRAME_SIZE) / 128 + 1);
                prop_assert_eq!(c.len(), frame_count(len, FRAME_SIZE));
                prop_assert!(c.f0_hz.iter().all(|f| f.is_finite()));
                prop_assert!((0..c.len()).filter(|&i| c.voiced[i]).all(|i| (60.0..=1200.0).contains(&c.f0_hz[i])));
            }
            Err(_) => prop_assert!(len < FRAME_SIZE),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn resampling_shift_moves_pitch(k in 1i32..=4, hz in 110.0f64..220.0) {
        // playing a tone resampled to a lower rate at the original rate raises it
        let base = tone(hz, 1.0, 22_050.0);
        let ratio = 2f64.powf(k as f64 / 12.0);
        let shifted = resample(&base, 22_050, (22_050.0 / ratio).round() as u32).unwrap();
        let d = median_voiced_cents(shifted) - median_voiced_cents(base);
        prop_assert!((d - 100.0 * k as f64).abs() < 10.0, "moved {} cents for {} semitones", d, k);
    }
}

#[test]
fn tracker_is_deterministic_across_exec_modes() {
    let (audio, _) = synthesize(&SynthSpec::for_mode(Mode::Araray, 4.0, 9)).unwrap();
    let par = extract_contour(&audio, &TrackerParams::default()).unwrap();
    let seq = extract_contour(
        &audio,
        &TrackerParams {
            exec: yezema::par::ExecMode::Sequential,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(par, seq);
    assert_eq!(par, extract_contour(&audio, &TrackerParams::default()).unwrap());
    let s = contour_stats(&par);
    assert!(s.voiced_ratio > 0.8, "{s:?}");
}

#[test]
fn silence_is_unvoiced() {
    let c = extract_contour(&AudioBuffer::new(vec![0.0; 22_050], 22_050, "z"), &TrackerParams::default()).unwrap();
    assert_eq!(c.voiced_count(), 0);
}
