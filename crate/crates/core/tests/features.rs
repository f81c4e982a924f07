use proptest::prelude::*;
use yezema::contour::{stabilize_masking, CentContour, MaskingParams};
use yezema::features::{
    pitch_histogram, read_feature_file, spectral_baselines, split_segments, time_avg_chroma, write_feature_file, FeatureKind, FeatureRecord,
    SpectralParams, N_BINS,
};
use yezema::ingest::AudioBuffer;
use yezema::par::ExecMode;

const HOP: f64 = 128.0 / 22_050.0;

fn frames() -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(prop::option::weighted(0.85, -400.0f64..5200.0), 1..600)
}

fn tone(hz: f64, secs: f64) -> AudioBuffer {
    let samples = (0..(secs * 22_050.0) as usize)
        .map(|i| (0.4 * (2.0 * std::f64::consts::PI * hz * i as f64 / 22_050.0).sin()) as f32)
        .collect();
    AudioBuffer::new(samples, 22_050, "tone")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn histogram_ignores_frame_order(v in frames(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut w = v.clone();
        w.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = pitch_histogram(&CentContour::from_frames(&v, HOP), None);
        let b = pitch_histogram(&CentContour::from_frames(&w, HOP), None);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn masked_support_within_unmasked(v in frames(), tau in 5.0f64..400.0) {
        let c = CentContour::from_frames(&v, HOP);
        let mask = stabilize_masking(&c, &MaskingParams { tau_cents: tau, ..Default::default() }).unwrap();
        let all = pitch_histogram(&c, None);
        let kept = pitch_histogram(&c, Some(&mask));
        prop_assert_eq!(kept.bins.len(), N_BINS);
        prop_assert!(kept.n_frames <= all.n_frames);
        prop_assert!(kept.bins.iter().zip(&all.bins).all(|(k, a)| *k == 0.0 || *a > 0.0));
    }

    #[test]
    fn feature_file_round_trip(
        segs in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..40), 1..6),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.feat");
        let mut records = Vec::new();
        for values in &segs {
            for kind in [FeatureKind::Chroma12, FeatureKind::Mfcc40] {
                records.push(FeatureRecord { kind, values: values.clone() });
            }
        }
        write_feature_file(&p, &records).unwrap();
        let back = read_feature_file(&p).unwrap();
        prop_assert_eq!(&back, &records);
        let split = split_segments(back);
        prop_assert_eq!(split.len(), segs.len());
        prop_assert!(split.iter().all(|s| s.len() == 2));
    }
}

#[test]
fn truncated_feature_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.feat");
    write_feature_file(&p, &[FeatureRecord { kind: FeatureKind::Mel128, values: vec![1.0; 128] }]).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
    assert!(read_feature_file(&p).is_err());
}

#[test]
fn chroma_is_octave_invariant() {
    let p = SpectralParams::default();
    let argmax = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    for hz in [196.0, 261.63, 329.63] {
        let lo = time_avg_chroma(&tone(hz, 1.0), &p).unwrap();
        let hi = time_avg_chroma(&tone(2.0 * hz, 1.0), &p).unwrap();
        assert_eq!(lo.values.len(), 12);
        assert_eq!(argmax(&lo.values), argmax(&hi.values), "{hz} Hz");
    }
}

#[test]
fn baselines_match_across_exec_modes() {
    let a = tone(220.0, 2.0);
    let par = spectral_baselines(&a, &SpectralParams::default()).unwrap();
    let seq = spectral_baselines(&a, &SpectralParams { exec: ExecMode::Sequential, ..Default::default() }).unwrap();
    assert_eq!(par, seq);
    let lens: Vec<usize> = par.iter().map(|f| f.values.len()).collect();
    assert_eq!(lens, [12, 128, 40]);
    assert!(par.iter().all(|f| f.values.iter().all(|x| x.is_finite())));
}
