mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rpmtrack::baselines::{c2g_fusion_framewise, path_score, viterbi_decode, viterbi_stft, Candidate, ViterbiConfig};
use rpmtrack::grid::{GridLogLikelihood, RpmGrid};
use rpmtrack::ingest::{FramingConfig, Signal};

fn lattice() -> impl Strategy<Value = Vec<Vec<Candidate>>> {
    prop::collection::vec(
        prop::collection::vec((300.0..4000.0f64, -5.0..5.0f64).prop_map(|(rpm, score)| Candidate { rpm, score }), 1..=8),
        1..=6,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn dp_equals_exhaustive_search(c in lattice(), penalty in prop_oneof![Just(0.0), 0.0..0.1f64]) {
        let (path, score) = viterbi_decode(&c, penalty).unwrap();
        let pairs: Vec<Vec<(f64, f64)>> = c.iter().map(|f| f.iter().map(|k| (k.rpm, k.score)).collect()).collect();
        let best = common::exhaustive_best(&pairs, penalty);
        prop_assert!((score - best).abs() <= 1e-9, "{} vs {}", score, best);
        prop_assert!((path_score(&c, &path, penalty) - score).abs() <= 1e-9);
    }

    #[test]
    fn zero_penalty_is_framewise_argmax(c in lattice()) {
        let (path, _) = viterbi_decode(&c, 0.0).unwrap();
        for (f, &i) in c.iter().zip(&path) {
            let top = f.iter().map(|k| k.score).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(f[i].score, top);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn framewise_commutes_with_permutation(
        rows in prop::collection::vec(prop::collection::vec(-20.0..0.0f64, 50), 2..12),
        perm_seed in any::<u64>(),
    ) {
        let g = RpmGrid::new(1000.0, 1049.0, 50).unwrap();
        let ls: Vec<_> = rows.into_iter().map(|r| GridLogLikelihood::from_unnormalized(g, r, "fused").unwrap()).collect();
        let times: Vec<f64> = (0..ls.len()).map(|t| t as f64).collect();
        let mut order: Vec<usize> = (0..ls.len()).collect();
        // deterministic Fisher-Yates
        let mut s = perm_seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted: Vec<_> = order.iter().map(|&i| ls[i].clone()).collect();
        let a = c2g_fusion_framewise(&ls, &times).unwrap().rpms();
        let b = c2g_fusion_framewise(&permuted, &times).unwrap().rpms();
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(b[k].to_bits(), a[i].to_bits());
        }
    }
}

#[test]
fn huge_penalty_holds_one_value() {
    let c = vec![
        vec![Candidate { rpm: 1000.0, score: 1.0 }, Candidate { rpm: 2000.0, score: 3.0 }],
        vec![Candidate { rpm: 1000.0, score: 5.0 }, Candidate { rpm: 2000.0, score: 0.0 }],
        vec![Candidate { rpm: 1000.0, score: 2.0 }, Candidate { rpm: 2000.0, score: 2.5 }],
    ];
    let (path, _) = viterbi_decode(&c, 1e6).unwrap();
    let rpms: Vec<f64> = path.iter().enumerate().map(|(t, &i)| c[t][i].rpm).collect();
    assert_eq!(rpms, vec![1000.0; 3]);
}

#[test]
fn viterbi_follows_clean_tone() {
    let fs = 12_800.0;
    let f0 = 1500.0 / 60.0;
    let x: Vec<f64> = (0..fs as usize * 2)
        .map(|i| {
            let t = i as f64 / fs;
            (1..=5).map(|m| (2.0 * PI * m as f64 * f0 * t).sin() / m as f64).sum()
        })
        .collect();
    let s = Signal::new(x, fs).unwrap();
    let g = RpmGrid::with_step(300.0, 4000.0, 1.0).unwrap();
    let out = viterbi_stft(&s, &FramingConfig::default(), &g, &ViterbiConfig::default()).unwrap();
    assert_eq!(out.points.len(), FramingConfig::default().frame_count(s.len()));
    for p in &out.points {
        assert!((p.rpm - 1500.0).abs() <= 2.0, "{}", p.rpm);
    }
}
