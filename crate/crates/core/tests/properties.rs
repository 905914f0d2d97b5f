//! Randomized invariants.

use num_complex::Complex64 as C64;
use oatsim_core::measurement::{ProbTag, sample_log};
use oatsim_core::observables::husimi_point;
use oatsim_core::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn random_state(n: usize, parts: &[(f64, f64)]) -> PureState {
    let amps = parts.iter().take(1 << n).map(|&(re, im)| C64::new(re, im)).collect();
    PureState::normalized(Basis::Full(n), amps).unwrap()
}

fn parts(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coherent_state_paths_agree(n in 1usize..=8, theta in 0.0..PI, phi in -PI..PI) {
        let dir = BlochDirection::new(theta, phi);
        let full = atomic_coherent_state(n, dir, Basis::Full(n)).unwrap();
        let dicke = atomic_coherent_state(n, dir, Basis::Dicke(n)).unwrap();
        let embedded = dicke_embed(&dicke).unwrap();
        for (a, b) in full.amplitudes().iter().zip(embedded.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        let back = dicke_project(&full).unwrap();
        prop_assert!((overlap(&back, &dicke).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equatorial_overlap_law(n in 1usize..=20, m in 2u32..=6, phi in -PI..PI) {
        let step = 2.0 * PI / f64::from(m);
        let a = atomic_coherent_state(n, BlochDirection::new(PI / 2.0, phi), Basis::Dicke(n)).unwrap();
        let b = atomic_coherent_state(n, BlochDirection::new(PI / 2.0, phi + step), Basis::Dicke(n)).unwrap();
        let got = overlap(&a, &b).unwrap().norm();
        prop_assert!((got - (PI / f64::from(m)).cos().abs().powi(n as i32)).abs() < 1e-12);
    }

    #[test]
    fn evolution_preserves_norm(
        n in 2usize..=6,
        delta in -600.0..-200.0f64,
        t in 0.0..400.0f64,
        theta in 0.0..PI,
        phi in -PI..PI,
    ) {
        let cfg = DeviceConfig::table_s1();
        let subset: Vec<usize> = (0..n).collect();
        let op = build_h2(&cfg, &subset, delta, true).unwrap();
        let s = atomic_coherent_state(n, BlochDirection::new(theta, phi), Basis::Full(n)).unwrap();
        let (out, rep) = evolve(&s, &op, t, DEFAULT_TOL).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
        prop_assert!(rep.norm_drift < 1e-10);
        let e0 = op.expectation(&s).unwrap();
        let e1 = op.expectation(&out).unwrap();
        prop_assert!((e0 - e1).abs() < 1e-8 * (1.0 + e0.abs()));
    }

    #[test]
    fn readout_round_trip(raw in prop::collection::vec(0.0..1.0f64, 16), pick in Just((0usize..20).collect::<Vec<_>>()).prop_shuffle()) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-3);
        let sum: f64 = raw.iter().sum();
        let p = ProbVector::simplex(raw.iter().map(|x| x / sum).collect()).unwrap();
        let cfg = DeviceConfig::table_s1();
        let cm = ConfusionModel::from_device(&cfg, &pick[..4]).unwrap();
        let back = correct_readout(&apply_confusion(&p, &cm).unwrap(), &cm).unwrap();
        for (a, b) in p.values.iter().zip(&back.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent_and_valid(v in prop::collection::vec(-0.5..1.0f64, 8)) {
        prop_assume!(v.iter().sum::<f64>() > 1e-3);
        let q = ProbVector { values: v, tag: ProbTag::Quasi };
        let p = mle_project(&q);
        prop_assert!(p.values.iter().all(|x| *x >= 0.0));
        prop_assert!((p.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let again = mle_project(&p);
        for (a, b) in p.values.iter().zip(&again.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn protocol_matches_quasidistribution(n in 1usize..=6, amps in parts(64), theta in 0.0..PI, phi in -PI..PI) {
        let s = random_state(n, &amps);
        let dir = BlochDirection::new(theta, phi);
        let a = q_protocol(&s, dir).unwrap();
        let b = husimi_point(&s, dir).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn rotations_are_unitary(n in 1usize..=6, amps in parts(64), axis in -PI..PI, angle in 0.0..PI, z in -PI..PI) {
        let s = random_state(n, &amps);
        let r = QubitRotation { axis, angle, z_phase: z };
        let out = apply_local_rotations(&s, &vec![r; n]).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parity_is_bounded(n in 1usize..=6, amps in parts(64), gamma in -PI..PI) {
        let s = random_state(n, &amps);
        let p = parity_expectation(&s, gamma).unwrap();
        prop_assert!(p.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn sampling_is_layout_independent(seed in any::<u64>(), stream in 0u64..4) {
        let p = ProbVector::simplex(vec![0.1, 0.4, 0.2, 0.3]).unwrap();
        let a = sample_log(&p, 300, seed, stream, None).unwrap();
        let b = sample_log(&p, 300, seed, stream, None).unwrap();
        prop_assert_eq!(&a, &b);
        let t = CountTable::from_log(2, seed, a);
        prop_assert_eq!(t.counts.values().sum::<u64>(), 300);
    }

    #[test]
    fn state_json_round_trip(n in 1usize..=5, amps in parts(32)) {
        let s = random_state(n, &amps);
        let back = PureState::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back, s);
    }
}

#[test]
fn projection_matches_brute_force() {
    let cases = [
        vec![0.7, 0.5, -0.2],
        vec![1.3, -0.4, 0.1],
        vec![-0.1, -0.2, 1.3],
        vec![0.2, 0.3, 0.5],
        vec![0.45, 0.45, 0.1001],
    ];
    let step = 1e-3;
    let m = (1.0 / step) as usize;
    for v in cases {
        let sum: f64 = v.iter().sum();
        let q: Vec<f64> = v.iter().map(|x| x / sum).collect();
        let got = mle_project(&ProbVector { values: v.clone(), tag: ProbTag::Quasi });
        let mut best = (f64::INFINITY, [0.0; 3]);
        for i in 0..=m {
            for j in 0..=m - i {
                let p = [i as f64 * step, j as f64 * step, (m - i - j) as f64 * step];
                let d: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum();
                if d < best.0 {
                    best = (d, p);
                }
            }
        }
        for (a, b) in got.values.iter().zip(best.1) {
            assert!((a - b).abs() <= step, "{v:?}: {:?} vs {:?}", got.values, best.1);
        }
    }
}
