//! Closed-form and cross-path checks of the public API.

use num_complex::Complex64 as C64;
use oatsim_core::experiment::{parity_analysis_rotation, parity_basis_rotation, prepare_state};
use oatsim_core::measurement::{bitstring, sample_log};
use oatsim_core::observables::gamma_grid;
use oatsim_core::*;
use std::f64::consts::{FRAC_PI_2, PI};

fn table() -> DeviceConfig {
    DeviceConfig::table_s1()
}

#[test]
fn device_file_loads_with_expected_columns() {
    let cfg = table();
    assert_eq!(cfg.qubit_count(), 20);
    assert_eq!(cfg.qubits[0].g_mhz, 27.6);
    assert_eq!(cfg.qubits[0].f0, 0.929);
    assert_eq!(cfg.qubits[0].f1, 0.887);
    let mean = cfg.qubits.iter().map(|q| q.g_mhz).sum::<f64>() / 20.0;
    assert!((mean - 27.45).abs() < 0.01, "mean g {mean}");
    let back = load_device_config(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn device_rejects_bad_records() {
    let cfg = table();
    let mut bad = cfg.clone();
    bad.qubits[3].f1 = 1.2;
    assert!(load_device_config(&bad.to_json()).is_err());
    let mut bad = cfg.clone();
    bad.qubits[0].g_mhz = 0.0;
    assert!(load_device_config(&bad.to_json()).is_err());
    assert!(cfg.with_uniform_coupling(-1.0).is_err());
}

#[test]
fn dispersive_coupling_scale() {
    let cfg = table().with_uniform_coupling(27.5).unwrap();
    let m = effective_coupling_matrix(&cfg, &[0, 1], -330.0).unwrap();
    assert!((m[0][1] + 2.2917).abs() < 1e-3);
    let all: Vec<usize> = (0..20).collect();
    let p = DispersiveParams::new(&table(), &all, -470.0).unwrap();
    assert!((p.mean_coupling_mhz + 1.60).abs() < 0.01, "{}", p.mean_coupling_mhz);
    assert!(p.is_dispersive());
    assert!(matches!(
        effective_coupling_matrix(&cfg, &[0], 0.0),
        Err(Error::ZeroDetuning)
    ));
}

#[test]
fn cat_time_at_device_coupling() {
    let all: Vec<usize> = (0..20).collect();
    let lam = DispersiveParams::new(&table(), &all, -470.0).unwrap().mean_coupling_mhz;
    let t2 = cat_time(2, lam).unwrap();
    assert!((t2 - 156.0).abs() < 1.5, "{t2}");
    assert!(cat_time(1, lam).is_err());
    assert!(cat_time(2, 0.0).is_err());
}

#[test]
fn single_qubit_equator_state() {
    let s = atomic_coherent_state(1, BlochDirection::new(FRAC_PI_2, -FRAC_PI_2), Basis::Full(1))
        .unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((s.amplitudes()[0] - C64::new(h, 0.0)).norm() < 1e-15);
    assert!((s.amplitudes()[1] - C64::new(0.0, -h)).norm() < 1e-15);
}

#[test]
fn component_overlap_at_three_components() {
    let n = 20;
    let a = atomic_coherent_state(n, BlochDirection::new(FRAC_PI_2, 0.3), Basis::Dicke(n)).unwrap();
    let b = atomic_coherent_state(n, BlochDirection::new(FRAC_PI_2, 0.3 + 2.0 * PI / 3.0), Basis::Dicke(n))
        .unwrap();
    let o = overlap(&a, &b).unwrap().norm();
    assert!((o - 0.5f64.powi(20)).abs() < 1e-12);
}

#[test]
fn vacuum_rabi_swap_period() {
    let cfg = table();
    let res = ResonatorSpec::new(1, cfg.resonator_ghz).unwrap();
    let mut spec = H1Spec::uniform_detuning(1, res, 0.0);
    spec.include_crosstalk = false;
    let op = build_h1(&cfg, &[0], &spec).unwrap();
    let excited = PureState::new(
        Basis::Cavity { qubits: 1, photons: 1 },
        vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
    )
    .unwrap();
    let period = 1.0 / (2.0 * 27.6e-3);
    let (half, _) = evolve(&excited, &op, period / 2.0, 1e-12).unwrap();
    // Index 2 is one photon with the qubit in |0⟩.
    assert!((half.amplitudes()[2].norm_sqr() - 1.0).abs() < 1e-9);
    let (full, _) = evolve(&excited, &op, period, 1e-12).unwrap();
    assert!((full.amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-9);
}

#[test]
fn pair_coupling_element() {
    let cfg = table();
    let op = build_h2(&cfg, &[0, 1], -330.0, false).unwrap().to_full_sparse();
    let OperatorHandle::FullSparse { matrix, .. } = op else { unreachable!() };
    let expect = 2.0 * PI * 1e-3 * 27.6 * 27.4 / -330.0;
    assert!((matrix.get(1, 2).re - expect).abs() < 1e-15);
    assert!(matrix.get(1, 2).im.abs() < 1e-15);
}

#[test]
fn ghz_emerges_for_small_registers() {
    for n in 2..=8 {
        let op = build_oat_uniform(n, 1.6, OatFrame::Aligned).unwrap();
        let start = atomic_coherent_state(n, BlochDirection::new(FRAC_PI_2, -FRAC_PI_2), Basis::Dicke(n))
            .unwrap();
        let (psi, _) = evolve(&start, &op, cat_time(2, 1.6).unwrap(), DEFAULT_TOL).unwrap();
        let reference =
            ghz_reference_state(n, BlochDirection::new(FRAC_PI_2, -FRAC_PI_2), Basis::Dicke(n)).unwrap();
        let f = overlap(&psi, &reference).unwrap().norm_sqr();
        assert!(f >= 1.0 - 1e-9, "N={n}: {f}");
    }
}

#[test]
fn dicke_and_sector_paths_agree() {
    let n = 8;
    let cfg = table().with_uniform_coupling(27.5).unwrap();
    let subset: Vec<usize> = (0..n).collect();
    let h2 = build_h2(&cfg, &subset, -400.0, false).unwrap();
    let lam = DispersiveParams::new(&cfg, &subset, -400.0).unwrap().mean_coupling_mhz;
    let oat = build_oat_uniform(n, lam, OatFrame::Exchange).unwrap();
    let dir = BlochDirection::new(1.1, 0.4);
    let t = cat_time(3, lam).unwrap();
    let (a, _) = evolve(&atomic_coherent_state(n, dir, Basis::Full(n)).unwrap(), &h2, t, 1e-12).unwrap();
    let (b, _) = evolve(&atomic_coherent_state(n, dir, Basis::Dicke(n)).unwrap(), &oat, t, 1e-12).unwrap();
    let f = overlap(&a, &dicke_embed(&b).unwrap()).unwrap().norm_sqr();
    assert!(f >= 1.0 - 1e-10, "{f}");
    let full = h2.to_full_sparse();
    let (c, _) = evolve(&atomic_coherent_state(n, dir, Basis::Full(n)).unwrap(), &full, t, 1e-12).unwrap();
    assert!(overlap(&a, &c).unwrap().norm_sqr() >= 1.0 - 1e-10);
}

#[test]
fn equal_couplings_are_excitation_conserving() {
    let cfg = table();
    let op = build_h2(&cfg, &[0, 1, 2, 3], -400.0, true).unwrap();
    assert!(conserved_excitation_check(&op));
    assert!(op.is_hermitian());
    let res = ResonatorSpec::new(2, cfg.resonator_ghz).unwrap();
    let h1 = build_h1(&cfg, &[0, 1, 2], &H1Spec::uniform_detuning(3, res, -400.0)).unwrap();
    assert!(conserved_excitation_check(&h1));
    assert!(h1.is_hermitian());
}

#[test]
fn initial_grid_peaks_at_start_direction() {
    let n = 6;
    let s = atomic_coherent_state(n, BlochDirection::new(FRAC_PI_2, -FRAC_PI_2), Basis::Dicke(n)).unwrap();
    let q = husimi_q(&s, GridSpec { n_theta: 61, n_phi: 120 }).unwrap();
    let (theta, phi, v) = q.argmax();
    assert!((theta - FRAC_PI_2).abs() < 1e-12);
    assert!((phi + FRAC_PI_2).abs() < 1e-12);
    assert!((v - 1.0).abs() < 1e-12);
    assert_eq!(equatorial_lobe_count(&q).unwrap(), 1);
}

#[test]
fn cat_lobes_follow_component_count() {
    let n = 20;
    let op = build_oat_uniform(n, 1.6, OatFrame::Quadratic).unwrap();
    let start = atomic_coherent_state(n, BlochDirection::new(FRAC_PI_2, -FRAC_PI_2), Basis::Dicke(n)).unwrap();
    let sched = Schedule::parse("cat:5,4,3,2", 1.6).unwrap();
    let (states, _) = snapshot_series(&start, &op, &sched, DEFAULT_TOL).unwrap();
    for (s, m) in states.iter().zip([5, 4, 3, 2]) {
        let q = husimi_q(s, GridSpec::default()).unwrap();
        assert_eq!(equatorial_lobe_count(&q).unwrap(), m);
    }
}

#[test]
fn early_twisting_squeezes() {
    let n = 20;
    let all: Vec<usize> = (0..20).collect();
    let lam = DispersiveParams::new(&table(), &all, -470.0).unwrap().mean_coupling_mhz;
    let op = build_oat_uniform(n, lam, OatFrame::Exchange).unwrap();
    let start = atomic_coherent_state(n, BlochDirection::new(FRAC_PI_2, -FRAC_PI_2), Basis::Dicke(n)).unwrap();
    let (s, _) = evolve(&start, &op, 15.0, DEFAULT_TOL).unwrap();
    let ratio = collective_moments(&s).squeezing_ratio.unwrap();
    assert!(ratio < 1.0, "{ratio}");
    let coherent = collective_moments(&start).squeezing_ratio.unwrap();
    assert!((coherent - 1.0).abs() < 1e-9);
}

#[test]
fn ideal_ghz_parity_curve() {
    let n = 4;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); 16];
    amps[0] = C64::new(h, 0.0);
    amps[15] = C64::new(0.0, h);
    let s = PureState::new(Basis::Full(n), amps).unwrap();
    for g in gamma_grid(17).unwrap() {
        let p = parity_expectation(&s, g).unwrap();
        assert!((p - (4.0 * g + FRAC_PI_2).cos()).abs() < 1e-12, "γ={g}");
    }
    let fit = fit_fringe(&ParityCurve::scan(&s, 41).unwrap(), n).unwrap();
    assert!((fit.amplitude - 1.0).abs() < 1e-12);
    assert!((fit.phase - FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn witness_threshold() {
    assert_eq!(ghz_fidelity(0.5, 0.5, 0.5).unwrap(), (1.0, true));
    assert!(!ghz_fidelity(0.25, 0.25, 0.25).unwrap().1);
    let (f, genuine) = ghz_fidelity(0.3, 0.3, 0.225).unwrap();
    assert!((f - 0.525).abs() < 1e-15);
    assert!(genuine);
    assert!(ghz_fidelity(1.2, 0.5, 0.1).is_err());
    assert!(ghz_fidelity(0.5, 0.5, -0.1).is_err());
}

#[test]
fn exact_pipeline_gives_unit_fidelity() {
    let cfg = table();
    let mut exp = GhzExperiment::new((0..4).collect(), GhzModel::Oat { lambda_mhz: 1.6, frame: OatFrame::Aligned });
    let r = run_ghz_experiment(&cfg, &exp).unwrap();
    assert!((r.fidelity - 1.0).abs() < 1e-9);
    exp.confusion = true;
    let r = run_ghz_experiment(&cfg, &exp).unwrap();
    assert!(r.raw_fidelity < 0.99);
    assert!((r.fidelity - 1.0).abs() < 1e-9, "{}", r.fidelity);
}

#[test]
fn sampled_pipeline_shape() {
    let cfg = table();
    let mut exp = GhzExperiment::new((0..4).collect(), GhzModel::Oat { lambda_mhz: 1.6, frame: OatFrame::Aligned });
    exp.shots = Shots::Count(experiment::default_shots(4));
    exp.confusion = true;
    exp.seed = 11;
    let r = run_ghz_experiment(&cfg, &exp).unwrap();
    assert_eq!(r.shots_per_setting, Some(480));
    let std = r.amplitude_subgroup_std.unwrap();
    assert!(std > 0.0);
    assert!((r.fit.amplitude - 1.0).abs() <= 3.0 * std, "{} ± {std}", r.fit.amplitude);
    assert_eq!(run_ghz_experiment(&cfg, &exp).unwrap(), r);
}

#[test]
fn parity_rotations_prepare_zone_three() {
    assert_eq!(parity_basis_rotation(3)[0], QubitRotation::x_half());
    assert_eq!(parity_basis_rotation(4)[0], QubitRotation::y_half());
    assert_eq!(parity_analysis_rotation(3, 0.2).len(), 3);
    let cfg = table();
    let exp = GhzExperiment::new((0..3).collect(), GhzModel::Oat { lambda_mhz: 1.6, frame: OatFrame::Aligned });
    let (_, t, psi) = prepare_state(&cfg, &exp).unwrap();
    assert!((t - cat_time(2, 1.6).unwrap()).abs() < 1e-12);
    let (p0, p1) = corner_populations(&apply_local_rotations(&psi, &parity_basis_rotation(3)).unwrap()).unwrap();
    assert!((p0 - 0.5).abs() < 1e-9 && (p1 - 0.5).abs() < 1e-9);
}

#[test]
fn count_table_text_round_trip() {
    let p = ProbVector::simplex(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let log = sample_log(&p, 1000, 5, 0, None).unwrap();
    let t = CountTable::from_log(2, 5, log);
    let text = t.to_text();
    assert!(text.starts_with("# n=2 shots=1000 seed=5\n"));
    let back = CountTable::from_text(&text).unwrap();
    assert_eq!(back.counts, t.counts);
    assert_eq!(bitstring(1, 3), "100");
}

#[test]
fn schedule_parsing() {
    let s = Schedule::parse("cat:2,5", 1.0).unwrap();
    assert!(s.times()[0] < s.times()[1]);
    assert!(Schedule::parse("0,10,5", 1.0).is_err());
    assert!(Schedule::parse("-1", 1.0).is_err());
    assert!(Schedule::parse("cat:1", 1.0).is_err());
    assert_eq!(Schedule::parse("0, 12.5", 1.0).unwrap().times(), &[0.0, 12.5]);
}

#[test]
fn resonator_is_traced_out_of_q() {
    let n = 3;
    let a = atomic_coherent_state(n, BlochDirection::new(0.4, 1.0), Basis::Full(n)).unwrap();
    let b = atomic_coherent_state(n, BlochDirection::new(2.0, -0.3), Basis::Full(n)).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps: Vec<C64> = a.amplitudes().iter().chain(b.amplitudes()).map(|x| x * h).collect();
    let joint = PureState::new(Basis::Cavity { qubits: n, photons: 1 }, amps).unwrap();
    let spec = GridSpec { n_theta: 9, n_phi: 12 };
    let qj = husimi_q(&joint, spec).unwrap();
    let (qa, qb) = (husimi_q(&a, spec).unwrap(), husimi_q(&b, spec).unwrap());
    for i in 0..9 {
        for j in 0..12 {
            let expect = (qa.values[i][j] + qb.values[i][j]) / 2.0;
            assert!((qj.values[i][j] - expect).abs() < 1e-14);
        }
    }
}
