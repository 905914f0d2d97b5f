//! Time evolution ψ(t) = e^{−iHt}ψ(0) on every operator form, snapshot
//! schedules and per-qubit frame phases.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::device::cat_time;
use crate::error::{Error, Result};
use crate::hamiltonian::OperatorHandle;
use crate::krylov::{propagate, KrylovOptions, StepRecord};
use crate::states::{overlap, Basis, PureState};

pub const DEFAULT_TOL: f64 = 1e-10;
const TOL_RANGE: (f64, f64) = (1e-14, 1e-6);
const UNITARITY_TOL: f64 = 1e-10;

/// Strictly increasing, nonnegative time points in ns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule(Vec<f64>);

impl Schedule {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("schedule is empty".into()));
        }
        if points.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument(
                "schedule times must be finite and >= 0".into(),
            ));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "schedule times must be strictly increasing".into(),
            ));
        }
        Ok(Self(points))
    }

    /// Parse `t1,t2,...` (ns) or `cat:m1,m2,...`, the latter expanded through
    /// [`cat_time`] with twisting strength `lambda_mhz`. Cat orders are sorted
    /// by the resulting time.
    pub fn parse(text: &str, lambda_mhz: f64) -> Result<Self> {
        let text = text.trim();
        if let Some(list) = text.strip_prefix("cat:") {
            let mut ts = list
                .split(',')
                .map(|m| {
                    let m: u32 = m.trim().parse().map_err(|_| {
                        Error::Parse(format!("cat order {m:?} is not an integer"))
                    })?;
                    cat_time(m, lambda_mhz)
                })
                .collect::<Result<Vec<f64>>>()?;
            ts.sort_by(f64::total_cmp);
            return Self::new(ts);
        }
        let ts = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("time {t:?} is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(ts)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }
}

/// Diagnostics of one propagation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PropagationReport {
    pub form: &'static str,
    pub steps: Vec<StepRecord>,
    /// Sum of per-step truncation error estimates.
    pub error_estimate: f64,
    /// |‖ψ(t)‖ − 1|.
    pub norm_drift: f64,
    pub dense_fallback: bool,
}

impl PropagationReport {
    pub fn max_subspace_dim(&self) -> usize {
        self.steps.iter().map(|s| s.subspace_dim).max().unwrap_or(0)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol:e} outside [{:e}, {:e}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    Ok(())
}

/// e^{−iHt}ψ for t ≥ 0 (ns).
pub fn evolve(
    state: &PureState,
    op: &OperatorHandle,
    t: f64,
    tol: f64,
) -> Result<(PureState, PropagationReport)> {
    check_tol(tol)?;
    if state.basis() != op.basis() {
        return Err(Error::BasisMismatch(format!(
            "{} operator expects {:?}, state is {:?}",
            op.form_name(),
            op.basis(),
            state.basis()
        )));
    }
    let opts = KrylovOptions {
        tol,
        ..KrylovOptions::default()
    };
    let mut report = PropagationReport {
        form: op.form_name(),
        ..PropagationReport::default()
    };
    let amps = match op {
        OperatorHandle::DickeDiagonal { rates, .. } => state
            .amplitudes()
            .iter()
            .zip(rates)
            .map(|(a, r)| a * C64::from_polar(1.0, -r * t))
            .collect(),
        OperatorHandle::FullSparse { matrix, .. } => {
            let (v, steps, dense) = propagate(matrix, state.amplitudes(), t, &opts)?;
            report.steps = steps;
            report.dense_fallback = dense;
            v
        }
        OperatorHandle::SectorBlocked { index, blocks, .. } => {
            let x = state.amplitudes();
            let parts = blocks
                .par_iter()
                .enumerate()
                .map(|(k, block)| {
                    let members = index.sector(k);
                    let xs: Vec<C64> = members.iter().map(|&m| x[m as usize]).collect();
                    if xs.iter().all(|a| *a == C64::new(0.0, 0.0)) {
                        return Ok((xs, Vec::new(), false));
                    }
                    // each block carries the relative error budget of the whole state
                    propagate(block, &xs, t, &opts)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out = vec![C64::new(0.0, 0.0); x.len()];
            for (k, (v, steps, dense)) in parts.into_iter().enumerate() {
                for (&m, a) in index.sector(k).iter().zip(v) {
                    out[m as usize] = a;
                }
                report.steps.extend(steps);
                report.dense_fallback |= dense;
            }
            out
        }
    };
    report.error_estimate = report.steps.iter().fold(0.0, |acc, s| acc + s.error_estimate);
    let norm = crate::sparse::norm(&amps);
    report.norm_drift = (norm - state.norm()).abs();
    if report.norm_drift > UNITARITY_TOL {
        return Err(Error::NonConvergence(format!(
            "norm drift {:.3e} after propagation",
            report.norm_drift
        )));
    }
    Ok((PureState::from_parts_unchecked(state.basis(), amps), report))
}

/// States at each schedule point, propagating from one point to the next.
/// The chained final state is re-checked against a direct propagation to the
/// last time; disagreement beyond 10·tol is a nonconvergence error.
pub fn snapshot_series(
    state: &PureState,
    op: &OperatorHandle,
    sched: &Schedule,
    tol: f64,
) -> Result<(Vec<PureState>, Vec<PropagationReport>)> {
    let mut states = Vec::with_capacity(sched.times().len());
    let mut reports = Vec::with_capacity(sched.times().len());
    let mut current = state.clone();
    let mut last = 0.0;
    for &t in sched.times() {
        let (next, rep) = evolve(&current, op, t - last, tol)?;
        states.push(next.clone());
        reports.push(rep);
        current = next;
        last = t;
    }
    if last > 0.0 && !matches!(op, OperatorHandle::DickeDiagonal { .. }) {
        let (direct, _) = evolve(state, op, last, tol)?;
        let gap: f64 = direct
            .amplitudes()
            .iter()
            .zip(current.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if gap > 10.0 * tol {
            return Err(Error::NonConvergence(format!(
                "chained and direct propagation differ by {gap:.3e}"
            )));
        }
    }
    Ok((states, reports))
}

/// Per-qubit phase gates diag(1, e^{iφ_j}). Dicke states accept only a
/// uniform phase, applied as e^{ikφ₀} on level k.
pub fn frame_phases(state: &PureState, phases: &[f64]) -> Result<PureState> {
    let n = state.qubits();
    if phases.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: phases.len(),
        });
    }
    match state.basis() {
        Basis::Dicke(_) => {
            if phases.iter().any(|p| *p != phases[0]) {
                return Err(Error::BasisMismatch(
                    "Dicke states take only a uniform frame phase".into(),
                ));
            }
            Ok(uniform_frame_phase(state, phases[0]))
        }
        Basis::Full(_) | Basis::Cavity { .. } => {
            let reg = (1usize << n) - 1;
            let amps = state
                .amplitudes()
                .par_iter()
                .enumerate()
                .map(|(i, a)| {
                    let x = i & reg;
                    let phase: f64 = (0..n).filter(|j| x >> j & 1 == 1).map(|j| phases[j]).sum();
                    a * C64::from_polar(1.0, phase)
                })
                .collect();
            Ok(PureState::from_parts_unchecked(state.basis(), amps))
        }
    }
}

/// The same phase φ₀ on every qubit: amplitude of excitation number k picks
/// up e^{ikφ₀}.
pub fn uniform_frame_phase(state: &PureState, phi0: f64) -> PureState {
    let basis = state.basis();
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = match basis {
                Basis::Dicke(_) => i,
                Basis::Full(_) => i.count_ones() as usize,
                Basis::Cavity { qubits, .. } => (i & ((1 << qubits) - 1)).count_ones() as usize,
            };
            a * C64::from_polar(1.0, k as f64 * phi0)
        })
        .collect();
    PureState::from_parts_unchecked(basis, amps)
}

/// Uniform frame phase φ₀ ∈ (−π, π] maximizing |⟨reference|Z(φ₀)ψ⟩|², with
/// the maximal fidelity.
pub fn fit_uniform_frame_phase(state: &PureState, reference: &PureState) -> Result<(f64, f64)> {
    if state.basis() != reference.basis() {
        return Err(Error::BasisMismatch("state and reference differ in basis".into()));
    }
    let n = state.qubits();
    // overlap as a trigonometric polynomial Σ_k c_k e^{ikφ₀}
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    for (i, (r, a)) in reference
        .amplitudes()
        .iter()
        .zip(state.amplitudes())
        .enumerate()
    {
        let k = match state.basis() {
            Basis::Dicke(_) => i,
            Basis::Full(_) => i.count_ones() as usize,
            Basis::Cavity { qubits, .. } => (i & ((1 << qubits) - 1)).count_ones() as usize,
        };
        c[k] += r.conj() * a;
    }
    let f = |phi: f64| -> f64 {
        c.iter()
            .enumerate()
            .map(|(k, ck)| ck * C64::from_polar(1.0, k as f64 * phi))
            .sum::<C64>()
            .norm_sqr()
    };
    let grid = 64 * (n + 1);
    let step = 2.0 * std::f64::consts::PI / grid as f64;
    let best = (0..grid)
        .map(|i| -std::f64::consts::PI + i as f64 * step)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .expect("grid is nonempty");
    let phi = golden_section_max(&f, best - step, best + step, 1e-13);
    let wrapped = (phi + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
        - std::f64::consts::PI;
    Ok((wrapped, f(phi)))
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// |⟨a|b⟩|² after evolving `a` is the usual figure of merit; this helper
/// returns it for two states of equal basis.
pub fn state_fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(overlap(a, b)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceConfig;
    use crate::hamiltonian::{build_h2, build_oat_uniform, OatFrame};
    use crate::states::{atomic_coherent_state, ghz_reference_state, BlochDirection};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn start(n: usize, basis: Basis) -> PureState {
        atomic_coherent_state(n, BlochDirection::new(FRAC_PI_2, -FRAC_PI_2), basis).unwrap()
    }

    #[test]
    fn schedule_parsing() {
        assert_eq!(Schedule::parse("0, 10,20.5", 1.0).unwrap().times(), &[0.0, 10.0, 20.5]);
        let cat = Schedule::parse("cat:5,4,3,2", 2.0).unwrap();
        assert_eq!(cat.times().len(), 4);
        assert!((cat.times()[3] - 125.0).abs() < 1e-12);
        assert!((cat.times()[0] - 50.0).abs() < 1e-12);
        assert!(Schedule::parse("10,5", 1.0).is_err());
        assert!(Schedule::parse("cat:1", 1.0).is_err());
        assert!(Schedule::parse("abc", 1.0).is_err());
        assert!(Schedule::parse("-1", 1.0).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let s = start(4, Basis::Dicke(4));
        let op = build_oat_uniform(4, 1.6, OatFrame::Exchange).unwrap();
        assert_eq!(evolve(&s, &op, 0.0, DEFAULT_TOL).unwrap().0, s);
        let f = start(4, Basis::Full(4));
        let h2 = build_h2(&DeviceConfig::table_s1(), &[0, 1, 2, 3], -470.0, true).unwrap();
        assert_eq!(evolve(&f, &h2, 0.0, DEFAULT_TOL).unwrap().0, f);
    }

    #[test]
    fn rejects_basis_and_tolerance_errors() {
        let s = start(3, Basis::Full(3));
        let op = build_oat_uniform(3, 1.6, OatFrame::Exchange).unwrap();
        assert!(matches!(evolve(&s, &op, 1.0, DEFAULT_TOL), Err(Error::BasisMismatch(_))));
        let d = start(3, Basis::Dicke(3));
        assert!(evolve(&d, &op, 1.0, 1e-3).is_err());
    }

    #[test]
    fn two_qubit_cat_in_the_aligned_frame() {
        let lam = 1.6;
        let op = build_oat_uniform(2, lam, OatFrame::Aligned).unwrap();
        let t = cat_time(2, lam).unwrap();
        let (psi, _) = evolve(&start(2, Basis::Dicke(2)), &op, t, DEFAULT_TOL).unwrap();
        let dir = BlochDirection::new(FRAC_PI_2, -FRAC_PI_2);
        let reference = ghz_reference_state(2, dir, Basis::Dicke(2)).unwrap();
        assert!(state_fidelity(&psi, &reference).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn sector_blocked_matches_dicke_path() {
        let n = 6;
        let g = 27.5;
        let cfg = DeviceConfig::table_s1().with_uniform_coupling(g).unwrap();
        let h2 = build_h2(&cfg, &(0..n).collect::<Vec<_>>(), -470.0, false).unwrap();
        let oat = build_oat_uniform(n, g * g / -470.0, OatFrame::Exchange).unwrap();
        let t = 90.0;
        let (full, rep) = evolve(&start(n, Basis::Full(n)), &h2, t, DEFAULT_TOL).unwrap();
        let (dicke, _) = evolve(&start(n, Basis::Dicke(n)), &oat, t, DEFAULT_TOL).unwrap();
        let embedded = crate::states::dicke_embed(&dicke).unwrap();
        assert!(state_fidelity(&full, &embedded).unwrap() > 1.0 - 1e-10);
        assert!(rep.norm_drift < 1e-10);
    }

    #[test]
    fn composition_and_snapshots() {
        let cfg = DeviceConfig::table_s1();
        let op = build_h2(&cfg, &[0, 1, 2, 3, 4], -330.0, true).unwrap();
        let s = start(5, Basis::Full(5));
        let (a, _) = evolve(&s, &op, 30.0, DEFAULT_TOL).unwrap();
        let (ab, _) = evolve(&a, &op, 45.0, DEFAULT_TOL).unwrap();
        let (direct, _) = evolve(&s, &op, 75.0, DEFAULT_TOL).unwrap();
        let gap: f64 = ab
            .amplitudes()
            .iter()
            .zip(direct.amplitudes())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(gap < 10.0 * DEFAULT_TOL);

        let sched = Schedule::new(vec![0.0, 20.0, 75.0]).unwrap();
        let (snaps, _) = snapshot_series(&s, &op, &sched, DEFAULT_TOL).unwrap();
        assert_eq!(snaps.len(), 3);
        assert_eq!(snaps[0], s);
        let e0 = op.expectation(&s).unwrap();
        for snap in &snaps {
            let e = op.expectation(snap).unwrap();
            assert!((e - e0).abs() <= 1e-8 * e0.abs().max(1e-3));
        }
    }

    #[test]
    fn frame_phase_shifts_azimuth() {
        let n = 5;
        let s = atomic_coherent_state(n, BlochDirection::new(1.1, 0.3), Basis::Full(n)).unwrap();
        assert_eq!(frame_phases(&s, &[0.0; 5]).unwrap(), s);
        let shifted = frame_phases(&s, &[0.7; 5]).unwrap();
        let target = atomic_coherent_state(n, BlochDirection::new(1.1, 1.0), Basis::Full(n)).unwrap();
        assert!((state_fidelity(&shifted, &target).unwrap() - 1.0).abs() < 1e-13);
        assert!(frame_phases(&s, &[0.0; 4]).is_err());
        let d = atomic_coherent_state(n, BlochDirection::new(1.1, 0.3), Basis::Dicke(n)).unwrap();
        assert!(frame_phases(&d, &[0.1, 0.2, 0.1, 0.1, 0.1]).is_err());
    }

    #[test]
    fn fitted_frame_phase_recovers_injection() {
        for n in [2, 5, 8] {
            let dir = BlochDirection::new(FRAC_PI_2, -FRAC_PI_2);
            let reference = ghz_reference_state(n, dir, Basis::Dicke(n)).unwrap();
            for injected in [0.0, 0.123456, -2.5, PI / (n as f64) - 0.01] {
                let psi = uniform_frame_phase(&reference, -injected);
                let (phi, fid) = fit_uniform_frame_phase(&psi, &reference).unwrap();
                // a half turn swaps the two components with a relative phase of
                // −i, so the maximum is unique modulo 2π
                assert!((fid - 1.0).abs() < 1e-12, "n={n}");
                let d = (phi - injected + PI).rem_euclid(2.0 * PI) - PI;
                assert!(d.abs() < 1e-6, "n={n}: fitted {phi}, injected {injected}");
            }
        }
    }
}
