//! Cross-path oracle suite: each check computes a measured deviation and
//! compares it with a fixed tolerance.

use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use crate::device::{cat_time, DeviceConfig, DispersiveParams};
use crate::error::{Error, Result};
use crate::evolution::{evolve, snapshot_series, Schedule, DEFAULT_TOL};
use crate::experiment::{default_shots, run_ghz_experiment, GhzExperiment, GhzModel, GhzReport, Shots};
use crate::hamiltonian::{build_h1, build_h2, build_oat_uniform, H1Spec, OatFrame, ResonatorSpec};
use crate::measurement::{apply_confusion, correct_readout, mle_project, ConfusionModel, ProbTag, ProbVector};
use crate::observables::{
    equatorial_lobe_count, fit_fringe, ghz_fidelity, husimi_point, husimi_q, q_protocol, GridSpec,
    ParityCurve,
};
use crate::rng::ShotRng;
use crate::states::{
    atomic_coherent_state, dicke_embed, ghz_reference_state, overlap, Basis, BlochDirection,
    PureState,
};

/// Starting direction of every twisting run.
pub const START: (f64, f64) = (FRAC_PI_2, -FRAC_PI_2);

fn start_dir() -> BlochDirection {
    BlochDirection::new(START.0, START.1)
}

/// Run depth of [`suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Self::Fast),
            "full" => Ok(Self::Full),
            other => Err(Error::InvalidArgument(format!("unknown level {other:?}"))),
        }
    }
}

/// One row of the oracle table. `measured` is a deviation: the check passes
/// when it is at most `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip)]
    pub seconds: f64,
}

impl CheckRow {
    fn new(name: impl Into<String>, measured: f64, tolerance: f64, seconds: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            pass: measured <= tolerance,
            seconds,
        }
    }
}

/// Uniform stream for randomized checks.
struct Draws(ShotRng);

impl Draws {
    fn new(seed: u64) -> Self {
        Self(ShotRng::new(seed, 0, 0, 0))
    }

    fn uniform(&mut self) -> f64 {
        self.0.uniform()
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Direction uniform on the sphere.
    fn direction(&mut self) -> BlochDirection {
        let theta = (1.0 - 2.0 * self.uniform()).clamp(-1.0, 1.0).acos();
        BlochDirection::new(theta, self.range(-PI, PI))
    }
}

/// |⟨ψ(t)|GHZ⟩|² at t = π/(2λ̄) for each N under the ideal twisting model.
pub fn ghz_emergence(ns: &[usize], lambda_mhz: f64, frame: OatFrame) -> Result<Vec<(usize, f64)>> {
    let t = cat_time(2, lambda_mhz)?;
    ns.iter()
        .map(|&n| {
            let op = build_oat_uniform(n, lambda_mhz, frame)?;
            let start = atomic_coherent_state(n, start_dir(), Basis::Dicke(n))?;
            let (psi, _) = evolve(&start, &op, t, DEFAULT_TOL)?;
            let reference = ghz_reference_state(n, start_dir(), Basis::Dicke(n))?;
            Ok((n, overlap(&psi, &reference)?.norm_sqr()))
        })
        .collect()
}

/// Ideal exact-probability pipeline for each N.
pub fn ideal_pipeline(cfg: &DeviceConfig, ns: &[usize], lambda_mhz: f64) -> Result<Vec<GhzReport>> {
    ns.iter()
        .map(|&n| {
            let exp = GhzExperiment::new(
                cfg.leading_subset(n)?,
                GhzModel::Oat {
                    lambda_mhz,
                    frame: OatFrame::Aligned,
                },
            );
            run_ghz_experiment(cfg, &exp)
        })
        .collect()
}

/// Fringe fit of the reference cat's operator parity.
pub fn reference_fringe(n: usize, points: usize) -> Result<crate::observables::FringeFit> {
    let reference = ghz_reference_state(n, start_dir(), Basis::Full(n))?;
    let rotated = crate::states::apply_local_rotations(
        &reference,
        &crate::experiment::parity_basis_rotation(n),
    )?;
    fit_fringe(&ParityCurve::scan(&rotated, points)?, n)
}

/// Lobe count of one cat snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatSnapshot {
    pub order: u32,
    pub time_ns: f64,
    pub lobes: usize,
}

/// Dicke-path twisting sampled at the cat times of `orders`, one Q-grid each.
pub fn cat_sequence(n: usize, lambda_mhz: f64, orders: &[u32], grid: GridSpec) -> Result<Vec<CatSnapshot>> {
    let op = build_oat_uniform(n, lambda_mhz, OatFrame::Exchange)?;
    let start = atomic_coherent_state(n, start_dir(), Basis::Dicke(n))?;
    let list = orders.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
    let sched = Schedule::parse(&format!("cat:{list}"), lambda_mhz)?;
    let (states, _) = snapshot_series(&start, &op, &sched, DEFAULT_TOL)?;
    let mut sorted = orders.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    states
        .iter()
        .zip(sched.times())
        .zip(sorted)
        .map(|((s, &t), m)| {
            Ok(CatSnapshot {
                order: m,
                time_ns: t,
                lobes: equatorial_lobe_count(&husimi_q(s, grid)?)?,
            })
        })
        .collect()
}

/// Largest deviation of |⟨π/2,φ|π/2,φ+2π/m⟩| from cos^N(π/m).
pub fn overlap_law_error(max_n: usize, orders: &[u32]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        for &m in orders {
            for phi in [-2.0, 0.0, 0.7, 2.9] {
                let step = 2.0 * PI / f64::from(m);
                let a = atomic_coherent_state(n, BlochDirection::new(FRAC_PI_2, phi), Basis::Dicke(n))?;
                let b = atomic_coherent_state(n, BlochDirection::new(FRAC_PI_2, phi + step), Basis::Dicke(n))?;
                let expect = (PI / f64::from(m)).cos().abs().powi(n as i32);
                worst = worst.max((overlap(&a, &b)?.norm() - expect).abs());
            }
        }
    }
    Ok(worst)
}

/// Infidelities 1 − |⟨·|·⟩|² between the Dicke path and the sector-blocked
/// dispersive model (uniform couplings, no crosstalk), and optionally the
/// single full-space sparse matrix, for three symmetric starting states.
pub fn dicke_vs_sector(cfg: &DeviceConfig, n: usize, dense: bool) -> Result<(f64, Option<f64>)> {
    let subset = cfg.leading_subset(n)?;
    let g = cfg.couplings_mhz(&subset).iter().sum::<f64>() / n as f64;
    let uniform = cfg.with_uniform_coupling(g)?;
    let detuning = -470.0;
    let h2 = build_h2(&uniform, &subset, detuning, false)?;
    let full = dense.then(|| h2.to_full_sparse());
    let lam = DispersiveParams::new(&uniform, &subset, detuning)?.mean_coupling_mhz;
    let oat = build_oat_uniform(n, lam, OatFrame::Exchange)?;
    let t = cat_time(2, lam)?;
    let mut worst_sector: f64 = 0.0;
    let mut worst_full: f64 = 0.0;
    for dir in [start_dir(), BlochDirection::new(0.9, 0.3), BlochDirection::new(2.4, -1.7)] {
        let sym = atomic_coherent_state(n, dir, Basis::Dicke(n))?;
        let (d, _) = evolve(&sym, &oat, t, DEFAULT_TOL)?;
        let d = dicke_embed(&d)?;
        let product = dicke_embed(&sym)?;
        let (s, _) = evolve(&product, &h2, t, DEFAULT_TOL)?;
        worst_sector = worst_sector.max(1.0 - overlap(&d, &s)?.norm_sqr());
        if let Some(full) = &full {
            let (f, _) = evolve(&product, full, t, DEFAULT_TOL)?;
            worst_full = worst_full.max(1.0 - overlap(&d, &f)?.norm_sqr());
        }
    }
    Ok((worst_sector, dense.then_some(worst_full)))
}

/// Resonator model against the dispersive model at one detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersivePoint {
    /// |Δ| / ḡ.
    pub ratio: f64,
    /// |⟨ψ_H2 ⊗ 0|ψ_H1⟩|².
    pub joint_overlap: f64,
    /// |⟨ψ_H2|ψ_H1,vac⟩|² with the vacuum component renormalized.
    pub conditional_fidelity: f64,
}

/// Both models evolved from the same coherent state to t = π/(2|λ̄|), one
/// point per ratio |Δ|/ḡ. Crosstalk is off in both.
pub fn dispersive_overlaps(
    cfg: &DeviceConfig,
    n: usize,
    n_max: usize,
    ratios: &[f64],
) -> Result<Vec<DispersivePoint>> {
    let subset = cfg.leading_subset(n)?;
    let g = cfg.couplings_mhz(&subset).iter().sum::<f64>() / n as f64;
    ratios
        .iter()
        .map(|&ratio| {
            let detuning = -ratio * g;
            let lam = DispersiveParams::new(cfg, &subset, detuning)?.mean_coupling_mhz;
            let t = cat_time(2, lam)?;
            let start = atomic_coherent_state(n, start_dir(), Basis::Full(n))?;
            let h2 = build_h2(cfg, &subset, detuning, false)?;
            let (a, _) = evolve(&start, &h2, t, DEFAULT_TOL)?;
            let res = ResonatorSpec::new(n_max, cfg.resonator_ghz)?;
            let h1 = build_h1(cfg, &subset, &H1Spec::uniform_detuning(n, res, detuning))?;
            let (b, _) = evolve(&start.with_resonator_vacuum(n_max)?, &h1, t, DEFAULT_TOL)?;
            let (vac, _) = b.vacuum_component()?;
            Ok(DispersivePoint {
                ratio,
                joint_overlap: overlap(&a.with_resonator_vacuum(n_max)?, &b)?.norm_sqr(),
                conditional_fidelity: overlap(&a, &vac)?.norm_sqr(),
            })
        })
        .collect()
}

/// Largest |p − correct(confuse(p))| over random distributions.
pub fn readout_round_trip_error(cfg: &DeviceConfig, n: usize, vectors: usize, seed: u64) -> Result<f64> {
    let cm = ConfusionModel::from_device(cfg, &cfg.leading_subset(n)?)?;
    let mut draws = Draws::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..vectors {
        // exponential spacings give a uniform point on the simplex
        let raw: Vec<f64> = (0..1usize << n).map(|_| -(1.0 - draws.uniform()).ln()).collect();
        let sum: f64 = raw.iter().sum();
        let p = ProbVector::simplex(raw.iter().map(|x| x / sum).collect())?;
        let back = correct_readout(&apply_confusion(&p, &cm)?, &cm)?;
        for (a, b) in p.values.iter().zip(&back.values) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Sampled pipeline with readout confusion at the default shot scale.
pub fn sampled_pipeline(cfg: &DeviceConfig, n: usize, lambda_mhz: f64, seed: u64) -> Result<GhzReport> {
    let mut exp = GhzExperiment::new(
        cfg.leading_subset(n)?,
        GhzModel::Oat {
            lambda_mhz,
            frame: OatFrame::Aligned,
        },
    );
    exp.shots = Shots::Count(default_shots(n));
    exp.confusion = true;
    exp.seed = seed;
    run_ghz_experiment(cfg, &exp)
}

/// Deviations of the simplex projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionCheck {
    /// max |P(P(q)) − P(q)|.
    pub idempotence: f64,
    /// Largest negative entry or sum defect of P(q).
    pub simplex_violation: f64,
    /// max |P(q) − nearest grid point| for three-outcome vectors.
    pub brute_force_gap: f64,
    /// Grid spacing of the brute-force search.
    pub grid_step: f64,
}

pub fn projection_checks(cases: usize, seed: u64) -> ProjectionCheck {
    let mut draws = Draws::new(seed);
    let mut idempotence: f64 = 0.0;
    let mut violation: f64 = 0.0;
    for _ in 0..cases {
        let q = ProbVector {
            values: (0..8).map(|_| draws.range(-0.4, 1.0)).collect(),
            tag: ProbTag::Quasi,
        };
        if q.values.iter().sum::<f64>() <= 1e-3 {
            continue;
        }
        let p = mle_project(&q);
        let again = mle_project(&p);
        for (a, b) in p.values.iter().zip(&again.values) {
            idempotence = idempotence.max((a - b).abs());
        }
        let neg = p.values.iter().fold(0.0f64, |m, x| m.max(-x));
        violation = violation.max(neg).max((p.values.iter().sum::<f64>() - 1.0).abs());
    }
    let step = 1e-3;
    let m = 1000usize;
    let mut gap: f64 = 0.0;
    for _ in 0..5 {
        let v: Vec<f64> = (0..3).map(|_| draws.range(-0.5, 1.2)).collect();
        let sum: f64 = v.iter().sum();
        if sum <= 1e-3 {
            continue;
        }
        let q: Vec<f64> = v.iter().map(|x| x / sum).collect();
        let got = mle_project(&ProbVector {
            values: v,
            tag: ProbTag::Quasi,
        });
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
            gap = gap.max((a - b).abs());
        }
    }
    ProjectionCheck {
        idempotence,
        simplex_violation: violation,
        brute_force_gap: gap,
        grid_step: step,
    }
}

/// Largest |q_protocol − Q| over random states and directions.
pub fn protocol_gap(pairs: usize, max_n: usize, seed: u64) -> Result<f64> {
    let mut draws = Draws::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let n = 1 + (draws.uniform() * max_n as f64) as usize;
        let n = n.min(max_n);
        let amps = (0..1usize << n)
            .map(|_| num_complex::Complex64::new(draws.range(-1.0, 1.0), draws.range(-1.0, 1.0)))
            .collect();
        let state = PureState::normalized(Basis::Full(n), amps)?;
        let dir = draws.direction();
        worst = worst.max((q_protocol(&state, dir)? - husimi_point(&state, dir)?).abs());
    }
    Ok(worst)
}

/// Fidelity-witness interface: (F at the ideal corner values, verdict at
/// F = 1/2, verdict at F = 0.525).
pub fn witness_checks() -> Result<(f64, bool, bool)> {
    let (ideal, _) = ghz_fidelity(0.5, 0.5, 0.5)?;
    let (_, at_half) = ghz_fidelity(0.25, 0.25, 0.25)?;
    let (_, above) = ghz_fidelity(0.25, 0.25, 0.275)?;
    Ok((ideal, at_half, above))
}

/// Byte comparison of the sampled pipeline's JSON under two worker counts.
pub fn thread_count_invariance(cfg: &DeviceConfig, n: usize, seed: u64) -> Result<bool> {
    let run = |threads: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| {
            let r = sampled_pipeline(cfg, n, 1.6, seed)?;
            Ok(serde_json::to_string(&r)?)
        })
    };
    Ok(run(1)? == run(4)?)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t0 = Instant::now();
    let v = f()?;
    Ok((v, t0.elapsed().as_secs_f64()))
}

fn bool_row(name: &str, ok: bool, seconds: f64) -> CheckRow {
    CheckRow::new(name, if ok { 0.0 } else { 1.0 }, 0.0, seconds)
}

/// The oracle table. The fast level shrinks the Dicke-vs-sector comparison
/// to N = 8 and skips the full-space matrix and the worker-count check.
pub fn suite(cfg: &DeviceConfig, level: Level) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let lambda = 1.6;

    let (fids, s) = timed(|| ghz_emergence(&(2..=8).collect::<Vec<_>>(), lambda, OatFrame::Aligned))?;
    let worst = fids.iter().map(|(_, f)| 1.0 - f).fold(0.0, f64::max);
    rows.push(CheckRow::new("ghz emergence N=2..8 (1-overlap)", worst, 1e-9, s));

    let ns: Vec<usize> = (3..=8).collect();
    let (reports, s) = timed(|| ideal_pipeline(cfg, &ns, lambda))?;
    let mut amp: f64 = 0.0;
    let mut phase: f64 = 0.0;
    for r in &reports {
        let reference = reference_fringe(r.n, 41)?;
        amp = amp.max((r.fit.amplitude - 1.0).abs());
        phase = phase.max(crate::experiment::wrap_phase(r.fit.phase - reference.phase).abs());
    }
    rows.push(CheckRow::new("parity amplitude N=3..8", amp, 1e-6, s));
    rows.push(CheckRow::new("parity phase vs reference cat N=3..8", phase, 1e-6, 0.0));

    let (snaps, s) = timed(|| {
        let lam = DispersiveParams::new(cfg, &cfg.leading_subset(20)?, -470.0)?.mean_coupling_mhz;
        cat_sequence(20, lam, &[5, 4, 3, 2], GridSpec::default())
    })?;
    let lobes_bad = snaps.iter().filter(|c| c.lobes != c.order as usize).count();
    rows.push(CheckRow::new("cat lobes N=20 m=5,4,3,2 (mismatches)", lobes_bad as f64, 0.0, s));
    let base = snaps[0].time_ns * f64::from(snaps[0].order);
    let spread = snaps
        .iter()
        .map(|c| (c.time_ns * f64::from(c.order) / base - 1.0).abs())
        .fold(0.0, f64::max);
    rows.push(CheckRow::new("cat times t_m*m relative spread", spread, 1e-9, 0.0));

    let (err, s) = timed(|| overlap_law_error(20, &[2, 3, 4, 5, 6]))?;
    rows.push(CheckRow::new("component overlap law N<=20", err, 1e-12, s));

    let n_sym = if level == Level::Full { 10 } else { 8 };
    let ((sector, full), s) = timed(|| dicke_vs_sector(cfg, n_sym, level == Level::Full))?;
    rows.push(CheckRow::new(format!("dicke vs sector-blocked N={n_sym} (1-overlap)"), sector, 1e-8, s));
    if let Some(full) = full {
        rows.push(CheckRow::new(format!("dicke vs full sparse N={n_sym} (1-overlap)"), full, 1e-8, 0.0));
    }

    let (ov, s) = timed(|| dispersive_overlaps(cfg, 3, 2, &[12.0, 24.0, 48.0]))?;
    rows.push(CheckRow::new(
        "resonator vs dispersive N=3 ratio 12, vacuum-conditioned (1-fidelity)",
        1.0 - ov[0].conditional_fidelity,
        0.02,
        s,
    ));
    let monotone = ov.windows(2).all(|w| w[1].joint_overlap > w[0].joint_overlap);
    rows.push(bool_row("joint overlap improves as ratio doubles", monotone, 0.0));

    let (err, s) = timed(|| readout_round_trip_error(cfg, 10, 100, 7))?;
    rows.push(CheckRow::new("readout correct(confuse(p)) N=10", err, 1e-12, s));

    let (rep, s) = timed(|| sampled_pipeline(cfg, 4, lambda, 2024))?;
    let sigma = rep.amplitude_subgroup_std.unwrap_or(f64::INFINITY);
    rows.push(CheckRow::new("sampled N=4 amplitude |A-1|/sigma", (rep.fit.amplitude - 1.0).abs() / sigma, 3.0, s));

    let (pc, s) = timed(|| Ok(projection_checks(200, 3)))?;
    rows.push(CheckRow::new("projection idempotence", pc.idempotence, 1e-12, s));
    rows.push(CheckRow::new("projection simplex validity", pc.simplex_violation, 1e-12, 0.0));
    rows.push(CheckRow::new("projection vs brute force", pc.brute_force_gap, pc.grid_step, 0.0));

    let (gap, s) = timed(|| protocol_gap(50, 8, 5))?;
    rows.push(CheckRow::new("rotate-and-project vs Q", gap, 1e-10, s));

    let ((ideal, at_half, above), s) = timed(witness_checks)?;
    rows.push(bool_row("fidelity witness interface", ideal == 1.0 && !at_half && above, s));

    if level == Level::Full {
        let (same, s) = timed(|| thread_count_invariance(cfg, 4, 99))?;
        rows.push(bool_row("sampled report identical for 1 and 4 workers", same, s));
    }
    Ok(rows)
}

/// Plain-text table of `rows`.
pub fn render_table(rows: &[CheckRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{:<4} {:<width$}  measured {:>10.3e}  tol {:>9.1e}  {:>7.3}s\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.measured,
            r.tolerance,
            r.seconds,
        ));
    }
    out
}
