//! End-to-end GHZ preparation and characterization: coherent-state
//! initialization, twisting, the parity-basis transform, then corner
//! populations and a parity scan through the readout pipeline.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::device::{cat_time, DeviceConfig, DispersiveParams};
use crate::error::{Error, Result};
use crate::evolution::evolve;
use crate::hamiltonian::{build_h1, build_h2, build_oat_uniform, H1Spec, OatFrame, ResonatorSpec};
use crate::measurement::{
    apply_confusion, mean_std, processed_parity, sample_log, subgroup_parities, ConfusionModel,
    CountTable, ProbVector, SimplexProjection,
};
use crate::observables::{
    fit_fringe, gamma_grid, ghz_fidelity, signed_parity, FringeFit, ParityCurve,
};
use crate::states::{
    apply_local_rotations, atomic_coherent_state, dicke_embed, Basis, BlochDirection, PureState,
    QubitRotation,
};

/// Dynamics used for the twisting stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum GhzModel {
    /// Ideal one-axis twisting with strength λ̄ (MHz).
    Oat {
        lambda_mhz: f64,
        #[serde(skip)]
        frame: OatFrame,
    },
    /// Dispersive exchange model at detuning Δ (MHz).
    H2 {
        detuning_mhz: f64,
        include_crosstalk: bool,
    },
    /// Qubits plus bus resonator, all qubits parked at ω_B + Δ.
    H1 {
        detuning_mhz: f64,
        n_max: usize,
        include_crosstalk: bool,
    },
}

/// Exact outcome probabilities or a finite number of shots per setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shots {
    Exact,
    Count(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhzExperiment {
    pub subset: Vec<usize>,
    pub model: GhzModel,
    /// Twisting duration in ns; defaults to π/(2|λ̄|).
    pub duration_ns: Option<f64>,
    pub shots: Shots,
    pub seed: u64,
    pub gamma_points: usize,
    /// Readout confusion from the device fidelities.
    pub confusion: bool,
    /// Per-qubit frame phases applied after twisting.
    pub frame_phases: Option<Vec<f64>>,
    pub tol: f64,
}

impl GhzExperiment {
    pub fn new(subset: Vec<usize>, model: GhzModel) -> Self {
        Self {
            subset,
            model,
            duration_ns: None,
            shots: Shots::Exact,
            seed: 0,
            gamma_points: 41,
            confusion: false,
            frame_phases: None,
            tol: crate::evolution::DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhzReport {
    pub n: usize,
    pub lambda_mhz: f64,
    pub duration_ns: f64,
    pub shots_per_setting: Option<u64>,
    /// Corner populations as reported by the readout (confusion included).
    pub raw_corners: (f64, f64),
    /// Corner populations after correction and projection.
    pub corners: (f64, f64),
    pub raw_fit: FringeFit,
    pub fit: FringeFit,
    pub raw_fidelity: f64,
    pub fidelity: f64,
    pub genuine: bool,
    /// Standard deviation of the fringe amplitude across shot subgroups.
    pub amplitude_subgroup_std: Option<f64>,
    /// Standard deviation of the fidelity across shot subgroups.
    pub fidelity_subgroup_std: Option<f64>,
    pub curve: ParityCurve,
    pub raw_curve: ParityCurve,
}

/// π/2 about x for odd N, about y for even N.
pub fn parity_basis_rotation(n: usize) -> Vec<QubitRotation> {
    let r = if n % 2 == 1 {
        QubitRotation::x_half()
    } else {
        QubitRotation::y_half()
    };
    vec![r; n]
}

/// Rotation taking the axis (π/2, π/2 − γ) of every qubit to z.
pub fn parity_analysis_rotation(n: usize, gamma: f64) -> Vec<QubitRotation> {
    vec![QubitRotation::equatorial(-gamma, FRAC_PI_2); n]
}

/// Twisting strength (MHz) and prepared state after the twisting stage, in
/// the product basis (or the joint space for the resonator model).
pub fn prepare_state(
    cfg: &DeviceConfig,
    exp: &GhzExperiment,
) -> Result<(f64, f64, PureState)> {
    cfg.check_subset(&exp.subset)?;
    let n = exp.subset.len();
    let init = BlochDirection::new(FRAC_PI_2, -FRAC_PI_2);
    let (lambda, op, start) = match exp.model {
        GhzModel::Oat { lambda_mhz, frame } => (
            lambda_mhz,
            build_oat_uniform(n, lambda_mhz, frame)?,
            atomic_coherent_state(n, init, Basis::Dicke(n))?,
        ),
        GhzModel::H2 {
            detuning_mhz,
            include_crosstalk,
        } => (
            DispersiveParams::new(cfg, &exp.subset, detuning_mhz)?.mean_coupling_mhz,
            build_h2(cfg, &exp.subset, detuning_mhz, include_crosstalk)?,
            atomic_coherent_state(n, init, Basis::Full(n))?,
        ),
        GhzModel::H1 {
            detuning_mhz,
            n_max,
            include_crosstalk,
        } => {
            let res = ResonatorSpec::new(n_max, cfg.resonator_ghz)?;
            let mut spec = H1Spec::uniform_detuning(n, res, detuning_mhz);
            spec.include_crosstalk = include_crosstalk;
            (
                DispersiveParams::new(cfg, &exp.subset, detuning_mhz)?.mean_coupling_mhz,
                build_h1(cfg, &exp.subset, &spec)?,
                atomic_coherent_state(n, init, Basis::Full(n))?.with_resonator_vacuum(n_max)?,
            )
        }
    };
    let duration = match exp.duration_ns {
        Some(t) => t,
        None => cat_time(2, lambda)?,
    };
    let (mut psi, _) = evolve(&start, &op, duration, exp.tol)?;
    if let Basis::Dicke(_) = psi.basis() {
        psi = dicke_embed(&psi)?;
    }
    if let Some(phases) = &exp.frame_phases {
        psi = crate::evolution::frame_phases(&psi, phases)?;
    }
    Ok((lambda, duration, psi))
}

/// Processed measurements for one analysis setting.
struct Setting {
    raw: ProbVector,
    log: Option<Vec<u32>>,
}

fn measure(
    state: &PureState,
    rot: &[QubitRotation],
    exp: &GhzExperiment,
    cm: Option<&ConfusionModel>,
    stream: u64,
) -> Result<Setting> {
    let rotated = apply_local_rotations(state, rot)?;
    let p = ProbVector::from_state(&rotated)?;
    match exp.shots {
        Shots::Exact => Ok(Setting {
            raw: match cm {
                Some(cm) => apply_confusion(&p, cm)?,
                None => p,
            },
            log: None,
        }),
        Shots::Count(s) => {
            let log = sample_log(&p, s, exp.seed, stream, cm)?;
            let n = p.qubits();
            Ok(Setting {
                raw: ProbVector::from_counts(&CountTable::from_log(n, exp.seed, log.clone())),
                log: Some(log),
            })
        }
    }
}

fn estimate(p: &ProbVector, cm: Option<&ConfusionModel>) -> Result<ProbVector> {
    use crate::measurement::Estimator;
    let q = match cm {
        Some(cm) => crate::measurement::correct_readout(p, cm)?,
        None => p.clone(),
    };
    Ok(SimplexProjection.estimate(&q))
}

fn corners_of(p: &ProbVector) -> (f64, f64) {
    (p.values[0], p.values[p.values.len() - 1])
}

fn fidelity_of(corners: (f64, f64), fit: &FringeFit) -> f64 {
    (corners.0 + corners.1) / 2.0 + fit.amplitude / 2.0
}

/// Default shot count 30·2^N per setting.
pub fn default_shots(n: usize) -> u64 {
    30 * (1u64 << n)
}

/// Subgroup size 5·2^N.
pub fn default_group_size(n: usize) -> usize {
    5 * (1usize << n)
}

pub fn run_ghz_experiment(cfg: &DeviceConfig, exp: &GhzExperiment) -> Result<GhzReport> {
    let n = exp.subset.len();
    if n < 2 {
        return Err(Error::InvalidArgument("GHZ experiment needs at least 2 qubits".into()));
    }
    let gamma = gamma_grid(exp.gamma_points)?;
    let (lambda, duration, psi) = prepare_state(cfg, exp)?;
    let ghz = apply_local_rotations(&psi, &parity_basis_rotation(n))?;
    let cm = if exp.confusion {
        Some(ConfusionModel::from_device(cfg, &exp.subset)?)
    } else {
        None
    };
    let cm = cm.as_ref();

    let identity = vec![QubitRotation::default(); n];
    let corner = measure(&ghz, &identity, exp, cm, 0)?;
    let settings = gamma
        .par_iter()
        .enumerate()
        .map(|(i, &g)| measure(&ghz, &parity_analysis_rotation(n, g), exp, cm, 1 + i as u64))
        .collect::<Result<Vec<_>>>()?;

    let raw_corners = corners_of(&corner.raw);
    let corners = corners_of(&estimate(&corner.raw, cm)?);
    let raw_parity: Vec<f64> = settings.iter().map(|s| signed_parity(&s.raw.values)).collect();
    let parity = settings
        .iter()
        .map(|s| processed_parity(&s.raw, cm, &SimplexProjection))
        .collect::<Result<Vec<_>>>()?;

    let group = default_group_size(n);
    let grouped = match exp.shots {
        Shots::Count(s) if s as usize / group >= 2 => Some(
            settings
                .iter()
                .map(|st| subgroup_parities(st.log.as_deref().expect("sampled"), n, group, cm))
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    let err = grouped
        .as_ref()
        .map(|g| g.iter().map(|per| mean_std(per).1).collect::<Vec<_>>());

    let raw_curve = ParityCurve::new(gamma.clone(), raw_parity, None)?;
    let curve = ParityCurve::new(gamma.clone(), parity, err.clone())?;
    let raw_fit = fit_fringe(&raw_curve, n)?;
    let fit = fit_fringe(&curve, n)?;
    let fidelity = fidelity_of(corners, &fit);
    let (_, genuine) = ghz_fidelity(
        corners.0.clamp(0.0, 1.0),
        corners.1.clamp(0.0, 1.0),
        (fit.amplitude / 2.0).clamp(0.0, 1.0),
    )?;

    // per-subgroup fringe fits: group g of every setting forms one curve
    let (amplitude_subgroup_std, fidelity_subgroup_std) = match (&grouped, exp.shots) {
        (Some(grouped), Shots::Count(_)) => {
            let log = corner.log.as_deref().expect("sampled");
            let corner_groups: Vec<(f64, f64)> = log
                .chunks_exact(group)
                .map(|chunk| {
                    let t = CountTable::from_log(n, exp.seed, chunk.to_vec());
                    estimate(&ProbVector::from_counts(&t), cm).map(|p| corners_of(&p))
                })
                .collect::<Result<Vec<_>>>()?;
            let groups = grouped[0].len().min(corner_groups.len());
            let mut amps = Vec::with_capacity(groups);
            let mut fids = Vec::with_capacity(groups);
            for g in 0..groups {
                let curve_g = ParityCurve::new(
                    gamma.clone(),
                    grouped.iter().map(|per| per[g]).collect(),
                    None,
                )?;
                let f = fit_fringe(&curve_g, n)?;
                amps.push(f.amplitude);
                fids.push(fidelity_of(corner_groups[g], &f));
            }
            (Some(mean_std(&amps).1), Some(mean_std(&fids).1))
        }
        _ => (None, None),
    };

    Ok(GhzReport {
        n,
        lambda_mhz: lambda,
        duration_ns: duration,
        shots_per_setting: match exp.shots {
            Shots::Exact => None,
            Shots::Count(s) => Some(s),
        },
        raw_corners,
        corners,
        raw_fidelity: fidelity_of(raw_corners, &raw_fit),
        raw_fit,
        fit,
        fidelity,
        genuine,
        amplitude_subgroup_std,
        fidelity_subgroup_std,
        curve,
        raw_curve,
    })
}

/// Parity-curve CSV: `gamma,parity,err,raw_parity`.
pub fn parity_curve_csv(report: &GhzReport) -> String {
    let mut out = String::from("gamma,parity,err,raw_parity\n");
    for i in 0..report.curve.gamma.len() {
        let err = report.curve.err.as_ref().map_or(0.0, |e| e[i]);
        out.push_str(&format!(
            "{},{},{},{}\n",
            report.curve.gamma[i], report.curve.parity[i], err, report.raw_curve.parity[i]
        ));
    }
    out
}

/// Fringe phase wrapped to (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oat(n: usize) -> GhzExperiment {
        GhzExperiment::new(
            (0..n).collect(),
            GhzModel::Oat {
                lambda_mhz: 1.6,
                frame: OatFrame::Aligned,
            },
        )
    }

    #[test]
    fn ideal_pipeline_reaches_unit_fidelity() {
        let cfg = DeviceConfig::table_s1();
        let r = run_ghz_experiment(&cfg, &oat(4)).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-9);
        assert!((r.corners.0 - 0.5).abs() < 1e-9 && (r.corners.1 - 0.5).abs() < 1e-9);
        assert!(r.genuine);
    }

    #[test]
    fn correction_restores_fidelity_under_confusion() {
        let cfg = DeviceConfig::table_s1();
        let mut e = oat(4);
        e.confusion = true;
        let r = run_ghz_experiment(&cfg, &e).unwrap();
        assert!(r.raw_fidelity < 0.99);
        assert!((r.fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sampled_run_has_subgroup_errors() {
        let cfg = DeviceConfig::table_s1();
        let mut e = oat(3);
        e.shots = Shots::Count(default_shots(3));
        e.confusion = true;
        e.seed = 3;
        e.gamma_points = 15;
        let r = run_ghz_experiment(&cfg, &e).unwrap();
        assert!(r.amplitude_subgroup_std.unwrap() > 0.0);
        assert_eq!(r.curve.err.as_ref().unwrap().len(), 15);
        let again = run_ghz_experiment(&cfg, &e).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn wraps_phase() {
        assert!((wrap_phase(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(wrap_phase(PI), PI);
    }
}
