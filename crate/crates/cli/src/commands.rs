//! Subcommand bodies.

use serde::Serialize;
use serde_json::json;
use std::fs;

use oatsim_core::evolution::uniform_frame_phase;
use oatsim_core::experiment::parity_curve_csv;
use oatsim_core::observables::parity_report_json;
use oatsim_core::validation::{render_table, suite, Level};
use oatsim_core::{
    atomic_coherent_state, build_h1, build_h2, build_oat_uniform, equatorial_lobe_count,
    husimi_q, load_device_config, run_ghz_experiment, snapshot_series, Basis, BlochDirection,
    DeviceConfig, DispersiveParams, GhzExperiment, GhzModel, GridSpec, H1Spec, OperatorHandle,
    PureState, ResonatorSpec, Schedule, Shots,
};

use crate::manifest::{sha256_hex, InputRef, Run, RunManifest, Status};
use crate::{CliError, GhzArgs, LevelArg, ModelKind, QfuncArgs, SystemArgs, ValidateArgs};

/// Largest register the h1 model accepts without --allow-large-h1.
const H1_DEFAULT_MAX_QUBITS: usize = 14;

fn load_device(
    path: Option<&std::path::Path>,
    uniform_g: Option<f64>,
) -> Result<(DeviceConfig, InputRef), CliError> {
    let (cfg, input) = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Flag(format!("cannot read device file {}: {e}", p.display())))?;
            (
                load_device_config(&text).map_err(|e| CliError::Validation(e.to_string()))?,
                InputRef {
                    path: Some(p.display().to_string()),
                    sha256: sha256_hex(text.as_bytes()),
                },
            )
        }
        None => {
            let cfg = DeviceConfig::table_s1();
            let hash = sha256_hex(cfg.to_json().as_bytes());
            (cfg, InputRef { path: None, sha256: hash })
        }
    };
    let cfg = match uniform_g {
        Some(g) => cfg.with_uniform_coupling(g)?,
        None => cfg,
    };
    Ok((cfg, input))
}

fn manifest(
    subcommand: &'static str,
    parameters: serde_json::Value,
    device: Option<InputRef>,
    seed: Option<u64>,
) -> RunManifest {
    RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        status: Status::Incomplete,
        parameters,
        device,
        seed,
        outputs: Vec::new(),
    }
}

fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::H1 => "h1",
        ModelKind::H2 => "h2",
        ModelKind::Oat => "oat",
    }
}

fn switch(on: bool) -> &'static str {
    if on {
        "on"
    } else {
        "off"
    }
}

fn system_json(s: &SystemArgs) -> serde_json::Value {
    json!({
        "n": s.n,
        "model": model_name(s.model),
        "detuning_mhz": s.detuning_mhz,
        "lambda_mhz": s.lambda_mhz,
        "uniform_g_mhz": s.uniform_g,
        "crosstalk": switch(s.crosstalk.is_on()),
        "n_max": s.n_max,
        "allow_large_h1": s.allow_large_h1,
        "tol": s.tol,
    })
}

fn check_system(s: &SystemArgs) -> Result<(), CliError> {
    if !(1e-14..=1e-6).contains(&s.tol) {
        return Err(CliError::Flag(format!("--tol {} outside [1e-14, 1e-6]", s.tol)));
    }
    if s.lambda_mhz.is_some() && s.model != ModelKind::Oat {
        return Err(CliError::Flag("--lambda-mhz applies to the oat model only".into()));
    }
    if s.model == ModelKind::H1 && usize::from(s.n) > H1_DEFAULT_MAX_QUBITS && !s.allow_large_h1 {
        return Err(CliError::Flag(format!(
            "h1 model refused for N = {} > {H1_DEFAULT_MAX_QUBITS}; pass --allow-large-h1 to override",
            s.n
        )));
    }
    Ok(())
}

fn h1_spec(cfg: &DeviceConfig, s: &SystemArgs) -> Result<H1Spec, CliError> {
    let res = ResonatorSpec::new(s.n_max, cfg.resonator_ghz)?;
    let mut spec = H1Spec::uniform_detuning(usize::from(s.n), res, s.detuning_mhz);
    spec.include_crosstalk = s.crosstalk.is_on();
    if s.allow_large_h1 {
        spec.budget = usize::MAX;
    }
    Ok(spec)
}

/// Twisting strength, operator and initial state for the chosen model.
fn build_model(
    cfg: &DeviceConfig,
    s: &SystemArgs,
    frame: oatsim_core::OatFrame,
) -> Result<(f64, OperatorHandle, PureState), CliError> {
    let n = usize::from(s.n);
    let subset = cfg.leading_subset(n)?;
    let mean = DispersiveParams::new(cfg, &subset, s.detuning_mhz)?.mean_coupling_mhz;
    let dir = BlochDirection::new(std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2);
    Ok(match s.model {
        ModelKind::Oat => {
            let lam = s.lambda_mhz.unwrap_or(mean);
            (
                lam,
                build_oat_uniform(n, lam, frame)?,
                atomic_coherent_state(n, dir, Basis::Dicke(n))?,
            )
        }
        ModelKind::H2 => (
            mean,
            build_h2(cfg, &subset, s.detuning_mhz, s.crosstalk.is_on())?,
            atomic_coherent_state(n, dir, Basis::Full(n))?,
        ),
        ModelKind::H1 => (
            mean,
            build_h1(cfg, &subset, &h1_spec(cfg, s)?)?,
            atomic_coherent_state(n, dir, Basis::Full(n))?.with_resonator_vacuum(s.n_max)?,
        ),
    })
}

#[derive(Serialize)]
struct Snapshot {
    index: usize,
    time_ns: f64,
    file: String,
    lobes: usize,
    q_max: f64,
    theta_at_max: f64,
    phi_at_max: f64,
    krylov_steps: usize,
    error_estimate: f64,
    norm_drift: f64,
    dense_fallback: bool,
}

pub fn qfunc(args: &QfuncArgs, threads: Option<u16>) -> Result<(), CliError> {
    let s = &args.system;
    check_system(s)?;
    let grid = GridSpec::parse(&args.grid)?;
    let (cfg, input) = load_device(s.device.as_deref(), s.uniform_g)?;
    let (lambda, op, start) = build_model(&cfg, s, args.oat_frame.into())?;
    let sched = Schedule::parse(&args.times, lambda)?;

    let mut params = system_json(s);
    params["oat_frame"] = json!(format!("{:?}", args.oat_frame).to_lowercase());
    params["times"] = json!(args.times);
    params["resolved_times_ns"] = json!(sched.times());
    params["resolved_lambda_mhz"] = json!(lambda);
    params["grid"] = json!(grid);
    params["frame_phase"] = json!(args.frame_phase);
    params["threads"] = json!(threads);
    let mut run = Run::start(&args.out, manifest("qfunc", params, Some(input), None))?;

    let (states, reports) = snapshot_series(&start, &op, &sched, s.tol)?;
    let mut summary = Vec::with_capacity(states.len());
    for (i, ((state, rep), &t)) in states.iter().zip(&reports).zip(sched.times()).enumerate() {
        let state = match args.frame_phase {
            Some(phi0) => uniform_frame_phase(state, phi0),
            None => state.clone(),
        };
        let q = husimi_q(&state, grid)?;
        let stem = format!("qgrid_{i:03}");
        run.write(&format!("{stem}.csv"), q.to_csv().as_bytes())?;
        run.write(&format!("{stem}.json"), q.to_json().as_bytes())?;
        let (theta_at_max, phi_at_max, q_max) = q.argmax();
        summary.push(Snapshot {
            index: i,
            time_ns: t,
            file: format!("{stem}.csv"),
            lobes: equatorial_lobe_count(&q)?,
            q_max,
            theta_at_max,
            phi_at_max,
            krylov_steps: rep.steps.len(),
            error_estimate: rep.error_estimate,
            norm_drift: rep.norm_drift,
            dense_fallback: rep.dense_fallback,
        });
    }
    let body = json!({
        "model": model_name(s.model),
        "form": op.form_name(),
        "lambda_mhz": lambda,
        "snapshots": summary,
    });
    run.write("lobes.json", (serde_json::to_string_pretty(&body)? + "\n").as_bytes())?;
    run.finish()?;
    for snap in &summary {
        println!("t = {:>10.4} ns  lobes {}  Q max {:.6}", snap.time_ns, snap.lobes, snap.q_max);
    }
    println!("wrote {} grids to {}", summary.len(), args.out.display());
    Ok(())
}

pub fn ghz(args: &GhzArgs, threads: Option<u16>) -> Result<(), CliError> {
    let s = &args.system;
    check_system(s)?;
    let (cfg, input) = load_device(s.device.as_deref(), s.uniform_g)?;
    let n = usize::from(s.n);
    if n < 2 {
        return Err(CliError::Flag("ghz needs --n >= 2".into()));
    }
    let subset = cfg.leading_subset(n)?;
    let model = match s.model {
        ModelKind::Oat => GhzModel::Oat {
            lambda_mhz: match s.lambda_mhz {
                Some(l) => l,
                None => DispersiveParams::new(&cfg, &subset, s.detuning_mhz)?.mean_coupling_mhz,
            },
            frame: args.oat_frame.into(),
        },
        ModelKind::H2 => GhzModel::H2 {
            detuning_mhz: s.detuning_mhz,
            include_crosstalk: s.crosstalk.is_on(),
        },
        ModelKind::H1 => GhzModel::H1 {
            detuning_mhz: s.detuning_mhz,
            n_max: s.n_max,
            include_crosstalk: s.crosstalk.is_on(),
        },
    };
    let mut exp = GhzExperiment::new(subset, model);
    exp.duration_ns = args.duration_ns;
    exp.shots = if args.exact {
        Shots::Exact
    } else {
        Shots::Count(args.shots.unwrap_or_else(|| oatsim_core::experiment::default_shots(n)))
    };
    exp.seed = args.seed;
    exp.gamma_points = usize::try_from(args.gamma_points)
        .map_err(|_| CliError::Flag("--gamma-points too large".into()))?;
    exp.confusion = args.confusion.is_on();
    exp.frame_phases = args.frame_phase.map(|p| vec![p; n]);
    exp.tol = s.tol;

    let mut params = system_json(s);
    params["oat_frame"] = json!(format!("{:?}", args.oat_frame).to_lowercase());
    params["duration_ns"] = json!(args.duration_ns);
    params["shots"] = json!(exp.shots);
    params["gamma_points"] = json!(args.gamma_points);
    params["confusion"] = json!(switch(exp.confusion));
    params["frame_phase"] = json!(args.frame_phase);
    params["threads"] = json!(threads);
    let mut run = Run::start(&args.out, manifest("ghz", params, Some(input), Some(args.seed)))?;

    let report = run_ghz_experiment(&cfg, &exp)?;
    let body = json!({ "model": exp.model, "seed": args.seed, "report": report });
    run.write("report.json", (serde_json::to_string_pretty(&body)? + "\n").as_bytes())?;
    run.write("parity.csv", parity_curve_csv(&report).as_bytes())?;
    let parity = parity_report_json(&report.curve, &report.fit);
    run.write("parity.json", (serde_json::to_string_pretty(&parity)? + "\n").as_bytes())?;
    run.finish()?;
    println!(
        "N = {n}  A = {:.6}  phase = {:.6}  F = {:.6}  genuine = {}",
        report.fit.amplitude, report.fit.phase, report.fidelity, report.genuine
    );
    if let Some(sd) = report.fidelity_subgroup_std {
        println!("fidelity subgroup std = {sd:.6}");
    }
    println!("wrote report to {}", args.out.display());
    Ok(())
}

pub fn validate(args: &ValidateArgs, threads: Option<u16>) -> Result<(), CliError> {
    let (cfg, input) = load_device(args.device.as_deref(), None)?;
    let level = match args.level {
        LevelArg::Fast => Level::Fast,
        LevelArg::Full => Level::Full,
    };
    let mut run = match &args.out {
        Some(dir) => {
            let params = json!({
                "level": format!("{:?}", args.level).to_lowercase(),
                "threads": threads,
            });
            Some(Run::start(dir, manifest("validate", params, Some(input), None))?)
        }
        None => None,
    };
    let rows = suite(&cfg, level)?;
    print!("{}", render_table(&rows));
    if let Some(run) = run.as_mut() {
        run.write("validate.json", (serde_json::to_string_pretty(&rows)? + "\n").as_bytes())?;
    }
    if let Some(run) = run {
        run.finish()?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::Validation(format!("{failed} of {} checks failed", rows.len())));
    }
    println!("all {} checks passed", rows.len());
    Ok(())
}
