use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use borp_core::besov::estimate;
use borp_core::controlled::{compose, driver_as_controlled};
use borp_core::experiments::{regularity_profile, ProfileConfig as Profile};
use borp_core::lift::{lift_md_leftpoint, lift_scalar, rough_path_norm, ScalarLift};
use borp_core::path_gen::{self, load_path, save_path, simulate_fbm_with, DriverKind, DriverSpec, Expression};
use borp_core::rde::{solve_onestep, solve_picard, with_regularity, WindowPolicy};
use borp_core::sewing::{rough_integral, SewingStatus};
use borp_core::{RdeProblem, RegularityParams, RoughPath, SampledPath};
use serde_json::json;

use crate::config::{
    DriverKindName, IntegrateConfig, LiftConfig, LiftMode, NormConfig, ProfileConfig, RunConfig, SimulateConfig,
    SolveConfig, SolveMethod,
};
use crate::oracle;
use crate::report::{place, write_atomic_core, Report};
use crate::CliError;

fn run_config(command: &str, out_dir: &Path) -> RunConfig {
    RunConfig { command: Some(command.into()), output_dir: Some(out_dir.to_path_buf()), ..Default::default() }
}

fn load_input(input: &Option<PathBuf>) -> Result<SampledPath, CliError> {
    let path = input.as_ref().ok_or_else(|| CliError::Input("--input is required".into()))?;
    let file = File::open(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    load_path(std::io::BufReader::new(file)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn default_mode(x: &SampledPath) -> LiftMode {
    if x.dim() == 1 {
        LiftMode::Stratonovich
    } else {
        LiftMode::Leftpoint
    }
}

fn lift_with(x: &SampledPath, mode: LiftMode) -> Result<RoughPath, CliError> {
    Ok(match mode {
        LiftMode::Stratonovich => lift_scalar(x, ScalarLift::Stratonovich)?,
        LiftMode::Ito => lift_scalar(x, ScalarLift::Ito)?,
        LiftMode::Leftpoint => lift_md_leftpoint(x)?,
    })
}

fn write_path(path: &Path, x: &SampledPath) -> Result<(), CliError> {
    write_atomic_core(path, |w| save_path(x, w))
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report values serialize")
}

pub fn simulate(cfg: SimulateConfig, out_dir: &Path) -> Result<(), CliError> {
    let kind = match cfg.kind.unwrap() {
        DriverKindName::Brownian => DriverKind::Brownian,
        DriverKindName::Fbm => DriverKind::Fbm {
            hurst: cfg.hurst.ok_or_else(|| CliError::Input("--kind fbm needs --hurst".into()))?,
        },
        DriverKindName::Deterministic => {
            DriverKind::Deterministic { expression: cfg.expression.unwrap_or(Expression::Linear) }
        }
    };
    if cfg.hurst.is_some() && !matches!(kind, DriverKind::Fbm { .. }) {
        return Err(CliError::Input("--hurst only applies to --kind fbm".into()));
    }
    let spec = DriverSpec {
        kind,
        dimension: cfg.n.unwrap(),
        horizon: cfg.horizon.unwrap(),
        n_steps: cfg.steps.unwrap(),
        seed: cfg.seed.unwrap(),
    };
    let x = match kind {
        DriverKind::Fbm { .. } => simulate_fbm_with(&spec, cfg.method.unwrap())?,
        _ => path_gen::simulate(&spec)?,
    };
    let target = place(out_dir, cfg.output.as_ref().unwrap());
    write_path(&target, &x)?;
    println!(
        "wrote {}: N={} T={} seed={} dim={}",
        target.display(),
        spec.n_steps,
        spec.horizon,
        spec.seed,
        spec.dimension
    );
    Ok(())
}

pub fn norm(cfg: NormConfig, out_dir: &Path) -> Result<(), CliError> {
    let x = load_input(&cfg.input)?;
    let params = RegularityParams::new(cfg.alpha.unwrap(), cfg.beta.unwrap(), cfg.q.unwrap().0)?;
    let report = estimate(&x, params, cfg.quadrature.unwrap())?;
    let mut results = to_json(&report);
    results["n_steps"] = json!(x.n_steps());
    results["dim"] = json!(x.dim());
    results["horizon"] = json!(x.horizon());
    let target = place(out_dir, cfg.report.as_ref().unwrap());
    let seminorm = report.seminorm_dyadic;
    Report::new(RunConfig { norm: Some(cfg), ..run_config("norm", out_dir) }, results).write(&target)?;
    println!("seminorm_dyadic = {seminorm:.10e}; report {}", target.display());
    Ok(())
}

pub fn lift(mut cfg: LiftConfig, out_dir: &Path) -> Result<(), CliError> {
    let x = load_input(&cfg.input)?;
    let mode = *cfg.mode.get_or_insert(default_mode(&x));
    let rp = lift_with(&x, mode)?;
    let params = RegularityParams::new(cfg.alpha.unwrap(), cfg.beta.unwrap(), cfg.q.unwrap().0)?;
    let norm = rough_path_norm(&rp, params)?;
    if let Some(p) = &cfg.second_level {
        write_atomic_core(&place(out_dir, p), |w| rp.second_level().write_csv(w))?;
    }
    let results = json!({
        "kind": rp.kind(),
        "n_steps": rp.n_steps(),
        "dim": rp.dim(),
        "chen": rp.chen_report(),
        "rough_path_norm": norm,
    });
    let target = place(out_dir, cfg.report.as_ref().unwrap());
    Report::new(RunConfig { lift: Some(cfg), ..run_config("lift", out_dir) }, results).write(&target)?;
    println!("rough path norm = {norm:.10e}; report {}", target.display());
    Ok(())
}

pub fn integrate(mut cfg: IntegrateConfig, out_dir: &Path) -> Result<(), CliError> {
    let x = load_input(&cfg.input)?;
    let mode = *cfg.mode.get_or_insert(default_mode(&x));
    let rp = lift_with(&x, mode)?;
    let driver = driver_as_controlled(&rp)?;
    let z = match &cfg.integrand {
        None => driver,
        Some(spec) => compose(spec.build(x.dim(), x.dim())?.as_ref(), &driver, &rp)?,
    };
    let out = rough_integral(&rp, &z, cfg.tol.unwrap())?;
    let sewing = out.sewing;
    let target = place(out_dir, cfg.output.as_ref().unwrap());
    write_path(&target, &sewing.integral_path)?;
    let mut results = json!({
        "final_value": sewing.final_value(),
        "sewing": sewing.summary(),
        "output": target,
    });
    if cfg.integrand.is_none() && mode == LiftMode::Stratonovich {
        let (a, b) = (x.point(0)[0], x.point(x.n_steps())[0]);
        let expected = 0.5 * (b * b - a * a);
        results["telescoping"] = json!({
            "expected": expected,
            "abs_error": (sewing.final_value()[0] - expected).abs(),
        });
    }
    let report_path = place(out_dir, cfg.report.as_ref().unwrap());
    let diagnostics = json!({ "chen": rp.chen_report() });
    Report::new(RunConfig { integrate: Some(cfg), ..run_config("integrate", out_dir) }, results)
        .with_diagnostics(diagnostics)
        .write(&report_path)?;
    if sewing.status == SewingStatus::NotCauchy {
        return Err(CliError::Numeric(format!(
            "sewing sums did not settle (history {:?}); report {}",
            sewing.cauchy_history,
            report_path.display()
        )));
    }
    println!("integral = {:?}; report {}", sewing.final_value(), report_path.display());
    Ok(())
}

pub fn solve(mut cfg: SolveConfig, out_dir: &Path) -> Result<(), CliError> {
    let x = match &cfg.input {
        Some(_) => load_input(&cfg.input)?,
        None => {
            let (n, horizon, steps, seed) = (cfg.n.unwrap(), cfg.horizon.unwrap(), cfg.steps.unwrap(), cfg.seed.unwrap());
            let spec = match cfg.hurst {
                Some(h) => DriverSpec::fbm(h, n, horizon, steps, seed),
                None => DriverSpec::brownian(n, horizon, steps, seed),
            };
            path_gen::simulate(&spec)?
        }
    };
    let mode = *cfg.mode.get_or_insert(default_mode(&x));
    let rp = lift_with(&x, mode)?;
    let spec = cfg.field.clone().unwrap();
    let y0 = cfg.y0.clone().unwrap();
    let field = spec.build(y0.len(), x.dim())?;
    let params = RegularityParams::new(cfg.alpha.unwrap(), cfg.beta.unwrap(), cfg.q.unwrap().0)?;
    let policy = WindowPolicy { initial_fraction: cfg.initial_fraction.unwrap(), max_halvings: cfg.max_halvings.unwrap() };
    let problem = RdeProblem::new(rp, Arc::from(field), y0.clone(), params)?.with_window_policy(policy)?;
    let exact = match cfg.oracle {
        None => None,
        Some(_) => {
            if mode != LiftMode::Stratonovich {
                return Err(CliError::Input("the flow oracle needs a scalar driver with the Stratonovich lift".into()));
            }
            Some(oracle::flow(&spec, &y0, &x).ok_or_else(|| {
                CliError::Input(format!("no closed-form flow is known for field {spec:?}"))
            })?)
        }
    };
    let sol = match cfg.method.unwrap() {
        SolveMethod::Picard => solve_picard(&problem, cfg.tol.unwrap(), cfg.max_iter.unwrap())?,
        SolveMethod::Onestep => solve_onestep(&problem)?,
    };
    let sol = with_regularity(sol, &problem)?;
    let target = place(out_dir, cfg.output.as_ref().unwrap());
    write_path(&target, &sol.y)?;
    let mut results = json!({
        "n_steps": sol.y.n_steps(),
        "final_value": sol.y.point(sol.y.n_steps()),
        "converged": sol.converged,
        "residual": sol.residual,
        "metric_residual": sol.metric_residual,
        "picard_iters_per_window": sol.picard_iters_per_window,
        "windows": sol.windows,
        "regularity": sol.regularity,
        "output": target,
    });
    if let Some(exact) = &exact {
        results["oracle"] = json!({ "kind": "flow", "sup_error": sol.y.sup_distance(exact)? });
    }
    let diagnostics = json!({
        "warnings": sol.warnings,
        "chen": problem.driver.chen_report(),
        "driver_fingerprint": x.fingerprint().to_string(),
    });
    let report_path = place(out_dir, cfg.report.as_ref().unwrap());
    Report::new(RunConfig { solve: Some(cfg), ..run_config("solve", out_dir) }, results)
        .with_diagnostics(diagnostics)
        .write(&report_path)?;
    if !sol.converged {
        return Err(CliError::NotConverged(format!(
            "Picard iteration missed its tolerance on some windows (residual {:e}); report {}",
            sol.residual,
            report_path.display()
        )));
    }
    println!("solved: Y_T = {:?}; report {}", sol.y.point(sol.y.n_steps()), report_path.display());
    Ok(())
}

pub fn profile(cfg: ProfileConfig, out_dir: &Path) -> Result<(), CliError> {
    let (start, count) = (cfg.seed_start.unwrap(), cfg.seeds.unwrap());
    let (lo, hi) = (cfg.min_level.unwrap(), cfg.max_level.unwrap());
    if lo > hi {
        return Err(CliError::Input(format!("--min-level {lo} exceeds --max-level {hi}")));
    }
    let core = Profile {
        seeds: (start..start + count).collect(),
        levels: (lo..=hi).collect(),
        horizon: cfg.horizon.unwrap(),
        alpha: cfg.alpha.unwrap(),
        beta: cfg.beta.unwrap(),
        qs: cfg.qs.clone().unwrap().iter().map(|q| q.0).collect(),
    };
    let report = regularity_profile(&core)?;
    let csv = place(out_dir, cfg.csv.as_ref().unwrap());
    write_atomic_core(&csv, |w| report.write_csv(w))?;
    let results = json!({ "summaries": report.summaries, "csv": csv, "rows": report.rows.len() });
    let target = place(out_dir, cfg.report.as_ref().unwrap());
    Report::new(RunConfig { profile: Some(cfg), ..run_config("profile", out_dir) }, results).write(&target)?;
    for s in &report.summaries {
        println!("q={}: medians {:?}, spread {:.3}", s.q, s.medians, s.spread);
    }
    println!("report {}", target.display());
    Ok(())
}
