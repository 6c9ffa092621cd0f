use super::config::RunConfig;
use super::rate::{fit_rate, RateFit};
use crate::ans::{ans_solve, AnsSettings};
use crate::boundary_layer::{lift_solve, psi_correction, to_strip, LiftSettings, StripLift};
use crate::discretization::snapshot::write_snapshot;
use crate::discretization::{Grid, SpectralField};
use crate::elliptic::Side;
use crate::error::{HydroError, Result};
use crate::error_analysis::{
    boundary_data, build_error_state, dx_inverse_v, energy_functionals, error_norms, error_state_from, forcing_terms,
    h_norms, interior_velocity_residual, nonlinear_terms, vorticity_boundary_residual, BootstrapMonitor, ErrorReport,
    ErrorState, HydroContext,
};
use crate::hydro::{hydro_solve, write_monitor_csv, HydroSolver, HydroState, MonitorSettings, RunOutcome};
use crate::initial_data::{generate, AreaTerm, DataReport};
use ndarray::Array1;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Corner-condition tolerance used when generating data.
pub const DATA_TOLERANCE: f64 = 1e-10;

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_field(path: &Path, field: &SpectralField, t: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(&mut w, field, t)?;
    w.flush()?;
    Ok(())
}

/// Directory name of a sweep point.
pub fn epsilon_dir(epsilon: f64) -> String {
    format!("eps_{epsilon}")
}

pub struct GeneratedData {
    pub grid: Arc<Grid>,
    pub u0: SpectralField,
    pub v0: SpectralField,
    pub report: DataReport,
}

/// Build and validate the initial data; writes `u0.hlim`, `v0.hlim` and
/// `data_report.json` into `out`.
pub fn gen_data(config: &RunConfig, out: &Path) -> Result<GeneratedData> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let grid = config.grid()?;
    let (u0, v0, report) = generate(
        &config.data_spec(),
        &grid,
        config.gevrey.sigma,
        config.gevrey.tau0,
        AreaTerm::default(),
        DATA_TOLERANCE,
    )
    .map_err(|e| e.context("module=initial-data"))?;
    write_field(&out.join("u0.hlim"), &u0, 0.0)?;
    write_field(&out.join("v0.hlim"), &v0, 0.0)?;
    write_json(&out.join("data_report.json"), &report)?;
    if !report.passed {
        return Err(HydroError::Validation(format!(
            "initial data failed validation (corner {:.3e}, min curvature {:.4}, M {:.3e})",
            report.compatibility.corner(),
            report.min_curvature,
            report.gevrey_bound
        )));
    }
    Ok(GeneratedData { grid, u0, v0, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub t: f64,
    #[serde(rename = "L2_error")]
    pub l2_error: f64,
    #[serde(rename = "Linf_error")]
    pub linf_error: f64,
    pub bootstrap_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub tau: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

/// Result of one sweep point.
#[derive(Debug, Clone)]
pub struct EpsilonRun {
    pub report: ErrorReport,
    pub errors: Vec<ErrorSample>,
    pub energy: Vec<EnergySample>,
    pub u: SpectralField,
    pub v: SpectralField,
    pub omega_r: SpectralField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub steps: usize,
    pub hydro_outcome: RunOutcome,
    pub epsilons: Vec<f64>,
    pub reports: Vec<ErrorReport>,
    pub rate_fit: Option<RateFit>,
}

struct Shared<'a> {
    config: &'a RunConfig,
    grid: Arc<Grid>,
    u0: SpectralField,
    v0: SpectralField,
    hydro_solver: HydroSolver,
    hydro: Vec<HydroState>,
}

fn add_lifts(a: StripLift, b: StripLift) -> StripLift {
    StripLift {
        omega: &a.omega + &b.omega,
        u: &a.u + &b.u,
        v: &a.v + &b.v,
    }
}

fn analyse_epsilon(shared: &Shared, epsilon: f64) -> Result<EpsilonRun> {
    let config = shared.config;
    let gevrey = config.gevrey_params();
    let r = config.energy_level();
    let dt = config.numerics.dt;
    let t_end = config.numerics.t_end;
    let settings = AnsSettings {
        eta: config.analysis.eta,
        step: config.step_settings(),
        ..AnsSettings::new(epsilon, dt)
    };
    let steps = shared.hydro.len() - 1;
    let every = config.analysis.report_every;

    let mut boot = BootstrapMonitor::new(epsilon, r - 1.0, gevrey);
    let mut errors = Vec::with_capacity(steps + 1);
    let mut h0: Vec<(f64, Array1<Complex64>)> = Vec::with_capacity(steps + 1);
    let mut h1: Vec<(f64, Array1<Complex64>)> = Vec::with_capacity(steps + 1);
    let mut kept: Vec<(usize, ErrorState)> = Vec::new();
    let mut residuals = BTreeMap::new();
    let mut final_data = None;

    let run = ans_solve(&shared.u0, &shared.v0, t_end, settings, 0, |_, state| {
        let n = state.step;
        let hydro = &shared.hydro[n];
        let es = error_state_from(state, hydro, epsilon, None)?;
        let (l2, linf) = error_norms(&es);
        let ratio = boot.push(state.t, &es.omega_r)?;
        errors.push(ErrorSample {
            t: state.t,
            l2_error: l2,
            linf_error: linf,
            bootstrap_ratio: ratio,
        });
        let ctx = HydroContext::new(&shared.hydro_solver, hydro);
        let forcing = forcing_terms(&ctx, &es);
        let data = boundary_data(&ctx, &es, &forcing)?;
        h0.push((state.t, data.h0.clone()));
        h1.push((state.t, data.h1.clone()));
        if n == steps {
            let wall = vorticity_boundary_residual(&ctx, &es, &data, &nonlinear_terms(&es))?;
            residuals.insert("wall_identity".to_string(), wall.max());
            residuals.insert("wall_identity_relative".to_string(), wall.relative());
            residuals.insert("half_line_gap".to_string(), wall.half_line_gap);
            residuals.insert("dx_inverse_jump".to_string(), dx_inverse_v(&es.u_r).jump());
            final_data = Some(data);
        }
        if n % every == 0 || n == steps {
            kept.push((n, es));
        }
        Ok(())
    })
    .map_err(|e| e.context(format!("epsilon={epsilon}, module=anisotropic-ns")))?;

    let lift_settings = LiftSettings {
        length: config.numerics.l_lift,
        nodes: config.analysis.lift_nodes,
        ..LiftSettings::new(epsilon)
    };
    let lift_context = |side: &'static str| move |e: HydroError| e.context(format!("epsilon={epsilon}, side={side}, module=boundary-layer"));
    let bottom = lift_solve(&shared.grid, &h0, Side::Bottom, &lift_settings).map_err(lift_context("bottom"))?;
    let top = lift_solve(&shared.grid, &h1, Side::Top, &lift_settings).map_err(lift_context("top"))?;

    let analysis = |e: HydroError| e.context(format!("epsilon={epsilon}, t={t_end}, module=error-analysis"));
    let mut energy = Vec::with_capacity(kept.len());
    let mut final_state = None;
    for (n, es) in kept {
        let lift = add_lifts(to_strip(&bottom.fields[n], &shared.grid)?, to_strip(&top.fields[n], &shared.grid)?);
        let with_lift = build_error_state(&(&es.u_r + &shared.hydro[n].u), &(&es.v_r + &shared.hydro[n].v), &shared.hydro[n], es.t, epsilon, Some(&lift))?;
        let tau = gevrey.tau(es.t);
        let triple = energy_functionals(&with_lift, r, tau, gevrey.sigma, config.analysis.weight_a).map_err(analysis)?;
        energy.push(EnergySample {
            t: es.t,
            tau,
            e: triple.e,
            g: triple.g,
            d: triple.d,
        });
        if n == steps {
            final_state = Some((with_lift, triple));
        }
    }
    let (es, triple) = final_state.expect("final step is kept");
    let psi = psi_correction(bottom.last(), top.last(), &shared.grid, epsilon).map_err(analysis)?;
    residuals.insert("interior_velocity".to_string(), interior_velocity_residual(&es, &psi).map_err(analysis)?);
    residuals.insert("lift_doublings".to_string(), bottom.doublings.max(top.doublings) as f64);
    let budget = run.energy[settings.step.start_steps.min(run.energy.len())..]
        .iter()
        .fold(0.0f64, |m, rec| m.max(rec.budget_residual.abs()));
    residuals.insert("energy_budget".to_string(), budget);

    let data = final_data.expect("final step is observed");
    let tau = gevrey.tau(t_end);
    let report = ErrorReport {
        epsilon,
        t: t_end,
        l2_error: errors.iter().fold(0.0f64, |m, s| m.max(s.l2_error)),
        linf_error: errors.iter().fold(0.0f64, |m, s| m.max(s.linf_error)),
        e: triple.e,
        g: triple.g,
        d: triple.d,
        bootstrap_ratio: boot.ratio(),
        h_norms: h_norms(&data, &shared.grid, r, tau, gevrey.sigma).map_err(analysis)?,
        residuals,
    };
    Ok(EpsilonRun {
        report,
        errors,
        energy,
        u: run.state.u,
        v: run.state.v,
        omega_r: es.omega_r,
    })
}

fn write_epsilon(dir: &Path, run: &EpsilonRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    let t = run.report.t;
    write_json(&dir.join("report.json"), &run.report)?;
    write_csv(&dir.join("errors.csv"), &run.errors)?;
    write_csv(&dir.join("energy.csv"), &run.energy)?;
    write_field(&dir.join("u.hlim"), &run.u, t)?;
    write_field(&dir.join("v.hlim"), &run.v, t)?;
    write_field(&dir.join("omega_r.hlim"), &run.omega_r, t)?;
    Ok(())
}

/// Workers allowed by `HYDROLIM_THREADS` (unset or invalid: all cores).
pub fn worker_count() -> usize {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    std::env::var("HYDROLIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or(cores)
}

/// Full pipeline: data, one hydrostatic solve, then one coupled error
/// analysis per `ε` on up to `threads` workers. Every artifact is written
/// under `out`; the summary is returned.
pub fn run(config: &RunConfig, out: &Path, threads: usize) -> Result<RunSummary> {
    let data = gen_data(config, out)?;
    fs::write(out.join("config.toml"), config.to_toml())?;
    let gevrey = config.gevrey_params();
    let monitors = MonitorSettings::new(gevrey, config.data.n0, Some(config.data.delta0));
    let settings = config.step_settings();
    let mut states = Vec::new();
    let hydro_run = hydro_solve(&data.u0, config.numerics.t_end, settings, &monitors, config.analysis.snapshot_every, |_, s| {
        states.push(s.clone());
        Ok(())
    })
    .map_err(|e| e.context("module=hydrostatic-solver"))?;
    write_monitor_csv(BufWriter::new(File::create(out.join("monitor.csv"))?), &hydro_run.monitor)?;
    let hydro_dir = out.join("hydro");
    fs::create_dir_all(&hydro_dir)?;
    let mut snaps = hydro_run.snapshots.clone();
    if snaps.is_empty() {
        snaps.push((0.0, data.u0.clone()));
    }
    if snaps.last().map(|(t, _)| *t) != Some(hydro_run.state.t) {
        snaps.push((hydro_run.state.t, hydro_run.state.u.clone()));
    }
    for (t, u) in &snaps {
        let n = (t / config.numerics.dt).round() as usize;
        write_field(&hydro_dir.join(format!("u_{n:06}.hlim")), u, *t)?;
    }
    let steps = states.len() - 1;
    let mut summary = RunSummary {
        config_hash: config.hash(),
        seed: config.seed,
        steps,
        hydro_outcome: hydro_run.outcome.clone(),
        epsilons: config.sweep.epsilons.clone(),
        reports: Vec::new(),
        rate_fit: None,
    };
    match hydro_run.outcome {
        RunOutcome::Completed => {}
        RunOutcome::ConvexityBreakdown { t, min_dyy_u } => {
            write_json(&out.join("summary.json"), &summary)?;
            return Err(HydroError::ConvexityLost {
                min: min_dyy_u,
                required: config.data.delta0,
            }
            .context(format!("t={t}, module=hydrostatic-solver")));
        }
        RunOutcome::BlowUp { t, ratio } => {
            write_json(&out.join("summary.json"), &summary)?;
            return Err(HydroError::Instability {
                t,
                what: format!("Gevrey norm grew by {ratio:.3e}"),
            }
            .context("module=hydrostatic-solver"));
        }
    }

    let (hydro_solver, _) = HydroSolver::new(&data.u0, settings)?;
    let shared = Shared {
        config,
        grid: data.grid.clone(),
        u0: data.u0,
        v0: data.v0,
        hydro_solver,
        hydro: states,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HydroError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<EpsilonRun>> =
        pool.install(|| config.sweep.epsilons.par_iter().map(|&eps| analyse_epsilon(&shared, eps)).collect());
    let mut failure = None;
    for (eps, result) in config.sweep.epsilons.iter().zip(results) {
        match result {
            Ok(run) => {
                write_epsilon(&out.join(epsilon_dir(*eps)), &run)?;
                summary.reports.push(run.report);
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    let positive = summary.reports.iter().all(|r| r.l2_error > 0.0 && r.linf_error > 0.0);
    if summary.reports.len() >= 3 && !positive {
        log::warn!("some sweep errors are zero; skipping the rate fit");
    }
    if summary.reports.len() >= 3 && positive {
        let fit = fit_rate(&summary.reports)?;
        write_json(&out.join("rate_fit.json"), &fit)?;
        summary.rate_fit = Some(fit);
    }
    write_json(&out.join("summary.json"), &summary)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

/// Output directory: explicit choice, then the config's, then `hydrolim-out`.
pub fn resolve_out(explicit: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    explicit
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("hydrolim-out"))
}
