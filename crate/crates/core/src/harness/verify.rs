use crate::ans::{ans_solve, AnsForcing, AnsSettings, AnsSolver};
use crate::boundary_layer::{lift_solve, lift_velocities, neumann_heat_closed_form, LiftSettings};
use crate::discretization::{inverse_transform_x, transform_x, Grid, GridSpec, SpectralField};
use crate::elliptic::{check_kernel_bounds, KernelBoundConfig, KernelBoundReport};
use crate::elliptic::{solve_dirichlet, solve_dirichlet_kernel, Side};
use crate::error::{HydroError, Result};
use crate::gevrey::lemmas::{check_commutator_inequalities, check_product_inequality, CommutatorParams, LemmaReport, Sampling};
use crate::gevrey::{apply_multiplier, n_of_eps, subadditivity_defect, GevreyParams};
use crate::hydro::HydroSolver;
use crate::initial_data::{make_family, DataSpec};
use crate::timestep::{MeanPressure, StepSettings};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyLevel {
    Quick,
    Full,
}

impl FromStr for VerifyLevel {
    type Err = HydroError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(VerifyLevel::Quick),
            "full" => Ok(VerifyLevel::Full),
            other => Err(HydroError::Config(format!("unknown level {other:?}, expected quick or full"))),
        }
    }
}

/// One pass/fail entry: `passed` iff `value` is finite and `value <= tolerance`
/// (or `value >= tolerance` for lower bounds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub module: String,
    pub value: f64,
    pub tolerance: f64,
    pub lower_bound: bool,
    pub passed: bool,
}

impl Check {
    fn at_most(module: &str, name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            module: module.into(),
            value,
            tolerance,
            lower_bound: false,
            passed: value.is_finite() && value <= tolerance,
        }
    }

    fn at_least(module: &str, name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            lower_bound: true,
            passed: value.is_finite() && value >= tolerance,
            ..Check::at_most(module, name, value, tolerance)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    pub seed: u64,
    pub nx: usize,
    pub ny: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub lemmas: Vec<LemmaReport>,
    pub kernel_bounds: Option<KernelBoundReport>,
}

fn grid(nx: usize, ny: usize) -> Result<Arc<Grid>> {
    Grid::new(GridSpec::new(nx, ny))
}

fn relative(a: &SpectralField, b: &SpectralField) -> f64 {
    a.max_diff(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

/// Smooth real field with random coefficients on modes `|k| <= kmax`.
pub fn random_smooth_field(grid: &Arc<Grid>, kmax: i64, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut coeffs = Vec::new();
    for _ in 0..=kmax {
        let c: Vec<(f64, f64)> = (0..6).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        coeffs.push(c);
    }
    SpectralField::from_fn(grid, |x, y| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let profile = |m: usize| (m as f64 * PI * y).cos() + y.powi(m as i32);
                c.iter()
                    .enumerate()
                    .map(|(m, (a, b))| (a * (k as f64 * x).cos() + b * (k as f64 * x).sin()) * profile(m))
                    .sum::<f64>()
            })
            .sum()
    })
}

fn discretization_checks(nx: usize, ny: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let g = grid(nx, ny)?;
    let nodal = Array2::from_shape_fn((nx, ny), |_| rng.random_range(-1.0..1.0));
    let back = inverse_transform_x(&transform_x(&g, &nodal)?);
    let round = (&back - &nodal).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let s = SpectralField::from_fn(&g, |_, y| (PI * y).sin());
    let ds = s.ddy().max_diff(&SpectralField::from_fn(&g, |_, y| PI * (PI * y).cos()));
    let half = s.integrate_y(0.0, 0.5)?[g.index_of(0).expect("k = 0")];
    let f = random_smooth_field(&g, nx as i64 / 2 - 1, rng);
    let once = f.dealias();
    Ok(vec![
        Check::at_most("discretization", "transform_round_trip", round, 1e-13),
        Check::at_most("discretization", "ddy_sin_pi", ds, 1e-9),
        Check::at_most("discretization", "integrate_half_sin_pi", (half.re - 1.0 / PI).abs(), 1e-10),
        Check::at_most("discretization", "dealias_idempotent", once.dealias().max_diff(&once), 0.0),
    ])
}

fn gevrey_checks(nx: usize, ny: usize, trials: usize, seed: u64) -> Result<(Vec<Check>, Vec<LemmaReport>)> {
    let params = GevreyParams::new(1.0, 0.5, 4.0);
    let defect = subadditivity_defect(nx as i64, &[0.0, 0.1, 0.25], &params);
    let g = grid(nx, ny)?;
    let f = SpectralField::from_fn(&g, |x, y| (x.sin() + (3.0 * x).cos()) * y * (1.0 - y));
    let up = apply_multiplier(&f, 0.1, &params, 1)?;
    let back = apply_multiplier(&up, 0.1, &params, -1)?;
    let mut checks = vec![
        Check::at_most("gevrey", "subadditivity_defect", defect, 1e-12),
        Check::at_most("gevrey", "multiplier_round_trip", relative(&back, &f), 1e-12),
    ];
    let sampling = Sampling {
        trials,
        seed,
        ..Sampling::default()
    };
    let n = n_of_eps(0.5, sampling.sigma)? as f64;
    let mut lemmas = check_product_inequality(3.0, 1.0, n, &sampling);
    lemmas.extend(check_commutator_inequalities(&CommutatorParams::default(), &sampling));
    for l in &lemmas {
        checks.push(Check::at_most("gevrey", &l.lemma, l.max_ratio, f64::MAX));
    }
    Ok((checks, lemmas))
}

/// Largest relative error of both Dirichlet solvers on `sin(πy)e^{ikx}`.
pub fn eigenfunction_error(epsilons: &[f64], kmax: i64, ny: usize) -> Result<f64> {
    let nx = (3 * kmax as usize + 3).next_multiple_of(2).max(16);
    let g = grid(nx, ny)?;
    let prof = g.y().mapv(|y| Complex64::new((PI * y).sin(), 0.0));
    let mut worst = 0.0f64;
    for &eps in epsilons {
        for k in 0..=kmax {
            let h = SpectralField::from_mode(&g, k, &prof, false)?;
            let exact = h.scaled(-1.0 / (PI * PI + (eps * k as f64).powi(2)));
            worst = worst
                .max(relative(&solve_dirichlet(&h, eps)?, &exact))
                .max(relative(&solve_dirichlet_kernel(&h, eps)?, &exact));
        }
    }
    Ok(worst)
}

/// Largest relative gap between kernel quadrature and collocation over random right-hand sides.
pub fn kernel_collocation_gap(epsilons: &[f64], count: usize, ny: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let g = grid(32, ny)?;
    let mut worst = 0.0f64;
    for i in 0..count {
        let eps = epsilons[i % epsilons.len()];
        let h = random_smooth_field(&g, 8, rng);
        let a = solve_dirichlet(&h, eps)?;
        worst = worst.max(relative(&solve_dirichlet_kernel(&h, eps)?, &a));
    }
    Ok(worst)
}

fn single_mode(grid: &Grid, k: i64, value: Complex64) -> Array1<Complex64> {
    let mut h = Array1::zeros(grid.nx());
    h[grid.index_of(k).expect("retained mode")] = value;
    h
}

/// `(closed-form error, truncation-doubling difference)` of a constant-data single-mode lift.
pub fn lift_oracle(steps: usize) -> Result<(f64, f64)> {
    let g = grid(16, 8)?;
    let (eps, k, dt) = (0.1, 3, 2.5e-4);
    let hk = Complex64::new(0.7, -0.2);
    let series: Vec<_> = (0..=steps).map(|n| (n as f64 * dt, single_mode(&g, k, hk))).collect();
    let mut settings = LiftSettings::new(eps);
    let mut worst = 0.0f64;
    for (side, s) in [(Side::Bottom, 1.0), (Side::Top, -1.0)] {
        let traj = lift_solve(&g, &series, side, &settings)?;
        let f = traj.last();
        let i = g.index_of(k).expect("retained mode");
        let gz = Complex64::new(0.0, s * k as f64) * hk;
        let a = eps * k as f64;
        for (j, &z) in f.zgrid.nodes().iter().enumerate() {
            let exact = Complex64::new(
                neumann_heat_closed_form(gz.re, a, z, f.t),
                neumann_heat_closed_form(gz.im, a, z, f.t),
            );
            worst = worst.max((f.omega[[i, j]] - exact).norm());
        }
    }
    let traj = lift_solve(&g, &series, Side::Bottom, &settings)?;
    settings.length = 2.0 * traj.last().length();
    settings.max_doublings = 0;
    let wider = lift_solve(&g, &series, Side::Bottom, &settings)?;
    let ua = lift_velocities(traj.last()).u;
    let ub = lift_velocities(wider.last()).u;
    let diff = (&ua.column(0) - &ub.column(0)).iter().fold(0.0f64, |m, c| m.max(c.norm()));
    Ok((worst, diff))
}

fn heat_series(y: f64, t: f64) -> f64 {
    (0..2000)
        .map(|m| {
            let n = (2 * m + 1) as f64;
            -8.0 / (n * PI).powi(3) * (-(n * PI).powi(2) * t).exp() * (n * PI * y).sin()
        })
        .sum()
}

fn hydro_heat_error(ny: usize) -> Result<f64> {
    let g = grid(8, ny)?;
    let u0 = SpectralField::from_fn(&g, |_, y| y * y - y);
    let settings = StepSettings {
        mean_pressure: MeanPressure::Zero,
        ..StepSettings::new(2.5e-5)
    };
    let (solver, mut state) = HydroSolver::new(&u0, settings)?;
    for _ in 0..4000 {
        state = solver.step(&state)?;
    }
    let zero = g.index_of(0).expect("k = 0");
    Ok(g.y()
        .iter()
        .zip(state.u.row(zero).iter())
        .fold(0.0f64, |m, (&y, c)| m.max((c.re - heat_series(y, 0.1)).abs())))
}

/// `sup_t ‖u^ε - u^p‖` over the sweep for x-independent data.
pub fn exactness_error(nx: usize, ny: usize, epsilons: &[f64], dt: f64, steps: usize) -> Result<f64> {
    let g = grid(nx, ny)?;
    let spec = DataSpec { a: 0.0, ..DataSpec::default() };
    let (u0, v0) = make_family(&spec, &g)?;
    let (hs, mut h) = HydroSolver::new(&u0, StepSettings::new(dt))?;
    let mut hydro = vec![h.u.clone()];
    for _ in 0..steps {
        h = hs.step(&h)?;
        hydro.push(h.u.clone());
    }
    let mut worst = 0.0f64;
    for &eps in epsilons {
        let (s, mut a) = AnsSolver::new(&u0, &v0, AnsSettings::new(eps, dt))?;
        for hu in &hydro[1..] {
            a = s.step(&a)?;
            worst = worst.max(a.u.max_diff(hu));
        }
    }
    Ok(worst)
}

/// Steady manufactured solution `ψ = sin²(πy) sin x` reached from rest.
pub fn manufactured_error(steps: usize) -> Result<f64> {
    let g = grid(16, 24)?;
    let eps = 0.1;
    let psi = SpectralField::from_fn(&g, |x, y| (PI * y).sin().powi(2) * x.sin());
    let u = psi.ddy();
    let v = -&psi.ddx();
    let settings = AnsSettings::new(eps, 2e-3);
    let (s, st0) = AnsSolver::new(&u, &v, settings)?;
    let (nw, nu) = s.nonlinear(&st0);
    let lw = &st0.omega.ddy2() + &st0.omega.ddx().ddx().scaled(eps * eps);
    let zero = g.index_of(0).expect("k = 0");
    let forcing = AnsForcing {
        vorticity: &nw - &lw,
        mean: &nu - &u.ddy2().row(zero).to_owned(),
    };
    let z = SpectralField::zeros(&g);
    let mut st = AnsSolver::new(&z, &z, settings)?.1;
    for _ in 0..steps {
        st = s.step_forced(&st, Some(&forcing))?;
    }
    Ok(st.psi.max_diff(&psi))
}

/// `(worst per-step energy budget residual, observed temporal order of E(T))`
/// for unforced runs on the data family with step sizes `dt, dt/2, dt/4`.
pub fn energy_identity(nx: usize, ny: usize, epsilon: f64, t_end: f64, dt: f64) -> Result<(f64, f64)> {
    let g = grid(nx, ny)?;
    let (u0, v0) = make_family(&DataSpec::default(), &g)?;
    let mut worst = 0.0f64;
    let mut finals = Vec::new();
    for h in [dt, 0.5 * dt, 0.25 * dt] {
        let mut settings = AnsSettings::new(epsilon, h);
        settings.step.mean_pressure = MeanPressure::Zero;
        let run = ans_solve(&u0, &v0, t_end, settings, 0, |_, _| Ok(()))?;
        worst = run.energy[settings.step.start_steps..]
            .iter()
            .fold(worst, |m, r| m.max(r.budget_residual.abs()));
        finals.push(run.energy.last().map(|r| r.energy).unwrap_or(0.0));
    }
    let order = ((finals[0] - finals[1]).abs() / (finals[1] - finals[2]).abs()).log2();
    Ok((worst, order))
}

/// Run the verification suite.
pub fn verify(level: VerifyLevel, seed: u64) -> Result<VerifyReport> {
    let full = level == VerifyLevel::Full;
    let (nx, ny) = if full { (32, 48) } else { (16, 32) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = discretization_checks(nx, ny, &mut rng)?;
    let (gevrey, lemmas) = gevrey_checks(nx, ny, if full { 100 } else { 20 }, seed)?;
    checks.extend(gevrey);

    let kmax = if full { 16 } else { 7 };
    checks.push(Check::at_most("strip-elliptic", "eigenfunction", eigenfunction_error(&[0.1, 0.01], kmax, 48)?, 1e-9));
    let count = if full { 50 } else { 10 };
    let gap = kernel_collocation_gap(&[0.1, 0.01], count, 48, &mut rng)?;
    checks.push(Check::at_most("strip-elliptic", "kernel_vs_collocation", gap, 1e-8));
    let kernel_bounds = full.then(|| check_kernel_bounds(&KernelBoundConfig::default()));
    if let Some(kb) = &kernel_bounds {
        let c = kb.value_constant.max(kb.derivative_constant);
        checks.push(Check::at_most("strip-elliptic", "kernel_bound_constant", c, kb.config.constant_limit));
        let spread = kb.value_spread.max(kb.derivative_spread);
        checks.push(Check::at_most("strip-elliptic", "kernel_bound_spread", spread, kb.config.spread_limit));
    }

    let (closed, doubling) = lift_oracle(if full { 1000 } else { 400 })?;
    checks.push(Check::at_most("boundary-layer", "neumann_closed_form", closed, 1e-6));
    checks.push(Check::at_most("boundary-layer", "truncation_doubling", doubling, 1e-8));

    checks.push(Check::at_most("hydrostatic-solver", "heat_equation", hydro_heat_error(ny)?, 1e-8));
    let steps = if full { 1000 } else { 100 };
    let exact = exactness_error(nx, ny, &[0.2, 0.1, 0.05], 2.5e-4, steps)?;
    checks.push(Check::at_most("anisotropic-ns-solver", "x_independent_exactness", exact, 1e-8));
    checks.push(Check::at_most("anisotropic-ns-solver", "manufactured_steady", manufactured_error(2500)?, 1e-7));
    let (budget, order) = energy_identity(nx, ny, 0.1, if full { 0.1 } else { 0.05 }, 2e-3)?;
    checks.push(Check::at_most("anisotropic-ns-solver", "energy_budget", budget, 1e-8));
    checks.push(Check::at_least("anisotropic-ns-solver", "energy_order", order, 1.9));

    Ok(VerifyReport {
        level,
        seed,
        nx,
        ny,
        passed: checks.iter().all(|c| c.passed),
        checks,
        lemmas,
        kernel_bounds,
    })
}
