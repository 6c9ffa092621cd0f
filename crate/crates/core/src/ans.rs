//! Scaled anisotropic Navier–Stokes solver in streamfunction–vorticity form.
//!
//! `ω = ∂_yu - ε²∂_xv = Δ_εψ`, `u = ∂_yψ + ū`, `v = -∂_xψ`, and
//! `∂_tω + u∂_xω + v∂_yω = (ε²∂_x² + η∂_y²)ω`. Each mode `k ≠ 0` is advanced
//! with Crank–Nicolson diffusion and Adams–Bashforth advection; the unknown
//! wall vorticity is fixed by an influence matrix so that `ψ = ∂_yψ = 0` at
//! both walls. The mean flow `ū(y)` obeys `∂_tū = η∂_y²ū - mean(u∂_xu + v∂_yu) - g`
//! with the same mean-pressure treatment as the hydrostatic solver.

use crate::discretization::{DenseLu, Grid, SpectralField};
use crate::elliptic::dirichlet_matrix;
use crate::error::{HydroError, Result};
use crate::timestep::{cfl_number, filter_factors, step_count, ImplicitDiffusion, MeanPressure, StepSettings};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsSettings {
    pub epsilon: f64,
    pub eta: f64,
    pub step: StepSettings,
    /// Allowed energy growth per step beyond the mean-pressure work.
    pub energy_tolerance: f64,
}

impl AnsSettings {
    pub fn new(epsilon: f64, dt: f64) -> Self {
        AnsSettings {
            epsilon,
            eta: 1.0,
            step: StepSettings::new(dt),
            energy_tolerance: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        if !(self.epsilon > 0.0) || !(self.eta > 0.0) {
            return Err(HydroError::InvalidParameter(format!(
                "epsilon and eta must be positive, got {} and {}",
                self.epsilon, self.eta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AnsState {
    pub omega: SpectralField,
    pub psi: SpectralField,
    pub u: SpectralField,
    pub v: SpectralField,
    pub t: f64,
    pub step: usize,
    /// Mean pressure gradient of the last step.
    pub mean_px: f64,
    prev: Option<(SpectralField, Array1<Complex64>)>,
}

/// Constant-in-time source terms: `f_ω` in the vorticity equation and
/// `f_ū(y)` in the mean-flow equation.
#[derive(Debug, Clone)]
pub struct AnsForcing {
    pub vorticity: SpectralField,
    pub mean: Array1<Complex64>,
}

/// Operators for one `|k| ≠ 0` and one step length.
struct ModeOps {
    diffusion: ImplicitDiffusion,
    psi_lu: DenseLu,
    omega_hom: [Array1<Complex64>; 2],
    psi_hom: [Array1<Complex64>; 2],
    influence_inv: [[f64; 2]; 2],
}

impl ModeOps {
    fn new(grid: &Grid, epsilon: f64, eta: f64, k: i64, h: f64, crank_nicolson: bool) -> Result<Self> {
        let cheb = grid.cheb();
        let n = grid.ny();
        let a2 = (epsilon * k as f64).powi(2);
        let diffusion = ImplicitDiffusion::new(cheb, eta, a2, h, crank_nicolson, k)?;
        let psi_lu = DenseLu::new(&dirichlet_matrix(cheb, a2), "streamfunction", k)?;
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let solve_psi = |w: &Array1<Complex64>| {
            let mut rhs = w.clone();
            rhs[0] = zero;
            rhs[n - 1] = zero;
            psi_lu.solve(rhs.view())
        };
        let (w0, _) = diffusion.solve(Array1::zeros(n), (one, zero), None);
        let (w1, _) = diffusion.solve(Array1::zeros(n), (zero, one), None);
        let p0 = solve_psi(&w0);
        let p1 = solve_psi(&w1);
        let d1 = cheb.d1();
        let slope = |p: &Array1<Complex64>, row: usize| -> f64 {
            d1.row(row).iter().zip(p.iter()).map(|(a, b)| a * b.re).sum()
        };
        let b = [[slope(&p0, 0), slope(&p1, 0)], [slope(&p0, n - 1), slope(&p1, n - 1)]];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let scale = b.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(det.abs() > 1e-14 * scale * scale) {
            return Err(HydroError::Singular {
                k,
                what: "influence matrix".into(),
            });
        }
        let influence_inv = [[b[1][1] / det, -b[0][1] / det], [-b[1][0] / det, b[0][0] / det]];
        Ok(ModeOps {
            diffusion,
            psi_lu,
            omega_hom: [w0, w1],
            psi_hom: [p0, p1],
            influence_inv,
        })
    }

    /// Returns `(ω⁺, ψ⁺)` for one mode.
    fn advance(
        &self,
        d1: &Array2<f64>,
        omega: &Array1<Complex64>,
        forcing: &Array1<Complex64>,
        h: f64,
    ) -> (Array1<Complex64>, Array1<Complex64>) {
        let n = omega.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut rhs = self.diffusion.explicit_part(omega);
        rhs.iter_mut().zip(forcing.iter()).for_each(|(r, f)| *r += f * h);
        let (wp, _) = self.diffusion.solve(rhs, (zero, zero), None);
        let mut prhs = wp.clone();
        prhs[0] = zero;
        prhs[n - 1] = zero;
        let pp = self.psi_lu.solve(prhs.view());
        let slope = |row: usize| -> Complex64 { d1.row(row).iter().zip(pp.iter()).map(|(a, b)| b * *a).sum() };
        let (s0, s1) = (slope(0), slope(n - 1));
        let inv = &self.influence_inv;
        let alpha = -(inv[0][0] * s0 + inv[0][1] * s1);
        let beta = -(inv[1][0] * s0 + inv[1][1] * s1);
        let w = &wp + &(&self.omega_hom[0] * alpha) + &self.omega_hom[1] * beta;
        let mut p = &pp + &(&self.psi_hom[0] * alpha) + &self.psi_hom[1] * beta;
        p[0] = zero;
        p[n - 1] = zero;
        (w, p)
    }
}

pub struct AnsSolver {
    grid: Arc<Grid>,
    settings: AnsSettings,
    full: HashMap<i64, ModeOps>,
    half: HashMap<i64, ModeOps>,
    mean_full: ImplicitDiffusion,
    mean_half: ImplicitDiffusion,
    filter: Vec<f64>,
    flux_target: f64,
}

fn k0_row(f: &SpectralField) -> Array1<Complex64> {
    let i = f.grid().index_of(0).expect("k = 0");
    f.row(i).to_owned()
}

impl AnsSolver {
    /// Set up operators and the initial state from `(u₀, v₀)`.
    pub fn new(u0: &SpectralField, v0: &SpectralField, settings: AnsSettings) -> Result<(Self, AnsState)> {
        settings.validate()?;
        let grid = u0.grid().clone();
        let cheb = grid.cheb();
        let dt = settings.step.dt;
        let mut full = HashMap::new();
        let mut half = HashMap::new();
        for k in 1..=(grid.nx() as i64 / 2) {
            full.insert(k, ModeOps::new(&grid, settings.epsilon, settings.eta, k, dt, true)?);
            half.insert(k, ModeOps::new(&grid, settings.epsilon, settings.eta, k, 0.5 * dt, false)?);
        }
        let flux_target = cheb.weights().iter().zip(k0_row(u0).iter()).map(|(w, c)| w * c.re).sum();
        let solver = AnsSolver {
            mean_full: ImplicitDiffusion::new(cheb, settings.eta, 0.0, dt, true, 0)?,
            mean_half: ImplicitDiffusion::new(cheb, settings.eta, 0.0, 0.5 * dt, false, 0)?,
            filter: filter_factors(&grid, settings.step.filter_alpha),
            grid,
            settings,
            full,
            half,
            flux_target,
        };
        let eps2 = settings.epsilon * settings.epsilon;
        let mut omega = &u0.ddy() - &v0.ddx().scaled(eps2);
        omega.set_real(u0.is_real());
        let state = solver.assemble(omega, k0_row(u0), 0.0, 0, 0.0, None);
        Ok((solver, state))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn settings(&self) -> &AnsSettings {
        &self.settings
    }

    /// Build `(ψ, u, v)` from `ω` (k ≠ 0 rows) and the mean profile `ū`.
    fn assemble(
        &self,
        omega: SpectralField,
        mean_u: Array1<Complex64>,
        t: f64,
        step: usize,
        mean_px: f64,
        prev: Option<(SpectralField, Array1<Complex64>)>,
    ) -> AnsState {
        let grid = &self.grid;
        let cheb = grid.cheb();
        let zero_row = grid.index_of(0).expect("k = 0");
        let mut omega = omega;
        let mut psi = SpectralField::zeros(grid);
        psi.set_real(omega.is_real());
        for i in 0..grid.nx() {
            let k = grid.wavenumber(i);
            if k == 0 {
                continue;
            }
            let ops = &self.full[&k.abs()];
            let mut rhs = omega.row(i).to_owned();
            let n = rhs.len();
            rhs[0] = Complex64::new(0.0, 0.0);
            rhs[n - 1] = Complex64::new(0.0, 0.0);
            psi.row_mut(i).assign(&ops.psi_lu.solve(rhs.view()));
        }
        // mean part: ψ̄ = ∫₀^y ū - y ∫₀¹ ū, ω̄ = ∂_y ū
        let flux: Complex64 = cheb.weights().iter().zip(mean_u.iter()).map(|(w, c)| c * *w).sum();
        let anti: Array1<Complex64> = cheb
            .antiderivative()
            .outer_iter()
            .map(|r| r.iter().zip(mean_u.iter()).map(|(a, b)| b * *a).sum())
            .collect();
        let psi0 = Array1::from_iter(cheb.nodes().iter().zip(anti.iter()).map(|(&y, a)| a - flux * y));
        psi.row_mut(zero_row).assign(&psi0);
        let omega0: Array1<Complex64> = cheb
            .d1()
            .outer_iter()
            .map(|r| r.iter().zip(mean_u.iter()).map(|(a, b)| b * *a).sum())
            .collect();
        omega.row_mut(zero_row).assign(&omega0);
        let mut u = psi.ddy();
        u.row_mut(zero_row).assign(&mean_u);
        let v = -&psi.ddx();
        AnsState {
            omega,
            psi,
            u,
            v,
            t,
            step,
            mean_px,
            prev,
        }
    }

    /// `(u∂_xω + v∂_yω, mean row of u∂_xu + v∂_yu)`, dealiased.
    pub fn nonlinear(&self, state: &AnsState) -> (SpectralField, Array1<Complex64>) {
        let (u, v, w) = (&state.u, &state.v, &state.omega);
        let nw = &u.mul_dealiased(&w.ddx()) + &v.mul_dealiased(&w.ddy());
        let nu = &u.mul_dealiased(&u.ddx()) + &v.mul_dealiased(&u.ddy());
        (nw, k0_row(&nu))
    }

    fn mean_flux(&self) -> Option<Complex64> {
        match self.settings.step.mean_pressure {
            MeanPressure::Zero => None,
            MeanPressure::FixedFlux => Some(Complex64::new(self.flux_target, 0.0)),
        }
    }

    fn sub_step(
        &self,
        state: &AnsState,
        nw: &SpectralField,
        nu: &Array1<Complex64>,
        h: f64,
        crank_nicolson: bool,
        forcing: Option<&AnsForcing>,
    ) -> (SpectralField, Array1<Complex64>, f64) {
        let grid = &self.grid;
        let d1 = grid.cheb().d1();
        let ops = if crank_nicolson { &self.full } else { &self.half };
        let mean_op = if crank_nicolson { &self.mean_full } else { &self.mean_half };
        let mut omega = SpectralField::zeros(grid);
        omega.set_real(state.omega.is_real());
        for i in 0..grid.nx() {
            let k = grid.wavenumber(i);
            if k == 0 {
                continue;
            }
            let mut f = nw.row(i).mapv(|c| -c);
            if let Some(ext) = forcing {
                f = &f + &ext.vorticity.row(i);
            }
            let (w, _) = ops[&k.abs()].advance(d1, &state.omega.row(i).to_owned(), &f, h);
            omega.row_mut(i).assign(&(&w * self.filter[i]));
        }
        let mut rhs = mean_op.explicit_part(&k0_row(&state.u));
        let mut f0 = nu.mapv(|c| -c);
        if let Some(ext) = forcing {
            f0 = &f0 + &ext.mean;
        }
        rhs.iter_mut().zip(f0.iter()).for_each(|(r, f)| *r += f * h);
        let zero = Complex64::new(0.0, 0.0);
        let (mean_u, g) = mean_op.solve(rhs, (zero, zero), self.mean_flux());
        (omega, mean_u, g.re)
    }

    pub fn step(&self, state: &AnsState) -> Result<AnsState> {
        self.step_forced(state, None)
    }

    pub fn step_forced(&self, state: &AnsState, forcing: Option<&AnsForcing>) -> Result<AnsState> {
        let dt = self.settings.step.dt;
        let cfl = cfl_number(&state.u, &state.v, dt);
        if cfl > self.settings.step.cfl_limit {
            return Err(HydroError::Cfl {
                cfl,
                limit: self.settings.step.cfl_limit,
            });
        }
        let (nw, nu) = self.nonlinear(state);
        let starting = state.step < self.settings.step.start_steps;
        let next = match &state.prev {
            Some((pw, pu)) if !starting => {
                let aw = &nw.scaled(1.5) - &pw.scaled(0.5);
                let au = &nu * 1.5 - pu * 0.5;
                let (w, m, g) = self.sub_step(state, &aw, &au, dt, true, forcing);
                self.assemble(w, m, state.t + dt, state.step + 1, g, Some((nw, nu)))
            }
            _ => {
                let h = 0.5 * dt;
                let (w, m, _) = self.sub_step(state, &nw, &nu, h, false, forcing);
                let mid = self.assemble(w, m, state.t + h, state.step, 0.0, None);
                let (nw_mid, nu_mid) = self.nonlinear(&mid);
                let (w, m, g) = self.sub_step(&mid, &nw_mid, &nu_mid, h, false, forcing);
                self.assemble(w, m, state.t + dt, state.step + 1, g, Some((nw, nu)))
            }
        };
        if !next.omega.max_abs().is_finite() {
            return Err(HydroError::Instability {
                t: next.t,
                what: "non-finite vorticity".into(),
            });
        }
        Ok(next)
    }

    pub fn flux_target(&self) -> f64 {
        self.flux_target
    }
}

/// Kinetic energy `½‖(u, εv)‖²`.
pub fn kinetic_energy(u: &SpectralField, v: &SpectralField, epsilon: f64) -> f64 {
    0.5 * (u.l2_norm_sq() + epsilon * epsilon * v.l2_norm_sq())
}

/// `‖(ε∂_xu, √η∂_yu, ε²∂_xv, ε√η∂_yv)‖²`.
pub fn dissipation(u: &SpectralField, v: &SpectralField, epsilon: f64, eta: f64) -> f64 {
    let e2 = epsilon * epsilon;
    e2 * u.ddx().l2_norm_sq() + eta * u.ddy().l2_norm_sq() + e2 * e2 * v.ddx().l2_norm_sq() + e2 * eta * v.ddy().l2_norm_sq()
}

/// Strip flux `∫₀¹ū dy`.
pub fn mean_flux(u: &SpectralField) -> f64 {
    let w = u.grid().cheb().weights();
    w.iter().zip(k0_row(u).iter()).map(|(w, c)| w * c.re).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub energy: f64,
    /// Dissipation at the step midpoint.
    pub dissipation: f64,
    /// Power of the mean pressure gradient at the step midpoint, `g ∫ū dy`.
    pub pressure_work: f64,
    /// `(E⁺ - E)/dt + D + g∫ū`: zero for the exact dynamics.
    pub budget_residual: f64,
}

/// Energy budget of the step `before -> after`, measured with midpoint fields.
pub fn energy_record(before: &AnsState, after: &AnsState, settings: &AnsSettings) -> EnergyRecord {
    let eps = settings.epsilon;
    let dt = after.t - before.t;
    let um = (&before.u + &after.u).scaled(0.5);
    let vm = (&before.v + &after.v).scaled(0.5);
    let e0 = kinetic_energy(&before.u, &before.v, eps);
    let e1 = kinetic_energy(&after.u, &after.v, eps);
    let d = dissipation(&um, &vm, eps, settings.eta);
    let work = after.mean_px * mean_flux(&um);
    EnergyRecord {
        t: after.t,
        energy: e1,
        dissipation: d,
        pressure_work: work,
        budget_residual: (e1 - e0) / dt + d + work,
    }
}

pub struct AnsRun {
    pub state: AnsState,
    pub energy: Vec<EnergyRecord>,
    pub snapshots: Vec<(f64, SpectralField)>,
}

/// Advance to `t_end`, tracking the energy budget; aborts if the energy grows
/// by more than the mean-pressure work plus `energy_tolerance` in one step.
pub fn ans_solve(
    u0: &SpectralField,
    v0: &SpectralField,
    t_end: f64,
    settings: AnsSettings,
    snapshot_every: usize,
    mut observer: impl FnMut(&AnsSolver, &AnsState) -> Result<()>,
) -> Result<AnsRun> {
    let steps = step_count(t_end, settings.step.dt)?;
    let (solver, mut state) = AnsSolver::new(u0, v0, settings)?;
    let mut energy = Vec::with_capacity(steps);
    let mut snapshots = Vec::new();
    if snapshot_every > 0 {
        snapshots.push((0.0, state.u.clone()));
    }
    observer(&solver, &state)?;
    for n in 1..=steps {
        let mut next = solver.step(&state)?;
        next.t = n as f64 * settings.step.dt;
        let rec = energy_record(&state, &next, &settings);
        let e0 = kinetic_energy(&state.u, &state.v, settings.epsilon);
        let allowed = settings.step.dt * (-rec.pressure_work).max(0.0) + settings.energy_tolerance;
        if rec.energy - e0 > allowed {
            return Err(HydroError::Instability {
                t: next.t,
                what: format!("energy grew by {:.3e} in one step", rec.energy - e0),
            });
        }
        energy.push(rec);
        if snapshot_every > 0 && n % snapshot_every == 0 {
            snapshots.push((next.t, next.u.clone()));
        }
        observer(&solver, &next)?;
        state = next;
    }
    Ok(AnsRun {
        state,
        energy,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;
    use crate::hydro::HydroSolver;
    use crate::initial_data::{make_family, vertical_velocity, DataSpec};
    use std::f64::consts::PI;

    #[test]
    fn x_independent_data_matches_hydrostatic() {
        let g = Grid::new(GridSpec::new(16, 24)).unwrap();
        let u0 = SpectralField::from_fn(&g, |_, y| y * y - y + 0.3 * (PI * y).sin());
        let v0 = SpectralField::zeros(&g);
        for mp in [MeanPressure::Zero, MeanPressure::FixedFlux] {
            let mut st = StepSettings::new(1e-3);
            st.mean_pressure = mp;
            let (hs, mut h) = HydroSolver::new(&u0, st).unwrap();
            let (asol, mut a) = AnsSolver::new(&u0, &v0, AnsSettings { step: st, ..AnsSettings::new(0.1, 1e-3) }).unwrap();
            for _ in 0..40 {
                h = hs.step(&h).unwrap();
                a = asol.step(&a).unwrap();
                assert!(h.u.max_diff(&a.u) < 1e-12);
            }
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid::new(GridSpec::new(16, 16)).unwrap();
        let z = SpectralField::zeros(&g);
        let (s, mut st) = AnsSolver::new(&z, &z, AnsSettings::new(0.1, 1e-3)).unwrap();
        for _ in 0..3 {
            st = s.step(&st).unwrap();
        }
        assert_eq!(st.u.max_abs() + st.v.max_abs() + st.omega.max_abs(), 0.0);
    }

    #[test]
    fn invariants_hold_on_family_data() {
        let g = Grid::new(GridSpec::new(32, 32)).unwrap();
        let (u0, v0) = make_family(&DataSpec::default(), &g).unwrap();
        let eps = 0.1;
        let (s, mut st) = AnsSolver::new(&u0, &v0, AnsSettings::new(eps, 1e-3)).unwrap();
        for _ in 0..5 {
            st = s.step(&st).unwrap();
        }
        let walls = [st.u.bottom(), st.u.top(), st.v.bottom(), st.v.top()];
        assert!(walls.iter().flatten().all(|c| c.norm() < 1e-10));
        assert!((&st.u.ddx() + &st.v.ddy()).max_abs() < 1e-10);
        let lap = &st.psi.ddy2() + &st.psi.ddx().ddx().scaled(eps * eps);
        let n = g.ny();
        let diff = &lap - &st.omega;
        let interior = diff.coeffs().slice(ndarray::s![.., 1..n - 1]).iter().fold(0.0f64, |m, c| m.max(c.norm()));
        assert!(interior < 1e-9, "{interior}");
        assert!((vertical_velocity(&st.u).max_diff(&st.v)) < 1e-10);
    }

    #[test]
    fn manufactured_steady_state() {
        let g = Grid::new(GridSpec::new(16, 24)).unwrap();
        let eps = 0.1;
        let psi = SpectralField::from_fn(&g, |x, y| (PI * y).sin().powi(2) * x.sin());
        let u = psi.ddy();
        let v = -&psi.ddx();
        let settings = AnsSettings::new(eps, 2e-3);
        let (s, st0) = AnsSolver::new(&u, &v, settings).unwrap();
        let (nw, nu) = s.nonlinear(&st0);
        let lw = &st0.omega.ddy2() + &st0.omega.ddx().ddx().scaled(eps * eps);
        let forcing = AnsForcing {
            vorticity: &nw - &lw,
            mean: &nu - &k0_row(&u.ddy2()),
        };
        let mut st = AnsSolver::new(&SpectralField::zeros(&g), &SpectralField::zeros(&g), settings)
            .unwrap()
            .1;
        for _ in 0..2500 {
            st = s.step_forced(&st, Some(&forcing)).unwrap();
        }
        assert!(st.psi.max_diff(&psi) < 1e-7, "{}", st.psi.max_diff(&psi));
    }

    #[test]
    fn energy_decays_without_forcing() {
        let g = Grid::new(GridSpec::new(32, 32)).unwrap();
        let (u0, v0) = make_family(&DataSpec::default(), &g).unwrap();
        let mut settings = AnsSettings::new(0.1, 1e-3);
        settings.step.mean_pressure = MeanPressure::Zero;
        let run = ans_solve(&u0, &v0, 0.05, settings, 0, |_, _| Ok(())).unwrap();
        assert_eq!(run.energy.len(), 50);
        for w in run.energy.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-8);
        }
        let worst = run.energy[settings.step.start_steps..].iter().fold(0.0f64, |m, r| m.max(r.budget_residual.abs()));
        assert!(worst < 1e-5, "{worst}");
    }
}
