//! Hydrostatic Navier–Stokes/Prandtl solver.
//!
//! `∂_tu + u∂_xu + v∂_yu - ∂_y²u + ∂_xp = 0`, `∂_yp = 0`, `v = -∫₀^y ∂_xu`.
//! Diffusion is Crank–Nicolson, advection second-order Adams–Bashforth with
//! 2/3 dealiasing. The pressure gradient is a per-mode constant fixed by the
//! vertical-mean constraint `∫₀¹û(k, y) dy = 0` for `k ≠ 0`. The first step is
//! two half-steps of backward-Euler diffusion with explicit advection.

use crate::discretization::{Grid, SpectralField};
use crate::error::{HydroError, Result};
use crate::gevrey::{gevrey_norm, GevreyParams};
use crate::initial_data::vertical_velocity;
use crate::timestep::{apply_filter, cfl_number, filter_factors, step_count, ImplicitDiffusion, MeanPressure, StepSettings};
use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct HydroState {
    pub u: SpectralField,
    pub v: SpectralField,
    /// Per-mode `∂_xp̂` of the last step, FFT row order.
    pub px_hat: Array1<Complex64>,
    pub t: f64,
    pub step: usize,
    prev_nonlinear: Option<SpectralField>,
}

impl HydroState {
    pub fn new(u: SpectralField, t: f64) -> Self {
        let v = vertical_velocity(&u);
        let nx = u.grid().nx();
        HydroState {
            u,
            v,
            px_hat: Array1::zeros(nx),
            t,
            step: 0,
            prev_nonlinear: None,
        }
    }
}

/// `u∂_xu + v∂_yu`, dealiased.
pub fn advection(u: &SpectralField, v: &SpectralField) -> SpectralField {
    &u.mul_dealiased(&u.ddx()) + &v.mul_dealiased(&u.ddy())
}

pub struct HydroSolver {
    grid: Arc<Grid>,
    settings: StepSettings,
    crank_nicolson: ImplicitDiffusion,
    half_step: ImplicitDiffusion,
    filter: Vec<f64>,
    flux_target: Complex64,
}

impl HydroSolver {
    pub fn new(u0: &SpectralField, settings: StepSettings) -> Result<(Self, HydroState)> {
        settings.validate()?;
        let grid = u0.grid().clone();
        let cheb = grid.cheb();
        let zero = grid.index_of(0).expect("k = 0");
        let flux_target = u0.row(zero).iter().zip(cheb.weights().iter()).map(|(c, w)| c * *w).sum();
        let solver = HydroSolver {
            crank_nicolson: ImplicitDiffusion::new(cheb, 1.0, 0.0, settings.dt, true, 0)?,
            half_step: ImplicitDiffusion::new(cheb, 1.0, 0.0, 0.5 * settings.dt, false, 0)?,
            filter: filter_factors(&grid, settings.filter_alpha),
            grid,
            settings,
            flux_target,
        };
        Ok((solver, HydroState::new(u0.clone(), 0.0)))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn settings(&self) -> &StepSettings {
        &self.settings
    }

    fn flux_for(&self, k: i64) -> Option<Complex64> {
        if k != 0 {
            Some(Complex64::new(0.0, 0.0))
        } else {
            match self.settings.mean_pressure {
                MeanPressure::Zero => None,
                MeanPressure::FixedFlux => Some(self.flux_target),
            }
        }
    }

    /// One implicit solve per mode: `A u⁺ = E u - h·forcing - h·g`.
    fn implicit_update(
        &self,
        op: &ImplicitDiffusion,
        u: &SpectralField,
        forcing: &SpectralField,
        h: f64,
    ) -> (SpectralField, Array1<Complex64>) {
        let zero = Complex64::new(0.0, 0.0);
        let mut out = SpectralField::zeros(&self.grid);
        out.set_real(u.is_real());
        let mut px = Array1::zeros(self.grid.nx());
        for i in 0..self.grid.nx() {
            let k = self.grid.wavenumber(i);
            let mut rhs = op.explicit_part(&u.row(i).to_owned());
            rhs.iter_mut().zip(forcing.row(i).iter()).for_each(|(r, f)| *r -= f * h);
            let (row, g) = op.solve(rhs, (zero, zero), self.flux_for(k));
            out.row_mut(i).assign(&row);
            px[i] = g;
        }
        (apply_filter(&out, &self.filter), px)
    }

    fn check_cfl(&self, state: &HydroState) -> Result<()> {
        let cfl = cfl_number(&state.u, &state.v, self.settings.dt);
        if cfl > self.settings.cfl_limit {
            return Err(HydroError::Cfl {
                cfl,
                limit: self.settings.cfl_limit,
            });
        }
        Ok(())
    }

    pub fn step(&self, state: &HydroState) -> Result<HydroState> {
        self.check_cfl(state)?;
        let dt = self.settings.dt;
        let n_now = advection(&state.u, &state.v);
        let starting = state.step < self.settings.start_steps;
        let (u, px) = match &state.prev_nonlinear {
            Some(prev) if !starting => {
                let ab2 = &n_now.scaled(1.5) - &prev.scaled(0.5);
                self.implicit_update(&self.crank_nicolson, &state.u, &ab2, dt)
            }
            _ => {
                let h = 0.5 * dt;
                let (mid, _) = self.implicit_update(&self.half_step, &state.u, &n_now, h);
                let n_mid = advection(&mid, &vertical_velocity(&mid));
                self.implicit_update(&self.half_step, &mid, &n_mid, h)
            }
        };
        let v = vertical_velocity(&u);
        if !u.max_abs().is_finite() {
            return Err(HydroError::Instability {
                t: state.t + dt,
                what: "non-finite hydrostatic velocity".into(),
            });
        }
        Ok(HydroState {
            u,
            v,
            px_hat: px,
            t: state.t + dt,
            step: state.step + 1,
            prev_nonlinear: Some(n_now),
        })
    }

    /// Instantaneous `∂_tu = ∂_y²u - (u∂_xu + v∂_yu) - ∂_xp` with `∂_xp` from the constraint.
    pub fn tendency(&self, u: &SpectralField) -> SpectralField {
        let v = vertical_velocity(u);
        let mut rate = &u.ddy2() - &advection(u, &v);
        let w = self.grid.cheb().weights();
        let means = rate.weighted_sum(w);
        for i in 0..self.grid.nx() {
            let k = self.grid.wavenumber(i);
            let g = match self.flux_for(k) {
                Some(_) => means[i],
                None => Complex64::new(0.0, 0.0),
            };
            rate.row_mut(i).mapv_inplace(|c| c - g);
        }
        rate
    }
}

/// One row of the monitor log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub t: f64,
    pub tau: f64,
    pub min_dyy_u: f64,
    #[serde(rename = "Xnorm_level1")]
    pub xnorm_level1: f64,
    #[serde(rename = "Xnorm_level2")]
    pub xnorm_level2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorSettings {
    pub gevrey: GevreyParams,
    pub n0: u32,
    /// Abort when `min ∂_y²u ≤ delta0`; `None` disables the check.
    pub delta0: Option<f64>,
    /// Abort when the level-1 norm exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl MonitorSettings {
    pub fn new(gevrey: GevreyParams, n0: u32, delta0: Option<f64>) -> Self {
        MonitorSettings {
            gevrey,
            n0,
            delta0,
            blowup_factor: 1.0e3,
        }
    }
}

pub fn monitor_record(u: &SpectralField, t: f64, m: &MonitorSettings) -> Result<MonitorRecord> {
    let uy = u.ddy();
    let uyyy = uy.ddy2();
    Ok(MonitorRecord {
        t,
        tau: m.gevrey.tau(t),
        min_dyy_u: crate::initial_data::min_curvature(u),
        xnorm_level1: gevrey_norm(&uy, m.n0 as f64 - 1.0, t, &m.gevrey)?,
        xnorm_level2: gevrey_norm(&uyyy, m.n0 as f64 - 5.0, t, &m.gevrey)?,
    })
}

pub fn write_monitor_csv<W: Write>(w: W, log: &[MonitorRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in log {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_monitor_csv<R: std::io::Read>(r: R) -> Result<Vec<MonitorRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|rec| rec.map_err(HydroError::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    ConvexityBreakdown { t: f64, min_dyy_u: f64 },
    BlowUp { t: f64, ratio: f64 },
}

pub struct HydroRun {
    pub state: HydroState,
    pub monitor: Vec<MonitorRecord>,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub outcome: RunOutcome,
}

/// Advance to `t_end`, logging monitors every step and storing `u` every
/// `snapshot_every` steps (0 disables snapshots). `observer` sees every state,
/// including the initial one.
pub fn hydro_solve(
    u0: &SpectralField,
    t_end: f64,
    settings: StepSettings,
    monitors: &MonitorSettings,
    snapshot_every: usize,
    mut observer: impl FnMut(&HydroSolver, &HydroState) -> Result<()>,
) -> Result<HydroRun> {
    let steps = step_count(t_end, settings.dt)?;
    let (solver, mut state) = HydroSolver::new(u0, settings)?;
    let first = monitor_record(&state.u, 0.0, monitors)?;
    let reference = first.xnorm_level1.max(f64::MIN_POSITIVE);
    let mut log = vec![first];
    let mut snapshots = Vec::new();
    if snapshot_every > 0 {
        snapshots.push((0.0, state.u.clone()));
    }
    observer(&solver, &state)?;
    let mut outcome = RunOutcome::Completed;
    for n in 1..=steps {
        state = solver.step(&state)?;
        state.t = n as f64 * settings.dt;
        let rec = monitor_record(&state.u, state.t, monitors)?;
        log.push(rec);
        if snapshot_every > 0 && n % snapshot_every == 0 {
            snapshots.push((state.t, state.u.clone()));
        }
        observer(&solver, &state)?;
        if let Some(d) = monitors.delta0 {
            if rec.min_dyy_u <= d {
                outcome = RunOutcome::ConvexityBreakdown {
                    t: state.t,
                    min_dyy_u: rec.min_dyy_u,
                };
                break;
            }
        }
        let ratio = rec.xnorm_level1 / reference;
        if ratio > monitors.blowup_factor || !ratio.is_finite() {
            outcome = RunOutcome::BlowUp { t: state.t, ratio };
            break;
        }
    }
    Ok(HydroRun {
        state,
        monitor: log,
        snapshots,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;
    use crate::initial_data::{make_family, DataSpec};
    use std::f64::consts::PI;

    fn heat_series(y: f64, t: f64) -> f64 {
        (0..2000)
            .map(|m| {
                let n = (2 * m + 1) as f64;
                -8.0 / (n * PI).powi(3) * (-(n * PI).powi(2) * t).exp() * (n * PI * y).sin()
            })
            .sum()
    }

    #[test]
    fn shear_decays_like_heat_equation() {
        let g = Grid::new(GridSpec::new(8, 32)).unwrap();
        let u0 = SpectralField::from_fn(&g, |_, y| y * y - y);
        let settings = StepSettings {
            mean_pressure: MeanPressure::Zero,
            ..StepSettings::new(2.5e-5)
        };
        let (solver, mut state) = HydroSolver::new(&u0, settings).unwrap();
        for _ in 0..4000 {
            state = solver.step(&state).unwrap();
        }
        let zero = g.index_of(0).unwrap();
        let err = g
            .y()
            .iter()
            .zip(state.u.row(zero).iter())
            .fold(0.0f64, |m, (&y, c)| m.max((c.re - heat_series(y, 0.1)).abs()));
        assert!(err < 1e-8, "{err}");
        assert!(state.v.max_abs() == 0.0);
    }

    #[test]
    fn fixed_flux_keeps_poiseuille_steady() {
        let g = Grid::new(GridSpec::new(8, 24)).unwrap();
        let u0 = SpectralField::from_fn(&g, |_, y| y * y - y);
        let (solver, mut state) = HydroSolver::new(&u0, StepSettings::new(1e-3)).unwrap();
        for _ in 0..50 {
            state = solver.step(&state).unwrap();
        }
        assert!(state.u.max_diff(&u0) < 1e-11);
        let zero = g.index_of(0).unwrap();
        assert!((state.px_hat[zero].re - 2.0).abs() < 1e-8);
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid::new(GridSpec::new(16, 16)).unwrap();
        let (solver, mut state) = HydroSolver::new(&SpectralField::zeros(&g), StepSettings::new(1e-3)).unwrap();
        for _ in 0..5 {
            state = solver.step(&state).unwrap();
        }
        assert_eq!(state.u.max_abs(), 0.0);
    }

    #[test]
    fn constraint_and_divergence_hold() {
        let g = Grid::new(GridSpec::new(32, 32)).unwrap();
        let (u0, _) = make_family(&DataSpec::default(), &g).unwrap();
        let (solver, mut state) = HydroSolver::new(&u0, StepSettings::new(1e-3)).unwrap();
        for _ in 0..3 {
            state = solver.step(&state).unwrap();
            let means = state.u.weighted_sum(g.cheb().weights());
            for i in 0..g.nx() {
                if g.wavenumber(i) != 0 {
                    assert!(means[i].norm() < 1e-12);
                }
            }
            assert!((&state.u.ddx() + &state.v.ddy()).max_abs() < 1e-10);
            assert!(state.v.top().iter().all(|c| c.norm() < 1e-10));
        }
    }

    #[test]
    fn family_run_completes_with_monitors() {
        let g = Grid::new(GridSpec::new(32, 32)).unwrap();
        let (u0, _) = make_family(&DataSpec::default(), &g).unwrap();
        let mon = MonitorSettings::new(GevreyParams::new(1.0, 0.5, 4.0), 10, Some(0.2));
        let run = hydro_solve(&u0, 0.05, StepSettings::new(1e-3), &mon, 10, |_, _| Ok(())).unwrap();
        assert_eq!(run.outcome, RunOutcome::Completed);
        assert_eq!(run.monitor.len(), 51);
        assert_eq!(run.snapshots.len(), 6);
        for w in run.monitor.windows(2) {
            assert!(w[1].tau < w[0].tau);
        }
        let r = run.monitor[20];
        assert!((r.tau - 0.5 * (-4.0 * r.t).exp()).abs() < 1e-15);
        let mut buf = Vec::new();
        write_monitor_csv(&mut buf, &run.monitor).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,tau,min_dyy_u,Xnorm_level1,Xnorm_level2"));
        assert_eq!(read_monitor_csv(&buf[..]).unwrap(), run.monitor);
    }

    #[test]
    fn tendency_matches_step_difference() {
        let g = Grid::new(GridSpec::new(32, 24)).unwrap();
        let (u0, _) = make_family(&DataSpec::default(), &g).unwrap();
        let (solver, s0) = HydroSolver::new(&u0, StepSettings::new(1e-5)).unwrap();
        let s1 = solver.step(&s0).unwrap();
        let s2 = solver.step(&s1).unwrap();
        let fd = (&s2.u - &s0.u).scaled(1.0 / 2e-5);
        let rate = solver.tendency(&s1.u);
        // interior nodes only: the wall curvature of the data jumps at t = 0+
        let n = g.ny();
        let diff = &fd - &rate;
        let worst = diff
            .coeffs()
            .slice(ndarray::s![.., 4..n - 4])
            .iter()
            .fold(0.0f64, |m, c| m.max(c.norm()));
        assert!(worst < 1e-3, "{worst}");
    }
}
