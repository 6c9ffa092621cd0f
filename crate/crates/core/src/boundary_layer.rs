//! Vorticity boundary-layer lifts on truncated half-lines, their velocities,
//! the harmonic correction `Ψ`, and closed-form heat-equation oracles.
//!
//! Each lift lives in the wall-normal distance `z` (`z = y` at the bottom,
//! `z = 1 - y` at the top) on a Chebyshev grid of `[0, L]`. Per mode it solves
//! `∂_tŵ = (∂_z² - ε²k²)ŵ`, `ŵ(t, L) = 0` and the Neumann condition
//! `∂_yŵ = ik ĥ` at the wall.

use crate::discretization::{ChebyshevGrid, DenseLu, Grid, SpectralField};
use crate::elliptic::{dk1, k1, Side};
use crate::error::{HydroError, Result};
use crate::gevrey::japanese;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftSettings {
    pub epsilon: f64,
    /// Initial truncation length, doubled until the far field has decayed.
    pub length: f64,
    pub nodes: usize,
    /// Lift steps per sample interval of the boundary data.
    pub substeps: usize,
    /// Largest allowed `|ŵ|` on the outer quarter, relative to the field maximum.
    pub decay_ratio: f64,
    pub max_doublings: u32,
    /// Wall-clustering scale `a` of the half-line map.
    pub cluster: f64,
}

impl LiftSettings {
    pub fn new(epsilon: f64) -> Self {
        LiftSettings {
            epsilon,
            length: 1.0,
            nodes: 64,
            substeps: 1,
            decay_ratio: 1e-10,
            max_doublings: 6,
            cluster: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.length > 0.0) || self.nodes < 4 || !(self.cluster > 0.0) || self.substeps == 0 {
            return Err(HydroError::InvalidParameter(format!("invalid lift settings {self:?}")));
        }
        Ok(())
    }
}

/// Chebyshev–Gauss–Lobatto grid on `[0, L]` under the map
/// `z = a(1 + x) / (1 - x + 2a/L)`, which puts half the nodes within `a` of
/// the wall for any `L`.
#[derive(Debug, Clone)]
pub struct HalfLineGrid {
    reference: ChebyshevGrid,
    scale: f64,
    length: f64,
    nodes: Array1<f64>,
    jacobian: Array1<f64>,
    d1: Array2<f64>,
    d2: Array2<f64>,
    weights: Array1<f64>,
    antiderivative: Array2<f64>,
}

impl HalfLineGrid {
    pub fn new(n: usize, scale: f64, length: f64) -> Self {
        let reference = ChebyshevGrid::new(n, -1.0, 1.0);
        let c = 2.0 * scale / length;
        let x = reference.nodes().clone();
        let nodes = x.mapv(|x| if x >= 1.0 { length } else { scale * (1.0 + x) / (1.0 - x + c) });
        let jacobian = x.mapv(|x| scale * (2.0 + c) / (1.0 - x + c).powi(2));
        let curvature = x.mapv(|x| 2.0 * scale * (2.0 + c) / (1.0 - x + c).powi(3));
        let mut d1 = reference.d1().clone();
        let mut d2 = reference.d2().clone();
        for i in 0..n {
            let (g1, g2) = (jacobian[i], curvature[i]);
            for j in 0..n {
                d2[[i, j]] = d2[[i, j]] / (g1 * g1) - g2 / g1.powi(3) * d1[[i, j]];
                d1[[i, j]] /= g1;
            }
        }
        let weights = reference.weights() * &jacobian;
        let antiderivative = reference.antiderivative() * &jacobian;
        HalfLineGrid {
            reference,
            scale,
            length,
            nodes,
            jacobian,
            d1,
            d2,
            weights,
            antiderivative,
        }
    }

    fn to_reference(&self, z: f64) -> f64 {
        let c = 2.0 * self.scale / self.length;
        ((z * (1.0 + c) - self.scale) / (z + self.scale)).clamp(-1.0, 1.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> &Array1<f64> {
        &self.nodes
    }

    pub fn d1(&self) -> &Array2<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &Array2<f64> {
        &self.d2
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    /// `∫_0^{z_i} f dz` from nodal values.
    pub fn antiderivative(&self) -> &Array2<f64> {
        &self.antiderivative
    }

    /// Weights for `∫_lo^hi f dz`.
    pub fn partial_weights(&self, lo: f64, hi: f64) -> Array1<f64> {
        self.reference.partial_weights(self.to_reference(lo), self.to_reference(hi)) * &self.jacobian
    }

    pub fn interp_matrix(&self, points: &[f64]) -> Array2<f64> {
        let x: Vec<f64> = points.iter().map(|&z| self.to_reference(z)).collect();
        self.reference.interp_matrix(&x)
    }
}

/// One lift at one time: per-mode profiles on the half-line grid.
#[derive(Debug, Clone)]
pub struct LiftField {
    pub side: Side,
    pub t: f64,
    pub zgrid: Arc<HalfLineGrid>,
    /// `nx × nodes`, rows in the strip grid's FFT order.
    pub omega: Array2<Complex64>,
    pub wavenumbers: Vec<i64>,
}

impl LiftField {
    pub fn length(&self) -> f64 {
        self.zgrid.length()
    }

    /// `∂_yŵ` at the wall (the Neumann data actually imposed).
    pub fn wall_slope(&self) -> Array1<Complex64> {
        let d1 = self.zgrid.d1();
        let s = orientation(self.side);
        self.omega
            .outer_iter()
            .map(|row| s * d1.row(0).iter().zip(row.iter()).map(|(a, b)| b * *a).sum::<Complex64>())
            .collect()
    }

    fn far_field_ratio(&self) -> f64 {
        let n = self.zgrid.len();
        let cut = 0.75 * self.length();
        let z = self.zgrid.nodes();
        let scale = self.omega.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let far = (0..n)
            .filter(|&j| z[j] >= cut)
            .flat_map(|j| self.omega.column(j).to_vec())
            .fold(0.0f64, |m, c| m.max(c.norm()));
        far / scale
    }
}

/// `+1` at the bottom wall, `-1` at the top: `∂_y = orientation · ∂_z`.
fn orientation(side: Side) -> f64 {
    match side {
        Side::Bottom => 1.0,
        Side::Top => -1.0,
    }
}

/// `I - (dt/2)A` serves both the Crank–Nicolson step and the backward-Euler half steps.
struct LiftOps {
    lu: DenseLu,
    explicit: Array2<f64>,
}

/// Time stepper for one lift with a fixed truncation.
pub struct LiftSolver {
    zgrid: Arc<HalfLineGrid>,
    side: Side,
    wavenumbers: Vec<i64>,
    ops: HashMap<i64, LiftOps>,
    dt: f64,
    omega: Array2<Complex64>,
    t: f64,
    started: bool,
}

impl LiftSolver {
    pub fn new(grid: &Grid, side: Side, epsilon: f64, zgrid: Arc<HalfLineGrid>, dt: f64) -> Result<Self> {
        let nodes = zgrid.len();
        let wavenumbers = grid.wavenumbers();
        let mut ops = HashMap::new();
        for &k in &wavenumbers {
            let key = k.abs();
            if ops.contains_key(&key) {
                continue;
            }
            let a2 = (epsilon * k as f64).powi(2);
            let build = |theta: f64| -> Result<DenseLu> {
                let mut m = Array2::<f64>::eye(nodes) - &((zgrid.d2() - &(Array2::<f64>::eye(nodes) * a2)) * theta);
                m.row_mut(0).assign(&zgrid.d1().row(0));
                m.row_mut(nodes - 1).fill(0.0);
                m[[nodes - 1, nodes - 1]] = 1.0;
                DenseLu::new(&m, "lift", k)
            };
            let explicit = Array2::<f64>::eye(nodes) + &((zgrid.d2() - &(Array2::<f64>::eye(nodes) * a2)) * (0.5 * dt));
            ops.insert(
                key,
                LiftOps {
                    lu: build(0.5 * dt)?,
                    explicit,
                },
            );
        }
        Ok(LiftSolver {
            omega: Array2::zeros((wavenumbers.len(), nodes)),
            zgrid,
            side,
            wavenumbers,
            ops,
            dt,
            t: 0.0,
            started: false,
        })
    }

    /// Advance one step to `t + dt` with wall data `ĥ` (FFT order) at the new time.
    /// The first step is two backward-Euler half steps.
    pub fn step(&mut self, h_mid: &Array1<Complex64>, h_new: &Array1<Complex64>) {
        let n = self.zgrid.len();
        let s = orientation(self.side);
        let zero = Complex64::new(0.0, 0.0);
        for (i, &k) in self.wavenumbers.iter().enumerate() {
            let ops = &self.ops[&k.abs()];
            let ik = Complex64::new(0.0, k as f64);
            let mut w = self.omega.row(i).to_owned();
            let solve = |lu: &DenseLu, mut rhs: Array1<Complex64>, g: Complex64| {
                rhs[0] = s * ik * g;
                rhs[n - 1] = zero;
                lu.solve(rhs.view())
            };
            if self.started {
                let rhs: Array1<Complex64> = ops
                    .explicit
                    .outer_iter()
                    .map(|r| r.iter().zip(w.iter()).map(|(a, b)| b * *a).sum())
                    .collect();
                w = solve(&ops.lu, rhs, h_new[i]);
            } else {
                w = solve(&ops.lu, w, h_mid[i]);
                w = solve(&ops.lu, w, h_new[i]);
            }
            self.omega.row_mut(i).assign(&w);
        }
        self.started = true;
        self.t += self.dt;
    }

    pub fn field(&self) -> LiftField {
        LiftField {
            side: self.side,
            t: self.t,
            zgrid: self.zgrid.clone(),
            omega: self.omega.clone(),
            wavenumbers: self.wavenumbers.clone(),
        }
    }
}

/// Boundary data sampled in time: `(t_n, ĥ(t_n))`, FFT order.
pub type BoundarySeries = [(f64, Array1<Complex64>)];

fn interpolate(series: &BoundarySeries, t: f64) -> Array1<Complex64> {
    let j = series.partition_point(|(s, _)| *s < t).clamp(1, series.len() - 1);
    let (t0, h0) = &series[j - 1];
    let (t1, h1) = &series[j];
    let w = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 1.0 };
    h0 * (1.0 - w) + h1 * w
}

/// Lift trajectory at the sample times of the boundary data.
#[derive(Debug, Clone)]
pub struct LiftTrajectory {
    pub fields: Vec<LiftField>,
    pub doublings: u32,
}

impl LiftTrajectory {
    pub fn last(&self) -> &LiftField {
        self.fields.last().expect("non-empty trajectory")
    }
}

fn solve_fixed(grid: &Grid, series: &BoundarySeries, side: Side, s: &LiftSettings, length: f64) -> Result<(Vec<LiftField>, f64)> {
    let mut fields = Vec::with_capacity(series.len());
    let mut worst = 0.0f64;
    let mut solver: Option<LiftSolver> = None;
    let zgrid = Arc::new(HalfLineGrid::new(s.nodes, s.cluster.min(0.25 * length), length));
    let first = LiftSolver::new(grid, side, s.epsilon, zgrid.clone(), 1.0)?;
    fields.push(LiftField {
        t: series[0].0,
        ..first.field()
    });
    for pair in series.windows(2) {
        let (t0, t1) = (pair[0].0, pair[1].0);
        let dt = (t1 - t0) / s.substeps as f64;
        let lift = match solver.as_mut() {
            Some(l) if (l.dt - dt).abs() <= 1e-12 * dt => l,
            _ => {
                let mut fresh = LiftSolver::new(grid, side, s.epsilon, zgrid.clone(), dt)?;
                if let Some(old) = &solver {
                    fresh.omega = old.omega.clone();
                    fresh.started = old.started;
                }
                fresh.t = t0;
                solver = Some(fresh);
                solver.as_mut().expect("just set")
            }
        };
        for m in 0..s.substeps {
            let ta = t0 + m as f64 * dt;
            let mid = interpolate(series, ta + 0.5 * dt);
            let new = interpolate(series, ta + dt);
            lift.step(&mid, &new);
        }
        lift.t = t1;
        let f = lift.field();
        worst = worst.max(f.far_field_ratio());
        fields.push(f);
    }
    Ok((fields, worst))
}

/// Solve the lift for sampled boundary data, doubling `L` until the far field
/// has decayed below `decay_ratio`. Only data at positive times enters the
/// scheme; the value at the first sample is used for interpolation only.
pub fn lift_solve(grid: &Grid, series: &BoundarySeries, side: Side, settings: &LiftSettings) -> Result<LiftTrajectory> {
    settings.validate()?;
    if series.is_empty() {
        return Err(HydroError::Insufficient("empty boundary series".into()));
    }
    if series.iter().any(|(_, h)| h.len() != grid.nx()) {
        return Err(HydroError::Dimension("boundary data length differs from nx".into()));
    }
    let mut length = settings.length;
    for doublings in 0..=settings.max_doublings {
        let (fields, worst) = solve_fixed(grid, series, side, settings, length)?;
        if worst <= settings.decay_ratio {
            return Ok(LiftTrajectory { fields, doublings });
        }
        log::debug!("lift far field {worst:.2e} at L = {length}; doubling");
        length *= 2.0;
    }
    Err(HydroError::Truncation(format!(
        "lift did not decay within L = {}",
        settings.length * 2f64.powi(settings.max_doublings as i32)
    )))
}

/// Lift velocities on the half-line grid.
#[derive(Debug, Clone)]
pub struct LiftVelocity {
    pub u: Array2<Complex64>,
    pub v: Array2<Complex64>,
}

fn tail_integral(zgrid: &HalfLineGrid, rows: &Array2<Complex64>) -> Array2<Complex64> {
    // ∫_z^L f = ∫_0^L f - ∫_0^z f
    let anti = zgrid.antiderivative();
    let w = zgrid.weights();
    let mut out = Array2::zeros(rows.raw_dim());
    for (i, row) in rows.outer_iter().enumerate() {
        let total: Complex64 = w.iter().zip(row.iter()).map(|(a, b)| b * *a).sum();
        for (j, arow) in anti.outer_iter().enumerate() {
            let part: Complex64 = arow.iter().zip(row.iter()).map(|(a, b)| b * *a).sum();
            out[[i, j]] = total - part;
        }
    }
    out
}

/// `u^b` by inward antiderivative from the decayed end and `v^b` by a second
/// antiderivative of `∂_xu^b`.
pub fn lift_velocities(lift: &LiftField) -> LiftVelocity {
    let s = orientation(lift.side);
    let tail_w = tail_integral(&lift.zgrid, &lift.omega);
    let u = tail_w.mapv(|c| -s * c);
    let tail_u = tail_integral(&lift.zgrid, &u);
    let mut v = tail_u;
    for (i, &k) in lift.wavenumbers.iter().enumerate() {
        let f = Complex64::new(0.0, s * k as f64);
        v.row_mut(i).mapv_inplace(|c| f * c);
    }
    LiftVelocity { u, v }
}

/// Per-mode `∫_{z₀}^L u^b dz` at wall distance `z₀`.
fn tail_at(lift: &LiftField, u: &Array2<Complex64>, z0: f64) -> Array1<Complex64> {
    let len = lift.length();
    if z0 >= len {
        return Array1::zeros(u.nrows());
    }
    let w = lift.zgrid.partial_weights(z0, len);
    u.outer_iter().map(|row| w.iter().zip(row.iter()).map(|(a, b)| b * *a).sum()).collect()
}

/// Lift fields sampled on the strip grid.
#[derive(Debug, Clone)]
pub struct StripLift {
    pub omega: SpectralField,
    pub u: SpectralField,
    pub v: SpectralField,
}

/// Evaluate a lift (and its velocities) at the strip nodes; zero beyond `L`.
pub fn to_strip(lift: &LiftField, grid: &Arc<Grid>) -> Result<StripLift> {
    if lift.omega.nrows() != grid.nx() {
        return Err(HydroError::Dimension("lift and strip grids differ in nx".into()));
    }
    let vel = lift_velocities(lift);
    let len = lift.length();
    let y = grid.y();
    let z: Vec<f64> = y
        .iter()
        .map(|&y| match lift.side {
            Side::Bottom => y,
            Side::Top => 1.0 - y,
        })
        .collect();
    let inside: Vec<bool> = z.iter().map(|&z| z <= len).collect();
    let interp = lift.zgrid.interp_matrix(&z);
    let sample = |rows: &Array2<Complex64>| -> Result<SpectralField> {
        let mut out = Array2::zeros((grid.nx(), grid.ny()));
        for (i, row) in rows.outer_iter().enumerate() {
            for (j, irow) in interp.outer_iter().enumerate() {
                if inside[j] {
                    out[[i, j]] = irow.iter().zip(row.iter()).map(|(a, b)| b * *a).sum();
                }
            }
        }
        SpectralField::from_coeffs(grid, out, true)
    };
    Ok(StripLift {
        omega: sample(&lift.omega)?,
        u: sample(&vel.u)?,
        v: sample(&vel.v)?,
    })
}

/// Harmonic correction `Ψ` with wall values given by the lift tails, and its gradient.
#[derive(Debug, Clone)]
pub struct PsiCorrection {
    pub psi: SpectralField,
    pub dpsi_dx: SpectralField,
    pub dpsi_dy: SpectralField,
    /// `(Ψ̂(y=0), Ψ̂(y=1))` per mode, FFT order.
    pub walls: (Array1<Complex64>, Array1<Complex64>),
}

/// `Ψ|_{y=0} = -(∫_0^∞u^{b,0} + ∫_0^{-∞}u^{b,1})`, `Ψ|_{y=1}` likewise, and
/// `Ψ̂ = K₁(k, y)Ψ̂(1) + K₁(k, 1-y)Ψ̂(0)`.
pub fn psi_correction(bottom: &LiftField, top: &LiftField, grid: &Arc<Grid>, epsilon: f64) -> Result<PsiCorrection> {
    if bottom.side != Side::Bottom || top.side != Side::Top {
        return Err(HydroError::InvalidParameter("expected (bottom, top) lifts".into()));
    }
    let ub = lift_velocities(bottom).u;
    let ut = lift_velocities(top).u;
    // in y, ∫_y^{-∞} u^{b,1} dy' = -(tail of the top lift at z = 1 - y)
    let w0 = -(&tail_at(bottom, &ub, 0.0) - &tail_at(top, &ut, 1.0));
    let w1 = -(&tail_at(bottom, &ub, 1.0) - &tail_at(top, &ut, 0.0));
    let y = grid.y();
    let mut psi = Array2::zeros((grid.nx(), grid.ny()));
    let mut dy = Array2::zeros((grid.nx(), grid.ny()));
    for i in 0..grid.nx() {
        let a = epsilon * grid.wavenumber(i).unsigned_abs() as f64;
        for (j, &yj) in y.iter().enumerate() {
            psi[[i, j]] = w1[i] * k1(a, yj) + w0[i] * k1(a, 1.0 - yj);
            dy[[i, j]] = w1[i] * dk1(a, yj) - w0[i] * dk1(a, 1.0 - yj);
        }
        let n = grid.ny();
        psi[[i, 0]] = w0[i];
        psi[[i, n - 1]] = w1[i];
    }
    let psi = SpectralField::from_coeffs(grid, psi, true)?;
    Ok(PsiCorrection {
        dpsi_dx: psi.ddx(),
        dpsi_dy: SpectralField::from_coeffs(grid, dy, true)?,
        psi,
        walls: (w0, w1),
    })
}

/// Half-line solution of `∂_tw = ∂_z²w - a²w`, `∂_zw(0) = g` for `t > 0`, `w(0) = 0`:
/// `w = -g ∫_0^t e^{-a²s - z²/4s} / √(πs) ds`.
pub fn neumann_heat_closed_form(g: f64, a: f64, z: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let st = t.sqrt();
    let xi = z / (2.0 * st);
    if a == 0.0 {
        let ierfc = (-xi * xi).exp() / std::f64::consts::PI.sqrt() - xi * libm::erfc(xi);
        return -g * 2.0 * st * ierfc;
    }
    let minus = (-a * z).exp() * libm::erfc(xi - a * st);
    let plus = (a * z).exp() * libm::erfc(xi + a * st);
    -g * (minus - plus) / (2.0 * a)
}

/// Time-periodic profile for data `g e^{iζt}`: `w = -g e^{iζt} e^{-z√(iζ + a²)} / √(iζ + a²)`.
pub fn laplace_profile(g: Complex64, zeta: f64, a: f64, z: f64, t: f64) -> Complex64 {
    let root = Complex64::new(a * a, zeta).sqrt();
    -g * Complex64::new(0.0, zeta * t).exp() * (-root * z).exp() / root
}

/// Half-line Gevrey norm `‖ω^b‖_{X^r}` of a lift at radius `tau`.
pub fn lift_gevrey_norm(lift: &LiftField, r: f64, tau: f64, sigma: f64) -> f64 {
    let w = lift.zgrid.weights();
    lift.omega
        .outer_iter()
        .zip(lift.wavenumbers.iter())
        .map(|(row, &k)| {
            let jk = japanese(k as f64);
            let l2: f64 = row.iter().zip(w.iter()).map(|(c, &wj)| c.norm_sqr() * wj).sum();
            if l2 == 0.0 {
                0.0
            } else {
                (2.0 * r * jk.ln() + 2.0 * tau * jk.powf(sigma)).exp() * l2
            }
        })
        .sum::<f64>()
        .sqrt()
}
