//! Error fields between the anisotropic and hydrostatic solutions, the
//! vorticity decomposition, boundary data `h⁰, h¹, h⁰_l, h¹_l`, forcing and
//! nonlinear terms, energy functionals and the bootstrap ratio.

use crate::ans::AnsState;
use crate::boundary_layer::{PsiCorrection, StripLift};
use crate::discretization::SpectralField;
use crate::elliptic::{dy_trace, g0, g1, g2, g3, kernel_integral, solve_dirichlet, Side};
use crate::error::{HydroError, Result};
use crate::gevrey::{cutoff_high, gevrey_norm_tau, n_of_eps, trace_norm_tau, CutoffProfile, GevreyParams};
use crate::hydro::{HydroSolver, HydroState};
use crate::initial_data::vertical_velocity;
use crate::timestep::MeanPressure;
use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct ErrorState {
    pub epsilon: f64,
    pub t: f64,
    pub u_r: SpectralField,
    pub v_r: SpectralField,
    pub omega_r: SpectralField,
    pub omega_bl: SpectralField,
    pub omega_in: SpectralField,
    pub u_bl: SpectralField,
    pub v_bl: SpectralField,
}

/// `u^R = u^ε - u^p`, `v^R = v^ε - v^p`, `ω^R = ∂_yu^R - ε²∂_xv^R` and
/// `ω^in = ω^R - ω^bl` (zero lift when `lift` is `None`).
pub fn build_error_state(
    u_eps: &SpectralField,
    v_eps: &SpectralField,
    hydro: &HydroState,
    t: f64,
    epsilon: f64,
    lift: Option<&StripLift>,
) -> Result<ErrorState> {
    if u_eps.grid().spec() != hydro.u.grid().spec() {
        return Err(HydroError::Dimension("error fields need a shared grid".into()));
    }
    if (t - hydro.t).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(HydroError::InvalidParameter(format!("time mismatch: {t} vs {}", hydro.t)));
    }
    let u_r = u_eps - &hydro.u;
    let v_r = v_eps - &hydro.v;
    let omega_r = &u_r.ddy() - &v_r.ddx().scaled(epsilon * epsilon);
    let zero = SpectralField::zeros(u_r.grid());
    let (omega_bl, u_bl, v_bl) = match lift {
        Some(l) => (l.omega.clone(), l.u.clone(), l.v.clone()),
        None => (zero.clone(), zero.clone(), zero),
    };
    let omega_in = &omega_r - &omega_bl;
    Ok(ErrorState {
        epsilon,
        t,
        u_r,
        v_r,
        omega_r,
        omega_bl,
        omega_in,
        u_bl,
        v_bl,
    })
}

pub fn error_state_from(ans: &AnsState, hydro: &HydroState, epsilon: f64, lift: Option<&StripLift>) -> Result<ErrorState> {
    build_error_state(&ans.u, &ans.v, hydro, ans.t, epsilon, lift)
}

/// `∂_x⁻¹v^R` as its two smooth branches `-∫_0^y u^R` (used on `y ≤ 1/2`) and
/// `-∫_1^y u^R` (used on `y > 1/2`).
#[derive(Debug, Clone)]
pub struct DxInverse {
    pub lower: SpectralField,
    pub upper: SpectralField,
}

impl DxInverse {
    /// Piecewise field at the grid nodes.
    pub fn field(&self) -> SpectralField {
        let grid = self.lower.grid();
        let mut out = self.lower.clone();
        for (j, &y) in grid.y().iter().enumerate() {
            if y > 0.5 {
                out.coeffs_mut().column_mut(j).assign(&self.upper.coeffs().column(j));
            }
        }
        out
    }

    /// Size of the jump at `y = 1/2`, `max_k |∫_0^1 û^R_k dy|`.
    pub fn jump(&self) -> f64 {
        (&self.upper - &self.lower).bottom().iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }
}

pub fn dx_inverse_v(u_r: &SpectralField) -> DxInverse {
    DxInverse {
        lower: -&u_r.antiderivative_from_bottom(),
        upper: -&u_r.antiderivative_from_top(),
    }
}

/// Hydrostatic fields entering the error system, including `∂_tv^p`.
#[derive(Debug, Clone)]
pub struct HydroContext {
    pub u: SpectralField,
    pub v: SpectralField,
    pub dt_v: SpectralField,
    pub omega: SpectralField,
    pub mean_pressure: MeanPressure,
}

impl HydroContext {
    pub fn new(solver: &HydroSolver, state: &HydroState) -> Self {
        HydroContext {
            u: state.u.clone(),
            v: state.v.clone(),
            dt_v: vertical_velocity(&solver.tendency(&state.u)),
            omega: state.u.ddy(),
            mean_pressure: solver.settings().mean_pressure,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForcingTerms {
    pub f1: SpectralField,
    pub f2: SpectralField,
    pub f3: SpectralField,
    pub f: SpectralField,
}

/// `f = f₃ - ε²(f₁ + f₂)` with
/// `f₁ = u^R∂_x²v^p + v^R∂_x∂_yv^p`,
/// `f₂ = ∂_t∂_xv^p - ε²∂_x³v^p - ∂_y²∂_xv^p + ∂_x²∂_yu^p + u^p∂_x²v^p + v^p∂_x∂_yv^p`,
/// `f₃ = u^p∂_xω^R + u^R∂_xω^p + v^p∂_yω^R + v^R∂_yω^p`.
pub fn forcing_terms(ctx: &HydroContext, es: &ErrorState) -> ForcingTerms {
    let e2 = es.epsilon * es.epsilon;
    let (up, vp) = (&ctx.u, &ctx.v);
    let vp_x = vp.ddx();
    let vp_xx = vp_x.ddx();
    let vp_xy = vp_x.ddy();
    let f1 = &es.u_r.mul_dealiased(&vp_xx) + &es.v_r.mul_dealiased(&vp_xy);
    let linear = &(&(&ctx.dt_v.ddx() - &vp_xx.ddx().scaled(e2)) - &vp_x.ddy2()) + &up.ddx().ddx().ddy();
    let f2 = &(&linear + &up.mul_dealiased(&vp_xx)) + &vp.mul_dealiased(&vp_xy);
    let f3 = &(&(&up.mul_dealiased(&es.omega_r.ddx()) + &es.u_r.mul_dealiased(&ctx.omega.ddx()))
        + &vp.mul_dealiased(&es.omega_r.ddy()))
        + &es.v_r.mul_dealiased(&ctx.omega.ddy());
    let f = &f3 - &(&f1 + &f2).scaled(e2);
    ForcingTerms { f1, f2, f3, f }
}

#[derive(Debug, Clone)]
pub struct NonlinearTerms {
    /// `N = -u^R∂_xω^R - v^R∂_yω^R`
    pub omega: SpectralField,
    /// `u^R∂_xu^R + v^R∂_yu^R`
    pub u: SpectralField,
    /// `u^R∂_xv^R + v^R∂_yv^R`
    pub v: SpectralField,
}

pub fn nonlinear_terms(es: &ErrorState) -> NonlinearTerms {
    let (u, v) = (&es.u_r, &es.v_r);
    let adv = |f: &SpectralField| &u.mul_dealiased(&f.ddx()) + &v.mul_dealiased(&f.ddy());
    NonlinearTerms {
        omega: -&adv(&es.omega_r),
        u: adv(u),
        v: adv(v),
    }
}

/// Per-mode wall data (FFT order).
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub h0: Array1<Complex64>,
    pub h1: Array1<Complex64>,
    pub h0_l: Array1<Complex64>,
    pub h1_l: Array1<Complex64>,
}

/// `½∫_0^{1/2} K·lower + ½∫_{1/2}^1 K·upper`.
fn split_integral(lower: &SpectralField, upper: &SpectralField, eps: f64, kernel: fn(f64, f64) -> f64) -> Result<Array1<Complex64>> {
    let a = kernel_integral(lower, eps, kernel, 0.0, 0.5)?;
    let b = kernel_integral(upper, eps, kernel, 0.5, 1.0)?;
    Ok((&a + &b).mapv(|c| 0.5 * c))
}

/// `h⁰ = ½∫G₀ℱ(u^pω^R + ∂_x⁻¹v^R ∂_yω^p)`, `h⁰_l = -½∫G₂ℱ(v^pω^R) +
/// ½∫G₀ℱ(u^R∂_xω^p - ∂_x⁻¹v^R ∂_x∂_yω^p - ε²(f₁+f₂))`, and the same with
/// `G₁, G₃` at the top wall. The `∂_x⁻¹v^R` branches are integrated on
/// their own halves.
pub fn boundary_data(ctx: &HydroContext, es: &ErrorState, forcing: &ForcingTerms) -> Result<BoundaryData> {
    let eps = es.epsilon;
    let dxinv = dx_inverse_v(&es.u_r);
    let wy = ctx.omega.ddy();
    let wxy = wy.ddx();
    let transport = ctx.u.mul_dealiased(&es.omega_r);
    let a_lo = &transport + &dxinv.lower.mul_dealiased(&wy);
    let a_hi = &transport + &dxinv.upper.mul_dealiased(&wy);
    let common = &es.u_r.mul_dealiased(&ctx.omega.ddx()) - &(&forcing.f1 + &forcing.f2).scaled(eps * eps);
    let b_lo = &common - &dxinv.lower.mul_dealiased(&wxy);
    let b_hi = &common - &dxinv.upper.mul_dealiased(&wxy);
    let vw = ctx.v.mul_dealiased(&es.omega_r);
    let h0 = split_integral(&a_lo, &a_hi, eps, g0)?;
    let h1 = split_integral(&a_lo, &a_hi, eps, g1)?;
    let h0_l = &split_integral(&b_lo, &b_hi, eps, g0)? - &split_integral(&vw, &vw, eps, g2)?;
    let h1_l = &split_integral(&b_lo, &b_hi, eps, g1)? - &split_integral(&vw, &vw, eps, g3)?;
    Ok(BoundaryData { h0, h1, h0_l, h1_l })
}

#[derive(Debug, Clone)]
pub struct BoundaryResidual {
    /// `|LHS - RHS|` per mode at `y = 0` and `y = 1`.
    pub bottom: Array1<f64>,
    pub top: Array1<f64>,
    /// Largest `|LHS|` over both walls.
    pub lhs_scale: f64,
    /// Largest per-mode gap between the strip and half-line forms of the left side.
    pub half_line_gap: f64,
}

impl BoundaryResidual {
    pub fn max(&self) -> f64 {
        self.bottom.iter().chain(self.top.iter()).fold(0.0f64, |m, v| m.max(*v))
    }

    pub fn relative(&self) -> f64 {
        if self.lhs_scale == 0.0 {
            self.max()
        } else {
            self.max() / self.lhs_scale
        }
    }
}

/// Both sides of the wall identity for `ω^R`,
/// `∂_yω^R - ∂_yω_h = ∂_xhⁱ + hⁱ_l - ∂_y(Δ_{ε,D})⁻¹N + ∫_0^1∂_tū^R dy` at `y = i`,
/// where `ω_h` is the strip-harmonic function with the wall values of `ω^R`:
/// `∂_yω_h(0) = -a coth(a) ω(0) + a/sinh(a) ω(1)` with `a = ε|k|`. On a
/// half-line this reduces to `(∂_y ± ε|D|)ω^R`; the gap between the two
/// forms is reported separately.
///
/// The mean term is `∫_0^1∂_yω̄^R dy` without a mean pressure gradient and
/// zero when both solvers hold the flux fixed.
pub fn vorticity_boundary_residual(
    ctx: &HydroContext,
    es: &ErrorState,
    data: &BoundaryData,
    nonlinear: &NonlinearTerms,
) -> Result<BoundaryResidual> {
    let grid = es.omega_r.grid().clone();
    let eps = es.epsilon;
    let dw = es.omega_r.ddy();
    let trace0 = dy_trace(&nonlinear.omega, eps, Side::Bottom)?;
    let trace1 = dy_trace(&nonlinear.omega, eps, Side::Top)?;
    let mean = match ctx.mean_pressure {
        MeanPressure::Zero => {
            let w = es.omega_r.row(grid.index_of(0).expect("k = 0")).to_owned();
            w[w.len() - 1] - w[0]
        }
        MeanPressure::FixedFlux => Complex64::new(0.0, 0.0),
    };
    let (w0, w1, d0, d1) = (es.omega_r.bottom(), es.omega_r.top(), dw.bottom(), dw.top());
    let mut bottom = Array1::zeros(grid.nx());
    let mut top = Array1::zeros(grid.nx());
    let mut lhs_scale = 0.0f64;
    let mut gap = 0.0f64;
    for i in 0..grid.nx() {
        let k = grid.wavenumber(i);
        let a = eps * k.abs() as f64;
        // 2a coth a and 2a / sinh a
        let (same, other) = (0.5 * g2(a, 0.0), 0.5 * g2(a, 1.0));
        let ik = Complex64::new(0.0, k as f64);
        let m = if k == 0 { mean } else { Complex64::new(0.0, 0.0) };
        let lhs0 = d0[i] + same * w0[i] - other * w1[i];
        let lhs1 = d1[i] - same * w1[i] + other * w0[i];
        let rhs0 = ik * data.h0[i] + data.h0_l[i] - trace0[i] + m;
        let rhs1 = ik * data.h1[i] + data.h1_l[i] - trace1[i] + m;
        bottom[i] = (lhs0 - rhs0).norm();
        top[i] = (lhs1 - rhs1).norm();
        lhs_scale = lhs_scale.max(lhs0.norm()).max(lhs1.norm());
        let half0 = d0[i] + a * w0[i];
        let half1 = d1[i] - a * w1[i];
        gap = gap.max((half0 - lhs0).norm()).max((half1 - lhs1).norm());
    }
    Ok(BoundaryResidual {
        bottom,
        top,
        lhs_scale,
        half_line_gap: gap,
    })
}

/// Check of `u^in - m + ∂_yΨ = ∂_y(Δ_{ε,D})⁻¹(ω^in + ε²∂_xv^bl)` and
/// `v^in - ∂_xΨ = -∂_x(Δ_{ε,D})⁻¹(ω^in + ε²∂_xv^bl)`, `m` the strip mean of `u^R`.
/// Returns the larger maximum deviation.
pub fn interior_velocity_residual(es: &ErrorState, psi: &PsiCorrection) -> Result<f64> {
    let grid = es.u_r.grid().clone();
    let source = &es.omega_in + &es.v_bl.ddx().scaled(es.epsilon * es.epsilon);
    let phi = solve_dirichlet(&source, es.epsilon)?;
    let zero = grid.index_of(0).expect("k = 0");
    let m: Complex64 = grid
        .cheb()
        .weights()
        .iter()
        .zip(es.u_r.row(zero).iter())
        .map(|(w, c)| c * *w)
        .sum();
    let mut lhs_u = &(&es.u_r - &es.u_bl) + &psi.dpsi_dy;
    lhs_u.row_mut(zero).mapv_inplace(|c| c - m);
    let lhs_v = &(&es.v_r - &es.v_bl) - &psi.dpsi_dx;
    let du = lhs_u.max_diff(&phi.ddy());
    let dv = lhs_v.max_diff(&-&phi.ddx());
    Ok(du.max(dv))
}

/// `φ(y) f` with `φ(y) = y(1 - y)`.
pub fn weighted_by_phi(f: &SpectralField) -> SpectralField {
    let phi = f.grid().y().mapv(|y| y * (1.0 - y));
    f.mul_y(&phi)
}

/// `‖(u, εv)‖²_{X^r}` of the high-frequency part `P_{≥N(ε)}(u, εv)`.
fn high_pair_sq(u: &SpectralField, v: &SpectralField, eps: f64, n: f64, r: f64, tau: f64, sigma: f64) -> Result<f64> {
    let p = CutoffProfile::default();
    let hu = cutoff_high(u, n, &p)?;
    let hv = cutoff_high(v, n, &p)?;
    Ok(gevrey_norm_tau(&hu, r, tau, sigma)?.powi(2) + eps * eps * gevrey_norm_tau(&hv, r, tau, sigma)?.powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTriple {
    pub e: f64,
    pub g: f64,
    pub d: f64,
    /// `[interior vorticity, Aε²·high velocity, high velocity]` for each functional.
    pub e_parts: [f64; 3],
    pub g_parts: [f64; 3],
    pub d_parts: [f64; 3],
}

/// Energy functionals `E, G, D` at Gevrey radius `tau` with weight `A`:
///
/// `E = ‖ω^in‖²_{X^r} + Aε²‖P(u^R,εv^R)‖²_{X^{r+1}} + ‖P(u^R,εv^R)‖²_{X^{r+1-σ}}`,
/// `G` the same at levels `r+σ/2, r+1+σ/2, r+1-σ/2`, and `D` with
/// `(∂_y, ε∂_x)` applied at the levels of `E`. `P = P_{≥N(ε)}`.
pub fn energy_functionals(es: &ErrorState, r: f64, tau: f64, sigma: f64, weight_a: f64) -> Result<EnergyTriple> {
    let eps = es.epsilon;
    let n = n_of_eps(eps, sigma)? as f64;
    let norm_sq = |f: &SpectralField, level: f64| -> Result<f64> { Ok(gevrey_norm_tau(f, level, tau, sigma)?.powi(2)) };
    let pair = |u: &SpectralField, v: &SpectralField, level: f64| high_pair_sq(u, v, eps, n, level, tau, sigma);
    let (u, v) = (&es.u_r, &es.v_r);
    let w = &es.omega_in;
    let aw = weight_a * eps * eps;
    let e_parts = [norm_sq(w, r)?, aw * pair(u, v, r + 1.0)?, pair(u, v, r + 1.0 - sigma)?];
    let g_parts = [
        norm_sq(w, r + 0.5 * sigma)?,
        aw * pair(u, v, r + 1.0 + 0.5 * sigma)?,
        pair(u, v, r + 1.0 - 0.5 * sigma)?,
    ];
    let (uy, ux, vy, vx) = (u.ddy(), u.ddx(), v.ddy(), v.ddx());
    let grad_pair = |level: f64| -> Result<f64> { Ok(pair(&uy, &vy, level)? + eps * eps * pair(&ux, &vx, level)?) };
    let d_parts = [
        norm_sq(&w.ddy(), r)? + eps * eps * norm_sq(&w.ddx(), r)?,
        aw * grad_pair(r + 1.0)?,
        grad_pair(r + 1.0 - sigma)?,
    ];
    Ok(EnergyTriple {
        e: e_parts.iter().sum(),
        g: g_parts.iter().sum(),
        d: d_parts.iter().sum(),
        e_parts,
        g_parts,
        d_parts,
    })
}

/// Running value of `[sup_s‖ω^R‖²_{X^{r-1}} + ∫_0^t‖(∂_yω^R, ε∂_xω^R)‖²_{X^{r-1}}] / ε⁴`.
#[derive(Debug, Clone)]
pub struct BootstrapMonitor {
    pub epsilon: f64,
    pub level: f64,
    pub gevrey: GevreyParams,
    sup: f64,
    integral: f64,
    last: Option<(f64, f64)>,
    pub history: Vec<(f64, f64)>,
}

impl BootstrapMonitor {
    /// `level` is `r - 1`.
    pub fn new(epsilon: f64, level: f64, gevrey: GevreyParams) -> Self {
        BootstrapMonitor {
            epsilon,
            level,
            gevrey,
            sup: 0.0,
            integral: 0.0,
            last: None,
            history: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, omega_r: &SpectralField) -> Result<f64> {
        let tau = self.gevrey.tau(t);
        let s = self.gevrey.sigma;
        let eps = self.epsilon;
        let value = gevrey_norm_tau(omega_r, self.level, tau, s)?.powi(2);
        let rate = gevrey_norm_tau(&omega_r.ddy(), self.level, tau, s)?.powi(2)
            + eps * eps * gevrey_norm_tau(&omega_r.ddx(), self.level, tau, s)?.powi(2);
        if let Some((t0, r0)) = self.last {
            self.integral += 0.5 * (t - t0) * (r0 + rate);
        }
        self.last = Some((t, rate));
        self.sup = self.sup.max(value);
        let ratio = self.ratio();
        self.history.push((t, ratio));
        Ok(ratio)
    }

    pub fn ratio(&self) -> f64 {
        (self.sup + self.integral) / self.epsilon.powi(4)
    }
}

/// `(‖(u^R, εv^R)‖_{L²}, ‖(u^R, εv^R)‖_{L^∞})`, with the L² norm taken as the
/// strip mean and the L^∞ norm of `√(u² + ε²v²)` over the nodes.
pub fn error_norms(es: &ErrorState) -> (f64, f64) {
    let eps = es.epsilon;
    let l2 = (es.u_r.l2_norm_sq() + eps * eps * es.v_r.l2_norm_sq()).sqrt();
    let un = es.u_r.to_nodal();
    let vn = es.v_r.to_nodal();
    let linf = un
        .iter()
        .zip(vn.iter())
        .fold(0.0f64, |m, (u, v)| m.max((u * u + eps * eps * v * v).sqrt()));
    (l2, linf)
}

/// Wall data norms `|hⁱ|_{X^r}` keyed by name.
pub fn h_norms(data: &BoundaryData, grid: &crate::Grid, r: f64, tau: f64, sigma: f64) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (name, v) in [("h0", &data.h0), ("h1", &data.h1), ("h0_l", &data.h0_l), ("h1_l", &data.h1_l)] {
        out.insert(name.to_string(), trace_norm_tau(grid, v, r, tau, sigma)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub epsilon: f64,
    pub t: f64,
    #[serde(rename = "L2_error")]
    pub l2_error: f64,
    #[serde(rename = "Linf_error")]
    pub linf_error: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub bootstrap_ratio: f64,
    pub h_norms: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ans::{AnsSettings, AnsSolver};
    use crate::discretization::{Grid, GridSpec};
    use crate::hydro::HydroSolver;
    use crate::initial_data::{make_family, DataSpec};
    use crate::timestep::StepSettings;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(nx: usize, ny: usize) -> Arc<Grid> {
        Grid::new(GridSpec::new(nx, ny)).unwrap()
    }

    #[test]
    fn identical_inputs_give_zero_error() {
        let g = grid(16, 16);
        let (u0, _) = make_family(&DataSpec::default(), &g).unwrap();
        let (solver, h) = HydroSolver::new(&u0, StepSettings::new(1e-3)).unwrap();
        let es = build_error_state(&h.u, &h.v, &h, 0.0, 0.1, None).unwrap();
        assert_eq!(es.u_r.max_abs() + es.v_r.max_abs() + es.omega_r.max_abs(), 0.0);
        let ctx = HydroContext::new(&solver, &h);
        let f = forcing_terms(&ctx, &es);
        assert_eq!(f.f1.max_abs() + f.f3.max_abs(), 0.0);
        assert!(f.f.max_diff(&f.f2.scaled(-0.01)) < 1e-14);
        let nl = nonlinear_terms(&es);
        assert_eq!(nl.omega.max_abs() + nl.u.max_abs() + nl.v.max_abs(), 0.0);
        let data = boundary_data(&ctx, &es, &f).unwrap();
        assert_eq!(data.h0.iter().chain(data.h1.iter()).fold(0.0f64, |m, c| m.max(c.norm())), 0.0);
        // the forcing still drives the wall identity through h_l
        let res = vorticity_boundary_residual(&ctx, &es, &data, &nl).unwrap();
        assert_eq!(res.lhs_scale, 0.0);
        for i in 0..g.nx() {
            assert!((res.bottom[i] - data.h0_l[i].norm()).abs() < 1e-14);
            assert!((res.top[i] - data.h1_l[i].norm()).abs() < 1e-14);
        }
        assert!(res.max() > 0.0);
        let en = energy_functionals(&es, 3.0, 0.5, 1.0, 10.0).unwrap();
        assert_eq!((en.e, en.g, en.d), (0.0, 0.0, 0.0));
        let mut boot = BootstrapMonitor::new(0.1, 2.0, GevreyParams::new(1.0, 0.5, 4.0));
        assert_eq!(boot.push(0.0, &es.omega_r).unwrap(), 0.0);
        assert!(build_error_state(&h.u, &h.v, &h, 0.5, 0.1, None).is_err());
    }

    #[test]
    fn dx_inverse_of_constant() {
        let g = grid(8, 17);
        let one = SpectralField::from_fn(&g, |_, _| 1.0);
        let d = dx_inverse_v(&one);
        let f = d.field().to_nodal();
        for (j, &y) in g.y().iter().enumerate() {
            let expect = if y <= 0.5 { -y } else { -(y - 1.0) };
            assert!((f[[0, j]] - expect).abs() < 1e-12);
        }
        assert!((d.jump() - 1.0).abs() < 1e-12);
        let u = SpectralField::from_fn(&g, |x, y| (y * 3.0).sin() * x.cos() + y * y);
        let d = dx_inverse_v(&u);
        assert!(d.lower.ddy().max_diff(&-&u) < 1e-9);
        assert!(d.upper.ddy().max_diff(&-&u) < 1e-9);
        assert_eq!(dx_inverse_v(&SpectralField::zeros(&g)).field().max_abs(), 0.0);
    }

    /// `∂_tω^R` from the two solvers' instantaneous tendencies equals `Δ_εω^R - f + N`.
    #[test]
    fn error_vorticity_equation_is_consistent() {
        let g = grid(32, 32);
        let eps = 0.3;
        let up = SpectralField::from_fn(&g, |x, y| y * y - y + 0.05 * x.cos() * (PI * y).sin().powi(2));
        let psi = SpectralField::from_fn(&g, |x, y| (PI * y).sin().powi(2) * (0.3 * x.sin() + 0.1 * (2.0 * x).cos()));
        let ue = &up + &psi.ddy();
        let (hs, mut hstate) = HydroSolver::new(&up, StepSettings::new(1e-3)).unwrap();
        hstate.v = vertical_velocity(&up);
        let ve = &hstate.v - &psi.ddx();
        let es = build_error_state(&ue, &ve, &hstate, 0.0, eps, None).unwrap();
        let ctx = HydroContext::new(&hs, &hstate);
        // ε-system vorticity tendency
        let we = &ue.ddy() - &ve.ddx().scaled(eps * eps);
        let lap = |f: &SpectralField| &f.ddy2() + &f.ddx().ddx().scaled(eps * eps);
        let adv = |f: &SpectralField| &ue.mul_dealiased(&f.ddx()) + &ve.mul_dealiased(&f.ddy());
        let dt_we = &lap(&we) - &adv(&we);
        let dt_wp = hs.tendency(&up).ddy();
        let dt_wr = &(&dt_we - &dt_wp) + &ctx.dt_v.ddx().scaled(eps * eps);
        let f = forcing_terms(&ctx, &es);
        let nl = nonlinear_terms(&es);
        let rhs = &(&lap(&es.omega_r) - &f.f) + &nl.omega;
        let n = g.ny();
        let diff = &dt_wr - &rhs;
        let worst = diff.coeffs().slice(ndarray::s![.., 1..n - 1]).iter().fold(0.0f64, |m, c| m.max(c.norm()));
        assert!(worst < 1e-8 * dt_wr.max_abs().max(1.0), "{worst}");
    }

    #[test]
    fn h0_matches_direct_quadrature() {
        let g = grid(8, 48);
        let eps = 0.1;
        let up = SpectralField::from_fn(&g, |_, y| y * y - y);
        let (hs, h) = HydroSolver::new(&up, StepSettings::new(1e-3)).unwrap();
        let mut es = build_error_state(&h.u, &h.v, &h, 0.0, eps, None).unwrap();
        es.omega_r = SpectralField::from_fn(&g, |x, y| (PI * y).sin() * x.cos());
        let ctx = HydroContext::new(&hs, &h);
        let f = forcing_terms(&ctx, &es);
        let data = boundary_data(&ctx, &es, &f).unwrap();
        // ℱ(u^p ω^R) at k = 1 is (y² - y) sin(πy) / 2; independent midpoint rule
        let a = eps;
        let m = 200_000;
        let direct: f64 = (0..m)
            .map(|j| {
                let y = (j as f64 + 0.5) / m as f64;
                0.5 * g0(a, y) * (y * y - y) * (PI * y).sin() * 0.5 / m as f64
            })
            .sum();
        let i = g.index_of(1).unwrap();
        assert!((data.h0[i].re - direct).abs() < 1e-9, "{} vs {direct}", data.h0[i].re);
        assert!(data.h0[i].im.abs() < 1e-14);
        // symmetric data under y -> 1 - y
        for i in 0..g.nx() {
            assert!((data.h0[i].norm() - data.h1[i].norm()).abs() < 1e-12);
        }
        for &y in &[0.1, 0.37, 0.8] {
            assert!((g1(a, y) + g0(a, 1.0 - y)).abs() < 1e-14);
        }
    }

    #[test]
    fn forcing_vanishes_for_x_independent_hydro() {
        let g = grid(8, 24);
        let up = SpectralField::from_fn(&g, |_, y| y * y - y + 0.1 * (PI * y).sin());
        let (hs, h) = HydroSolver::new(&up, StepSettings::new(1e-3)).unwrap();
        let es = build_error_state(&h.u, &h.v, &h, 0.0, 0.1, None).unwrap();
        let f = forcing_terms(&HydroContext::new(&hs, &h), &es);
        assert!(f.f2.max_abs() < 1e-12);
        assert!(f.f.max_abs() < 1e-12);
    }

    #[test]
    fn nonlinear_terms_small_case() {
        let g = grid(16, 24);
        let gy = |y: f64| y * y * (1.0 - y) * (1.0 - y);
        let dg = |y: f64| 2.0 * y * (1.0 - y) * (1.0 - 2.0 * y);
        let u = SpectralField::from_fn(&g, |x, y| x.cos() * gy(y));
        let v = vertical_velocity(&u);
        let hstate = HydroState::new(SpectralField::zeros(&g), 0.0);
        let es = build_error_state(&u, &v, &hstate, 0.0, 0.2, None).unwrap();
        let nl = nonlinear_terms(&es);
        // v = sin x ∫_0^y g, so u u_x + v u_y = -cos x sin x g² + sin x cos x G g'
        let anti = |y: f64| y.powi(3) / 3.0 - y.powi(4) / 2.0 + y.powi(5) / 5.0;
        let exact = SpectralField::from_fn(&g, |x, y| x.sin() * x.cos() * (anti(y) * dg(y) - gy(y) * gy(y)));
        assert!(nl.u.max_diff(&exact) < 1e-10, "{}", nl.u.max_diff(&exact));
        let scaled = build_error_state(&u.scaled(2.0), &v.scaled(2.0), &hstate, 0.0, 0.2, None).unwrap();
        assert!(nonlinear_terms(&scaled).omega.max_diff(&nl.omega.scaled(4.0)) < 1e-12);
    }

    #[test]
    fn energy_with_zero_weight_and_g_bound() {
        let g = grid(16, 16);
        let u = SpectralField::from_fn(&g, |x, y| (PI * y).sin().powi(2) * (x.cos() + 0.3 * (7.0 * x).sin()));
        let v = vertical_velocity(&u);
        let hstate = HydroState::new(SpectralField::zeros(&g), 0.0);
        let eps = 0.4;
        let es = build_error_state(&u, &v, &hstate, 0.0, eps, None).unwrap();
        let en = energy_functionals(&es, 3.0, 0.2, 1.0, 0.0).unwrap();
        let expect = gevrey_norm_tau(&es.omega_in, 3.0, 0.2, 1.0).unwrap().powi(2)
            + high_pair_sq(&u, &v, eps, n_of_eps(eps, 1.0).unwrap() as f64, 3.0, 0.2, 1.0).unwrap();
        assert!((en.e - expect).abs() < 1e-12 * expect);
        assert!(en.e_parts[2] > 0.0);
        assert!(en.g >= gevrey_norm_tau(&es.omega_in, 3.5, 0.2, 1.0).unwrap().powi(2));
        let weighted = gevrey_norm_tau(&weighted_by_phi(&es.omega_r), 3.0, 0.2, 1.0).unwrap();
        assert!(weighted <= gevrey_norm_tau(&es.omega_r, 3.0, 0.2, 1.0).unwrap() / 4.0 + 1e-12);
    }

    #[test]
    fn coupled_x_independent_run_has_zero_error() {
        let g = grid(8, 24);
        let up = SpectralField::from_fn(&g, |_, y| y * y - y + 0.2 * (PI * y).sin());
        let st = StepSettings::new(1e-3);
        let (hs, mut h) = HydroSolver::new(&up, st).unwrap();
        let (asol, mut a) = AnsSolver::new(&up, &h.v, AnsSettings { step: st, ..AnsSettings::new(0.1, 1e-3) }).unwrap();
        for _ in 0..20 {
            h = hs.step(&h).unwrap();
            a = asol.step(&a).unwrap();
        }
        let es = error_state_from(&a, &h, 0.1, None).unwrap();
        assert!(es.u_r.max_abs() < 1e-9);
    }

    fn coupled_residual(ny: usize, dt: f64, steps: usize) -> BoundaryResidual {
        let g = grid(32, ny);
        let (u0, v0) = make_family(&DataSpec::default(), &g).unwrap();
        let eps = 0.1;
        let (hs, mut h) = HydroSolver::new(&u0, StepSettings::new(dt)).unwrap();
        let (asol, mut a) = AnsSolver::new(&u0, &v0, AnsSettings::new(eps, dt)).unwrap();
        for _ in 0..steps {
            h = hs.step(&h).unwrap();
            a = asol.step(&a).unwrap();
        }
        let es = error_state_from(&a, &h, eps, None).unwrap();
        let ctx = HydroContext::new(&hs, &h);
        let f = forcing_terms(&ctx, &es);
        let nl = nonlinear_terms(&es);
        let data = boundary_data(&ctx, &es, &f).unwrap();
        vorticity_boundary_residual(&ctx, &es, &data, &nl).unwrap()
    }

    #[test]
    fn boundary_identity_on_coupled_run() {
        let res = coupled_residual(32, 2.5e-4, 400);
        assert!(res.relative() <= 1e-4, "{}", res.relative());
    }

    /// On finer grids the residual is set by the time step.
    #[test]
    fn boundary_identity_converges_in_time() {
        let coarse = coupled_residual(64, 2.5e-4, 400).max();
        let fine = coupled_residual(64, 1.25e-4, 800).max();
        assert!(fine * 4.0 <= coarse, "{coarse} -> {fine}");
    }
}
