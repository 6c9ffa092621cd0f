//! Gevrey weights `Phi(t,k) = tau(t) <k>^sigma`, the associated norms, and
//! smooth frequency cut-offs.

pub mod lemmas;

use crate::discretization::{Grid, SpectralField};
use crate::error::{HydroError, Result};
use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest admissible exponent in `e^{Phi}` before the multiplier is refused.
pub const MULTIPLIER_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams {
    pub sigma: f64,
    pub tau0: f64,
    pub beta: f64,
}

impl GevreyParams {
    pub fn new(sigma: f64, tau0: f64, beta: f64) -> Self {
        GevreyParams { sigma, tau0, beta }
    }

    /// Rejects `tau0 < 0` or `beta < 1`; only warns for sigma outside [8/9, 1].
    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 >= 0.0) {
            return Err(HydroError::InvalidParameter(format!("tau0 must be >= 0, got {}", self.tau0)));
        }
        if !(self.beta >= 1.0) {
            return Err(HydroError::InvalidParameter(format!("beta must be >= 1, got {}", self.beta)));
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(HydroError::InvalidParameter(format!(
                "sigma must lie in (0, 1], got {}",
                self.sigma
            )));
        }
        if self.sigma < 8.0 / 9.0 {
            log::warn!("sigma = {} is below 8/9; continuing for exploration", self.sigma);
        }
        Ok(())
    }

    /// Gevrey radius `tau0 e^{-beta t}`.
    pub fn tau(&self, t: f64) -> f64 {
        self.tau0 * (-self.beta * t).exp()
    }
}

/// `<k> = (1 + k^2)^{1/2}`
pub fn japanese(k: f64) -> f64 {
    (1.0 + k * k).sqrt()
}

/// `Phi(t, k) = tau0 e^{-beta t} (1 + k^2)^{sigma/2}`.
pub fn phi(t: f64, k: f64, params: &GevreyParams) -> f64 {
    params.tau(t) * japanese(k).powf(params.sigma)
}

fn phi_tau(tau: f64, k: f64, sigma: f64) -> f64 {
    tau * japanese(k).powf(sigma)
}

fn guard(tau: f64, sigma: f64, grid: &Grid) -> Result<()> {
    let exponent = phi_tau(tau, (grid.nx() / 2) as f64, sigma);
    if exponent > MULTIPLIER_LIMIT {
        return Err(HydroError::MultiplierOverflow {
            exponent,
            limit: MULTIPLIER_LIMIT,
        });
    }
    Ok(())
}

/// `f_Phi = e^{sign * Phi(t, D)} f`.
pub fn apply_multiplier(f: &SpectralField, t: f64, params: &GevreyParams, sign: i32) -> Result<SpectralField> {
    apply_multiplier_tau(f, params.tau(t), params.sigma, sign)
}

pub fn apply_multiplier_tau(f: &SpectralField, tau: f64, sigma: f64, sign: i32) -> Result<SpectralField> {
    if sign > 0 {
        guard(tau, sigma, f.grid())?;
    }
    let s = if sign > 0 { 1.0 } else { -1.0 };
    Ok(f.scale_modes_real(|k| (s * phi_tau(tau, k as f64, sigma)).exp()))
}

/// Per-mode weight `<k>^{2r} e^{2 Phi}` evaluated in log form.
fn weight_sq(k: f64, r: f64, tau: f64, sigma: f64) -> f64 {
    (2.0 * r * japanese(k).ln() + 2.0 * phi_tau(tau, k, sigma)).exp()
}

/// `||f||_{X^r_{sigma,tau(t)}}`.
pub fn gevrey_norm(f: &SpectralField, r: f64, t: f64, params: &GevreyParams) -> Result<f64> {
    gevrey_norm_tau(f, r, params.tau(t), params.sigma)
}

/// Same norm at an explicit radius `tau`.
pub fn gevrey_norm_tau(f: &SpectralField, r: f64, tau: f64, sigma: f64) -> Result<f64> {
    guard(tau, sigma, f.grid())?;
    let grid = f.grid();
    let w = grid.cheb().weights();
    let mut acc = 0.0;
    for i in 0..grid.nx() {
        let k = grid.wavenumber(i) as f64;
        let l2: f64 = f.row(i).iter().zip(w.iter()).map(|(c, &wj)| c.norm_sqr() * wj).sum();
        if l2 != 0.0 {
            acc += weight_sq(k, r, tau, sigma) * l2;
        }
    }
    Ok(acc.max(0.0).sqrt())
}

/// Boundary-trace norm `|g|_{X^r}` of x-only data given per mode (FFT order).
pub fn trace_norm(grid: &Grid, values: &Array1<Complex64>, r: f64, t: f64, params: &GevreyParams) -> Result<f64> {
    trace_norm_tau(grid, values, r, params.tau(t), params.sigma)
}

pub fn trace_norm_tau(grid: &Grid, values: &Array1<Complex64>, r: f64, tau: f64, sigma: f64) -> Result<f64> {
    guard(tau, sigma, grid)?;
    if values.len() != grid.nx() {
        return Err(HydroError::Dimension("trace length differs from nx".into()));
    }
    let acc: f64 = values
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.norm_sqr() == 0.0 {
                0.0
            } else {
                weight_sq(grid.wavenumber(i) as f64, r, tau, sigma) * c.norm_sqr()
            }
        })
        .sum();
    Ok(acc.sqrt())
}

/// Even cut-off profile: 0 on `|x| <= 1/2`, 1 on `|x| >= 1`, smooth in between.
#[derive(Debug, Clone, Copy, Default)]
pub enum CutoffProfile {
    #[default]
    SmoothStep,
    Custom(fn(f64) -> f64),
}

impl CutoffProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CutoffProfile::SmoothStep => smooth_step(2.0 * x.abs() - 1.0),
            CutoffProfile::Custom(f) => f(x),
        }
    }
}

/// `g(u) / (g(u) + g(1-u))` with `g(u) = e^{-1/u}`, clamped to [0, 1] outside (0, 1).
fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let g = |s: f64| (-1.0 / s).exp();
        let a = g(u);
        a / (a + g(1.0 - u))
    }
}

/// `P_{>=N} f`: multiply mode k by `chi(k/N)`.
pub fn cutoff_high(f: &SpectralField, n: f64, profile: &CutoffProfile) -> Result<SpectralField> {
    if !(n > 0.0) {
        return Err(HydroError::InvalidParameter(format!("cut-off level must be positive, got {n}")));
    }
    Ok(f.scale_modes_real(|k| profile.eval(k as f64 / n)))
}

/// `P_{<=N} f = f - P_{>=N-1} f`, for `N >= 2`.
pub fn cutoff_low(f: &SpectralField, n: f64, profile: &CutoffProfile) -> Result<SpectralField> {
    let high = cutoff_high(f, n - 1.0, profile)?;
    Ok(f - &high)
}

/// `N(eps) = floor(eps^{-2/(2-sigma)})`.
pub fn n_of_eps(epsilon: f64, sigma: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(HydroError::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let x = epsilon.powf(-2.0 / (2.0 - sigma));
    // absorb representation error of eps (0.1 is slightly above 1/10)
    Ok((x * (1.0 + 1e-12)).floor() as u64)
}

/// Largest violation of `Phi(t,k) <= Phi(t,k-l) + Phi(t,l)` over `|k|,|l| <= kmax`
/// and the supplied times; non-positive means the inequality holds everywhere.
pub fn subadditivity_defect(kmax: i64, times: &[f64], params: &GevreyParams) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for &t in times {
        for k in -kmax..=kmax {
            for l in -kmax..=kmax {
                let lhs = phi(t, k as f64, params);
                let rhs = phi(t, (k - l) as f64, params) + phi(t, l as f64, params);
                worst = worst.max(lhs - rhs);
            }
        }
    }
    worst
}
