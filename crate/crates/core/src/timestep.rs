//! Pieces shared by the two time steppers: constrained implicit diffusion per
//! mode, the exponential filter and the advective CFL number.

use crate::discretization::{ChebyshevGrid, DenseLu, Grid, SpectralField};
use crate::error::Result;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Treatment of the x-independent pressure gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanPressure {
    /// No mean pressure gradient: the mean flow decays freely.
    Zero,
    /// Mean pressure gradient chosen to hold the net flux `∫₀¹ū dy` at its initial value.
    #[default]
    FixedFlux,
}

/// Step controls shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSettings {
    pub dt: f64,
    /// Filter strength at the last retained mode.
    pub filter_alpha: f64,
    pub cfl_limit: f64,
    pub mean_pressure: MeanPressure,
    /// Leading steps taken as two backward-Euler half steps before Crank–Nicolson.
    pub start_steps: usize,
}

impl StepSettings {
    pub fn new(dt: f64) -> Self {
        StepSettings {
            dt,
            filter_alpha: 36.0,
            cfl_limit: 1.0,
            mean_pressure: MeanPressure::default(),
            start_steps: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use crate::error::HydroError;
        if !(self.dt > 0.0) || !(self.filter_alpha >= 0.0) || !(self.cfl_limit > 0.0) {
            return Err(HydroError::InvalidParameter(format!(
                "need dt > 0, filter_alpha >= 0, cfl_limit > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Implicit part of one step of `∂_t f = c ∂_y² f - s f - g`, with Dirichlet
/// walls and an optional scalar `g` (a pressure gradient) fixing `∫₀¹ f dy`.
///
/// The matrix is `I - θ(c D2 - s I)` with identity wall rows, where `θ = h/2`
/// for Crank–Nicolson and `θ = h` for backward Euler over a step `h`.
#[derive(Debug, Clone)]
pub struct ImplicitDiffusion {
    lu: DenseLu,
    /// `A⁻¹ 1` with zero wall entries in the load.
    unit_response: Array1<f64>,
    unit_flux: f64,
    weights: Array1<f64>,
    explicit: Option<Array2<f64>>,
    step: f64,
}

impl ImplicitDiffusion {
    pub fn new(cheb: &ChebyshevGrid, coef: f64, shift: f64, step: f64, crank_nicolson: bool, k: i64) -> Result<Self> {
        let n = cheb.len();
        let theta = if crank_nicolson { 0.5 * step } else { step };
        let op = cheb.d2() * coef - &(Array2::<f64>::eye(n) * shift);
        let mut a = Array2::<f64>::eye(n) - &(&op * theta);
        for j in 0..n {
            a[[0, j]] = 0.0;
            a[[n - 1, j]] = 0.0;
        }
        a[[0, 0]] = 1.0;
        a[[n - 1, n - 1]] = 1.0;
        let lu = DenseLu::new(&a, "implicit diffusion", k)?;
        let mut load: Array1<f64> = Array1::ones(n);
        load[0] = 0.0;
        load[n - 1] = 0.0;
        let mut unit_response = lu.solve_real(load.view());
        unit_response[0] = 0.0;
        unit_response[n - 1] = 0.0;
        let weights = cheb.weights().clone();
        let unit_flux = weights.dot(&unit_response);
        let explicit = crank_nicolson.then(|| Array2::<f64>::eye(n) + &(&op * (0.5 * step)));
        Ok(ImplicitDiffusion {
            lu,
            unit_response,
            unit_flux,
            weights,
            explicit,
            step,
        })
    }

    /// `(I + (h/2)L) f` for Crank–Nicolson, `f` itself for backward Euler.
    pub fn explicit_part(&self, f: &Array1<Complex64>) -> Array1<Complex64> {
        match &self.explicit {
            Some(m) => m
                .outer_iter()
                .map(|row| row.iter().zip(f.iter()).map(|(a, b)| b * *a).sum())
                .collect(),
            None => f.clone(),
        }
    }

    /// Solve with right-hand side `rhs` (wall entries overwritten with the
    /// given wall values). With `flux = Some(q)` a constant `g` is subtracted
    /// (as `h·g` in the load) so that `∫₀¹ f dy = q`; returns `(f, g)`.
    pub fn solve(
        &self,
        mut rhs: Array1<Complex64>,
        walls: (Complex64, Complex64),
        flux: Option<Complex64>,
    ) -> (Array1<Complex64>, Complex64) {
        let n = rhs.len();
        rhs[0] = walls.0;
        rhs[n - 1] = walls.1;
        let mut f = self.lu.solve(rhs.view());
        let mut g = Complex64::new(0.0, 0.0);
        if let Some(target) = flux {
            let current: Complex64 = self.weights.iter().zip(f.iter()).map(|(w, v)| v * *w).sum();
            g = (current - target) / (self.step * self.unit_flux);
            let h = self.step;
            f.iter_mut()
                .zip(self.unit_response.iter())
                .for_each(|(v, q)| *v -= g * h * *q);
        }
        f[0] = walls.0;
        f[n - 1] = walls.1;
        (f, g)
    }

    pub fn lu(&self) -> &DenseLu {
        &self.lu
    }
}

/// `exp(-α (|k|/k_max)^16)` for retained modes, zero beyond `k_max`.
pub fn filter_factors(grid: &Grid, alpha: f64) -> Vec<f64> {
    let kmax = grid.k_retained().max(1) as f64;
    grid.wavenumbers()
        .iter()
        .map(|&k| {
            let r = k.abs() as f64 / kmax;
            if r > 1.0 {
                0.0
            } else {
                (-alpha * r.powi(16)).exp()
            }
        })
        .collect()
}

pub fn apply_filter(f: &SpectralField, factors: &[f64]) -> SpectralField {
    let mut out = f.clone();
    for (i, s) in factors.iter().enumerate() {
        if *s != 1.0 {
            out.row_mut(i).mapv_inplace(|c| c * *s);
        }
    }
    out
}

/// Largest `dt (|u| k_max + |v| / Δy_local)` over the nodes.
pub fn cfl_number(u: &SpectralField, v: &SpectralField, dt: f64) -> f64 {
    let grid = u.grid();
    let y = grid.y();
    let n = y.len();
    let spacing: Vec<f64> = (0..n)
        .map(|j| {
            let left = if j > 0 { y[j] - y[j - 1] } else { f64::INFINITY };
            let right = if j + 1 < n { y[j + 1] - y[j] } else { f64::INFINITY };
            left.min(right)
        })
        .collect();
    let kmax = grid.k_retained() as f64;
    let un = u.to_nodal();
    let vn = v.to_nodal();
    let mut worst = 0.0f64;
    for m in 0..grid.nx() {
        for j in 0..n {
            worst = worst.max(un[[m, j]].abs() * kmax + vn[[m, j]].abs() / spacing[j]);
        }
    }
    dt * worst
}

/// Number of steps of size `dt` reaching `t_end`, requiring `t_end/dt` to be an integer.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    use crate::error::HydroError;
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(HydroError::InvalidParameter(format!("need dt > 0 and T >= 0, got dt={dt}, T={t_end}")));
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(HydroError::InvalidParameter(format!("T={t_end} is not a multiple of dt={dt}")));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;

    #[test]
    fn constrained_solve_hits_flux() {
        let cheb = ChebyshevGrid::new(24, 0.0, 1.0);
        let op = ImplicitDiffusion::new(&cheb, 1.0, 0.0, 1e-2, true, 1).unwrap();
        let rhs = cheb.nodes().mapv(|y| Complex64::new(y.sin(), y * y));
        let zero = Complex64::new(0.0, 0.0);
        let (f, g) = op.solve(rhs, (zero, zero), Some(Complex64::new(0.25, -0.5)));
        let flux: Complex64 = cheb.weights().iter().zip(f.iter()).map(|(w, v)| v * *w).sum();
        assert!((flux - Complex64::new(0.25, -0.5)).norm() < 1e-13);
        assert!(g.norm() > 0.0);
        assert_eq!(f[0], zero);
    }

    #[test]
    fn filter_shape() {
        let g = Grid::new(GridSpec::new(32, 8)).unwrap();
        let f = filter_factors(&g, 36.0);
        assert_eq!(f[0], 1.0);
        let kmax = g.k_retained();
        assert!((f[g.index_of(kmax).unwrap()] - (-36.0f64).exp()).abs() < 1e-30);
        assert_eq!(f[g.index_of(kmax + 1).unwrap()], 0.0);
        assert!(f[g.index_of(2).unwrap()] > 1.0 - 1e-9);
    }

    #[test]
    fn step_count_requires_multiple() {
        assert_eq!(step_count(0.25, 2.5e-4).unwrap(), 1000);
        assert!(step_count(0.25, 0.3).is_err());
    }
}
