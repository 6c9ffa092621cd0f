//! Initial data for the hydrostatic limit: a convex shear plus a zero-mean
//! cubic perturbation, compatibility checks, the second-order corner
//! correction and the Gevrey data bound.

use crate::discretization::{Grid, SpectralField};
use crate::error::{HydroError, Result};
use crate::gevrey::gevrey_norm_tau;
use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    /// Shear amplitude, `u₀ ⊃ c₀(y² - y)`.
    pub c0: f64,
    /// Amplitude of `cos x · y(1-y)(1-2y)`.
    pub a: f64,
    /// Convexity margin: `∂_y²u₀ ≥ 2δ₀`.
    pub delta0: f64,
    /// Sobolev level of the data bound (>= 10).
    pub n0: u32,
    /// Upper bound required of the computed data size `M`.
    pub m_bound: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            c0: 1.0,
            a: 0.1,
            delta0: 0.2,
            n0: 10,
            m_bound: 1.0e6,
        }
    }
}

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HydroError::InvalidParameter(msg));
        if !(self.c0 > 0.0) {
            return bad(format!("c0 must be positive, got {}", self.c0));
        }
        if !(self.delta0 > 0.0) {
            return bad(format!("delta0 must be positive, got {}", self.delta0));
        }
        if self.n0 < 10 {
            return bad(format!("N0 must be at least 10, got {}", self.n0));
        }
        if self.a.abs() > (self.c0 - self.delta0) / 3.0 + 1e-15 {
            return bad(format!(
                "|a| = {} exceeds (c0 - delta0)/3 = {}",
                self.a.abs(),
                (self.c0 - self.delta0) / 3.0
            ));
        }
        Ok(())
    }
}

/// Normalisation of the area integral in the corner condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaTerm {
    /// `(1/2π)∫_𝒮 ∂_y²u₀`.
    StripMean,
    /// `∫_𝒮 ∂_y²u₀` without normalisation.
    Literal,
    /// No area term: the wall curvature balances the net flux alone.
    #[default]
    Omitted,
}

impl AreaTerm {
    fn value(self, strip_mean: f64) -> f64 {
        match self {
            AreaTerm::StripMean => strip_mean,
            AreaTerm::Literal => 2.0 * PI * strip_mean,
            AreaTerm::Omitted => 0.0,
        }
    }
}

/// `v = -∫₀^y ∂_xu dz`.
pub fn vertical_velocity(u: &SpectralField) -> SpectralField {
    -&u.ddx().antiderivative_from_bottom()
}

/// Built-in family `u₀ = c₀(y² - y) + a cos x · y(1-y)(1-2y)` and its `v₀`.
pub fn make_family(spec: &DataSpec, grid: &Arc<Grid>) -> Result<(SpectralField, SpectralField)> {
    spec.validate()?;
    let (c0, a) = (spec.c0, spec.a);
    let u0 = SpectralField::from_fn(grid, |x, y| c0 * (y * y - y) + a * x.cos() * y * (1.0 - y) * (1.0 - 2.0 * y));
    let v0 = vertical_velocity(&u0);
    Ok((u0, v0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub divergence: f64,
    pub boundary: f64,
    pub vertical_mean: f64,
    pub corner_bottom: f64,
    pub corner_top: f64,
}

impl CompatibilityReport {
    /// Largest of the first-order residuals (divergence, walls, vertical mean).
    pub fn first_order(&self) -> f64 {
        self.divergence.max(self.boundary).max(self.vertical_mean)
    }

    pub fn corner(&self) -> f64 {
        self.corner_bottom.max(self.corner_top)
    }
}

fn max_norm(v: &Array1<Complex64>) -> f64 {
    v.iter().fold(0.0f64, |m, c| m.max(c.norm()))
}

/// Nodal square of `u`, back in spectral form.
fn square(u: &SpectralField) -> SpectralField {
    let n = u.to_nodal();
    SpectralField::from_nodal(u.grid(), &(&n * &n)).expect("same grid")
}

/// Per-mode wall residuals of `∂_y²u|_wall = ∫₀¹(∂_y²u - ∂_x u²) dy - area`.
fn corner_residuals(u: &SpectralField, area: AreaTerm) -> (Array1<Complex64>, Array1<Complex64>) {
    let grid = u.grid();
    let uyy = u.ddy2();
    let w = grid.cheb().weights();
    let flux = uyy.weighted_sum(w);
    let quad = square(u).ddx().weighted_sum(w);
    let zero = grid.index_of(0).expect("k = 0");
    let area_value = area.value(flux[zero].re);
    let mut rhs = &flux - &quad;
    rhs[zero] -= area_value;
    (&uyy.bottom() - &rhs, &uyy.top() - &rhs)
}

/// Sum of per-mode magnitudes, an upper bound for the nodal maximum.
fn mode_sum(v: &Array1<Complex64>) -> f64 {
    v.iter().map(|c| c.norm()).sum()
}

fn wall_residual(u: &SpectralField, area: AreaTerm) -> f64 {
    let (b, t) = corner_residuals(u, area);
    mode_sum(&b).max(mode_sum(&t))
}

/// Residuals of divergence, wall values, zero vertical mean of `∂_xu` and the
/// second-order corner condition at both walls.
pub fn check_compatibility(u0: &SpectralField, v0: &SpectralField, area: AreaTerm) -> CompatibilityReport {
    let divergence = (&u0.ddx() + &v0.ddy()).max_abs();
    let boundary = [u0.bottom(), u0.top(), v0.bottom(), v0.top()]
        .iter()
        .map(max_norm)
        .fold(0.0f64, f64::max);
    let vertical_mean = max_norm(&u0.ddx().weighted_sum(u0.grid().cheb().weights()));
    let (bottom, top) = corner_residuals(u0, area);
    CompatibilityReport {
        divergence,
        boundary,
        vertical_mean,
        corner_bottom: mode_sum(&bottom),
        corner_top: mode_sum(&top),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionStats {
    pub iterations: usize,
    pub residual: f64,
    pub min_curvature: f64,
}

pub const CORRECTION_MAX_ITERATIONS: usize = 50;

/// Smallest nodal value of `∂_y²u`.
pub fn min_curvature(u: &SpectralField) -> f64 {
    u.ddy2().to_nodal().iter().fold(f64::INFINITY, |m, &v| m.min(v))
}

/// Add `b₀(x)y²(1-y)³ + b₁(x)y³(1-y)² + c(x)y³(1-y)³` so that the corner
/// condition holds at both walls; `c = -(7/3)(b₀ + b₁)` keeps `∫₀¹u dy` fixed.
///
/// The shapes leave `u`, `∂_yu` at the walls untouched, so only the quadratic
/// term couples the iteration.
pub fn correct_com2(
    u0: &SpectralField,
    tolerance: f64,
    delta0: f64,
    area: AreaTerm,
) -> Result<(SpectralField, CorrectionStats)> {
    let grid = u0.grid().clone();
    let y = grid.y();
    let phi0 = y.mapv(|y| y * y * (1.0 - y).powi(3));
    let phi1 = y.mapv(|y| y.powi(3) * (1.0 - y).powi(2));
    let phi2 = y.mapv(|y| y.powi(3) * (1.0 - y).powi(3));
    let base_bottom = u0.ddy2().bottom();
    let base_top = u0.ddy2().top();

    let mut u = u0.clone();
    let mut residual = wall_residual(&u, area);
    let mut iterations = 0;
    while residual > tolerance {
        if iterations == CORRECTION_MAX_ITERATIONS {
            return Err(HydroError::NoConvergence { iterations, residual });
        }
        iterations += 1;
        // wall curvature required by the current quadratic term
        let (rb, rt) = corner_residuals(&u, area);
        let uyy = u.ddy2();
        let target_bottom = &uyy.bottom() - &rb;
        let target_top = &uyy.top() - &rt;
        let b0 = (&target_bottom - &base_bottom).mapv(|c| c * 0.5);
        let b1 = (&target_top - &base_top).mapv(|c| c * 0.5);
        let mut next = u0.clone();
        for i in 0..grid.nx() {
            let c = -(7.0 / 3.0) * (b0[i] + b1[i]);
            let mut row = next.row_mut(i);
            for j in 0..grid.ny() {
                row[j] += b0[i] * phi0[j] + b1[i] * phi1[j] + c * phi2[j];
            }
        }
        u = next;
        residual = wall_residual(&u, area);
        if !residual.is_finite() {
            return Err(HydroError::NoConvergence { iterations, residual });
        }
    }
    let min_curv = min_curvature(&u);
    if min_curv < 2.0 * delta0 {
        return Err(HydroError::ConvexityLost {
            min: min_curv,
            required: 2.0 * delta0,
        });
    }
    Ok((
        u,
        CorrectionStats {
            iterations,
            residual,
            min_curvature: min_curv,
        },
    ))
}

/// `M = |∂_yu₀|_{X^{N₀}} + |∂_y³u₀|_{X^{N₀-4}}` at radius `τ₀`.
pub fn check_gevrey_bound(u0: &SpectralField, sigma: f64, tau0: f64, n0: u32) -> Result<f64> {
    let uy = u0.ddy();
    let uyyy = uy.ddy2();
    Ok(gevrey_norm_tau(&uy, n0 as f64, tau0, sigma)? + gevrey_norm_tau(&uyyy, n0 as f64 - 4.0, tau0, sigma)?)
}

/// Validation record written next to generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataReport {
    pub spec: DataSpec,
    pub area_term: AreaTerm,
    pub compatibility: CompatibilityReport,
    pub correction: CorrectionStats,
    pub min_curvature: f64,
    pub gevrey_bound: f64,
    pub v0_consistency: f64,
    pub passed: bool,
}

/// Build, correct and validate the built-in family.
pub fn generate(
    spec: &DataSpec,
    grid: &Arc<Grid>,
    sigma: f64,
    tau0: f64,
    area: AreaTerm,
    tolerance: f64,
) -> Result<(SpectralField, SpectralField, DataReport)> {
    let (u, _) = make_family(spec, grid)?;
    let (u0, correction) = correct_com2(&u, tolerance, spec.delta0, area)?;
    let v0 = vertical_velocity(&u0);
    let compatibility = check_compatibility(&u0, &v0, area);
    let m = check_gevrey_bound(&u0, sigma, tau0, spec.n0)?;
    let min_curv = min_curvature(&u0);
    let v0_consistency = vertical_velocity(&u0).max_diff(&v0);
    let passed = compatibility.first_order() <= 1e-12
        && compatibility.corner() <= 1e-10
        && min_curv >= 2.0 * spec.delta0
        && m <= spec.m_bound;
    let report = DataReport {
        spec: *spec,
        area_term: area,
        compatibility,
        correction,
        min_curvature: min_curv,
        gevrey_bound: m,
        v0_consistency,
        passed,
    };
    Ok((u0, v0, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;

    fn grid() -> Arc<Grid> {
        Grid::new(GridSpec::new(32, 32)).unwrap()
    }

    #[test]
    fn family_is_first_order_compatible() {
        let g = grid();
        let (u, v) = make_family(&DataSpec::default(), &g).unwrap();
        let r = check_compatibility(&u, &v, AreaTerm::Omitted);
        assert!(r.first_order() < 1e-12, "{r:?}");
        assert!((min_curvature(&u) - 1.4).abs() < 1e-9);
    }

    #[test]
    fn shear_only_has_no_v_and_no_correction() {
        let g = grid();
        let spec = DataSpec { a: 0.0, ..DataSpec::default() };
        let (u, v) = make_family(&spec, &g).unwrap();
        assert!(v.max_abs() < 1e-15);
        let r = check_compatibility(&u, &v, AreaTerm::Omitted);
        assert!(r.corner() < 1e-10);
        let (c, stats) = correct_com2(&u, 1e-10, 0.2, AreaTerm::Omitted).unwrap();
        assert!(stats.iterations <= 3);
        assert_eq!(c, u);
        // under the strip-mean reading the wall curvature 2c₀ is left over
        let s = check_compatibility(&u, &v, AreaTerm::StripMean);
        assert!((s.corner_bottom - 2.0).abs() < 1e-9);
    }

    #[test]
    fn correction_converges_and_keeps_margin() {
        let g = grid();
        let (u, _) = make_family(&DataSpec::default(), &g).unwrap();
        let (c, stats) = correct_com2(&u, 1e-10, 0.2, AreaTerm::Omitted).unwrap();
        let v = vertical_velocity(&c);
        let r = check_compatibility(&c, &v, AreaTerm::Omitted);
        assert!(r.corner() <= 1e-10, "{r:?}");
        assert!(r.first_order() <= 1e-12);
        assert!(stats.min_curvature >= 0.4);
        let (again, s2) = correct_com2(&c, 1e-10, 0.2, AreaTerm::Omitted).unwrap();
        assert_eq!(s2.iterations, 0);
        assert_eq!(again, c);
    }

    #[test]
    fn strip_mean_reading_cannot_be_met_by_convex_data() {
        let g = grid();
        let (u, _) = make_family(&DataSpec::default(), &g).unwrap();
        assert!(correct_com2(&u, 1e-10, 0.2, AreaTerm::StripMean).is_err());
    }

    #[test]
    fn incompatible_data_is_flagged() {
        let g = grid();
        let u = SpectralField::from_fn(&g, |x, y| y * (1.0 - y) * (1.0 + 0.3 * x.sin()) + 0.1 * y);
        let v = vertical_velocity(&u);
        let r = check_compatibility(&u, &v, AreaTerm::Omitted);
        assert!(r.first_order() > 1e-10);
        let z = SpectralField::zeros(&g);
        let rz = check_compatibility(&z, &z, AreaTerm::StripMean);
        assert_eq!(rz.first_order() + rz.corner(), 0.0);
    }

    #[test]
    fn gevrey_bound_examples() {
        let g = grid();
        let z = SpectralField::zeros(&g);
        assert_eq!(check_gevrey_bound(&z, 1.0, 0.5, 10).unwrap(), 0.0);
        let spec = DataSpec { a: 0.0, ..DataSpec::default() };
        let (u, _) = make_family(&spec, &g).unwrap();
        let m = check_gevrey_bound(&u, 1.0, 0.7, 10).unwrap();
        assert!((m - 0.7f64.exp() / 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn spec_validation() {
        let g = grid();
        assert!(make_family(&DataSpec { a: 0.3, ..DataSpec::default() }, &g).is_err());
        assert!(make_family(&DataSpec { n0: 9, ..DataSpec::default() }, &g).is_err());
        assert!(make_family(&DataSpec { delta0: 0.0, ..DataSpec::default() }, &g).is_err());
    }
}
