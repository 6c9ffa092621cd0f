//! Per-mode Dirichlet solves of `Δ_ε = ∂_y² + ε²∂_x²` on the strip, the exact
//! kernels `K₁, K₂, G₀..G₃`, boundary-derivative traces and velocity recovery
//! from vorticity.
//!
//! Two independent solution paths are provided: Chebyshev collocation with a
//! dense LU per wavenumber ([`solve_dirichlet`]) and quadrature of the exact
//! kernel representation ([`solve_dirichlet_kernel`]).

mod bounds;

pub use bounds::{check_kernel_bounds, EpsilonConstants, KernelBoundConfig, KernelBoundReport};

use crate::discretization::{ChebyshevGrid, DenseLu, SpectralField};
use crate::error::{HydroError, Result};
use crate::gevrey::gevrey_norm_tau;
use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// `(1 - e^{-2a y}) / (1 - e^{-2a})`, with the `a = 0` limit `y`.
fn sinh_ratio_core(a: f64, y: f64) -> f64 {
    if a == 0.0 {
        y
    } else {
        (-2.0 * a * y).exp_m1() / (-2.0 * a).exp_m1()
    }
}

/// `a / (1 - e^{-2a})`, with the `a = 0` limit `1/2`.
fn a_over_denominator(a: f64) -> f64 {
    if a == 0.0 {
        0.5
    } else {
        -a / (-2.0 * a).exp_m1()
    }
}

/// `K₁ = sinh(a y) / sinh(a)` in overflow-free form.
pub fn k1(a: f64, y: f64) -> f64 {
    (-a * (1.0 - y)).exp() * sinh_ratio_core(a, y)
}

/// `K₂ = e^{-a y}`.
pub fn k2(a: f64, y: f64) -> f64 {
    (-a * y).exp()
}

pub fn g0(a: f64, y: f64) -> f64 {
    -2.0 * k1(a, 1.0 - y)
}

pub fn g1(a: f64, y: f64) -> f64 {
    2.0 * k1(a, y)
}

/// `∂_y G₀ = 2a cosh(a(1-y)) / sinh(a)`.
pub fn g2(a: f64, y: f64) -> f64 {
    2.0 * a_over_denominator(a) * (-a * y).exp() * (1.0 + (-2.0 * a * (1.0 - y)).exp())
}

/// `∂_y G₁ = 2a cosh(a y) / sinh(a)`.
pub fn g3(a: f64, y: f64) -> f64 {
    g2(a, 1.0 - y)
}

pub fn dk1(a: f64, y: f64) -> f64 {
    0.5 * g3(a, y)
}

pub fn dk2(a: f64, y: f64) -> f64 {
    -a * (-a * y).exp()
}

/// Kernels for one wavenumber sampled on a set of y-points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSet {
    pub k: i64,
    pub epsilon: f64,
    pub y: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
}

pub fn build_kernels(k: i64, epsilon: f64, y: &[f64]) -> Result<KernelSet> {
    check_epsilon(epsilon)?;
    let a = epsilon * k.unsigned_abs() as f64;
    let sample = |f: fn(f64, f64) -> f64| y.iter().map(|&yy| f(a, yy)).collect::<Vec<_>>();
    Ok(KernelSet {
        k,
        epsilon,
        y: y.to_vec(),
        k1: sample(k1),
        k2: sample(k2),
        g0: sample(g0),
        g1: sample(g1),
        g2: sample(g2),
        g3: sample(g3),
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(HydroError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// `D2 - a² I` with Dirichlet rows at both walls.
pub fn dirichlet_matrix(cheb: &ChebyshevGrid, a2: f64) -> Array2<f64> {
    let n = cheb.len();
    let mut m = cheb.d2().clone();
    for i in 0..n {
        m[[i, i]] -= a2;
    }
    for j in 0..n {
        m[[0, j]] = 0.0;
        m[[n - 1, j]] = 0.0;
    }
    m[[0, 0]] = 1.0;
    m[[n - 1, n - 1]] = 1.0;
    m
}

/// Collocation solve of `Δ_ε F = h`, `F = 0` at `y = 0, 1`, mode by mode.
pub fn solve_dirichlet(h: &SpectralField, epsilon: f64) -> Result<SpectralField> {
    check_epsilon(epsilon)?;
    let grid = h.grid().clone();
    let cheb = grid.cheb();
    let n = grid.ny();
    let mut out = SpectralField::zeros(&grid);
    out.set_real(h.is_real());
    let mut cache: HashMap<i64, DenseLu> = HashMap::new();
    for i in 0..grid.nx() {
        let k = grid.wavenumber(i);
        let ka = k.abs();
        if let std::collections::hash_map::Entry::Vacant(slot) = cache.entry(ka) {
            let a = epsilon * ka as f64;
            slot.insert(DenseLu::new(&dirichlet_matrix(cheb, a * a), "Dirichlet Laplacian", k)?);
        }
        let mut rhs = h.row(i).to_owned();
        rhs[0] = Complex64::new(0.0, 0.0);
        rhs[n - 1] = Complex64::new(0.0, 0.0);
        let sol = cache[&ka].solve(rhs.view());
        out.row_mut(i).assign(&sol);
    }
    Ok(out)
}

/// Quadrature machinery for the kernel representation, independent of `k`.
struct KernelQuadrature {
    /// Fine nodes and weights on `[0, 1]`.
    full_nodes: Array1<f64>,
    full_weights: Array1<f64>,
    full_interp: Array2<f64>,
    /// Per target node: sub-grid nodes, weights and interpolation on `[0, y_i]` and `[y_i, 1]`.
    lower: Vec<(Array1<f64>, Array1<f64>, Array2<f64>)>,
    upper: Vec<(Array1<f64>, Array1<f64>, Array2<f64>)>,
}

impl KernelQuadrature {
    fn new(cheb: &ChebyshevGrid, m: usize) -> Self {
        let reference = ChebyshevGrid::new(m, 0.0, 1.0);
        let map = |lo: f64, hi: f64| {
            let nodes = reference.nodes().mapv(|z| lo + (hi - lo) * z);
            let weights = reference.weights() * (hi - lo);
            let interp = cheb.interp_matrix(nodes.as_slice().expect("contiguous"));
            (nodes, weights, interp)
        };
        let (full_nodes, full_weights, full_interp) = map(0.0, 1.0);
        let ys = cheb.nodes();
        KernelQuadrature {
            full_nodes,
            full_weights,
            full_interp,
            lower: ys.iter().map(|&y| map(0.0, y)).collect(),
            upper: ys.iter().map(|&y| map(y, 1.0)).collect(),
        }
    }
}

fn oversample(ny: usize, a: f64) -> usize {
    if a > ny as f64 / 4.0 {
        2 * ny
    } else {
        ny
    }
}

fn real_dot(m: &Array2<f64>, v: &Array1<Complex64>) -> Array1<Complex64> {
    m.outer_iter().map(|row| row.iter().zip(v.iter()).map(|(a, b)| b * *a).sum()).collect()
}

/// Interpolate every mode profile of `coeffs` (nx x n) through `interp` (m x n).
fn interp_rows(coeffs: &Array2<Complex64>, interp: &Array2<f64>) -> Array2<Complex64> {
    let re = coeffs.mapv(|c| c.re).dot(&interp.t());
    let im = coeffs.mapv(|c| c.im).dot(&interp.t());
    let mut out = Array2::zeros(re.raw_dim());
    ndarray::Zip::from(&mut out)
        .and(&re)
        .and(&im)
        .for_each(|o, &r, &i| *o = Complex64::new(r, i));
    out
}

/// Solve through the exact kernel representation, evaluated by quadrature.
///
/// `k = 0` uses the double antiderivative with Dirichlet ends.
pub fn solve_dirichlet_kernel(h: &SpectralField, epsilon: f64) -> Result<SpectralField> {
    check_epsilon(epsilon)?;
    let grid = h.grid().clone();
    let cheb = grid.cheb();
    let n = grid.ny();
    let ys = cheb.nodes();
    let mut out = SpectralField::zeros(&grid);
    out.set_real(h.is_real());

    let mut quads: HashMap<usize, KernelQuadrature> = HashMap::new();
    let mut sampled: HashMap<usize, (Array2<Complex64>, Vec<Array2<Complex64>>, Vec<Array2<Complex64>>)> =
        HashMap::new();
    for i in 0..grid.nx() {
        let k = grid.wavenumber(i);
        let a = epsilon * k.unsigned_abs() as f64;
        if k == 0 {
            let prof = h.row(i).to_owned();
            let anti = cheb.antiderivative();
            let once = real_dot(anti, &prof);
            let twice = real_dot(anti, &once);
            let total: Complex64 = cheb.weights().iter().zip(once.iter()).map(|(w, v)| v * *w).sum();
            let f = Array1::from_iter(ys.iter().zip(twice.iter()).map(|(&y, &t)| t - total * y));
            out.row_mut(i).assign(&f);
            continue;
        }
        let m = oversample(n, a);
        let quad = quads.entry(m).or_insert_with(|| KernelQuadrature::new(cheb, m));
        let (full, lower, upper) = sampled.entry(m).or_insert_with(|| {
            let c = h.coeffs();
            (
                interp_rows(c, &quad.full_interp),
                quad.lower.iter().map(|(_, _, p)| interp_rows(c, p)).collect(),
                quad.upper.iter().map(|(_, _, p)| interp_rows(c, p)).collect(),
            )
        });
        let mut i1 = Complex64::new(0.0, 0.0);
        let mut i2 = Complex64::new(0.0, 0.0);
        for (j, (&z, &w)) in quad.full_nodes.iter().zip(quad.full_weights.iter()).enumerate() {
            i1 += w * k1(a, z) * full[[i, j]];
            i2 += w * k1(a, 1.0 - z) * full[[i, j]];
        }
        let mut prof = Array1::zeros(n);
        for (t, &y) in ys.iter().enumerate() {
            if t == 0 || t == n - 1 {
                continue;
            }
            let mut jint = Complex64::new(0.0, 0.0);
            let (ln, lw, _) = &quad.lower[t];
            for (j, (&z, &w)) in ln.iter().zip(lw.iter()).enumerate() {
                jint += w * (-a * (y - z)).exp() * lower[t][[i, j]];
            }
            let (un, uw, _) = &quad.upper[t];
            for (j, (&z, &w)) in un.iter().zip(uw.iter()).enumerate() {
                jint += w * (-a * (z - y)).exp() * upper[t][[i, j]];
            }
            prof[t] = ((-a * (1.0 - y)).exp() * i1 + (-a * y).exp() * i2 - jint) / (2.0 * a);
        }
        out.row_mut(i).assign(&prof);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Top,
}

/// Per-mode wall derivative of `(Δ_{ε,D})⁻¹ h`: `½∫G₀ĥ` at the bottom, `½∫G₁ĥ` at the top.
///
/// Values are in FFT row order.
pub fn dy_trace(h: &SpectralField, epsilon: f64, side: Side) -> Result<Array1<Complex64>> {
    let kern = match side {
        Side::Bottom => g0,
        Side::Top => g1,
    };
    Ok(kernel_integral(h, epsilon, kern, 0.0, 1.0)?.mapv(|c| 0.5 * c))
}

/// Per-mode `\int_lo^hi K(ε|k|, y) ĥ_k(y) dy` for a kernel `K(a, y)`, FFT order.
///
/// The profiles are interpolated onto a Chebyshev grid of `[lo, hi]`
/// (oversampled when `ε|k|` is large), so `h` only needs to be smooth on
/// `[lo, hi]`.
pub fn kernel_integral(
    h: &SpectralField,
    epsilon: f64,
    kernel: fn(f64, f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<Array1<Complex64>> {
    check_epsilon(epsilon)?;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(HydroError::InvalidParameter(format!("bad interval [{lo}, {hi}]")));
    }
    let grid = h.grid().clone();
    let cheb = grid.cheb();
    let n = grid.ny();
    let mut out = Array1::zeros(grid.nx());
    if lo == hi {
        return Ok(out);
    }
    let mut quads: HashMap<usize, (Array1<f64>, Array1<f64>, Array2<Complex64>)> = HashMap::new();
    for i in 0..grid.nx() {
        let a = epsilon * grid.wavenumber(i).unsigned_abs() as f64;
        let m = oversample(n, a);
        let (nodes, weights, vals) = quads.entry(m).or_insert_with(|| {
            let sub = ChebyshevGrid::new(m, lo, hi);
            let nodes = sub.nodes().clone();
            let interp = cheb.interp_matrix(nodes.as_slice().expect("contiguous"));
            (nodes, sub.weights().clone(), interp_rows(h.coeffs(), &interp))
        });
        out[i] = nodes
            .iter()
            .zip(weights.iter())
            .enumerate()
            .map(|(j, (&z, &w))| w * kernel(a, z) * vals[[i, j]])
            .sum::<Complex64>();
    }
    Ok(out)
}

/// Recover `(u, v) = (∂_yψ + mean, -∂_xψ)` from `ω = ∂_yu - ε²∂_xv`, where
/// `ψ = (Δ_{ε,D})⁻¹ω` and `mean` is the strip average of `u`.
pub fn velocity_from_vorticity(
    omega: &SpectralField,
    epsilon: f64,
    mean: f64,
) -> Result<(SpectralField, SpectralField)> {
    let grid = omega.grid().clone();
    let psi = solve_dirichlet(omega, epsilon)?;
    let mut u = psi.ddy();
    let v = -&psi.ddx();
    let zero = grid.index_of(0).expect("k = 0 always present");
    let cheb = grid.cheb();
    let prof = omega.row(zero).to_owned();
    let anti = real_dot(cheb.antiderivative(), &prof);
    let avg: Complex64 = cheb.weights().iter().zip(anti.iter()).map(|(w, v)| v * *w).sum();
    u.row_mut(zero).assign(&anti.mapv(|c| c - avg + mean));
    Ok((u, v))
}

/// Ratio `|(u, εv, ∂_yu, ε∂_xu, ε∂_yv, ε²∂_xv)|_{X^r} / |ω|_{X^r}` for the
/// velocity recovered from `omega` with zero mean.
pub fn velocity_bound_ratio(omega: &SpectralField, epsilon: f64, r: f64, tau: f64, sigma: f64) -> Result<f64> {
    let (u, v) = velocity_from_vorticity(omega, epsilon, 0.0)?;
    let parts = [
        u.clone(),
        v.scaled(epsilon),
        u.ddy(),
        u.ddx().scaled(epsilon),
        v.ddy().scaled(epsilon),
        v.ddx().scaled(epsilon * epsilon),
    ];
    let mut sq = 0.0;
    for p in &parts {
        sq += gevrey_norm_tau(p, r, tau, sigma)?.powi(2);
    }
    let base = gevrey_norm_tau(omega, r, tau, sigma)?;
    Ok(if sq == 0.0 { 0.0 } else { sq.sqrt() / base })
}

/// Interior residual `max |∂_y²F - ε²k²F - h|` over non-wall nodes, relative to `max |h|`.
pub fn interior_residual(f: &SpectralField, h: &SpectralField, epsilon: f64) -> f64 {
    let lap = &f.ddy2() - &f.scale_modes_real(|k| (epsilon * k as f64).powi(2));
    let diff = &lap - h;
    let n = f.grid().ny();
    let inner = |x: &SpectralField| {
        x.coeffs()
            .slice(ndarray::s![.., 1..n - 1])
            .iter()
            .fold(0.0f64, |m, c| m.max(c.norm()))
    };
    let scale = inner(h).max(f64::MIN_POSITIVE);
    inner(&diff) / scale
}

/// Largest per-mode L² profile norm, used as a size measure in tests and reports.
pub fn max_mode_norm(f: &SpectralField) -> f64 {
    let w = f.grid().cheb().weights();
    f.coeffs()
        .map_axis(Axis(1), |row| row.iter().zip(w.iter()).map(|(c, wj)| c.norm_sqr() * wj).sum::<f64>().sqrt())
        .fold(0.0f64, |m, &v| m.max(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{Grid, GridSpec};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(ny: usize) -> Arc<Grid> {
        Grid::new(GridSpec::new(16, ny)).unwrap()
    }

    #[test]
    fn kernel_endpoint_values() {
        for a in [0.0, 1e-6, 0.3, 5.0, 800.0] {
            assert_eq!(k1(a, 0.0), 0.0);
            assert!((k1(a, 1.0) - 1.0).abs() < 1e-15);
            assert_eq!(k2(a, 0.0), 1.0);
            assert!(g0(a, 1.0).abs() < 1e-15);
            assert!((g0(a, 0.0) + 2.0).abs() < 1e-14);
            assert!((g1(a, 1.0) - 2.0).abs() < 1e-14);
            assert!(g2(a, 0.3).is_finite() && g3(a, 0.7).is_finite());
        }
        assert!((k1(1.0, 0.5) - 0.5f64.sinh() / 1.0f64.sinh()).abs() < 1e-15);
        assert!((k1(1.0, 0.5) - 0.443409).abs() < 1e-6);
        assert!((g2(0.0, 0.4) - 2.0).abs() < 1e-15);
        assert!((g0(0.0, 0.25) - 2.0 * (0.25 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn g2_g3_are_derivatives() {
        let g = grid(48);
        let y: Vec<f64> = g.y().to_vec();
        for (k, eps) in [(0, 0.1), (3, 0.1), (16, 0.5)] {
            let ks = build_kernels(k, eps, &y).unwrap();
            let d = g.cheb().d1();
            let dg0 = d.dot(&Array1::from(ks.g0.clone()));
            let dg1 = d.dot(&Array1::from(ks.g1.clone()));
            for j in 0..y.len() {
                assert!((dg0[j] - ks.g2[j]).abs() < 1e-8);
                assert!((dg1[j] - ks.g3[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eigenfunction_solves() {
        let g = grid(48);
        for eps in [0.1, 0.01] {
            for k in 0..=7i64 {
                let prof = g.y().mapv(|y| Complex64::new((PI * y).sin(), 0.0));
                let h = SpectralField::from_mode(&g, k, &prof, false).unwrap();
                let exact = h.scaled(-1.0 / (PI * PI + (eps * k as f64).powi(2)));
                let f = solve_dirichlet(&h, eps).unwrap();
                assert!(f.max_diff(&exact) < 1e-9);
                let fk = solve_dirichlet_kernel(&h, eps).unwrap();
                assert!(fk.max_diff(&exact) < 1e-9, "k={k} eps={eps} {}", fk.max_diff(&exact));
                let bottom = dy_trace(&h, eps, Side::Bottom).unwrap();
                let want = -PI / (PI * PI + (eps * k as f64).powi(2));
                assert!((bottom[g.index_of(k).unwrap()].re - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let g = grid(16);
        let z = SpectralField::zeros(&g);
        assert_eq!(solve_dirichlet(&z, 0.1).unwrap().max_abs(), 0.0);
        assert_eq!(solve_dirichlet_kernel(&z, 0.1).unwrap().max_abs(), 0.0);
        assert!(dy_trace(&z, 0.1, Side::Top).unwrap().iter().all(|c| c.norm() == 0.0));
        let (u, v) = velocity_from_vorticity(&z, 0.1, 0.0).unwrap();
        assert_eq!(u.max_abs() + v.max_abs(), 0.0);
        assert!(solve_dirichlet(&z, 0.0).is_err());
    }

    #[test]
    fn kernel_route_handles_thin_layers() {
        let g = Grid::new(GridSpec::new(64, 48)).unwrap();
        let h = SpectralField::from_fn(&g, |x, y| (31.0 * x).cos() * (1.0 + y * y));
        let a = solve_dirichlet(&h, 0.5).unwrap();
        let b = solve_dirichlet_kernel(&h, 0.5).unwrap();
        assert!(a.max_diff(&b) < 1e-8, "{}", a.max_diff(&b));
    }

    #[test]
    fn manufactured_streamfunction() {
        let g = grid(32);
        let eps = 0.1;
        let psi = SpectralField::from_fn(&g, |x, y| (PI * y).sin() * x.cos());
        let omega = &psi.ddy2() + &psi.ddx().ddx().scaled(eps * eps);
        let (u, v) = velocity_from_vorticity(&omega, eps, 0.0).unwrap();
        assert!(u.max_diff(&psi.ddy()) < 1e-9);
        assert!(v.max_diff(&(-&psi.ddx())) < 1e-9);
        let div = &u.ddx() + &v.ddy();
        assert!(div.max_abs() < 1e-10);
        assert!(v.bottom().iter().chain(v.top().iter()).all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn mean_is_restored() {
        let g = grid(24);
        let omega = SpectralField::from_fn(&g, |_, y| 1.0 - 2.0 * y + y * y * y);
        let (u, _) = velocity_from_vorticity(&omega, 0.1, 0.75).unwrap();
        let zero = g.index_of(0).unwrap();
        let avg: Complex64 = g.cheb().weights().iter().zip(u.row(zero).iter()).map(|(w, c)| c * *w).sum();
        assert!((avg.re - 0.75).abs() < 1e-13);
        assert!((&u.ddy() - &omega).max_abs() < 1e-10);
    }
}
