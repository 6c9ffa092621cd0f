use super::grid::Grid;
use crate::error::{HydroError, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1, Axis, Zip};
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

/// Fourier-in-x, nodal-Chebyshev-in-y field on the strip.
///
/// `coeffs[[i, j]]` is the coefficient of `e^{i k x}` at y-node `j`, with
/// `k = grid.wavenumber(i)` (FFT order). The forward transform carries the
/// `1/nx` factor, so a pure mode `e^{ikx}` has unit coefficient at `k`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Array2<Complex64>,
    real: bool,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.real == other.real && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: Array2::zeros((grid.nx(), grid.ny())),
            real: true,
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Array2<Complex64>, real: bool) -> Result<Self> {
        if coeffs.dim() != (grid.nx(), grid.ny()) {
            return Err(HydroError::Dimension(format!(
                "coefficient array {:?} does not match grid ({}, {})",
                coeffs.dim(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
            real,
        })
    }

    /// Forward transform of nodal values `f[[m, j]] = f(x_m, y_j)`.
    pub fn from_nodal(grid: &Arc<Grid>, nodal: &Array2<f64>) -> Result<Self> {
        if nodal.dim() != (grid.nx(), grid.ny()) {
            return Err(HydroError::Dimension(format!(
                "nodal array {:?} does not match grid ({}, {})",
                nodal.dim(),
                grid.nx(),
                grid.ny()
            )));
        }
        let nx = grid.nx();
        let scale = 1.0 / nx as f64;
        let mut coeffs = Array2::zeros((nx, grid.ny()));
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        for j in 0..grid.ny() {
            for m in 0..nx {
                buf[m] = Complex64::new(nodal[[m, j]], 0.0);
            }
            grid.fft_forward(&mut buf);
            for i in 0..nx {
                coeffs[[i, j]] = buf[i] * scale;
            }
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
            real: true,
        })
    }

    /// Sample `f(x, y)` on the grid and transform.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let x = grid.x();
        let y = grid.y();
        let nodal = Array2::from_shape_fn((grid.nx(), grid.ny()), |(m, j)| f(x[m], y[j]));
        Self::from_nodal(grid, &nodal).expect("shape matches by construction")
    }

    /// A field with a single y-profile in mode `k` (and its conjugate for real fields).
    pub fn from_mode(grid: &Arc<Grid>, k: i64, profile: &Array1<Complex64>, real: bool) -> Result<Self> {
        let mut f = SpectralField::zeros(grid);
        f.real = real;
        let i = grid
            .index_of(k)
            .ok_or_else(|| HydroError::Dimension(format!("wavenumber {k} not on grid")))?;
        if profile.len() != grid.ny() {
            return Err(HydroError::Dimension("profile length differs from ny".into()));
        }
        f.coeffs.row_mut(i).assign(profile);
        if real && k != 0 {
            if let Some(ic) = grid.index_of(-k) {
                f.coeffs.row_mut(ic).assign(&profile.mapv(|c| c.conj()));
            }
        }
        Ok(f)
    }

    /// Inverse transform back to real nodal values (imaginary parts dropped).
    pub fn to_nodal(&self) -> Array2<f64> {
        let nx = self.grid.nx();
        let mut out = Array2::zeros((nx, self.grid.ny()));
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        for j in 0..self.grid.ny() {
            for (b, c) in buf.iter_mut().zip(self.coeffs.column(j)) {
                *b = *c;
            }
            self.grid.fft_inverse(&mut buf);
            for m in 0..nx {
                out[[m, j]] = buf[m].re;
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn set_real(&mut self, real: bool) {
        self.real = real;
    }

    /// y-profile of the mode stored at row `i`.
    pub fn row(&self, i: usize) -> ArrayView1<'_, Complex64> {
        self.coeffs.row(i)
    }

    pub fn row_mut(&mut self, i: usize) -> ArrayViewMut1<'_, Complex64> {
        self.coeffs.row_mut(i)
    }

    /// y-profile of wavenumber `k`.
    pub fn mode(&self, k: i64) -> Option<ArrayView1<'_, Complex64>> {
        self.grid.index_of(k).map(|i| self.coeffs.row(i))
    }

    /// Per-mode values at the node `j` (e.g. `0` for y=0, `ny-1` for y=1).
    pub fn trace(&self, j: usize) -> Array1<Complex64> {
        self.coeffs.column(j).to_owned()
    }

    pub fn bottom(&self) -> Array1<Complex64> {
        self.trace(0)
    }

    pub fn top(&self) -> Array1<Complex64> {
        self.trace(self.grid.ny() - 1)
    }

    /// Max deviation from conjugate symmetry, relative to the largest coefficient.
    pub fn reality_defect(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.nx() {
            let k = self.grid.wavenumber(i);
            let ic = match self.grid.index_of(-k) {
                Some(ic) => ic,
                // Nyquist row pairs with itself through -k = nx/2, which is not stored
                None => i,
            };
            for j in 0..self.grid.ny() {
                let d = (self.coeffs[[i, j]] - self.coeffs[[ic, j]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    /// Multiply every mode profile by `factor(k)`.
    pub fn scale_modes(&self, factor: impl Fn(i64) -> Complex64) -> SpectralField {
        let mut out = self.clone();
        for i in 0..self.grid.nx() {
            let s = factor(self.grid.wavenumber(i));
            out.coeffs.row_mut(i).mapv_inplace(|c| c * s);
        }
        out
    }

    /// Real-valued per-mode scaling, keeps the reality flag.
    pub fn scale_modes_real(&self, factor: impl Fn(i64) -> f64) -> SpectralField {
        self.scale_modes(|k| Complex64::new(factor(k), 0.0))
    }

    /// x-derivative: multiply by `ik`, zeroing the Nyquist row.
    pub fn ddx(&self) -> SpectralField {
        let nyq = self.grid.nyquist_index();
        let mut out = self.scale_modes(|k| Complex64::new(0.0, k as f64));
        out.coeffs.row_mut(nyq).fill(Complex64::new(0.0, 0.0));
        out
    }

    /// Apply a real y-operator (ny x ny) to every mode profile.
    pub fn apply_y(&self, op: &Array2<f64>) -> SpectralField {
        let re = self.coeffs.mapv(|c| c.re).dot(&op.t());
        let im = self.coeffs.mapv(|c| c.im).dot(&op.t());
        let mut coeffs = Array2::zeros(self.coeffs.raw_dim());
        Zip::from(&mut coeffs)
            .and(&re)
            .and(&im)
            .for_each(|c, &r, &i| *c = Complex64::new(r, i));
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
            real: self.real,
        }
    }

    /// y-derivative by the Chebyshev differentiation matrix.
    pub fn ddy(&self) -> SpectralField {
        self.apply_y(self.grid.cheb().d1())
    }

    pub fn ddy2(&self) -> SpectralField {
        self.apply_y(self.grid.cheb().d2())
    }

    /// Per-mode `\int_lower^upper f dy`.
    pub fn integrate_y(&self, lower: f64, upper: f64) -> Result<Array1<Complex64>> {
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower > upper {
            return Err(HydroError::InvalidParameter(format!(
                "integration bounds [{lower}, {upper}] must satisfy 0 <= lower <= upper <= 1"
            )));
        }
        let w = if lower == 0.0 && upper == 1.0 {
            self.grid.cheb().weights().clone()
        } else {
            self.grid.cheb().partial_weights(lower, upper)
        };
        Ok(self.weighted_sum(&w))
    }

    /// Per-mode `sum_j w_j f(k, y_j)`.
    pub fn weighted_sum(&self, w: &Array1<f64>) -> Array1<Complex64> {
        self.coeffs
            .map_axis(Axis(1), |row| row.iter().zip(w.iter()).map(|(c, &wj)| c * wj).sum())
    }

    /// `\int_0^y f dz` as a field.
    pub fn antiderivative_from_bottom(&self) -> SpectralField {
        self.apply_y(self.grid.cheb().antiderivative())
    }

    /// `\int_1^y f dz` as a field.
    pub fn antiderivative_from_top(&self) -> SpectralField {
        let from_bottom = self.antiderivative_from_bottom();
        let total = self.weighted_sum(self.grid.cheb().weights());
        let mut out = from_bottom;
        for (i, t) in total.iter().enumerate() {
            out.coeffs.row_mut(i).mapv_inplace(|c| c - t);
        }
        out
    }

    /// Zero every mode with `|k|` above the retained band.
    pub fn dealias(&self) -> SpectralField {
        let kmax = self.grid.k_retained();
        self.scale_modes_real(|k| if k.abs() > kmax { 0.0 } else { 1.0 })
    }

    /// Nodal product of two fields with 2/3-rule truncation of inputs and output.
    pub fn mul_dealiased(&self, other: &SpectralField) -> SpectralField {
        let a = self.dealias().to_nodal();
        let b = other.dealias().to_nodal();
        let prod = &a * &b;
        SpectralField::from_nodal(&self.grid, &prod)
            .expect("same grid")
            .dealias()
    }

    /// Discrete `\sum_k \int_0^1 |f_k|^2 dy`, i.e. the mean-over-strip L^2 norm squared.
    pub fn l2_norm_sq(&self) -> f64 {
        let w = self.grid.cheb().weights();
        self.coeffs
            .outer_iter()
            .map(|row| row.iter().zip(w.iter()).map(|(c, &wj)| c.norm_sqr() * wj).sum::<f64>())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().max(0.0).sqrt()
    }

    /// Maximum of `|f|` over the nodal grid.
    pub fn linf_norm(&self) -> f64 {
        self.to_nodal().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Discrete pairing `\sum_k \int_0^1 f_k conj(g_k) dy`.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        let w = self.grid.cheb().weights();
        let mut acc = Complex64::new(0.0, 0.0);
        Zip::from(self.coeffs.rows())
            .and(other.coeffs.rows())
            .for_each(|a, b| {
                for j in 0..a.len() {
                    acc += a[j] * b[j].conj() * w[j];
                }
            });
        acc
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.mapv(|c| c * s),
            real: self.real,
        }
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &SpectralField) -> SpectralField {
        let mut coeffs = self.coeffs.clone();
        coeffs.scaled_add(Complex64::new(s, 0.0), &other.coeffs);
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
            real: self.real && other.real,
        }
    }

    /// Multiply by a real function of y alone.
    pub fn mul_y(&self, w: &Array1<f64>) -> SpectralField {
        let mut out = self.clone();
        for mut row in out.coeffs.outer_iter_mut() {
            Zip::from(&mut row).and(w).for_each(|c, &wj| *c *= wj);
        }
        out
    }

    /// Keep only the wavenumber-0 row.
    pub fn x_mean(&self) -> Array1<Complex64> {
        self.coeffs.row(0).to_owned()
    }

    /// Largest coefficient difference to `other`.
    pub fn max_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl<'a> Add<&'a SpectralField> for &'a SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &'a SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl<'a> Sub<&'a SpectralField> for &'a SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &'a SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, s: f64) -> SpectralField {
        self.scaled(s)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;

    fn grid(nx: usize, ny: usize) -> Arc<Grid> {
        Grid::new(GridSpec::new(nx, ny)).unwrap()
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let g = grid(16, 9);
        let f = SpectralField::from_fn(&g, |x, _| x.cos());
        for i in 0..16 {
            let k = g.wavenumber(i);
            let expect = if k.abs() == 1 { 0.5 } else { 0.0 };
            for j in 0..9 {
                assert!((f.coeffs()[[i, j]] - Complex64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_is_unit_mean() {
        let g = grid(8, 8);
        let f = SpectralField::from_fn(&g, |_, _| 1.0);
        assert!((f.coeffs()[[0, 3]] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(f.ddx().max_abs() < 1e-15);
    }

    #[test]
    fn size_mismatch_is_dimension_error() {
        let g = grid(8, 8);
        let bad = Array2::zeros((6, 8));
        assert!(matches!(
            SpectralField::from_nodal(&g, &bad),
            Err(HydroError::Dimension(_))
        ));
    }

    #[test]
    fn ddx_of_sin3x() {
        let g = grid(16, 8);
        let f = SpectralField::from_fn(&g, |x, _| (3.0 * x).sin());
        let d = f.ddx().to_nodal();
        let x = g.x();
        for m in 0..16 {
            for j in 0..8 {
                assert!((d[[m, j]] - 3.0 * (3.0 * x[m]).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ddy_examples() {
        let g = grid(4, 32);
        let f = SpectralField::from_fn(&g, |_, y| y * (1.0 - y));
        let d = f.ddy().to_nodal();
        for (j, y) in g.y().iter().enumerate() {
            assert!((d[[0, j]] - (1.0 - 2.0 * y)).abs() < 1e-12);
        }
        let s = SpectralField::from_fn(&g, |_, y| (std::f64::consts::PI * y).sin());
        let d = s.ddy().to_nodal();
        let pi = std::f64::consts::PI;
        for (j, y) in g.y().iter().enumerate() {
            assert!((d[[1, j]] - pi * (pi * y).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn integrate_examples() {
        let g = grid(4, 24);
        let one = SpectralField::from_fn(&g, |_, _| 1.0);
        assert!((one.integrate_y(0.0, 1.0).unwrap()[0].re - 1.0).abs() < 1e-14);
        let q = SpectralField::from_fn(&g, |_, y| y * (1.0 - y));
        assert!((q.integrate_y(0.0, 1.0).unwrap()[0].re - 1.0 / 6.0).abs() < 1e-13);
        let s = SpectralField::from_fn(&g, |_, y| (std::f64::consts::PI * y).sin());
        let half = s.integrate_y(0.0, 0.5).unwrap()[0].re;
        assert!((half - 1.0 / std::f64::consts::PI).abs() < 1e-10);
        assert!(s.integrate_y(0.5, 1.2).is_err());
        assert!(s.integrate_y(0.6, 0.5).is_err());
    }

    #[test]
    fn dealias_band() {
        let g = grid(16, 8);
        let f = SpectralField::from_fn(&g, |x, y| (0..8).map(|k| ((k as f64) * x).cos()).sum::<f64>() * (1.0 + y));
        let d = f.dealias();
        for i in 0..16 {
            let k = g.wavenumber(i).abs();
            let kept = d.row(i).iter().any(|c| c.norm() > 1e-14);
            assert_eq!(kept, k <= 5);
        }
        assert_eq!(SpectralField::zeros(&g).dealias().max_abs(), 0.0);
    }
}
