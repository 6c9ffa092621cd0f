use super::chebyshev::ChebyshevGrid;
use crate::error::{HydroError, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Resolution of the periodic strip `T x (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of Fourier points in x (even, >= 4).
    pub nx: usize,
    /// Number of Chebyshev–Gauss–Lobatto nodes in y (>= 8).
    pub ny: usize,
    /// Fraction of `nx/2` retained by the dealiasing truncation.
    pub dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize) -> Self {
        GridSpec {
            nx,
            ny,
            dealias_fraction: 2.0 / 3.0,
        }
    }

    pub fn with_dealias(mut self, fraction: f64) -> Self {
        self.dealias_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 4 || !self.nx.is_multiple_of(2) {
            return Err(HydroError::InvalidParameter(format!(
                "nx must be even and >= 4, got {}",
                self.nx
            )));
        }
        if self.ny < 8 {
            return Err(HydroError::InvalidParameter(format!(
                "ny must be >= 8, got {}",
                self.ny
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(HydroError::InvalidParameter(format!(
                "dealias fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        Ok(())
    }
}

/// Precomputed grid: Chebyshev operators in y and FFT plans in x.
pub struct Grid {
    spec: GridSpec,
    cheb: ChebyshevGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Arc<Grid>> {
        spec.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            cheb: ChebyshevGrid::new(spec.ny, 0.0, 1.0),
            forward: planner.plan_fft_forward(spec.nx),
            inverse: planner.plan_fft_inverse(spec.nx),
            spec,
        }))
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn nx(&self) -> usize {
        self.spec.nx
    }

    pub fn ny(&self) -> usize {
        self.spec.ny
    }

    pub fn cheb(&self) -> &ChebyshevGrid {
        &self.cheb
    }

    /// y-nodes, increasing, `y[0] = 0`, `y[ny-1] = 1`.
    pub fn y(&self) -> &ndarray::Array1<f64> {
        self.cheb.nodes()
    }

    /// Uniform x-nodes `2 pi m / nx`.
    pub fn x(&self) -> Vec<f64> {
        (0..self.nx())
            .map(|m| 2.0 * std::f64::consts::PI * m as f64 / self.nx() as f64)
            .collect()
    }

    /// Wavenumber stored at row `i` (FFT order).
    pub fn wavenumber(&self, i: usize) -> i64 {
        let nx = self.nx() as i64;
        let i = i as i64;
        if i < nx / 2 {
            i
        } else {
            i - nx
        }
    }

    /// Row holding wavenumber `k`, if representable.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let nx = self.nx() as i64;
        if k >= -nx / 2 && k < nx / 2 {
            Some(k.rem_euclid(nx) as usize)
        } else {
            None
        }
    }

    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.nx()).map(|i| self.wavenumber(i)).collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.nx() / 2
    }

    /// Largest |k| kept by the dealiasing truncation.
    pub fn k_retained(&self) -> i64 {
        (self.spec.dealias_fraction * (self.nx() / 2) as f64 + 1e-9).floor() as i64
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }
}
