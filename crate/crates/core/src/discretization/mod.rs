//! Grids, transforms, differentiation, quadrature and dealiasing on the strip.

mod chebyshev;
mod field;
mod grid;
mod linalg;
pub mod snapshot;

pub use chebyshev::{chebyshev_values, ChebyshevGrid};
pub use field::SpectralField;
pub use grid::{Grid, GridSpec};
pub use linalg::DenseLu;

use ndarray::Array2;

/// Nodal real field -> spectral coefficients.
pub fn transform_x(grid: &std::sync::Arc<Grid>, nodal: &Array2<f64>) -> crate::Result<SpectralField> {
    SpectralField::from_nodal(grid, nodal)
}

/// Spectral coefficients -> nodal real field.
pub fn inverse_transform_x(field: &SpectralField) -> Array2<f64> {
    field.to_nodal()
}
