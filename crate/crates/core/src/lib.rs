//! Spectral simulation and verification tools for the thin-domain limit of the
//! 2-D Navier–Stokes equations: the scaled anisotropic system at aspect ratio
//! `eps`, its hydrostatic Navier–Stokes/Prandtl limit, Gevrey-class norms,
//! exact strip elliptic kernels and boundary-layer correctors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ans;
pub mod boundary_layer;
pub mod discretization;
pub mod elliptic;
pub mod error_analysis;
pub mod error;
pub mod gevrey;
pub mod harness;
pub mod hydro;
pub mod initial_data;
pub mod timestep;

pub use discretization::{Grid, GridSpec, SpectralField};
pub use error::{HydroError, Result};
