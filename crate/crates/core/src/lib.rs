//! Spectral toolkit for the hydrostatic limit of the Navier-Stokes-alpha
//! system on the periodic strip `[0, Lx) x [0, 1]`.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`]: grid, Fourier/Chebyshev calculus and snapshot files.
//! * [`lp`]: Littlewood-Paley blocks, Besov and Chemin-Lerner norms,
//!   Bony pieces and the analytic Fourier weight.
//! * [`zbasis`]: the clamped generalized eigenbasis and its projections.
//! * [`model`]: the constitutive operators of the PDE and its residual.
//! * [`solver`]: IMEX Galerkin time stepping with analytic-band tracking.
//! * [`diagnostics`]: monitors for energy, vertical mean and theorem bounds.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod lp;
pub mod model;
pub mod solver;
pub mod zbasis;

pub use error::{Error, Result};
pub use field::{Field, Grid, XLine};
