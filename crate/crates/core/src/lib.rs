//! Desk-scale numerical laboratory for randomly perforated fluid domains.
//!
//! The crate is organised around the quantities that control homogenization
//! of Stokes/Navier-Stokes flow through many small random holes:
//!
//! * [`geometry`]: random particle configurations, nearest-neighbour
//!   distances and per-particle truncation radii.
//! * [`events`]: Monte Carlo estimates of the separation event, the bounded
//!   cube-overlap event and negative moments of the truncation radius.
//! * [`transport`]: exact quadratic Wasserstein distances and log-log rate fits.
//! * [`fields`]: periodic-grid rasterisation, spectral `H^{-1}` norms and the
//!   Brinkman force pairing.
//! * [`stokes`]: exterior Stokes flow around a sphere, the blended corrector
//!   and a regularized-Stokeslet resistance solver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod events;
pub mod fields;
pub mod geometry;
pub mod quadrature;
pub mod rng;
pub mod stokes;
pub mod transport;

pub use error::{Error, Result};
