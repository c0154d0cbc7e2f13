//! Periodic-box rasterization of measures, spectral `H^{-1}` norms and the
//! Brinkman force pairing.

mod brinkman;
mod grid;
mod hneg1;

pub use brinkman::{brinkman_gap_pairing, integrate_density, BoundParts, BrinkmanParams, BrinkmanResult, GaussianBump, TestField};
pub use grid::{rasterize, BoxSpec, GridField, Measure};
pub use hneg1::{h_neg1_norm, h_neg1_norm_dropping_mean, ZERO_MODE_TOL};

#[cfg(test)]
mod tests;
