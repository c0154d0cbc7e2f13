//! Exterior Stokes flow around a sphere, the blended corrector `w^ε`, and a
//! boundary-integral resistance solver.

mod bem;
mod corrector;
mod sphere;

pub use bem::{resistance_bem, resistance_bem_levels, resistance_bem_surface, ResistanceResult, DEFAULT_REG_FACTOR, MAX_UNKNOWNS};
pub use corrector::{corrector_eval, corrector_norm, cutoff, CorrectorField, CorrectorQuantity, CorrectorValue, Region};
pub use sphere::{sphere_stokes_eval, traction_integral, FlowSample, SphereStokesSolution};
