//! Particle configurations and their derived length scales.

mod config;
mod density;
mod mesh;
mod neighbors;
mod particle;
mod scales;

pub use config::{eps_of, sample_configuration, sample_replicate, ParticleConfiguration};
pub(crate) use density::pairwise_sum;
pub use density::{Aabb, DensityModel, MAX_REJECTION_ATTEMPTS};
pub use mesh::SurfaceMesh;
pub use neighbors::{brute_force_nearest_neighbor_distances, nearest_neighbor_distances, SpatialHash};
pub use particle::ReferenceParticle;
pub use scales::{truncation_scales, TruncationScales};

pub type Point = nalgebra::Vector3<f64>;
