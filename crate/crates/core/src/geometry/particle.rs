use crate::error::{invalid, Error, Result};
use crate::geometry::mesh::SurfaceMesh;
use crate::geometry::Point;

/// Shape of a single hole before scaling by `ε^α`.
///
/// Must sit inside the open ball of radius 1/4 and contain the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceParticle {
    Sphere { radius: f64 },
    Mesh(SurfaceMesh),
}

impl Default for ReferenceParticle {
    fn default() -> Self {
        ReferenceParticle::Sphere { radius: 0.125 }
    }
}

impl ReferenceParticle {
    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 0.25) {
            return Err(invalid("radius", "reference sphere needs 0 < r < 1/4"));
        }
        Ok(Self::Sphere { radius })
    }

    pub fn mesh(mesh: SurfaceMesh) -> Result<Self> {
        mesh.check_watertight()?;
        if mesh.max_vertex_norm() >= 0.25 {
            return Err(Error::InvalidMesh("mesh leaves the ball of radius 1/4".into()));
        }
        if mesh.signed_volume() <= 0.0 {
            return Err(Error::InvalidMesh("mesh is not outward oriented".into()));
        }
        if (mesh.winding_number(&Point::zeros()) - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidMesh("origin is not inside the surface".into()));
        }
        Ok(Self::Mesh(mesh))
    }

    /// Sphere radius, if the particle is a sphere.
    pub fn sphere_radius(&self) -> Option<f64> {
        match self {
            Self::Sphere { radius } => Some(*radius),
            Self::Mesh(_) => None,
        }
    }

    /// Surface triangulation at refinement `level`.
    pub fn surface_mesh(&self, level: usize) -> SurfaceMesh {
        match self {
            Self::Sphere { radius } => SurfaceMesh::icosphere(*radius, level),
            Self::Mesh(m) => m.subdivided(level),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_eighth_sphere() {
        assert_eq!(ReferenceParticle::default().sphere_radius(), Some(0.125));
    }

    #[test]
    fn containment_is_enforced() {
        assert!(ReferenceParticle::sphere(0.25).is_err());
        assert!(ReferenceParticle::sphere(0.0).is_err());
        assert!(ReferenceParticle::mesh(SurfaceMesh::icosphere(0.3, 1)).is_err());
        assert!(ReferenceParticle::mesh(SurfaceMesh::icosphere(0.2, 1)).is_ok());
        let shifted = SurfaceMesh {
            vertices: SurfaceMesh::icosphere(0.05, 1)
                .vertices
                .iter()
                .map(|v| v + Point::new(0.15, 0.0, 0.0))
                .collect(),
            faces: SurfaceMesh::icosphere(0.05, 1).faces,
        };
        assert!(ReferenceParticle::mesh(shifted).is_err());
    }
}
