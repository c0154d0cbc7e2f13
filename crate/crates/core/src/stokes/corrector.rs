use super::sphere::{curl_of_radial, SphereStokesSolution};
use crate::error::{invalid, Error, Result};
use crate::geometry::{ParticleConfiguration, Point, ReferenceParticle, SpatialHash, TruncationScales};
use crate::quadrature::{adaptive, SphereRule};
use nalgebra::Matrix3;
use std::f64::consts::PI;

/// Which part of a particle's cell a point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Inside the hole `B_a(x_i)`.
    Hole,
    /// `a ≤ r ≤ η_i/4`: rescaled exterior solution.
    Inner,
    /// `η_i/4 < r < η_i/2`: blended annulus.
    Blend,
    /// Outside every `B_{η_i/2}(x_i)`.
    Outer,
}

/// `w^ε` (columns `w_k`), its gradient per column, and pressure per column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorValue {
    pub region: Region,
    pub particle: Option<usize>,
    /// Column `k` is `w_k`.
    pub w: Matrix3<f64>,
    /// `grad[k][(i, j)] = ∂_j (w_k)_i`.
    pub grad: [Matrix3<f64>; 3],
    pub pressure: Point,
}

impl CorrectorValue {
    fn identity(region: Region, particle: Option<usize>) -> Self {
        Self {
            region,
            particle,
            w: Matrix3::identity(),
            grad: [Matrix3::zeros(); 3],
            pressure: Point::zeros(),
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt()
    }

    /// `q_k I − ∇w_k`.
    pub fn stress(&self, k: usize) -> Matrix3<f64> {
        Matrix3::identity() * self.pressure[k] - self.grad[k]
    }
}

/// Quintic smoothstep cutoff: `χ = 1` at `η/4`, `0` at `η/2`, with two
/// vanishing derivatives at both ends. Returns `(χ, χ′, χ″)`.
pub fn cutoff(r: f64, eta: f64) -> (f64, f64, f64) {
    let l = 0.25 * eta;
    let t = ((r - l) / l).clamp(0.0, 1.0);
    let s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    let s1 = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    let s2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (1.0 - s, -s1 / l, -s2 / (l * l))
}

/// `w^ε = Id − curl(χ g e_k × (x − x_i))` around every hole, `Id` elsewhere.
#[derive(Debug, Clone)]
pub struct CorrectorField {
    centers: Vec<Point>,
    eta: Vec<f64>,
    sphere: SphereStokesSolution,
    hash: Option<SpatialHash>,
}

impl CorrectorField {
    /// Holes of radius `r₀ ε^α` for a spherical reference particle of radius `r₀`.
    pub fn new(config: &ParticleConfiguration, scales: &TruncationScales, particle: &ReferenceParticle) -> Result<Self> {
        let r0 = particle
            .sphere_radius()
            .ok_or_else(|| invalid("particle", "the corrector needs a spherical reference particle"))?;
        if scales.eta.len() != config.len() {
            return Err(invalid("scales", "one truncation radius per particle"));
        }
        Self::from_parts(config.centers().to_vec(), scales.eta.clone(), r0 * config.hole_scale())
    }

    /// One hole of radius `a` at `center` with truncation radius `eta`.
    pub fn single(center: Point, a: f64, eta: f64) -> Result<Self> {
        Self::from_parts(vec![center], vec![eta], a)
    }

    fn from_parts(centers: Vec<Point>, eta: Vec<f64>, a: f64) -> Result<Self> {
        let sphere = SphereStokesSolution::new(a)?;
        if let Some(i) = eta.iter().position(|&e| !(0.25 * e > a)) {
            return Err(Error::Unresolvable(format!(
                "particle {i}: η/4 = {} does not exceed the hole radius {a}",
                0.25 * eta[i]
            )));
        }
        let hash = if centers.len() > 1 {
            let reach = eta.iter().copied().fold(0.0, f64::max) * 0.5;
            Some(SpatialHash::new(&centers, reach.max(1e-12)))
        } else {
            None
        };
        Ok(Self { centers, eta, sphere, hash })
    }

    pub fn hole_radius(&self) -> f64 {
        self.sphere.radius()
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn sphere(&self) -> &SphereStokesSolution {
        &self.sphere
    }

    /// Particle whose ball `B_{η_i/2}(x_i)` contains `x`; the balls are disjoint.
    pub fn locate(&self, x: &Point) -> Option<usize> {
        let inside = |i: usize| (x - self.centers[i]).norm() < 0.5 * self.eta[i];
        match &self.hash {
            None => (0..self.centers.len()).find(|&i| inside(i)),
            Some(h) => {
                let mut found = None;
                h.for_neighborhood(x, 1, |i| {
                    if found.is_none() && inside(i) {
                        found = Some(i);
                    }
                });
                found
            }
        }
    }

    pub fn eval(&self, x: &Point) -> CorrectorValue {
        match self.locate(x) {
            None => CorrectorValue::identity(Region::Outer, None),
            Some(i) => self.eval_particle(i, &(x - self.centers[i])),
        }
    }

    /// Evaluation at offset `y = x − x_i` from particle `i`.
    pub fn eval_particle(&self, i: usize, y: &Point) -> CorrectorValue {
        let a = self.sphere.radius();
        let eta = self.eta[i];
        let r = y.norm();
        if r < a {
            return CorrectorValue {
                region: Region::Hole,
                particle: Some(i),
                w: Matrix3::zeros(),
                grad: [Matrix3::zeros(); 3],
                pressure: Point::zeros(),
            };
        }
        if r >= 0.5 * eta {
            return CorrectorValue::identity(Region::Outer, None);
        }
        let (g, g1, g2) = self.sphere.potential(r);
        let (region, profile, chi) = if r <= 0.25 * eta {
            (Region::Inner, (g, g1, g2), 1.0)
        } else {
            let (c, c1, c2) = cutoff(r, eta);
            (Region::Blend, (c * g, c1 * g + c * g1, c2 * g + 2.0 * c1 * g1 + c * g2), c)
        };
        let mut out = CorrectorValue::identity(region, Some(i));
        for k in 0..3 {
            let (v, dv) = curl_of_radial(k, y, profile);
            let col = Point::ith(k, 1.0) - v;
            out.w.set_column(k, &col);
            out.grad[k] = -dv;
            out.pressure[k] = -chi * 1.5 * a * y[k] / (r * r * r);
        }
        out
    }
}

/// `corrector_eval`: the matrix `w^ε(x)`.
pub fn corrector_eval(field: &CorrectorField, x: &Point) -> Matrix3<f64> {
    field.eval(x).w
}

/// Quantity whose `L^p` norm [`corrector_norm`] integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectorQuantity {
    /// `|w^ε − Id|` (Frobenius).
    WMinusId,
    /// `|∇w^ε|` over all three columns.
    Grad,
    /// `|q^ε|` over all three columns.
    Pressure,
}

impl CorrectorQuantity {
    fn of(&self, v: &CorrectorValue) -> f64 {
        match self {
            Self::WMinusId => (v.w - Matrix3::identity()).norm(),
            Self::Grad => v.grad_norm(),
            Self::Pressure => v.pressure.norm(),
        }
    }
}

/// Relative tolerance for the shell quadrature (tighter than the 1e-3 target).
const NORM_RTOL: f64 = 1e-7;
const NORM_DEPTH: usize = 40;

/// `‖quantity‖_{L^p(B_{η_i/2}(x_i))}` by radial adaptive quadrature over
/// spherical shells, with the hole, inner and blended regions integrated
/// separately.
pub fn corrector_norm(field: &CorrectorField, quantity: CorrectorQuantity, p: f64, particle: usize) -> Result<f64> {
    let ok = match quantity {
        CorrectorQuantity::WMinusId => (1.0..=3.0).contains(&p),
        _ => p == 1.0 || p == 2.0,
    };
    if !ok {
        return Err(invalid("p", "p ∈ [1, 3] for w − Id, p ∈ {1, 2} for ∇w and q"));
    }
    if particle >= field.centers.len() {
        return Err(invalid("particle", "index within the configuration"));
    }
    let a = field.sphere.radius();
    let eta = field.eta[particle];
    let rule = SphereRule::new(6, 12);
    let shell = |r: f64| -> f64 {
        rule.iter()
            .map(|(n, w)| w * quantity.of(&field.eval_particle(particle, &(n * r))).powf(p))
            .sum::<f64>()
            * r
            * r
    };
    let hole = match quantity {
        CorrectorQuantity::WMinusId => 3f64.sqrt().powf(p) * 4.0 * PI * a.powi(3) / 3.0,
        _ => 0.0,
    };
    // ln r substitution over the inner region, which spans many decades
    let inner = adaptive(&|t: f64| shell(t.exp()) * t.exp(), a.ln(), (0.25 * eta).ln(), NORM_RTOL, 0.0, NORM_DEPTH);
    let blend = adaptive(&shell, 0.25 * eta, 0.5 * eta, NORM_RTOL, 0.0, NORM_DEPTH);
    match (inner, blend) {
        (Some(i), Some(b)) => Ok((hole + i + b).powf(1.0 / p)),
        _ => Err(Error::Quadrature("corrector shell quadrature did not converge".into())),
    }
}
