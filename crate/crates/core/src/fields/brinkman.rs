use super::grid::BoxSpec;
use crate::error::{invalid, Result};
use crate::geometry::{pairwise_sum, Aabb, DensityModel, ParticleConfiguration, Point, ReferenceParticle, TruncationScales};
use crate::quadrature::{GaussRule, SphereRule};
use crate::rng::{stream, Purpose};
use crate::stokes::CorrectorField;
use crate::transport::w2_transport;
use nalgebra::Matrix3;
use rayon::prelude::*;

/// Smooth vector test field with its gradient, `grad[(i, j)] = ∂_j ψ_i`.
pub trait TestField: Sync {
    fn value(&self, x: &Point) -> Point;
    fn grad(&self, x: &Point) -> Matrix3<f64>;
}

/// `ψ(x) = A exp(−|x − c|² / (2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub center: Point,
    pub width: f64,
    pub amplitude: Point,
}

impl TestField for GaussianBump {
    fn value(&self, x: &Point) -> Point {
        let d = x - self.center;
        self.amplitude * (-d.norm_squared() / (2.0 * self.width * self.width)).exp()
    }

    fn grad(&self, x: &Point) -> Matrix3<f64> {
        let d = x - self.center;
        let s2 = self.width * self.width;
        let phi = (-d.norm_squared() / (2.0 * s2)).exp();
        self.amplitude * d.transpose() * (-phi / s2)
    }
}

/// Inputs of the bound that are not part of the geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrinkmanParams {
    /// Smearing exponent of the cubes `Q̃_i` of side `ε^{1−λ}`.
    pub lambda: f64,
    /// Size of the reference sample for the `W₂` surrogate, rounded to a
    /// multiple of `N` (at least `N`).
    pub ref_samples: usize,
    pub seed: u64,
}

/// The three terms of the upper bound on the pairing gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParts {
    /// Surrogate `W₂(ρ_ε, ρ)`.
    pub w2: f64,
    /// `(W₂ + ε^{1−λ}) ‖ψ‖_{H¹}`.
    pub transport: f64,
    /// `Σ η_i^{−1/2} ε³ ‖ψ‖_{H¹(Q̃_i)}`.
    pub cube_h1: f64,
    /// `Σ η_i^{−1} ε^α ‖ψ‖_{L²(Q_i)}`.
    pub cube_l2: f64,
}

impl BoundParts {
    pub fn total(&self) -> f64 {
        self.transport + self.cube_h1 + self.cube_l2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrinkmanResult {
    /// `⟨M_k, ψ⟩`.
    pub force: [f64; 3],
    /// `⟨ρ ℛ_k, ψ⟩`.
    pub limit: [f64; 3],
    /// Euclidean norm over `k` of the difference.
    pub gap: f64,
    pub bound: BoundParts,
}

/// Pairs the corrector force `M_k = −Δw_k + ∇q_k` and its limit `ρ ℛ e_k`
/// with `ψ`, and evaluates the bound terms. Sphere surfaces are paired by
/// direct quadrature; `domain` fixes the region for `‖ψ‖_{H¹}`.
#[allow(clippy::too_many_arguments)]
pub fn brinkman_gap_pairing(
    config: &ParticleConfiguration,
    scales: &TruncationScales,
    particle: &ReferenceParticle,
    resistance: &Matrix3<f64>,
    density: &DensityModel,
    psi: &dyn TestField,
    domain: BoxSpec,
    params: &BrinkmanParams,
) -> Result<BrinkmanResult> {
    if !(params.lambda > 0.0 && params.lambda < 1.0) {
        return Err(invalid("lambda", "0 < λ < 1"));
    }
    let field = CorrectorField::new(config, scales, particle)?;
    let n = config.len();
    let eps = config.eps();
    let alpha = config.alpha();
    let pref = eps.powf(3.0 - alpha);

    let surf = SphereRule::new(6, 12);
    let radial = GaussRule::new(6);
    let per_particle: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let c = field.centers()[i];
            let eta = field.eta()[i];
            let r_in = 0.25 * eta;
            let mut out = [0.0; 3];
            for (nrm, w) in surf.iter() {
                let y = nrm * r_in;
                let x = c + y;
                let p = psi.value(&x);
                for (k, o) in out.iter_mut().enumerate() {
                    let s = field.sphere().eval(k, &y).expect("outside the hole");
                    *o += w * r_in * r_in * s.traction(nrm).dot(&p);
                }
            }
            for (r, wr) in radial.on(r_in, 0.5 * eta) {
                for (nrm, w) in surf.iter() {
                    let y = nrm * r;
                    let g = psi.grad(&(c + y));
                    let v = field.eval_particle(i, &y);
                    for (k, o) in out.iter_mut().enumerate() {
                        *o -= wr * w * r * r * v.stress(k).component_mul(&g).sum();
                    }
                }
            }
            out
        })
        .collect();
    let mut force = [0.0; 3];
    for (k, f) in force.iter_mut().enumerate() {
        let terms: Vec<f64> = per_particle.iter().map(|v| v[k]).collect();
        *f = pref * pairwise_sum(&terms);
    }

    let rpsi = integrate_density(density, &|x: &Point| resistance.transpose() * psi.value(x));
    let limit = [rpsi[0], rpsi[1], rpsi[2]];
    let gap = (0..3).map(|k| (force[k] - limit[k]).powi(2)).sum::<f64>().sqrt();

    // bound terms
    let m = ((params.ref_samples as f64 / n as f64).round() as usize).max(1) * n;
    let mut rng = stream(params.seed, 0, Purpose::Reference);
    let reference: Vec<Point> = (0..m).map(|_| density.sample(&mut rng)).collect::<Result<_>>()?;
    let w2 = w2_transport(&reference, config.centers())?;
    let side = eps.powf(1.0 - params.lambda);
    let h1_total = integrate_box(&domain.aabb(), 16, |x| h1_density(psi, x)).sqrt();
    let cube_terms: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let c = config.centers()[i];
            let eta = scales.eta[i];
            let big = Aabb::new(c - Point::repeat(0.5 * side), c + Point::repeat(0.5 * side));
            let small = Aabb::new(c - Point::repeat(0.5 * eps), c + Point::repeat(0.5 * eps));
            let h1 = integrate_box(&big, 1, |x| h1_density(psi, x)).sqrt();
            let l2 = integrate_box(&small, 1, |x| psi.value(x).norm_squared()).sqrt();
            (eta.powf(-0.5) * eps.powi(3) * h1, eps.powf(alpha) * l2 / eta)
        })
        .collect();
    let cube_h1 = pairwise_sum(&cube_terms.iter().map(|t| t.0).collect::<Vec<_>>());
    let cube_l2 = pairwise_sum(&cube_terms.iter().map(|t| t.1).collect::<Vec<_>>());
    let bound = BoundParts {
        w2,
        transport: (w2 + side) * h1_total,
        cube_h1,
        cube_l2,
    };
    Ok(BrinkmanResult { force, limit, gap, bound })
}

fn h1_density(psi: &dyn TestField, x: &Point) -> f64 {
    psi.value(x).norm_squared() + psi.grad(x).norm_squared()
}

/// Composite 4-point Gauss product rule with `panels` panels per axis.
fn integrate_box(b: &Aabb, panels: usize, f: impl Fn(&Point) -> f64) -> f64 {
    let rule = GaussRule::new(4);
    let e = b.extent() / panels as f64;
    let mut nodes: [Vec<(f64, f64)>; 3] = Default::default();
    for (k, axis) in nodes.iter_mut().enumerate() {
        for p in 0..panels {
            let lo = b.lo[k] + p as f64 * e[k];
            axis.extend(rule.on(lo, lo + e[k]));
        }
    }
    let mut terms = Vec::with_capacity(nodes[0].len().pow(3));
    for &(z, wz) in &nodes[2] {
        for &(y, wy) in &nodes[1] {
            for &(x, wx) in &nodes[0] {
                terms.push(wx * wy * wz * f(&Point::new(x, y, z)));
            }
        }
    }
    pairwise_sum(&terms)
}

/// `∫ ρ f` by product quadrature adapted to the density kind.
pub fn integrate_density(density: &DensityModel, f: &(dyn Fn(&Point) -> Point + Sync)) -> Point {
    let mut acc = [0.0; 3];
    if let Some((center, radius)) = density.ball() {
        let rule = GaussRule::new(24);
        let surf = SphereRule::new(16, 32);
        for (r, wr) in rule.on(0.0, radius) {
            for (nrm, w) in surf.iter() {
                let v = f(&(center + nrm * r));
                for k in 0..3 {
                    acc[k] += wr * w * r * r * v[k];
                }
            }
        }
        return Point::from(acc) * density.sup_norm();
    }
    let b = density.support_box();
    let (dims, masses): ([usize; 3], Vec<f64>) = match density.grid_cells() {
        Some((d, m)) => (d, m.to_vec()),
        None => ([8, 8, 8], vec![1.0 / 512.0; 512]),
    };
    let e = b.extent();
    let h = Point::new(e.x / dims[0] as f64, e.y / dims[1] as f64, e.z / dims[2] as f64);
    let order = if density.grid_cells().is_some() { 2 } else { 1 };
    for iz in 0..dims[2] {
        for iy in 0..dims[1] {
            for ix in 0..dims[0] {
                let m = masses[ix + dims[0] * (iy + dims[1] * iz)];
                if m == 0.0 {
                    continue;
                }
                let lo = b.lo + h.component_mul(&Point::new(ix as f64, iy as f64, iz as f64));
                let cell = Aabb::new(lo, lo + h);
                let vol = cell.volume();
                for (k, a) in acc.iter_mut().enumerate() {
                    *a += m / vol * integrate_box(&cell, order, |x| f(x)[k]);
                }
            }
        }
    }
    Point::from(acc)
}
