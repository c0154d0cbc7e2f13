//! Regularized-Stokeslet collocation for the resistance matrix of a rigid
//! particle: piecewise-linear tractions on flat triangles, collocated at the
//! vertices, solved with restarted GMRES.

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, ReferenceParticle, SurfaceMesh};
use crate::quadrature::GaussRule;
use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default blob size relative to the mean edge length.
pub const DEFAULT_REG_FACTOR: f64 = 0.25;
/// Largest system the dense solver accepts (level-4 icosphere is 7686).
pub const MAX_UNKNOWNS: usize = 12_000;
const GMRES_RESTART: usize = 80;
const GMRES_TOL: f64 = 1e-10;
const GMRES_MAX_ITERS: usize = 4000;

/// Resistance matrix of one mesh with the refinement history.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceResult {
    pub matrix: Matrix3<f64>,
    pub vertices: usize,
    pub faces: usize,
    /// Mean edge length `h`.
    pub mesh_spacing: f64,
    pub reg_eps: f64,
    pub gmres_iterations: usize,
    /// `(level, matrix)` for every level solved on the way.
    pub history: Vec<(usize, Matrix3<f64>)>,
}

impl ResistanceResult {
    pub fn asymmetry(&self) -> f64 {
        (self.matrix - self.matrix.transpose()).norm() / self.matrix.norm()
    }

    pub fn is_positive_definite(&self) -> bool {
        let sym = 0.5 * (self.matrix + self.matrix.transpose());
        SymmetricEigen::new(sym).eigenvalues.iter().all(|&l| l > 0.0)
    }
}

/// `S^ε(x)/(8π)` with `S^ε_ij = δ_ij (r²+2ε²)/(r²+ε²)^{3/2} + x_i x_j/(r²+ε²)^{3/2}`.
fn stokeslet(x: &Point, eps2: f64) -> Matrix3<f64> {
    let r2 = x.norm_squared();
    let d = r2 + eps2;
    let inv = 1.0 / (d * d.sqrt());
    let mut m = x * x.transpose() * inv;
    let diag = (r2 + 2.0 * eps2) * inv;
    m[(0, 0)] += diag;
    m[(1, 1)] += diag;
    m[(2, 2)] += diag;
    m / (8.0 * PI)
}

/// Degree-5 seven-point rule on the reference triangle (barycentric, weights sum to 1).
const TRI7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    (
        [0.059_715_871_789_770, 0.470_142_064_105_115, 0.470_142_064_105_115],
        0.132_394_152_788_506,
    ),
    (
        [0.470_142_064_105_115, 0.059_715_871_789_770, 0.470_142_064_105_115],
        0.132_394_152_788_506,
    ),
    (
        [0.470_142_064_105_115, 0.470_142_064_105_115, 0.059_715_871_789_770],
        0.132_394_152_788_506,
    ),
    (
        [0.797_426_985_353_087, 0.101_286_507_323_456, 0.101_286_507_323_456],
        0.125_939_180_544_827,
    ),
    (
        [0.101_286_507_323_456, 0.797_426_985_353_087, 0.101_286_507_323_456],
        0.125_939_180_544_827,
    ),
    (
        [0.101_286_507_323_456, 0.101_286_507_323_456, 0.797_426_985_353_087],
        0.125_939_180_544_827,
    ),
];

/// Subdivision depth cap for near-singular panels.
const MAX_SUBDIVISION: usize = 4;
/// Panels closer than this many diameters are subdivided.
const NEAR_RATIO: f64 = 2.5;

struct Assembler<'a> {
    mesh: &'a SurfaceMesh,
    eps2: f64,
    duffy_u: Vec<(f64, f64)>,
    duffy_v: GaussRule,
}

impl<'a> Assembler<'a> {
    fn new(mesh: &'a SurfaceMesh, reg_eps: f64) -> Self {
        let g = GaussRule::new(10);
        let h = mesh.mean_edge_length();
        // split the radial Duffy variable where the blob scale sits
        let knee = (4.0 * reg_eps / h).clamp(0.05, 0.5);
        let mut duffy_u: Vec<(f64, f64)> = g.on(0.0, knee).collect();
        duffy_u.extend(g.on(knee, 1.0));
        Self {
            mesh,
            eps2: reg_eps * reg_eps,
            duffy_u,
            duffy_v: g,
        }
    }

    /// `∫_T S^ε(x − y) φ_v(y) dS_y` for the three hat functions of face `f`.
    fn panel(&self, x: &Point, f: usize, out: &mut [Matrix3<f64>; 3]) {
        let tri = self.mesh.faces[f];
        let p = self.mesh.face_vertices(f);
        if let Some(c) = tri.iter().position(|&v| self.mesh.vertices[v] == *x) {
            self.duffy(x, &p, c, out);
        } else {
            self.subdivided(x, &p, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], 0, out);
        }
    }

    /// Recursive 4-way split of the sub-triangle with barycentric corners `bc`.
    fn subdivided(&self, x: &Point, p: &[Point; 3], bc: [[f64; 3]; 3], depth: usize, out: &mut [Matrix3<f64>; 3]) {
        let corner = |b: &[f64; 3]| p[0] * b[0] + p[1] * b[1] + p[2] * b[2];
        let q = [corner(&bc[0]), corner(&bc[1]), corner(&bc[2])];
        let centroid = (q[0] + q[1] + q[2]) / 3.0;
        let diam = (q[0] - q[1]).norm().max((q[1] - q[2]).norm()).max((q[2] - q[0]).norm());
        if depth < MAX_SUBDIVISION && (x - centroid).norm() < NEAR_RATIO * diam {
            let mid = |a: &[f64; 3], b: &[f64; 3]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
            let m01 = mid(&bc[0], &bc[1]);
            let m12 = mid(&bc[1], &bc[2]);
            let m20 = mid(&bc[2], &bc[0]);
            for sub in [[bc[0], m01, m20], [m01, bc[1], m12], [m20, m12, bc[2]], [m01, m12, m20]] {
                self.subdivided(x, p, sub, depth + 1, out);
            }
            return;
        }
        let area = 0.5 * (q[1] - q[0]).cross(&(q[2] - q[0])).norm();
        for (l, w) in TRI7.iter() {
            let b = [
                l[0] * bc[0][0] + l[1] * bc[1][0] + l[2] * bc[2][0],
                l[0] * bc[0][1] + l[1] * bc[1][1] + l[2] * bc[2][1],
                l[0] * bc[0][2] + l[1] * bc[1][2] + l[2] * bc[2][2],
            ];
            let y = corner(&b);
            let s = stokeslet(&(x - y), self.eps2) * (w * area);
            for c in 0..3 {
                out[c] += s * b[c];
            }
        }
    }

    /// Duffy map collapsing one edge onto the collocation vertex `c`.
    fn duffy(&self, x: &Point, p: &[Point; 3], c: usize, out: &mut [Matrix3<f64>; 3]) {
        let (i1, i2) = ((c + 1) % 3, (c + 2) % 3);
        let area2 = (p[i1] - p[c]).cross(&(p[i2] - p[c])).norm();
        for &(u, wu) in &self.duffy_u {
            for (v, wv) in self.duffy_v.on(0.0, 1.0) {
                let mut b = [0.0; 3];
                b[c] = 1.0 - u;
                b[i1] = u * (1.0 - v);
                b[i2] = u * v;
                let y = p[0] * b[0] + p[1] * b[1] + p[2] * b[2];
                let s = stokeslet(&(x - y), self.eps2) * (wu * wv * area2 * u);
                for k in 0..3 {
                    out[k] += s * b[k];
                }
            }
        }
    }

    /// Dense `3V × 3V` row-major matrix.
    fn assemble(&self) -> Vec<f64> {
        let nv = self.mesh.vertices.len();
        let n = 3 * nv;
        let mut a = vec![0.0; n * n];
        a.par_chunks_mut(3 * n).enumerate().for_each(|(m, rows)| {
            let x = self.mesh.vertices[m];
            for f in 0..self.mesh.faces.len() {
                let mut blocks = [Matrix3::zeros(); 3];
                self.panel(&x, f, &mut blocks);
                for (c, &v) in self.mesh.faces[f].iter().enumerate() {
                    for i in 0..3 {
                        for j in 0..3 {
                            rows[i * n + 3 * v + j] += blocks[c][(i, j)];
                        }
                    }
                }
            }
        });
        a
    }
}

fn matvec(a: &[f64], x: &[f64], y: &mut [f64]) {
    let n = x.len();
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        let row = &a[i * n..(i + 1) * n];
        *yi = row.iter().zip(x).map(|(p, q)| p * q).sum();
    });
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
/// Returns the solution and the number of inner iterations.
pub(crate) fn gmres(a: &[f64], b: &[f64], restart: usize, tol: f64, max_iters: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut iters = 0;
    let mut ax = vec![0.0; n];
    while iters < max_iters {
        matvec(a, &x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = dot(&r, &r).sqrt();
        if beta <= tol * bnorm {
            return Ok((x, iters));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            let mut w = vec![0.0; n];
            matvec(a, &v[k], &mut w);
            for j in 0..=k {
                let hj = dot(&w, &v[j]);
                h[j][k] = hj;
                for (wi, vi) in w.iter_mut().zip(&v[j]) {
                    *wi -= hj * vi;
                }
            }
            let wn = dot(&w, &w).sqrt();
            h[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                return Err(Error::Solver("GMRES breakdown: singular system".into()));
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iters += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= tol * bnorm || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[j]) {
                *xi += yj * vi;
            }
        }
    }
    matvec(a, &x, &mut ax);
    let res = b.iter().zip(&ax).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    if res <= 1e3 * tol * bnorm {
        Ok((x, iters))
    } else {
        Err(Error::Solver(format!("GMRES did not converge: residual {res:e}")))
    }
}

/// Resistance matrix of a closed outward-oriented mesh.
pub fn resistance_bem_surface(mesh: &SurfaceMesh, reg_eps: Option<f64>) -> Result<ResistanceResult> {
    mesh.check_watertight()?;
    if !(mesh.signed_volume() > 0.0) {
        return Err(Error::InvalidMesh("mesh must be outward oriented".into()));
    }
    let h = mesh.mean_edge_length();
    let eps = reg_eps.unwrap_or(DEFAULT_REG_FACTOR * h);
    if !(eps > 0.1 * h && eps < 10.0 * h) {
        return Err(invalid("reg_eps", format!("reg_eps in (0.1 h, 10 h) with h = {h}")));
    }
    let nv = mesh.vertices.len();
    let n = 3 * nv;
    if n > MAX_UNKNOWNS {
        return Err(Error::SizeCap {
            what: "BEM unknowns",
            size: n,
            cap: MAX_UNKNOWNS,
        });
    }
    let a = Assembler::new(mesh, eps).assemble();
    // ∫ φ_v dS = (sum of adjacent face areas)/3
    let mut hat_mass = vec![0.0; nv];
    for (f, tri) in mesh.faces.iter().enumerate() {
        let area = 0.5 * mesh.face_normal2(f).norm();
        for &v in tri {
            hat_mass[v] += area / 3.0;
        }
    }
    let mut matrix = Matrix3::zeros();
    let mut total_iters = 0;
    for k in 0..3 {
        let b: Vec<f64> = (0..n).map(|i| if i % 3 == k { 1.0 } else { 0.0 }).collect();
        let (f, iters) = gmres(&a, &b, GMRES_RESTART, GMRES_TOL, GMRES_MAX_ITERS)?;
        total_iters += iters;
        for v in 0..nv {
            for i in 0..3 {
                matrix[(i, k)] += f[3 * v + i] * hat_mass[v];
            }
        }
    }
    Ok(ResistanceResult {
        matrix,
        vertices: nv,
        faces: mesh.faces.len(),
        mesh_spacing: h,
        reg_eps: eps,
        gmres_iterations: total_iters,
        history: Vec::new(),
    })
}

/// Resistance matrix of a reference particle at icosphere/subdivision
/// `level`, with every level from `min(2, level)` recorded in the history.
/// `reg_eps = None` picks `0.25 h` at each level.
pub fn resistance_bem(particle: &ReferenceParticle, level: usize, reg_eps: Option<f64>) -> Result<ResistanceResult> {
    resistance_bem_levels(|l| particle.surface_mesh(l), level, reg_eps)
}

/// Same refinement protocol for an arbitrary mesh family.
pub fn resistance_bem_levels(mesh_at: impl Fn(usize) -> SurfaceMesh, level: usize, reg_eps: Option<f64>) -> Result<ResistanceResult> {
    let mut history = Vec::new();
    let mut last = None;
    for l in level.min(2)..=level {
        let eps = if l == level { reg_eps } else { None };
        let r = resistance_bem_surface(&mesh_at(l), eps)?;
        history.push((l, r.matrix));
        last = Some(r);
    }
    let mut out = last.expect("at least one level");
    out.history = history;
    Ok(out)
}
