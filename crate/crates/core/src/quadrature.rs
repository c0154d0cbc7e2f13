//! Gauss-Legendre rules, a product rule on the unit sphere and a small
//! adaptive integrator used by the corrector norms and the layer-cake oracle.

use nalgebra::Vector3;
use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes.iter().zip(&self.weights).map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Product rule on the unit sphere: Gauss-Legendre in `cos θ`, trapezoid in `φ`.
///
/// Exact for spherical polynomials of degree `< min(2 * n_theta, n_phi)`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub points: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (ct, wt) = gauss_legendre(n_theta);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                points.push(Vector3::new(s * phi.cos(), s * phi.sin(), *c));
                weights.push(w * dphi);
            }
        }
        Self { points, weights }
    }

    /// Weights sum to `4π`.
    pub fn iter(&self) -> impl Iterator<Item = (&Vector3<f64>, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Adaptive bisection with a Gauss pair (`n` against `2n` nodes).
///
/// Returns `None` when `max_depth` is exhausted before reaching `rel_tol`.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64, max_depth: usize) -> Option<f64> {
    let lo = GaussRule::new(8);
    let hi = GaussRule::new(16);
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, lo: &GaussRule, hi: &GaussRule, a: f64, b: f64, rel_tol: f64, abs_tol: f64, depth: usize) -> Option<f64> {
        let coarse = lo.integrate(a, b, f);
        let fine = hi.integrate(a, b, f);
        if (fine - coarse).abs() <= rel_tol * fine.abs() + abs_tol {
            return Some(fine);
        }
        if depth == 0 {
            return None;
        }
        let m = 0.5 * (a + b);
        Some(rec(f, lo, hi, a, m, rel_tol, 0.5 * abs_tol, depth - 1)? + rec(f, lo, hi, m, b, rel_tol, 0.5 * abs_tol, depth - 1)?)
    }
    rec(f, &lo, &hi, a, b, rel_tol, abs_tol, max_depth)
}
