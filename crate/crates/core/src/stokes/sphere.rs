use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use nalgebra::Matrix3;

/// Velocity, pressure and derived tensors of one column at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub velocity: Point,
    pub pressure: f64,
    /// `grad[(i, j)] = ∂_j w_i`.
    pub grad: Matrix3<f64>,
}

impl FlowSample {
    /// `q I − ∇w`; applied to a normal it gives the traction.
    pub fn stress(&self) -> Matrix3<f64> {
        Matrix3::identity() * self.pressure - self.grad
    }

    pub fn traction(&self, n: &Point) -> Point {
        self.stress() * n
    }
}

/// Decaying Stokes flow (unit viscosity) past the sphere `|y| = a` with
/// `w_k = e_k` on the sphere.
///
/// `w_k = curl(g(r) e_k × y)` with `g = 3a/(4r) − a³/(4r³)`, and
/// `q_k = (3a/2) (e_k·y)/r³` vanishing at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereStokesSolution {
    radius: f64,
}

impl SphereStokesSolution {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", "a > 0"));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Stream potential `g(r)` and its first two derivatives.
    pub fn potential(&self, r: f64) -> (f64, f64, f64) {
        let a = self.radius;
        let a3 = a * a * a;
        let g = 0.75 * a / r - 0.25 * a3 / r.powi(3);
        let g1 = -0.75 * a / (r * r) + 0.75 * a3 / r.powi(4);
        let g2 = 1.5 * a / r.powi(3) - 3.0 * a3 / r.powi(5);
        (g, g1, g2)
    }

    /// Total force `∮(qI − ∇w_k)n dS` on any enclosing sphere: `6πa e_k`.
    pub fn drag(&self) -> f64 {
        6.0 * std::f64::consts::PI * self.radius
    }

    pub fn eval(&self, k: usize, y: &Point) -> Result<FlowSample> {
        let r = y.norm();
        if r < self.radius * (1.0 - 1e-12) {
            return Err(Error::InteriorPoint {
                norm: r,
                radius: self.radius,
            });
        }
        Ok(self.eval_unchecked(k, y))
    }

    pub(crate) fn eval_unchecked(&self, k: usize, y: &Point) -> FlowSample {
        let a = self.radius;
        let a3 = a * a * a;
        let e = Point::ith(k, 1.0);
        let r = y.norm();
        let (r3, r5, r7) = (r.powi(3), r.powi(5), r.powi(7));
        let ey = y[k];
        let velocity = 0.75 * a * (e / r + y * (ey / r3)) + 0.25 * a3 * (e / r3 - y * (3.0 * ey / r5));
        let mut grad = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                let t1 = -e[i] * y[j] / r3;
                let t2 = e[j] * y[i] / r3 + ey * d / r3 - 3.0 * ey * y[i] * y[j] / r5;
                let t3 = -3.0 * e[i] * y[j] / r5;
                let t4 = e[j] * y[i] / r5 + ey * d / r5 - 5.0 * ey * y[i] * y[j] / r7;
                grad[(i, j)] = 0.75 * a * (t1 + t2) + 0.25 * a3 * (t3 - 3.0 * t4);
            }
        }
        FlowSample {
            velocity,
            pressure: 1.5 * a * ey / r3,
            grad,
        }
    }
}

/// `sphere_stokes_eval`: velocity, pressure and stress `qI − ∇w` of column `k`.
pub fn sphere_stokes_eval(a: f64, k: usize, y: &Point) -> Result<(Point, f64, Matrix3<f64>)> {
    if k > 2 {
        return Err(invalid("k", "axis index in {0, 1, 2}"));
    }
    let s = SphereStokesSolution::new(a)?.eval(k, y)?;
    Ok((s.velocity, s.pressure, s.stress()))
}

/// `∮_{|y|=R} (qI − ∇w_k) n dS` by a product rule on the sphere.
pub fn traction_integral(solution: &SphereStokesSolution, k: usize, big_r: f64, rule: &crate::quadrature::SphereRule) -> Point {
    let mut total = Point::zeros();
    for (n, w) in rule.iter() {
        let s = solution.eval_unchecked(k, &(n * big_r));
        total += s.traction(n) * (w * big_r * big_r);
    }
    total
}

/// `curl(G e × x) = (2G + rG′) e − (G′/r) x (x·e)` and its gradient, for a
/// radial profile given as `(G, G′, G″)` at `r = |x|`.
pub(crate) fn curl_of_radial(k: usize, x: &Point, g: (f64, f64, f64)) -> (Point, Matrix3<f64>) {
    let (g0, g1, g2) = g;
    let r = x.norm();
    let e = Point::ith(k, 1.0);
    let xe = x[k];
    let a = 2.0 * g0 + r * g1;
    let b = -g1 / r;
    let da = 3.0 * g1 + r * g2;
    let db = -g2 / r + g1 / (r * r);
    let v = e * a + x * (b * xe);
    let mut grad = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let d = if i == j { 1.0 } else { 0.0 };
            grad[(i, j)] = da * x[j] / r * e[i] + db * x[j] / r * x[i] * xe + b * (d * xe + x[i] * e[j]);
        }
    }
    (v, grad)
}
