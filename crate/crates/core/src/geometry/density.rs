use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use rand::Rng;

/// Attempts per point for the uniform-ball rejection sampler.
pub const MAX_REJECTION_ATTEMPTS: usize = 100;

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: Point,
    pub hi: Point,
}

impl Aabb {
    pub fn new(lo: Point, hi: Point) -> Self {
        Self { lo, hi }
    }

    pub fn unit_cube() -> Self {
        Self::new(Point::zeros(), Point::repeat(1.0))
    }

    pub fn extent(&self) -> Point {
        self.hi - self.lo
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn diameter(&self) -> f64 {
        self.extent().norm()
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|k| p[k] >= self.lo[k] && p[k] <= self.hi[k])
    }

    pub fn center(&self) -> Point {
        0.5 * (self.lo + self.hi)
    }

    /// Smallest box containing all `points`.
    pub fn bounding(points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let (mut lo, mut hi) = (*first, *first);
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        Some(Self { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    UniformBox,
    UniformBall {
        center: Point,
        radius: f64,
    },
    Grid {
        dims: [usize; 3],
        masses: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

/// Bounded, compactly supported probability density on `R^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    kind: Kind,
    support: Aabb,
    sup_norm: f64,
}

impl DensityModel {
    pub fn uniform_box(support: Aabb) -> Result<Self> {
        let vol = support.volume();
        if !(vol > 0.0 && vol.is_finite()) {
            return Err(invalid("support_box", "box must have positive finite volume"));
        }
        Ok(Self {
            kind: Kind::UniformBox,
            support,
            sup_norm: 1.0 / vol,
        })
    }

    pub fn unit_cube() -> Self {
        Self::uniform_box(Aabb::unit_cube()).expect("unit cube is valid")
    }

    pub fn uniform_ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", "ball radius must be positive"));
        }
        let r = Point::repeat(radius);
        Ok(Self {
            kind: Kind::UniformBall { center, radius },
            support: Aabb::new(center - r, center + r),
            sup_norm: 3.0 / (4.0 * std::f64::consts::PI * radius.powi(3)),
        })
    }

    /// Piecewise-constant density on a `dims` grid over `support`; `masses`
    /// are cell probabilities in x-fastest order and must sum to 1.
    pub fn grid(support: Aabb, dims: [usize; 3], masses: Vec<f64>) -> Result<Self> {
        let ncell: usize = dims.iter().product();
        if ncell == 0 || masses.len() != ncell {
            return Err(invalid("cell_values", format!("expected {ncell} cell masses, got {}", masses.len())));
        }
        if support.volume() <= 0.0 {
            return Err(invalid("support_box", "box must have positive volume"));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(invalid("cell_values", "cell masses must be finite and nonnegative"));
        }
        let total = pairwise_sum(&masses);
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("cell_values", format!("cell masses sum to {total}, not 1")));
        }
        let cell_vol = support.volume() / ncell as f64;
        let sup_norm = masses.iter().cloned().fold(0.0, f64::max) / cell_vol;
        let mut cumulative = Vec::with_capacity(ncell);
        let mut acc = 0.0;
        for m in &masses {
            acc += m;
            cumulative.push(acc);
        }
        Ok(Self {
            kind: Kind::Grid { dims, masses, cumulative },
            support,
            sup_norm,
        })
    }

    /// Grid density from nonnegative weights, normalised to unit mass.
    pub fn grid_from_weights(support: Aabb, dims: [usize; 3], weights: &[f64]) -> Result<Self> {
        let total = pairwise_sum(weights);
        if !(total > 0.0) {
            return Err(invalid("cell_values", "weights must have positive sum"));
        }
        let mut masses: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // absorb rounding so the sum is 1 to the last ulp
        let drift = 1.0 - pairwise_sum(&masses);
        if let Some(m) = masses.iter_mut().max_by(|a, b| a.total_cmp(b)) {
            *m += drift;
        }
        Self::grid(support, dims, masses)
    }

    pub fn support_box(&self) -> Aabb {
        self.support
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_uniform_box(&self) -> bool {
        matches!(self.kind, Kind::UniformBox)
    }

    /// Cell masses and dimensions for the grid kind.
    pub fn grid_cells(&self) -> Option<([usize; 3], &[f64])> {
        match &self.kind {
            Kind::Grid { dims, masses, .. } => Some((*dims, masses)),
            _ => None,
        }
    }

    /// Centre and radius for the uniform-ball kind.
    pub fn ball(&self) -> Option<(Point, f64)> {
        match &self.kind {
            Kind::UniformBall { center, radius } => Some((*center, *radius)),
            _ => None,
        }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match &self.kind {
            Kind::UniformBox => {
                if self.support.contains(x) {
                    self.sup_norm
                } else {
                    0.0
                }
            }
            Kind::UniformBall { center, radius } => {
                if (x - center).norm() <= *radius {
                    self.sup_norm
                } else {
                    0.0
                }
            }
            Kind::Grid { dims, masses, .. } => match self.cell_of(x, dims) {
                Some(c) => masses[c] * (c_count(dims) as f64) / self.support.volume(),
                None => 0.0,
            },
        }
    }

    fn cell_of(&self, x: &Point, dims: &[usize; 3]) -> Option<usize> {
        if !self.support.contains(x) {
            return None;
        }
        let e = self.support.extent();
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let t = (x[k] - self.support.lo[k]) / e[k] * dims[k] as f64;
            idx[k] = (t.floor() as usize).min(dims[k] - 1);
        }
        Some(idx[0] + dims[0] * (idx[1] + dims[1] * idx[2]))
    }

    /// One draw from the density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        let lo = self.support.lo;
        let e = self.support.extent();
        match &self.kind {
            Kind::UniformBox => Ok(Point::new(
                lo.x + e.x * rng.random::<f64>(),
                lo.y + e.y * rng.random::<f64>(),
                lo.z + e.z * rng.random::<f64>(),
            )),
            Kind::UniformBall { center, radius } => {
                for _ in 0..MAX_REJECTION_ATTEMPTS {
                    let p = Point::new(
                        2.0 * rng.random::<f64>() - 1.0,
                        2.0 * rng.random::<f64>() - 1.0,
                        2.0 * rng.random::<f64>() - 1.0,
                    );
                    if p.norm_squared() <= 1.0 {
                        return Ok(center + *radius * p);
                    }
                }
                Err(Error::SamplerExhausted {
                    attempts: MAX_REJECTION_ATTEMPTS,
                })
            }
            Kind::Grid { dims, cumulative, .. } => {
                let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let mut c = cumulative.partition_point(|&v| v <= u);
                if c >= cumulative.len() {
                    c = cumulative.len() - 1;
                }
                let (ix, iy, iz) = (c % dims[0], (c / dims[0]) % dims[1], c / (dims[0] * dims[1]));
                let h = Point::new(e.x / dims[0] as f64, e.y / dims[1] as f64, e.z / dims[2] as f64);
                Ok(Point::new(
                    lo.x + h.x * (ix as f64 + rng.random::<f64>()),
                    lo.y + h.y * (iy as f64 + rng.random::<f64>()),
                    lo.z + h.z * (iz as f64 + rng.random::<f64>()),
                ))
            }
        }
    }
}

fn c_count(dims: &[usize; 3]) -> usize {
    dims[0] * dims[1] * dims[2]
}

/// Fixed-order pairwise summation.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}
