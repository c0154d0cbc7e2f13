use crate::error::{invalid, Error, Result};
use crate::events::SmearedDensity;
use crate::geometry::{Aabb, DensityModel, Point};
use crate::quadrature::SphereRule;
use crate::transport::DiscreteMeasure;
use std::io::{Read, Write};

/// Cube `center + [−L/2, L/2]³` with `n` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpec {
    pub center: Point,
    pub side: f64,
    pub n: usize,
}

impl BoxSpec {
    pub fn new(center: Point, side: f64, n: usize) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid("side", "L > 0"));
        }
        if n < 32 || !n.is_power_of_two() {
            return Err(invalid("n", "n ≥ 32 and a power of two"));
        }
        Ok(Self { center, side, n })
    }

    /// Box centred on `support` with side `2 × diameter`, so the support
    /// keeps a margin of at least `L/4` on every side.
    pub fn around(support: &Aabb, n: usize) -> Result<Self> {
        Self::new(support.center(), 2.0 * support.diameter(), n)
    }

    pub fn cell(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn lo(&self) -> Point {
        self.center - Point::repeat(0.5 * self.side)
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::new(self.lo(), self.center + Point::repeat(0.5 * self.side))
    }

    pub fn cell_center(&self, ix: usize, iy: usize, iz: usize) -> Point {
        self.lo() + Point::new(ix as f64 + 0.5, iy as f64 + 0.5, iz as f64 + 0.5) * self.cell()
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    /// Errors unless `support` sits at least `L/4` inside the box.
    pub fn check_margin(&self, support: &Aabb) -> Result<()> {
        let m = 0.25 * self.side;
        let b = self.aabb();
        for k in 0..3 {
            if support.lo[k] < b.lo[k] + m - 1e-12 * self.side || support.hi[k] > b.hi[k] - m + 1e-12 * self.side {
                return Err(Error::OutsideBox(format!(
                    "support [{:?}, {:?}] leaves less than L/4 = {m} margin in the box",
                    support.lo.as_slice(),
                    support.hi.as_slice()
                )));
            }
        }
        Ok(())
    }
}

/// Cell-centred samples on a [`BoxSpec`]; index `ix + n (iy + n iz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: BoxSpec,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(spec: BoxSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.n.pow(3)],
        }
    }

    pub fn from_fn(spec: BoxSpec, f: impl Fn(&Point) -> f64) -> Self {
        let n = spec.n;
        let mut values = Vec::with_capacity(n * n * n);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    values.push(f(&spec.cell_center(ix, iy, iz)));
                }
            }
        }
        Self { spec, values }
    }

    /// `Σ values · (L/n)³`.
    pub fn integral(&self) -> f64 {
        crate::geometry::pairwise_sum(&self.values) * self.spec.cell().powi(3)
    }

    /// `Σ f ψ (L/n)³`.
    pub fn pair(&self, psi: impl Fn(&Point) -> f64) -> f64 {
        let n = self.spec.n;
        let mut terms = Vec::with_capacity(self.values.len());
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let v = self.values[self.spec.index(ix, iy, iz)];
                    terms.push(if v == 0.0 { 0.0 } else { v * psi(&self.spec.cell_center(ix, iy, iz)) });
                }
            }
        }
        crate::geometry::pairwise_sum(&terms) * self.spec.cell().powi(3)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        if self.spec != other.spec {
            return Err(invalid("grid", "fields must share the same box"));
        }
        Ok(GridField {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> GridField {
        GridField {
            spec: self.spec,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Circular shift by whole cells.
    pub fn rolled(&self, shift: [usize; 3]) -> GridField {
        let n = self.spec.n;
        let mut values = vec![0.0; self.values.len()];
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let dst = self.spec.index((ix + shift[0]) % n, (iy + shift[1]) % n, (iz + shift[2]) % n);
                    values[dst] = self.values[self.spec.index(ix, iy, iz)];
                }
            }
        }
        GridField { spec: self.spec, values }
    }

    /// Little-endian layout: `n` (u64), `L`, centre (3 f64), then the `n³`
    /// values with `x` varying fastest.
    pub fn write_binary(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(&(self.spec.n as u64).to_le_bytes())?;
        out.write_all(&self.spec.side.to_le_bytes())?;
        for k in 0..3 {
            out.write_all(&self.spec.center[k].to_le_bytes())?;
        }
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(input: &mut impl Read) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut next = |input: &mut dyn Read| -> Result<[u8; 8]> {
            input.read_exact(&mut b8)?;
            Ok(b8)
        };
        let n = u64::from_le_bytes(next(input)?) as usize;
        let side = f64::from_le_bytes(next(input)?);
        let mut center = Point::zeros();
        for k in 0..3 {
            center[k] = f64::from_le_bytes(next(input)?);
        }
        let spec = BoxSpec::new(center, side, n)?;
        let mut values = Vec::with_capacity(n * n * n);
        for _ in 0..n * n * n {
            values.push(f64::from_le_bytes(next(input)?));
        }
        Ok(Self { spec, values })
    }
}

/// Measures that [`rasterize`] can deposit.
#[derive(Debug, Clone, Copy)]
pub enum Measure<'a> {
    /// Trilinear (cloud-in-cell) deposition of the atoms.
    Discrete(&'a DiscreteMeasure),
    /// Exact overlap volumes of the smeared cubes.
    Smeared(&'a SmearedDensity<'a>),
    /// Normalized surface measure of `∂B_radius(center)`, deposited from a
    /// product rule on the sphere.
    SphereSurface { center: Point, radius: f64 },
    /// Cell averages of the density.
    Density(&'a DensityModel),
}

impl Measure<'_> {
    fn support(&self) -> Aabb {
        match self {
            Measure::Discrete(m) => Aabb::bounding(m.points()).expect("nonempty"),
            Measure::Smeared(s) => {
                let h = Point::repeat(s.half_width());
                let b = Aabb::bounding(s.config().centers()).expect("nonempty");
                Aabb::new(b.lo - h, b.hi + h)
            }
            Measure::SphereSurface { center, radius } => Aabb::new(center - Point::repeat(*radius), center + Point::repeat(*radius)),
            Measure::Density(d) => d.support_box(),
        }
    }
}

/// Density (mass per volume) of `measure` on the grid; total mass is kept.
pub fn rasterize(measure: Measure<'_>, spec: BoxSpec) -> Result<GridField> {
    spec.check_margin(&measure.support())?;
    let mut field = GridField::zeros(spec);
    let inv_vol = 1.0 / spec.cell().powi(3);
    match measure {
        Measure::Discrete(m) => {
            for (p, &w) in m.points().iter().zip(m.weights()) {
                deposit_cic(&mut field, p, w * inv_vol);
            }
        }
        Measure::SphereSurface { center, radius } => {
            if !(radius > 0.0) {
                return Err(invalid("radius", "sphere radius > 0"));
            }
            // about four nodes per cell along a great circle
            let per_circle = ((2.0 * std::f64::consts::PI * radius / spec.cell()) * 4.0).ceil().max(16.0) as usize;
            let rule = SphereRule::new(per_circle.div_ceil(2), per_circle);
            let norm = 1.0 / (4.0 * std::f64::consts::PI);
            for (n, w) in rule.iter() {
                deposit_cic(&mut field, &(center + n * radius), w * norm * inv_vol);
            }
        }
        Measure::Smeared(s) => {
            let mass = 1.0 / s.config().len() as f64;
            for i in 0..s.config().len() {
                deposit_box(&mut field, &s.cube(i), mass);
            }
        }
        Measure::Density(d) => {
            if d.is_uniform_box() {
                deposit_box(&mut field, &d.support_box(), 1.0);
            } else if let Some((dims, masses)) = d.grid_cells() {
                let b = d.support_box();
                let e = b.extent();
                let h = Point::new(e.x / dims[0] as f64, e.y / dims[1] as f64, e.z / dims[2] as f64);
                for iz in 0..dims[2] {
                    for iy in 0..dims[1] {
                        for ix in 0..dims[0] {
                            let lo = b.lo + h.component_mul(&Point::new(ix as f64, iy as f64, iz as f64));
                            let m = masses[ix + dims[0] * (iy + dims[1] * iz)];
                            if m > 0.0 {
                                deposit_box(&mut field, &Aabb::new(lo, lo + h), m);
                            }
                        }
                    }
                }
            } else {
                // midpoint sub-sampling of each cell, renormalized to unit mass
                let sub = 4;
                let hs = spec.cell() / sub as f64;
                let n = spec.n;
                for iz in 0..n {
                    for iy in 0..n {
                        for ix in 0..n {
                            let lo = spec.cell_center(ix, iy, iz) - Point::repeat(0.5 * spec.cell());
                            let mut acc = 0.0;
                            for a in 0..sub {
                                for b in 0..sub {
                                    for c in 0..sub {
                                        let p = lo + Point::new(a as f64 + 0.5, b as f64 + 0.5, c as f64 + 0.5) * hs;
                                        acc += d.eval(&p);
                                    }
                                }
                            }
                            field.values[spec.index(ix, iy, iz)] = acc / (sub * sub * sub) as f64;
                        }
                    }
                }
                let total = field.integral();
                if !(total > 0.0) {
                    return Err(Error::Unresolvable("density is not resolved by the grid".into()));
                }
                field.values.iter_mut().for_each(|v| *v /= total);
            }
        }
    }
    Ok(field)
}

/// Trilinear weights onto the 8 surrounding cell centres.
fn deposit_cic(field: &mut GridField, p: &Point, amount: f64) {
    let spec = field.spec;
    let h = spec.cell();
    let t = (p - spec.lo()) / h - Point::repeat(0.5);
    let base = [t.x.floor(), t.y.floor(), t.z.floor()];
    let frac = [t.x - base[0], t.y - base[1], t.z - base[2]];
    let n = spec.n as i64;
    for corner in 0..8 {
        let mut w = amount;
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let up = (corner >> k) & 1 == 1;
            w *= if up { frac[k] } else { 1.0 - frac[k] };
            let i = base[k] as i64 + up as i64;
            idx[k] = i.rem_euclid(n) as usize;
        }
        field.values[spec.index(idx[0], idx[1], idx[2])] += w;
    }
}

/// Spreads `mass` uniformly over `cube` with exact cell-overlap fractions.
fn deposit_box(field: &mut GridField, cube: &Aabb, mass: f64) {
    let spec = field.spec;
    let h = spec.cell();
    let lo = spec.lo();
    let density = mass / cube.volume() / h.powi(3);
    let mut spans: Vec<Vec<(usize, f64)>> = Vec::with_capacity(3);
    for k in 0..3 {
        let a = (cube.lo[k] - lo[k]) / h;
        let b = (cube.hi[k] - lo[k]) / h;
        let first = a.floor().max(0.0) as usize;
        let last = (b.ceil() as usize).min(spec.n);
        let mut v = Vec::new();
        for i in first..last {
            let overlap = (b.min(i as f64 + 1.0) - a.max(i as f64)).max(0.0) * h;
            if overlap > 0.0 {
                v.push((i, overlap));
            }
        }
        spans.push(v);
    }
    for &(iz, wz) in &spans[2] {
        for &(iy, wy) in &spans[1] {
            for &(ix, wx) in &spans[0] {
                field.values[spec.index(ix, iy, iz)] += density * wx * wy * wz;
            }
        }
    }
}
