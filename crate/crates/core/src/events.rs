//! Monte Carlo estimates of the separation event `𝒜`, the bounded-overlap
//! event `ℬ`, and moments of the truncation radius `η`.

use crate::error::{invalid, Error, Result};
use crate::geometry::{sample_replicate, Aabb, DensityModel, ParticleConfiguration, Point, SpatialHash};
use crate::quadrature::GaussRule;
use crate::rng::{stream, Purpose};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Threshold factor in the bounded-overlap event: `‖ρ̄_ε‖_∞ ≤ 16 ‖ρ‖_∞`.
pub const OVERLAP_FACTOR: f64 = 16.0;

/// Success count with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventEstimate {
    pub trials: usize,
    pub successes: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl EventEstimate {
    pub fn wilson(successes: usize, trials: usize) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            trials,
            successes,
            p_hat: p,
            ci_low: (center - half).clamp(0.0, p),
            ci_high: (center + half).clamp(p, 1.0),
        }
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// `true` iff every `d_i ≥ 2 L ε^{alpha_thresh}` (vacuous for `N = 1`).
pub fn indicator_a(config: &ParticleConfiguration, l: f64, alpha_thresh: f64) -> Result<bool> {
    if !(l > 0.0) {
        return Err(invalid("L", "L > 0"));
    }
    let threshold = 2.0 * l * config.eps().powf(alpha_thresh);
    Ok(config.nn_dist().iter().all(|&d| d >= threshold))
}

/// Lower bound `exp(-4π ‖ρ‖_∞ L³ / 3)` on `P[𝒜_{L,2}]` as quoted for the
/// separation event.
pub fn separation_bound(sup_norm: f64, l: f64) -> f64 {
    (-4.0 * PI * sup_norm * l.powi(3) / 3.0).exp()
}

/// Poisson-clumping estimate `exp(-(16π/3) ‖ρ‖_∞ L³)` for
/// `P[min_i d_i ≥ 2 L ε²]`, from `N²/2` pairs each closer than `2Lε²`
/// with probability `≈ (4π/3)(2Lε²)³ ‖ρ‖_∞`.
pub fn separation_poisson_estimate(sup_norm: f64, l: f64) -> f64 {
    (-16.0 * PI * sup_norm * l.powi(3) / 3.0).exp()
}

/// Average of the empirical measure over cubes `x_i + [-s/2, s/2)^3`,
/// `s = ε^{1-λ}`, each carrying mass `1/N`.
#[derive(Debug, Clone, Copy)]
pub struct SmearedDensity<'a> {
    config: &'a ParticleConfiguration,
    lambda: f64,
    side: f64,
}

impl<'a> SmearedDensity<'a> {
    pub fn new(config: &'a ParticleConfiguration, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid("lambda", "0 < λ < 1"));
        }
        Ok(Self {
            config,
            lambda,
            side: config.eps().powf(1.0 - lambda),
        })
    }

    pub fn config(&self) -> &ParticleConfiguration {
        self.config
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Cube side `ε^{1-λ}`.
    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.side
    }

    /// Density contributed by one cube, `1 / (N ε^{3(1-λ)})`.
    pub fn cube_height(&self) -> f64 {
        1.0 / (self.config.len() as f64 * self.side.powi(3))
    }

    pub fn total_mass(&self) -> f64 {
        self.cube_height() * self.side.powi(3) * self.config.len() as f64
    }

    pub fn cube(&self, i: usize) -> Aabb {
        let c = self.config.centers()[i];
        let h = Point::repeat(self.half_width());
        Aabb::new(c - h, c + h)
    }

    pub fn value_at(&self, x: &Point) -> f64 {
        let h = self.half_width();
        let count = self
            .config
            .centers()
            .iter()
            .filter(|c| (0..3).all(|k| c[k] - h <= x[k] && x[k] < c[k] + h))
            .count();
        count as f64 * self.cube_height()
    }

    /// Exact `‖ρ̄_ε‖_∞`.
    pub fn sup(&self) -> f64 {
        max_cover_multiplicity(self.config.centers(), self.side) as f64 * self.cube_height()
    }
}

/// `‖ρ̄_ε‖_∞ = (max cube-cover multiplicity) / (N ε^{3(1-λ)})`.
pub fn smeared_density_sup(config: &ParticleConfiguration, lambda: f64) -> Result<f64> {
    Ok(SmearedDensity::new(config, lambda)?.sup())
}

/// Bounded-overlap event `‖ρ̄_ε‖_∞ ≤ 16 ‖ρ‖_∞`.
///
/// A 2×2×2 hash-block count bounds the multiplicity from above; the exact
/// sweep only runs when that bound does not already settle the event.
pub fn indicator_b(config: &ParticleConfiguration, lambda: f64, rho_sup: f64) -> Result<bool> {
    let smeared = SmearedDensity::new(config, lambda)?;
    let limit = OVERLAP_FACTOR * rho_sup / smeared.cube_height();
    let upper = multiplicity_upper_bound(config.centers(), smeared.side());
    if upper as f64 <= limit {
        return Ok(true);
    }
    Ok(max_cover_multiplicity(config.centers(), smeared.side()) as f64 <= limit)
}

fn multiplicity_upper_bound(centers: &[Point], side: f64) -> usize {
    let hash = SpatialHash::new(centers, side);
    let [nx, ny, nz] = hash.dims();
    let count = |x: usize, y: usize, z: usize| -> usize {
        if x < nx && y < ny && z < nz {
            hash.bucket([x, y, z]).len()
        } else {
            0
        }
    };
    let mut best = 0;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let mut s = 0;
                for (dx, dy, dz) in itertools_cube() {
                    s += count(x + dx, y + dy, z + dz);
                }
                best = best.max(s);
            }
        }
    }
    best
}

fn itertools_cube() -> impl Iterator<Item = (usize, usize, usize)> {
    (0..8).map(|b| (b & 1, (b >> 1) & 1, (b >> 2) & 1))
}

/// Maximum number of half-open cubes `c_j + [-s/2, s/2)^3` sharing a point.
///
/// The deepest point can be moved to `x = lower face of some cube a`; for each
/// `a` the problem reduces to rectangles on that face, solved by a sweep in
/// `y` with a 1D interval sweep in `z`.
pub fn max_cover_multiplicity(centers: &[Point], side: f64) -> usize {
    if centers.is_empty() {
        return 0;
    }
    let h = 0.5 * side;
    let lo: Vec<Point> = centers.iter().map(|c| c - Point::repeat(h)).collect();
    let hi: Vec<Point> = centers.iter().map(|c| c + Point::repeat(h)).collect();
    let hash = SpatialHash::new(centers, side);
    let mut best = 1usize;
    let mut slab: Vec<usize> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut events: Vec<(f64, i32)> = Vec::new();
    for a in 0..centers.len() {
        let x = lo[a].x;
        slab.clear();
        hash.for_neighborhood(&centers[a], 1, |j| {
            let overlaps = lo[j].x <= x && x < hi[j].x && lo[j].y < hi[a].y && lo[a].y < hi[j].y && lo[j].z < hi[a].z && lo[a].z < hi[j].z;
            if overlaps {
                slab.push(j);
            }
        });
        if slab.len() <= best {
            continue;
        }
        ys.clear();
        ys.extend(slab.iter().map(|&j| lo[j].y.max(lo[a].y)));
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        for &y in &ys {
            events.clear();
            for &j in &slab {
                if lo[j].y <= y && y < hi[j].y {
                    let z0 = lo[j].z.max(lo[a].z);
                    let z1 = hi[j].z.min(hi[a].z);
                    if z0 < z1 {
                        events.push((z0, 1));
                        events.push((z1, -1));
                    }
                }
            }
            if events.len() / 2 <= best {
                continue;
            }
            // closing events sort before opening ones at equal z
            events.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            let mut depth = 0i32;
            for &(_, d) in &events {
                depth += d;
                best = best.max(depth as usize);
            }
        }
    }
    best
}

/// Event over configurations for [`estimate_event_probability`].
pub type EventFn<'a> = dyn Fn(&ParticleConfiguration) -> Result<bool> + Sync + 'a;

/// Fraction of `trials` independent configurations for which `event` holds.
pub fn estimate_event_probability(
    event: &EventFn<'_>,
    density: &DensityModel,
    n: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<EventEstimate> {
    if trials < 30 {
        return Err(invalid("trials", "trials ≥ 30"));
    }
    let hits: Vec<bool> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let cfg = sample_replicate(density, n, alpha, seed, k)?;
            event(&cfg)
        })
        .collect::<Result<_>>()?;
    Ok(EventEstimate::wilson(hits.iter().filter(|&&h| h).count(), trials))
}

/// How [`eta_moment`] evaluates `E[η^κ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    MonteCarlo,
    LayerCakeOracle,
}

/// Parameters of `η_1 = min{m_η ε^β, d_1}` and the moment exponent `κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaMomentParams {
    pub n: usize,
    pub beta: f64,
    pub m_eta: f64,
    pub kappa: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    /// Zero for deterministic quadrature.
    pub std_err: f64,
}

impl EtaMomentParams {
    fn eps(&self) -> f64 {
        (self.n as f64).powf(-1.0 / 3.0)
    }

    /// `m_η ε^β`.
    pub fn cap(&self) -> f64 {
        self.m_eta * self.eps().powf(self.beta)
    }

    /// `m_η^κ (1 + ε^{3(β-1)}) ε^{βκ}`.
    pub fn bound_shape(&self) -> f64 {
        let eps = self.eps();
        self.m_eta.powf(self.kappa) * (1.0 + eps.powf(3.0 * (self.beta - 1.0))) * eps.powf(self.beta * self.kappa)
    }

    fn validate(&self) -> Result<()> {
        if !(self.kappa > -3.0) {
            return Err(invalid("kappa", "κ > −3 (the moment diverges otherwise)"));
        }
        if self.n < 2 {
            return Err(invalid("N", "N ≥ 2 for a finite nearest-neighbour distance"));
        }
        if self.trials < 2 {
            return Err(invalid("trials", "trials ≥ 2"));
        }
        if !(self.beta >= 1.0) || !(self.m_eta > 0.0 && self.m_eta <= 1.0) {
            return Err(invalid("beta/m_eta", "β ≥ 1 and 0 < m_η ≤ 1"));
        }
        Ok(())
    }
}

/// `E[η_1^κ]` by direct Monte Carlo or by the layer-cake integral
/// `∫₀^∞ P[η^κ ≥ t] dt`.
pub fn eta_moment(density: &DensityModel, params: &EtaMomentParams, mode: MomentMode) -> Result<MomentEstimate> {
    params.validate()?;
    if params.kappa == 0.0 {
        return Ok(MomentEstimate { value: 1.0, std_err: 0.0 });
    }
    match mode {
        MomentMode::MonteCarlo => {
            let d = first_nn_samples(density, params.n, params.trials, params.seed, Purpose::Configuration)?;
            let cap = params.cap();
            let vals: Vec<f64> = d.iter().map(|&x| x.min(cap).powf(params.kappa)).collect();
            Ok(mean_and_se(&vals))
        }
        MomentMode::LayerCakeOracle => {
            if density.is_uniform_box() && params.cap() < 0.5 * min_extent(&density.support_box()) {
                let cdf = UniformBoxNnCdf::new(density.support_box(), params.n);
                let value = layer_cake(params, &|s| cdf.prob_at_most(s))?;
                Ok(MomentEstimate { value, std_err: 0.0 })
            } else {
                // empirical CDF from an independent oracle stream
                let mut d = first_nn_samples(density, params.n, params.trials, params.seed, Purpose::Oracle)?;
                d.sort_by(f64::total_cmp);
                let m = d.len() as f64;
                let cdf = |s: f64| d.partition_point(|&v| v <= s) as f64 / m;
                let value = layer_cake(params, &cdf)?;
                let cap = params.cap();
                let vals: Vec<f64> = d.iter().map(|&x| x.min(cap).powf(params.kappa)).collect();
                Ok(MomentEstimate {
                    value,
                    std_err: mean_and_se(&vals).std_err,
                })
            }
        }
    }
}

fn min_extent(b: &Aabb) -> f64 {
    let e = b.extent();
    e.x.min(e.y).min(e.z)
}

/// Pairwise-summed mean and standard error.
pub fn mean_and_se(vals: &[f64]) -> MomentEstimate {
    let n = vals.len() as f64;
    let mean = crate::geometry::pairwise_sum(vals) / n;
    let dev: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = crate::geometry::pairwise_sum(&dev) / (n - 1.0).max(1.0);
    MomentEstimate {
        value: mean,
        std_err: (var / n).sqrt(),
    }
}

/// `d_1` for `trials` independent configurations (only particle 1 is measured).
fn first_nn_samples(density: &DensityModel, n: usize, trials: usize, seed: u64, purpose: Purpose) -> Result<Vec<f64>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k, purpose);
            let x1 = density.sample(&mut rng)?;
            let mut best = f64::INFINITY;
            for _ in 1..n {
                let y = density.sample(&mut rng)?;
                best = best.min((x1 - y).norm());
            }
            Ok(best)
        })
        .collect()
}

/// Geometric intervals for the layer-cake integral.
const LAYER_CAKE_INTERVALS: usize = 400;
/// Relative agreement required between the full and half-resolution sums.
const LAYER_CAKE_RTOL: f64 = 1e-3;
/// Decades spanned below the cap `m_η ε^β`.
const LAYER_CAKE_DECADES: f64 = 7.0;

/// Substituting `t = s^κ` turns the layer-cake integral into
/// `κ>0: ∫₀^{s₀} κ s^{κ-1} P[d > s] ds` and
/// `κ<0: s₀^κ + ∫₀^{s₀} |κ| s^{κ-1} P[d ≤ s] ds`, `s₀ = m_η ε^β`;
/// the grid in `s` is geometric, i.e. geometric in `t` from `s₀^κ`.
/// The half-resolution sum reuses every other node.
fn layer_cake(params: &EtaMomentParams, cdf: &(dyn Fn(f64) -> f64 + Sync)) -> Result<f64> {
    let kappa = params.kappa;
    let s0 = params.cap();
    let ln_hi = s0.ln();
    let ln_lo = ln_hi - LAYER_CAKE_DECADES * std::f64::consts::LN_10;
    let step = (ln_hi - ln_lo) / LAYER_CAKE_INTERVALS as f64;
    let nodes: Vec<(f64, f64)> = (0..=LAYER_CAKE_INTERVALS)
        .into_par_iter()
        .map(|j| {
            let s = (ln_lo + step * j as f64).exp();
            (s, cdf(s))
        })
        .collect();
    // f(s) ds = f(s) s d(ln s)
    let integrand = |&(s, c): &(f64, f64)| -> f64 {
        if kappa > 0.0 {
            kappa * s.powf(kappa) * (1.0 - c)
        } else {
            -kappa * s.powf(kappa) * c
        }
    };
    let (s_min, c_min) = nodes[0];
    let tail = if kappa > 0.0 {
        // P[d > s] ≈ 1 below s_min
        s_min.powf(kappa) * (1.0 - c_min)
    } else {
        // P[d ≤ s] ∝ s³ below s_min
        s0.powf(kappa) + c_min * s_min.powf(kappa) * (-kappa) / (kappa + 3.0)
    };
    let trapezoid = |stride: usize| -> f64 {
        let h = step * stride as f64;
        let last = nodes.len() - 1;
        let terms: Vec<f64> = (0..=last)
            .step_by(stride)
            .map(|j| {
                let w = if j == 0 || j == last { 0.5 * h } else { h };
                w * integrand(&nodes[j])
            })
            .collect();
        crate::geometry::pairwise_sum(&terms)
    };
    let full = tail + trapezoid(1);
    let half = tail + trapezoid(2);
    if (full - half).abs() > LAYER_CAKE_RTOL * full.abs() {
        return Err(Error::Quadrature(format!("layer-cake integral {full} vs {half} at half resolution")));
    }
    Ok(full)
}

/// Exact `P[d_1 ≤ s]` for `N` uniform points in a box:
/// `1 − (1/|B|) ∫_B (1 − |B_s(x) ∩ B| / |B|)^{N−1} dx`.
#[derive(Debug, Clone)]
pub struct UniformBoxNnCdf {
    support: Aabb,
    n: usize,
    gauss: GaussRule,
}

impl UniformBoxNnCdf {
    pub fn new(support: Aabb, n: usize) -> Self {
        Self {
            support,
            n,
            gauss: GaussRule::new(8),
        }
    }

    /// Requires `2s` below every side of the box.
    pub fn prob_at_most(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let vol = self.support.volume();
        let e = self.support.extent();
        assert!(2.0 * s < e.x.min(e.y).min(e.z), "radius too large for the symmetric reduction");
        // per axis: Gauss nodes in the boundary layer (weight doubled by
        // reflection) plus one node for the interior slab
        let axis_nodes = |k: usize| -> Vec<(f64, f64, bool)> {
            let lo = self.support.lo[k];
            let mut v: Vec<(f64, f64, bool)> = self.gauss.on(lo, lo + s).map(|(x, w)| (x, 2.0 * w, true)).collect();
            v.push((lo + 0.5 * e[k], e[k] - 2.0 * s, false));
            v
        };
        let (nx, ny, nz) = (axis_nodes(0), axis_nodes(1), axis_nodes(2));
        let ball = 4.0 * PI * s.powi(3) / 3.0;
        let pow = (self.n - 1) as f64;
        let mut acc = Vec::with_capacity(nx.len() * ny.len() * nz.len());
        for &(z, wz, bz) in &nz {
            for &(y, wy, by) in &ny {
                for &(x, wx, bx) in &nx {
                    let c = Point::new(x, y, z);
                    let faces = bx as u8 + by as u8 + bz as u8;
                    let v = match faces {
                        0 => ball,
                        1 => {
                            let d = if bx {
                                x - self.support.lo.x
                            } else if by {
                                y - self.support.lo.y
                            } else {
                                z - self.support.lo.z
                            };
                            ball - cap_volume(s, s - d)
                        }
                        _ => ball_box_volume(&c, s, &self.support),
                    };
                    let p_empty = (pow * (-v / vol).ln_1p()).exp();
                    acc.push(wx * wy * wz * p_empty);
                }
            }
        }
        1.0 - crate::geometry::pairwise_sum(&acc) / vol
    }
}

fn gauss8() -> &'static GaussRule {
    static RULE: std::sync::OnceLock<GaussRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(8))
}

/// Volume of a spherical cap of height `h` on a ball of radius `r`.
fn cap_volume(r: f64, h: f64) -> f64 {
    if h <= 0.0 {
        0.0
    } else {
        PI * h * h * (3.0 * r - h) / 3.0
    }
}

/// `|B_r(c) ∩ box|` by nested Gauss quadrature in angular variables, split at
/// every radius where the section starts touching an edge or corner.
pub fn ball_box_volume(c: &Point, r: f64, b: &Aabb) -> f64 {
    let gauss = gauss8();
    // slices z = c_z + r sin φ with disc radius r cos φ
    let phi_lo = ((b.lo.z - c.z) / r).clamp(-1.0, 1.0).asin();
    let phi_hi = ((b.hi.z - c.z) / r).clamp(-1.0, 1.0).asin();
    if phi_hi <= phi_lo {
        return 0.0;
    }
    let dx = [c.x - b.lo.x, b.hi.x - c.x];
    let dy = [c.y - b.lo.y, b.hi.y - c.y];
    let mut crit: Vec<f64> = Vec::new();
    for &a in dx.iter().chain(dy.iter()) {
        crit.push(a);
    }
    for &a in &dx {
        for &bb in &dy {
            if a > 0.0 && bb > 0.0 {
                crit.push((a * a + bb * bb).sqrt());
            }
        }
    }
    // (φ, contact onset?) where the section starts touching an edge or corner
    let mut breaks = vec![(phi_lo, false), (phi_hi, false)];
    for d in crit {
        if d > 0.0 && d < r {
            let phi = (d / r).acos();
            for p in [phi, -phi] {
                if p > phi_lo && p < phi_hi {
                    breaks.push((p, true));
                }
            }
        }
    }
    breaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let f = |phi: f64| {
        let rho = r * phi.cos();
        disc_rect_area(c.x, c.y, rho, b) * r * phi.cos()
    };
    // the section area grows like (ρ − d)^{3/2} past a contact; φ = φ_c + Δ t²
    // turns that into a smooth t³
    let onset = |from: f64, to: f64| gauss.integrate(0.0, 1.0, |t| f(from + (to - from) * t * t) * 2.0 * t * (to - from));
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let ((p0, s0), (p1, s1)) = (w[0], w[1]);
        total += match (s0, s1) {
            (false, false) => gauss.integrate(p0, p1, f),
            (true, false) => onset(p0, p1),
            (false, true) => -onset(p1, p0),
            (true, true) => {
                let m = 0.5 * (p0 + p1);
                onset(p0, m) - onset(p1, m)
            }
        };
    }
    total
}

/// `|disc_ρ(cx, cy) ∩ [x0,x1]×[y0,y1]|`.
fn disc_rect_area(cx: f64, cy: f64, rho: f64, b: &Aabb) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let gauss = gauss8();
    let th_lo = ((b.lo.y - cy) / rho).clamp(-1.0, 1.0).asin();
    let th_hi = ((b.hi.y - cy) / rho).clamp(-1.0, 1.0).asin();
    if th_hi <= th_lo {
        return 0.0;
    }
    let mut breaks = vec![th_lo, th_hi];
    for d in [cx - b.lo.x, b.hi.x - cx] {
        if d > 0.0 && d < rho {
            let th = (d / rho).acos();
            for t in [th, -th] {
                if t > th_lo && t < th_hi {
                    breaks.push(t);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += gauss.integrate(w[0], w[1], |th| {
            let half = rho * th.cos();
            let len = ((cx + half).min(b.hi.x) - (cx - half).max(b.lo.x)).max(0.0);
            len * rho * th.cos()
        });
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::brute_force_nearest_neighbor_distances;

    fn cfg(points: &[(f64, f64, f64)]) -> ParticleConfiguration {
        ParticleConfiguration::from_centers(points.iter().map(|&(x, y, z)| Point::new(x, y, z)).collect(), 2.5).unwrap()
    }

    #[test]
    fn wilson_interval_properties() {
        let e = EventEstimate::wilson(1000, 1000);
        assert_eq!(e.p_hat, 1.0);
        assert!(e.ci_low >= 0.99 && e.ci_high == 1.0);
        let z = EventEstimate::wilson(0, 50);
        assert_eq!(z.p_hat, 0.0);
        assert_eq!(z.ci_low, 0.0);
        let m = EventEstimate::wilson(37, 100);
        assert!(m.ci_low < 0.37 && 0.37 < m.ci_high);
    }

    #[test]
    fn indicator_a_examples() {
        let one = cfg(&[(0.5, 0.5, 0.5)]);
        assert!(indicator_a(&one, 1.0, 2.5).unwrap());
        let two = cfg(&[(0.0, 0.0, 0.0), (0.1, 0.0, 0.0)]);
        // ε = 2^{-1/3}; choose L so that 2 L ε^α = 0.2
        let l = 0.1 / two.eps().powf(2.5);
        assert!(!indicator_a(&two, l, 2.5).unwrap());
        assert!(indicator_a(&two, 0.5 * l, 2.5).unwrap());
        assert!(indicator_a(&two, 0.0, 2.5).is_err());
    }

    #[test]
    fn smeared_sup_examples() {
        let one = cfg(&[(0.5, 0.5, 0.5)]);
        assert_eq!(smeared_density_sup(&one, 0.3).unwrap(), 1.0);
        let two = cfg(&[(0.5, 0.5, 0.5), (0.5, 0.5, 0.5)]);
        let s = SmearedDensity::new(&two, 0.3).unwrap();
        let expect = 2.0 / (2.0 * two.eps().powf(3.0 * 0.7));
        assert!((s.sup() - expect).abs() < 1e-12 * expect);
        assert!((s.total_mass() - 1.0).abs() < 1e-12);
        assert!(smeared_density_sup(&two, 1.0).is_err());
    }

    fn brute_multiplicity(centers: &[Point], side: f64) -> usize {
        let h = 0.5 * side;
        let mut xs: Vec<Vec<f64>> = vec![Vec::new(); 3];
        for c in centers {
            for k in 0..3 {
                xs[k].push(c[k] - h);
            }
        }
        let mut best = 0;
        for &x in &xs[0] {
            for &y in &xs[1] {
                for &z in &xs[2] {
                    let p = Point::new(x, y, z);
                    let n = centers.iter().filter(|c| (0..3).all(|k| c[k] - h <= p[k] && p[k] < c[k] + h)).count();
                    best = best.max(n);
                }
            }
        }
        best
    }

    #[test]
    fn sweep_matches_corner_enumeration() {
        for k in 0..20 {
            let c = sample_replicate(&DensityModel::unit_cube(), 60, 2.5, 99, k).unwrap();
            for side in [0.05, 0.2, 0.45] {
                assert_eq!(
                    max_cover_multiplicity(c.centers(), side),
                    brute_multiplicity(c.centers(), side),
                    "k={k} side={side}"
                );
            }
        }
    }

    #[test]
    fn upper_bound_dominates_exact() {
        for k in 0..10 {
            let c = sample_replicate(&DensityModel::unit_cube(), 500, 2.5, 5, k).unwrap();
            let side = c.eps().powf(0.7);
            assert!(multiplicity_upper_bound(c.centers(), side) >= max_cover_multiplicity(c.centers(), side));
        }
    }

    #[test]
    fn smeared_value_matches_sup_at_deepest_point() {
        let c = cfg(&[(0.5, 0.5, 0.5), (0.55, 0.52, 0.49), (0.9, 0.1, 0.1)]);
        let s = SmearedDensity::new(&c, 0.5).unwrap();
        let v = s.value_at(&Point::new(0.52, 0.51, 0.5));
        assert!((v - s.sup()).abs() < 1e-12);
        assert!(s.sup() >= s.cube_height());
    }

    #[test]
    fn estimate_always_true_and_false() {
        let d = DensityModel::unit_cube();
        let t = estimate_event_probability(&|_| Ok(true), &d, 10, 2.5, 1000, 1).unwrap();
        assert_eq!(t.p_hat, 1.0);
        assert!(t.ci_low >= 0.99);
        let f = estimate_event_probability(&|_| Ok(false), &d, 10, 2.5, 100, 1).unwrap();
        assert_eq!(f.p_hat, 0.0);
        assert!(estimate_event_probability(&|_| Ok(true), &d, 10, 2.5, 29, 1).is_err());
    }

    #[test]
    fn ball_box_volume_cases() {
        let b = Aabb::unit_cube();
        let r = 0.2;
        let full = 4.0 * PI * r * r * r / 3.0;
        assert!((ball_box_volume(&Point::repeat(0.5), r, &b) - full).abs() < 1e-7 * full);
        // centre on a face, an edge and a corner
        assert!((ball_box_volume(&Point::new(0.0, 0.5, 0.5), r, &b) - full / 2.0).abs() < 1e-7 * full);
        assert!((ball_box_volume(&Point::new(0.0, 0.0, 0.5), r, &b) - full / 4.0).abs() < 1e-7 * full);
        assert!((ball_box_volume(&Point::new(0.0, 0.0, 0.0), r, &b) - full / 8.0).abs() < 1e-7 * full);
        let d = 0.07;
        let cap = full - cap_volume(r, r - d);
        assert!((ball_box_volume(&Point::new(d, 0.5, 0.5), r, &b) - cap).abs() < 1e-7 * full);
    }

    #[test]
    fn ball_box_volume_against_monte_carlo() {
        use rand::Rng;
        let b = Aabb::unit_cube();
        let c = Point::new(0.05, 0.12, 0.93);
        let r = 0.15;
        let mut rng = stream(3, 0, Purpose::Oracle);
        let m = 400_000;
        let mut hit = 0;
        for _ in 0..m {
            let p = c + r * Point::new(
                2.0 * rng.random::<f64>() - 1.0,
                2.0 * rng.random::<f64>() - 1.0,
                2.0 * rng.random::<f64>() - 1.0,
            );
            if (p - c).norm() <= r && b.contains(&p) {
                hit += 1;
            }
        }
        let mc = hit as f64 / m as f64 * 8.0 * r * r * r;
        let exact = ball_box_volume(&c, r, &b);
        assert!((mc - exact).abs() < 4.0 * (exact * 8.0 * r * r * r / m as f64).sqrt(), "{mc} vs {exact}");
    }

    #[test]
    fn eta_moment_kappa_zero_and_positive() {
        let d = DensityModel::unit_cube();
        for mode in [MomentMode::MonteCarlo, MomentMode::LayerCakeOracle] {
            let p = EtaMomentParams {
                n: 1000,
                beta: 1.0,
                m_eta: 1.0,
                kappa: 0.0,
                trials: 100,
                seed: 1,
            };
            assert_eq!(eta_moment(&d, &p, mode).unwrap().value, 1.0);
            let p2 = EtaMomentParams { kappa: 2.0, ..p };
            let v = eta_moment(&d, &p2, mode).unwrap().value;
            assert!(v <= 0.1f64.powi(2) * (1.0 + 1e-9), "{v}");
        }
        let bad = EtaMomentParams {
            n: 100,
            beta: 1.0,
            m_eta: 1.0,
            kappa: -3.0,
            trials: 10,
            seed: 1,
        };
        assert!(eta_moment(&d, &bad, MomentMode::MonteCarlo).is_err());
    }

    #[test]
    fn negative_moment_lower_bound_holds() {
        let d = DensityModel::unit_cube();
        let p = EtaMomentParams {
            n: 500,
            beta: 1.0,
            m_eta: 0.5,
            kappa: -1.5,
            trials: 300,
            seed: 4,
        };
        let v = eta_moment(&d, &p, MomentMode::MonteCarlo).unwrap().value;
        assert!(v >= p.cap().powf(p.kappa));
    }

    #[test]
    fn nn_samples_agree_with_full_scan() {
        let d = DensityModel::unit_cube();
        let s = first_nn_samples(&d, 50, 3, 8, Purpose::Configuration).unwrap();
        for (k, &v) in s.iter().enumerate() {
            let mut rng = stream(8, k as u64, Purpose::Configuration);
            let pts: Vec<Point> = (0..50).map(|_| d.sample(&mut rng).unwrap()).collect();
            assert_eq!(v, brute_force_nearest_neighbor_distances(&pts)[0]);
        }
    }
}
