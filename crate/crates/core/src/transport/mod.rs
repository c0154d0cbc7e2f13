//! Exact and plan-based quadratic Wasserstein distances, and power-law fits.

mod auction;
mod fit;

pub use fit::{fit_power_law, RateFit};

use crate::error::{invalid, Error, Result};
use crate::events::SmearedDensity;
use crate::geometry::{pairwise_sum, Aabb, DensityModel, ParticleConfiguration, Point};
use crate::rng::{stream, Purpose};

/// Largest uniform measure accepted by [`w2_assignment`].
pub const ASSIGNMENT_CAP: usize = 4096;
/// Largest support of a non-uniform measure before weight splitting.
pub const SPLITTING_CAP: usize = 512;
/// Largest configuration for [`w2_empirical_vs_density`].
pub const EMPIRICAL_CAP: usize = 2048;
/// Default reference sample size per particle.
pub const DEFAULT_REF_FACTOR: usize = 16;

const WEIGHT_TOL: f64 = 1e-12;

/// Weighted point cloud with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::WeightMismatch(format!("{} points with {} weights", points.len(), weights.len())));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::WeightMismatch("weights must be finite and nonnegative".into()));
        }
        let total = pairwise_sum(&weights);
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::WeightMismatch(format!("weights sum to {total}")));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(invalid("points", "finite coordinates"));
        }
        Ok(Self { points, weights })
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// The empirical measure `(1/N) Σ δ_{x_i}`.
    pub fn empirical(config: &ParticleConfiguration) -> Self {
        Self::uniform(config.centers().to_vec()).expect("configurations are nonempty")
    }

    /// Cell-centre discretization of a piecewise-constant density.
    pub fn from_cells(support: Aabb, dims: [usize; 3], masses: &[f64]) -> Result<Self> {
        if masses.len() != dims.iter().product::<usize>() {
            return Err(Error::WeightMismatch("one mass per cell".into()));
        }
        let e = support.extent();
        let h = Point::new(e.x / dims[0] as f64, e.y / dims[1] as f64, e.z / dims[2] as f64);
        let mut points = Vec::with_capacity(masses.len());
        for iz in 0..dims[2] {
            for iy in 0..dims[1] {
                for ix in 0..dims[0] {
                    points.push(support.lo + h.component_mul(&Point::new(ix as f64 + 0.5, iy as f64 + 0.5, iz as f64 + 0.5)));
                }
            }
        }
        Self::new(points, masses.to_vec())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&v| (v - w).abs() <= WEIGHT_TOL)
    }

    /// Every point repeated `m_i = w_i K` times for the smallest `K ≤ cap`
    /// making all multiplicities integral.
    fn split(&self, cap: usize) -> Option<Vec<Point>> {
        let n = self.len();
        'outer: for k in 1..=cap {
            let mut counts = Vec::with_capacity(n);
            for &w in &self.weights {
                let m = w * k as f64;
                let r = m.round();
                if (m - r).abs() > 1e-9 {
                    continue 'outer;
                }
                counts.push(r as usize);
            }
            if counts.iter().sum::<usize>() != k {
                continue;
            }
            let mut out = Vec::with_capacity(k);
            for (p, &c) in self.points.iter().zip(&counts) {
                out.extend(std::iter::repeat_n(*p, c));
            }
            return Some(out);
        }
        None
    }
}

/// Exact `W₂(μ, ν)`.
///
/// Uniform measures of equal size up to [`ASSIGNMENT_CAP`] go straight to the
/// assignment solver; other weights are split into equal atoms when both
/// supports have at most [`SPLITTING_CAP`] points.
pub fn w2_assignment(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let (a, b) = if mu.is_uniform() && nu.is_uniform() && mu.len() == nu.len() {
        if mu.len() > ASSIGNMENT_CAP {
            return Err(Error::SizeCap {
                what: "w2_assignment points",
                size: mu.len(),
                cap: ASSIGNMENT_CAP,
            });
        }
        (mu.points.clone(), nu.points.clone())
    } else {
        for m in [mu, nu] {
            if m.len() > SPLITTING_CAP {
                return Err(Error::SizeCap {
                    what: "w2_assignment weighted support",
                    size: m.len(),
                    cap: SPLITTING_CAP,
                });
            }
        }
        let unsplittable = || Error::WeightMismatch(format!("weights are not multiples of 1/K for K ≤ {ASSIGNMENT_CAP}"));
        let a = mu.split(ASSIGNMENT_CAP).ok_or_else(unsplittable)?;
        let b = nu.split(ASSIGNMENT_CAP).ok_or_else(unsplittable)?;
        if a.len() != b.len() {
            let (mut small, large) = if a.len() < b.len() { (a, b) } else { (b, a) };
            if large.len() % small.len() != 0 || large.len() > ASSIGNMENT_CAP {
                return Err(Error::WeightMismatch("split atom counts are incompatible".into()));
            }
            let r = large.len() / small.len();
            small = small.iter().flat_map(|p| std::iter::repeat_n(*p, r)).collect();
            (small, large)
        } else {
            (a, b)
        }
    };
    Ok(auction::solve_transport(&a, &b)?.mean_cost.sqrt())
}

/// `W₂` between `sites` with equal mass and `persons` with equal mass when
/// `persons.len()` is a multiple of `sites.len()`; no size cap.
pub fn w2_transport(persons: &[Point], sites: &[Point]) -> Result<f64> {
    Ok(auction::solve_transport(persons, sites)?.mean_cost.sqrt())
}

/// Minimum over all `n!` matchings; `n ≤ 9`.
pub fn w2_brute_force(mu: &[Point], nu: &[Point]) -> Result<f64> {
    let n = mu.len();
    if n != nu.len() || n == 0 {
        return Err(Error::WeightMismatch("equal nonempty sizes required".into()));
    }
    if n > 9 {
        return Err(Error::SizeCap {
            what: "brute-force matching",
            size: n,
            cap: 9,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let eval = |p: &[usize]| -> f64 { p.iter().enumerate().map(|(i, &j)| (mu[i] - nu[j]).norm_squared()).sum() };
    best = best.min(eval(&perm));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok((best / n as f64).sqrt())
}

/// Cost of the plan sending each `δ_{x_i}/N` uniformly over its cube of side
/// `s = ε^{1−λ}`, with the bound `√3 s` from the cube diameter.
///
/// The mean square distance from a cube's centre is `3 · s²/12`.
pub fn w2_plan_cost_smeared(config: &ParticleConfiguration, lambda: f64) -> Result<(f64, f64)> {
    let smeared = SmearedDensity::new(config, lambda)?;
    let s = smeared.side();
    let per_cube = 3.0 * s * s / 12.0;
    let terms = vec![per_cube; config.len()];
    let plan_cost = (pairwise_sum(&terms) / config.len() as f64).sqrt();
    Ok((plan_cost, 3f64.sqrt() * s))
}

/// `k³` cell centres of every smeared cube, each with mass `1/(N k³)`.
pub fn smeared_discretization(config: &ParticleConfiguration, lambda: f64, k: usize) -> Result<Vec<Point>> {
    if k == 0 {
        return Err(invalid("k", "k ≥ 1"));
    }
    let smeared = SmearedDensity::new(config, lambda)?;
    let s = smeared.side();
    let mut out = Vec::with_capacity(config.len() * k * k * k);
    for c in config.centers() {
        for iz in 0..k {
            for iy in 0..k {
                for ix in 0..k {
                    let off = Point::new(ix as f64 + 0.5, iy as f64 + 0.5, iz as f64 + 0.5) * (s / k as f64);
                    out.push(c - Point::repeat(0.5 * s) + off);
                }
            }
        }
    }
    Ok(out)
}

/// Exact `W₂` between `ρ_ε` and the `k³`-point discretization of `ρ̄_ε`.
/// The discretization itself sits within `s/(2k)` of `ρ̄_ε` in `W₂`.
pub fn w2_smeared_discretized(config: &ParticleConfiguration, lambda: f64, k: usize) -> Result<(f64, f64)> {
    let disc = smeared_discretization(config, lambda, k)?;
    let s = SmearedDensity::new(config, lambda)?.side();
    if disc.len() > ASSIGNMENT_CAP * 16 {
        return Err(Error::SizeCap {
            what: "smeared discretization",
            size: disc.len(),
            cap: ASSIGNMENT_CAP * 16,
        });
    }
    Ok((w2_transport(&disc, config.centers())?, s / (2.0 * k as f64)))
}

/// Surrogate `W₂(ρ_ε, ρ)`: exact transport from the centres to an i.i.d.
/// reference sample of `ρ` of size `ref_samples` rounded to a multiple of `N`.
///
/// Averaged over reference samples this overestimates the true distance by
/// at most the reference sample's own fluctuation.
pub fn w2_empirical_vs_density(density: &DensityModel, config: &ParticleConfiguration, ref_samples: usize, seed: u64) -> Result<f64> {
    w2_empirical_vs_density_replicate(density, config, ref_samples, seed, 0)
}

/// [`w2_empirical_vs_density`] with the reference sample drawn from replicate
/// `replicate` of the reference stream.
pub fn w2_empirical_vs_density_replicate(
    density: &DensityModel,
    config: &ParticleConfiguration,
    ref_samples: usize,
    seed: u64,
    replicate: u64,
) -> Result<f64> {
    let n = config.len();
    if n > EMPIRICAL_CAP {
        return Err(Error::SizeCap {
            what: "w2_empirical_vs_density N",
            size: n,
            cap: EMPIRICAL_CAP,
        });
    }
    if ref_samples < 4 * n {
        return Err(invalid("ref_samples", "ref_samples ≥ 4·N"));
    }
    let m = ((ref_samples as f64 / n as f64).round() as usize).max(4) * n;
    let mut rng = stream(seed, replicate, Purpose::Reference);
    let reference: Vec<Point> = (0..m).map(|_| density.sample(&mut rng)).collect::<Result<_>>()?;
    w2_config_vs_sample(config, &reference)
}

/// Exact `W₂` between the centres and an equal-weight sample whose size is a
/// multiple of `N`.
pub fn w2_config_vs_sample(config: &ParticleConfiguration, sample: &[Point]) -> Result<f64> {
    w2_transport(sample, config.centers())
}
