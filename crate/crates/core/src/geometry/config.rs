use crate::error::{invalid, Error, Result};
use crate::geometry::density::DensityModel;
use crate::geometry::neighbors::nearest_neighbor_distances;
use crate::geometry::Point;
use crate::rng::{stream, Purpose};
use rand::Rng;
use std::fmt::Write as _;
use std::sync::OnceLock;

/// `N` particle centres with `ε = N^{-1/3}` and hole-size exponent `α`.
#[derive(Debug, Clone)]
pub struct ParticleConfiguration {
    centers: Vec<Point>,
    eps: f64,
    alpha: f64,
    seed: Option<u64>,
    nn: OnceLock<Vec<f64>>,
}

impl PartialEq for ParticleConfiguration {
    fn eq(&self, other: &Self) -> bool {
        self.centers == other.centers && self.alpha == other.alpha && self.seed == other.seed
    }
}

pub fn eps_of(n: usize) -> f64 {
    (n as f64).powf(-1.0 / 3.0)
}

impl ParticleConfiguration {
    pub fn from_centers(centers: Vec<Point>, alpha: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(invalid("N", "need at least one centre"));
        }
        if !(alpha > 1.0) {
            return Err(invalid("alpha", "hole-size exponent must satisfy α > 1"));
        }
        if centers.iter().any(|c| !c.iter().all(|v| v.is_finite())) {
            return Err(invalid("centers", "centres must be finite"));
        }
        let eps = eps_of(centers.len());
        Ok(Self {
            centers,
            eps,
            alpha,
            seed: None,
            nn: OnceLock::new(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Hole scale `ε^α`.
    pub fn hole_scale(&self) -> f64 {
        self.eps.powf(self.alpha)
    }

    /// Per-particle nearest-neighbour distance `d_i`, computed on first use.
    pub fn nn_dist(&self) -> &[f64] {
        self.nn.get_or_init(|| nearest_neighbor_distances(&self.centers))
    }

    /// Columnar text: a header comment then one `x y z` line per centre.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let seed = self.seed.map(|v| v.to_string()).unwrap_or_else(|| "none".into());
        let _ = writeln!(s, "# N={} eps={} alpha={} seed={}", self.len(), self.eps, self.alpha, seed);
        for c in &self.centers {
            let _ = writeln!(s, "{} {} {}", c.x, c.y, c.z);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut alpha = None;
        let mut seed = None;
        let mut n_header = None;
        let mut centers = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                for kv in h.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("alpha", v)) => alpha = v.parse::<f64>().ok(),
                        Some(("seed", v)) => seed = v.parse::<u64>().ok(),
                        Some(("N", v)) => n_header = v.parse::<usize>().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line: ln + 1,
                    msg: "expected three floats".into(),
                })?;
            if vals.len() != 3 {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: "expected three floats".into(),
                });
            }
            centers.push(Point::new(vals[0], vals[1], vals[2]));
        }
        if let Some(n) = n_header {
            if n != centers.len() {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("header says N={n}, found {}", centers.len()),
                });
            }
        }
        let alpha = alpha.ok_or(Error::Parse {
            line: 1,
            msg: "missing alpha in header".into(),
        })?;
        let mut cfg = Self::from_centers(centers, alpha)?;
        cfg.seed = seed;
        Ok(cfg)
    }
}

/// `N` i.i.d. centres from `density`, drawn from the configuration stream of `seed`.
pub fn sample_configuration(density: &DensityModel, n: usize, alpha: f64, seed: u64) -> Result<ParticleConfiguration> {
    sample_replicate(density, n, alpha, seed, 0)
}

/// Replicate `k` of a run keyed by `master`; independent of every other replicate.
pub fn sample_replicate(density: &DensityModel, n: usize, alpha: f64, master: u64, replicate: u64) -> Result<ParticleConfiguration> {
    let mut rng = stream(master, replicate, Purpose::Configuration);
    let cfg = sample_with(density, n, alpha, &mut rng)?;
    Ok(cfg.with_seed(master))
}

pub(crate) fn sample_points<R: Rng + ?Sized>(density: &DensityModel, n: usize, rng: &mut R) -> Result<Vec<Point>> {
    (0..n).map(|_| density.sample(rng)).collect()
}

pub(crate) fn sample_with<R: Rng + ?Sized>(density: &DensityModel, n: usize, alpha: f64, rng: &mut R) -> Result<ParticleConfiguration> {
    if n == 0 {
        return Err(invalid("N", "N ≥ 1"));
    }
    ParticleConfiguration::from_centers(sample_points(density, n, rng)?, alpha)
}
