use brinklab::fields::BoxSpec;
use brinklab::geometry::{Aabb, DensityModel, Point, ReferenceParticle};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Events,
    EtaMoments,
    W2Rates,
    Hneg1,
    Corrector,
    Resistance,
    BrinkmanGap,
    NnScaling,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string tag"))
    }
}

/// Which configuration event the `events` experiment counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// Minimum distance at least `2 L ε²` with `L = ε^{α−2}`.
    #[default]
    Separation,
    /// Smeared density bounded by `2‖ρ‖_∞`.
    Smeared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    UniformBox {
        lo: [f64; 3],
        hi: [f64; 3],
    },
    UniformBall {
        center: [f64; 3],
        radius: f64,
    },
    Grid {
        lo: [f64; 3],
        hi: [f64; 3],
        dims: [usize; 3],
        weights: Vec<f64>,
    },
}

impl Default for DensitySpec {
    fn default() -> Self {
        DensitySpec::UniformBox { lo: [0.0; 3], hi: [1.0; 3] }
    }
}

impl DensitySpec {
    pub fn build(&self) -> brinklab::Result<DensityModel> {
        match self {
            DensitySpec::UniformBox { lo, hi } => DensityModel::uniform_box(Aabb::new(Point::from(*lo), Point::from(*hi))),
            DensitySpec::UniformBall { center, radius } => DensityModel::uniform_ball(Point::from(*center), *radius),
            DensitySpec::Grid { lo, hi, dims, weights } => {
                DensityModel::grid_from_weights(Aabb::new(Point::from(*lo), Point::from(*hi)), *dims, weights)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Cells per axis.
    pub n: usize,
    /// Box side; defaults to twice the support diameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 64, side: None }
    }
}

/// One experiment, read from a TOML file.
///
/// `n_list` holds particle numbers for every kind except `resistance`,
/// where it lists icosphere refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub n_list: Vec<usize>,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::one")]
    pub beta: f64,
    #[serde(default = "defaults::lambda")]
    pub lambda: f64,
    #[serde(default = "defaults::one")]
    pub m_eta: f64,
    #[serde(default = "defaults::one")]
    pub kappa: f64,
    /// Radius of the spherical reference particle (or of the meshed sphere
    /// for `resistance`).
    #[serde(default = "defaults::radius")]
    pub particle_radius: f64,
    /// Fixed truncation radius for the single-hole corrector sweep.
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    /// Reference sample size for `W₂` surrogates, as a multiple of `N`.
    #[serde(default = "defaults::ref_factor")]
    pub ref_factor: usize,
    #[serde(default)]
    pub event: EventKind,
    #[serde(default)]
    pub density: DensitySpec,
    #[serde(default)]
    pub grid: GridSpec,
    /// Report path without extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

mod defaults {
    pub fn trials() -> usize {
        100
    }
    pub fn alpha() -> f64 {
        2.5
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn lambda() -> f64 {
        0.3
    }
    pub fn radius() -> f64 {
        0.125
    }
    pub fn eta() -> f64 {
        0.0625
    }
    pub fn ref_factor() -> usize {
        16
    }
}

/// Largest `N` per kind.
pub const N_CAP: usize = 1 << 24;
pub const W2_N_CAP: usize = 2048;
pub const BRINKMAN_N_CAP: usize = 100_000;
pub const LEVEL_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid `{field}`: {constraint}")]
pub struct ConfigError {
    pub field: String,
    pub constraint: String,
}

fn fail(field: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        constraint: constraint.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| fail("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        use ExperimentKind::*;
        if self.n_list.is_empty() {
            return Err(fail("n_list", "at least one entry"));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(fail("n_list", "strictly increasing"));
        }
        if self.kind == Resistance {
            if self.n_list.iter().any(|&l| l > LEVEL_CAP) {
                return Err(fail("n_list", format!("refinement levels ≤ {LEVEL_CAP}")));
            }
            if !(self.particle_radius > 0.0) {
                return Err(fail("particle_radius", "radius > 0"));
            }
            return Ok(());
        }
        let min_n = if self.kind == Corrector { 1 } else { 2 };
        if self.n_list[0] < min_n {
            return Err(fail("n_list", format!("N ≥ {min_n}")));
        }
        let cap = match self.kind {
            W2Rates | Hneg1 => W2_N_CAP,
            BrinkmanGap => BRINKMAN_N_CAP,
            _ => N_CAP,
        };
        if *self.n_list.last().unwrap() > cap {
            return Err(fail("n_list", format!("N ≤ {cap} for {}", self.kind)));
        }
        let min_trials = if self.kind == Events { 30 } else { 2 };
        if self.kind != Corrector && self.trials < min_trials {
            return Err(fail("trials", format!("trials ≥ {min_trials}")));
        }
        if !(self.alpha > 1.0) {
            return Err(fail("alpha", "α > 1"));
        }
        if !(self.beta >= 1.0 && self.beta <= self.alpha) {
            return Err(fail("beta", "1 ≤ β ≤ α"));
        }
        if !(self.m_eta > 0.0 && self.m_eta <= 1.0) || (self.beta == self.alpha && self.m_eta != 1.0) {
            return Err(fail("m_eta", "0 < m_η ≤ 1, and m_η = 1 when β = α"));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(fail("lambda", "0 < λ < 1"));
        }
        if !(self.kappa > -3.0) {
            return Err(fail("kappa", "κ > −3"));
        }
        if ReferenceParticle::sphere(self.particle_radius).is_err() {
            return Err(fail("particle_radius", "0 < r < 1/4"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(fail("eta", "0 < η ≤ 1"));
        }
        if self.ref_factor < 1 || (self.kind != BrinkmanGap && self.ref_factor < 4) {
            return Err(fail("ref_factor", "ref_factor ≥ 4 (≥ 1 for brinkman-gap)"));
        }
        let density = self.density.build().map_err(|e| fail("density", e.to_string()))?;
        self.box_spec(&density).map_err(|e| fail("grid", e.to_string()))?;
        Ok(())
    }

    pub fn box_spec(&self, density: &DensityModel) -> brinklab::Result<BoxSpec> {
        let support = density.support_box();
        let side = self.grid.side.unwrap_or(2.0 * support.diameter());
        let spec = BoxSpec::new(support.center(), side, self.grid.n)?;
        spec.check_margin(&support)?;
        Ok(spec)
    }
}
