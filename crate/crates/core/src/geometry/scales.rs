use crate::error::{invalid, Result};
use crate::geometry::config::ParticleConfiguration;

/// Per-particle truncation radii `η_i = min{m_η ε^β, d_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationScales {
    pub beta: f64,
    pub m_eta: f64,
    pub eta: Vec<f64>,
}

impl TruncationScales {
    pub fn cap(&self, eps: f64) -> f64 {
        self.m_eta * eps.powf(self.beta)
    }
}

pub(crate) fn check_scale_params(beta: f64, m_eta: f64, alpha: f64) -> Result<()> {
    if !(1.0..=alpha).contains(&beta) {
        return Err(invalid("beta", format!("need 1 ≤ β ≤ α = {alpha}, got {beta}")));
    }
    if !(m_eta > 0.0 && m_eta <= 1.0) {
        return Err(invalid("m_eta", format!("need 0 < m_η ≤ 1, got {m_eta}")));
    }
    if beta == alpha && m_eta != 1.0 {
        return Err(invalid("m_eta", "m_η = 1 is required when β = α"));
    }
    Ok(())
}

pub fn truncation_scales(config: &ParticleConfiguration, beta: f64, m_eta: f64) -> Result<TruncationScales> {
    check_scale_params(beta, m_eta, config.alpha())?;
    let cap = m_eta * config.eps().powf(beta);
    let eta = config.nn_dist().iter().map(|&d| d.min(cap)).collect();
    Ok(TruncationScales { beta, m_eta, eta })
}
