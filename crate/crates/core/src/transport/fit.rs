use crate::error::{invalid, Result};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Least-squares line through `(ln scale, ln value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub log_x: Vec<f64>,
    pub log_y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// 95% interval for the slope.
    pub slope_ci: (f64, f64),
}

impl RateFit {
    /// Fitted `exp(intercept) · scale^slope`.
    pub fn predict(&self, scale: f64) -> f64 {
        (self.intercept + self.slope * scale.ln()).exp()
    }
}

pub fn fit_power_law(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(invalid("pairs", "at least 3 (scale, value) pairs"));
    }
    if pairs.iter().any(|&(s, v)| !(s > 0.0 && v > 0.0 && s.is_finite() && v.is_finite())) {
        return Err(invalid("pairs", "scales and values must be positive and finite"));
    }
    let log_x: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let log_y: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = pairs.len() as f64;
    let mx = log_x.iter().sum::<f64>() / n;
    let my = log_y.iter().sum::<f64>() / n;
    let sxx: f64 = log_x.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(invalid("pairs", "at least two distinct scales"));
    }
    let sxy: f64 = log_x.iter().zip(&log_y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = log_x.iter().zip(&log_y).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = n - 2.0;
    let se = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).expect("dof ≥ 1").inverse_cdf(0.975);
    Ok(RateFit {
        log_x,
        log_y,
        slope,
        intercept,
        slope_ci: (slope - t * se, slope + t * se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_and_constant() {
        let f = fit_power_law(&[(0.5, 0.25), (0.25, 0.0625), (0.1, 0.01), (0.01, 1e-4)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-9);
        assert!(f.slope_ci.0 <= f.slope && f.slope <= f.slope_ci.1);
        let c = fit_power_law(&[(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert!(c.slope.abs() < 1e-12);
        assert!((c.predict(10.0) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_three_halves() {
        use rand::Rng;
        let mut rng = crate::rng::stream(11, 0, crate::rng::Purpose::Oracle);
        let pairs: Vec<(f64, f64)> = (0..8)
            .map(|k| {
                let s = 2f64.powi(-k);
                (s, s.powf(1.5) * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)))
            })
            .collect();
        let f = fit_power_law(&pairs).unwrap();
        assert!((f.slope - 1.5).abs() < 0.1);
        assert!(f.slope_ci.0 < 1.5 && 1.5 < f.slope_ci.1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
    }
}
