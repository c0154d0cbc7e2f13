use crate::config::{ExperimentConfig, ExperimentKind};
use crate::experiments::derive_seed;
use crate::report::Check;
use brinklab::events::{eta_moment, EtaMomentParams, MomentMode};
use brinklab::fields::{h_neg1_norm, BoxSpec, GridField};
use brinklab::geometry::{brute_force_nearest_neighbor_distances, sample_replicate, Point};
use brinklab::quadrature::SphereRule;
use brinklab::rng::{stream, Purpose};
use brinklab::stokes::{traction_integral, SphereStokesSolution};
use brinklab::transport::{w2_assignment, w2_brute_force, DiscreteMeasure};
use brinklab::Result;
use rand::Rng;
use std::f64::consts::PI;

/// Largest `N` for the brute-force nearest-neighbour comparison.
pub const BRUTE_NN_CAP: usize = 2000;

/// Brute-force and closed-form oracles relevant to the configured kind.
pub fn run_oracles(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let density = cfg.density.build()?;
    let mut out = Vec::new();
    match cfg.kind {
        ExperimentKind::NnScaling | ExperimentKind::Events => {
            for (idx, &n) in cfg.n_list.iter().enumerate().filter(|(_, &n)| n <= BRUTE_NN_CAP) {
                let c = sample_replicate(&density, n, cfg.alpha, derive_seed(cfg.seed, idx as u64), 0)?;
                let brute = brute_force_nearest_neighbor_distances(c.centers());
                out.push(Check {
                    name: format!("N={n}: spatial hash equals brute force"),
                    passed: brute.as_slice() == c.nn_dist(),
                    detail: String::new(),
                });
            }
        }
        ExperimentKind::W2Rates | ExperimentKind::Hneg1 | ExperimentKind::BrinkmanGap => {
            let mut rng = stream(cfg.seed, 0, Purpose::Oracle);
            let mut worst: f64 = 0.0;
            for i in 0..100 {
                let n = 1 + i % 6;
                let mut pts = || (0..n).map(|_| Point::new(rng.random(), rng.random(), rng.random())).collect::<Vec<_>>();
                let (a, b) = (pts(), pts());
                let exact = w2_brute_force(&a, &b)?;
                let solver = w2_assignment(&DiscreteMeasure::uniform(a)?, &DiscreteMeasure::uniform(b)?)?;
                worst = worst.max((solver - exact).abs() / exact.max(1e-300));
            }
            out.push(Check {
                name: "assignment solver equals brute force on 100 instances".into(),
                passed: worst <= 1e-12,
                detail: format!("worst relative error {worst:.2e}"),
            });
            let spec = BoxSpec::new(Point::zeros(), 2.0, cfg.grid.n)?;
            let l = spec.side;
            let f = GridField::from_fn(spec, |x| (2.0 * PI * x[0] / l).sin());
            let want = ((l.powi(3) / 2.0) / (1.0 + (2.0 * PI / l).powi(2))).sqrt();
            let got = h_neg1_norm(&f)?;
            let rel = (got / want - 1.0).abs();
            out.push(Check {
                name: "single-mode H⁻¹ oracle".into(),
                passed: rel <= 1e-6,
                detail: format!("relative error {rel:.2e}"),
            });
        }
        ExperimentKind::EtaMoments => {
            for (idx, &n) in cfg.n_list.iter().enumerate() {
                let params = EtaMomentParams {
                    n,
                    beta: cfg.beta,
                    m_eta: cfg.m_eta,
                    kappa: cfg.kappa,
                    trials: cfg.trials,
                    seed: derive_seed(cfg.seed, idx as u64),
                };
                let v = eta_moment(&density, &params, MomentMode::LayerCakeOracle)?;
                out.push(Check {
                    name: format!("N={n}: layer-cake oracle"),
                    passed: v.value.is_finite() && v.value > 0.0,
                    detail: format!("E[η^κ] = {:.6e}", v.value),
                });
            }
        }
        ExperimentKind::Corrector | ExperimentKind::Resistance => {
            let a = cfg.particle_radius;
            let sol = SphereStokesSolution::new(a)?;
            let rule = SphereRule::new(12, 24);
            for factor in [2.0, 4.0, 8.0] {
                let mut worst: f64 = 0.0;
                for k in 0..3 {
                    let t = traction_integral(&sol, k, factor * a, &rule);
                    worst = worst.max((t - Point::ith(k, sol.drag())).norm() / sol.drag());
                }
                out.push(Check {
                    name: format!("traction at R = {factor}a equals 6πa"),
                    passed: worst <= 5e-3,
                    detail: format!("relative error {worst:.2e}"),
                });
            }
        }
    }
    Ok(out)
}
