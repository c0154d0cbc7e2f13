//! One test per acceptance criterion; each prints a PASS/FAIL line straight
//! to stdout so the verdicts show without `--nocapture`.

use brinklab::events::{estimate_event_probability, indicator_a, indicator_b, separation_bound, separation_poisson_estimate};
use brinklab::fields::{h_neg1_norm, rasterize, BoxSpec, GridField, Measure};
use brinklab::geometry::{
    brute_force_nearest_neighbor_distances, eps_of, sample_replicate, Aabb, DensityModel, ParticleConfiguration, Point, SurfaceMesh,
};
use brinklab::quadrature::SphereRule;
use brinklab::rng::{stream, Purpose};
use brinklab::stokes::{resistance_bem_levels, traction_integral, SphereStokesSolution};
use brinklab::transport::{w2_assignment, w2_brute_force, w2_plan_cost_smeared, w2_smeared_discretized, DiscreteMeasure};
use brinklab_cli::{run_experiment_with_threads, ExperimentConfig, ScalingReport};
use nalgebra::Matrix3;
use rand::Rng;
use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

fn verdict(id: u32, title: &str, passed: bool, detail: &str) {
    let line = format!("[criterion {id:>2}] {} {title}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(passed, "criterion {id} failed: {detail}");
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

fn run(c: &ExperimentConfig) -> (ScalingReport, Duration) {
    let t = Instant::now();
    let r = run_experiment_with_threads(c, 0).unwrap();
    (r, t.elapsed())
}

#[test]
fn c01_stokes_law_on_the_unit_icosphere() {
    let t = Instant::now();
    let res = resistance_bem_levels(|l| SurfaceMesh::icosphere(1.0, l), 4, None).unwrap();
    let took = t.elapsed();
    let exact = Matrix3::identity() * 6.0 * PI;
    let err = (res.matrix - exact).norm() / exact.norm();
    let history: Vec<f64> = res.history.iter().map(|(_, m)| (m - exact).norm() / exact.norm()).collect();
    verdict(
        1,
        "level-4 BEM within 2% of 6πI in under 60 s",
        err <= 0.02 && took < Duration::from_secs(60),
        &format!("relative error {err:.4} (levels 2..4: {history:.4?}), {:.1} s", took.as_secs_f64()),
    );
}

#[test]
fn c02_traction_is_independent_of_the_sphere() {
    let a = 0.125;
    let sol = SphereStokesSolution::new(a).unwrap();
    let rule = SphereRule::new(12, 24);
    let mut worst: f64 = 0.0;
    for factor in [2.0, 4.0, 8.0] {
        for k in 0..3 {
            let t = traction_integral(&sol, k, factor * a, &rule);
            worst = worst.max((t - Point::ith(k, 6.0 * PI * a)).norm() / (6.0 * PI * a));
        }
    }
    verdict(
        2,
        "traction at R ∈ {2a, 4a, 8a} equals 6πa within 0.5%",
        worst <= 5e-3,
        &format!("worst relative error {worst:.2e}"),
    );
}

#[test]
fn c03_corrector_scalings() {
    // ε = 2^-4 … 2^-8, i.e. N = ε^-3
    let c = config("kind = \"corrector\"\nseed = 3\nn_list = [4096, 32768, 262144, 2097152, 16777216]\nalpha = 2.5\neta = 0.0625\n");
    let (r, took) = run(&c);
    let s2 = r.fit("w_minus_id_l2sq").unwrap().slope;
    let s1 = r.fit("grad_l2sq").unwrap().slope;
    let ratios: Vec<f64> = r.rows.iter().filter(|x| x.quantity == "l3_ratio").map(|x| x.statistic).collect();
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    let pass = (s2 - 5.0).abs() <= 0.1 && (s1 - 2.5).abs() <= 0.1 && spread <= 3.0 && took < Duration::from_secs(300);
    verdict(
        3,
        "corrector exponents 2α, α and bounded L³ ratio",
        pass,
        &format!(
            "‖w−Id‖² slope {s2:.4}, ‖∇w‖² slope {s1:.4}, L³ ratio spread {spread:.3}, {:.1} s",
            took.as_secs_f64()
        ),
    );
}

#[test]
fn c04_nearest_neighbour_scaling() {
    let c = config("kind = \"nn-scaling\"\nseed = 4\nn_list = [1000, 10000, 100000]\ntrials = 200\n");
    let (r, _) = run(&c);
    let slope = r.fit("nn_mean").unwrap().slope;
    let d = DensityModel::unit_cube();
    let mut exact = true;
    for (i, n) in [2usize, 10, 500, 2000].into_iter().enumerate() {
        let cfg = sample_replicate(&d, n, 2.5, 40, i as u64).unwrap();
        exact &= brute_force_nearest_neighbor_distances(cfg.centers()).as_slice() == cfg.nn_dist();
    }
    verdict(
        4,
        "E[d₁] exponent −1/3 ± 0.05; hash equals brute force",
        (slope + 1.0 / 3.0).abs() <= 0.05 && exact,
        &format!("slope {slope:.4}, hash exact: {exact}"),
    );
}

#[test]
fn c05_separation_event_bound() {
    let d = DensityModel::unit_cube();
    let alpha = 2.5;
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, n) in [1000usize, 10000].into_iter().enumerate() {
        let l = eps_of(n).powf(alpha - 2.0);
        let event = |c: &ParticleConfiguration| indicator_a(c, l, 2.0);
        let est = estimate_event_probability(&event, &d, n, alpha, 2000, 50 + i as u64).unwrap();
        let bound = separation_bound(d.sup_norm(), l);
        pass &= est.p_hat >= bound - est.width();
        detail.push(format!(
            "N={n}: p̂ {:.4} (CI width {:.4}) vs bound {bound:.4}; Poisson estimate {:.4}",
            est.p_hat,
            est.width(),
            separation_poisson_estimate(d.sup_norm(), l)
        ));
    }
    verdict(5, "p̂[𝒜] ≥ exp(−4π‖ρ‖∞L³/3) − CI width, L = ε^(α−2)", pass, &detail.join("; "));
}

#[test]
fn c06_smeared_density_event() {
    let d = DensityModel::unit_cube();
    let sup = d.sup_norm();
    let event = |c: &ParticleConfiguration| indicator_b(c, 0.3, sup);
    let est = estimate_event_probability(&event, &d, 10_000, 2.5, 500, 60).unwrap();
    verdict(
        6,
        "frequency of ℬ at λ = 0.3, N = 10⁴ exceeds 0.99",
        est.p_hat > 0.99,
        &format!("p̂ {:.4} over 500 trials", est.p_hat),
    );
}

#[test]
fn c07_eta_moments() {
    let mut pass = true;
    let mut detail = Vec::new();
    for kappa in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let c = config(&format!(
            "kind = \"eta-moments\"\nseed = 7\nn_list = [1000, 10000, 100000]\ntrials = 2000\nbeta = 1.0\nm_eta = 1.0\nkappa = {kappa:?}\n"
        ));
        let (r, _) = run(&c);
        let ok = r.all_passed();
        pass &= ok;
        let drift = r.checks.last().unwrap().detail.clone();
        detail.push(format!("κ={kappa}: {} ({drift})", if ok { "ok" } else { "off" }));
    }
    verdict(
        7,
        "Monte Carlo matches the layer-cake oracle; frozen bound constant within ±25%",
        pass,
        &detail.join("; "),
    );
}

#[test]
fn c08_explicit_plan_bound() {
    let d = DensityModel::unit_cube();
    let mut below = 0;
    for k in 0..100u64 {
        let c = sample_replicate(&d, 10 + 5 * k as usize, 2.5, 80, k).unwrap();
        let (cost, bound) = w2_plan_cost_smeared(&c, 0.3).unwrap();
        below += (cost <= bound) as usize;
    }
    let mut exact_ok = true;
    let mut worst: f64 = 0.0;
    for (i, (n, sub)) in [(8usize, 4usize), (64, 3), (512, 2)].into_iter().enumerate() {
        let c = sample_replicate(&d, n, 2.5, 81, i as u64).unwrap();
        let (cost, _) = w2_plan_cost_smeared(&c, 0.3).unwrap();
        let (exact, tol) = w2_smeared_discretized(&c, 0.3, sub).unwrap();
        exact_ok &= exact <= cost + tol;
        worst = worst.max(exact / cost);
    }
    verdict(
        8,
        "plan cost ≤ √3 ε^(1−λ); exact W₂ ≤ plan cost + tolerance",
        below == 100 && exact_ok,
        &format!("{below}/100 plans under the bound; exact/plan ratio at most {worst:.3} for N ≤ 512"),
    );
}

#[test]
fn c09_wasserstein_rate() {
    let c = config("kind = \"w2-rates\"\nseed = 9\nn_list = [128, 256, 512, 1024, 2048]\ntrials = 50\nref_factor = 16\n");
    let (r, took) = run(&c);
    let f = r.fit("w2_sq").unwrap();
    verdict(
        9,
        "slope of log E[W₂²] vs log N in [−0.75, −0.40] in under 10 min",
        (-0.75..=-0.40).contains(&f.slope) && took < Duration::from_secs(600),
        &format!(
            "slope {:.4} (95% CI [{:.4}, {:.4}]), {:.1} s",
            f.slope,
            f.slope_ci.0,
            f.slope_ci.1,
            took.as_secs_f64()
        ),
    );
}

const G: usize = 2;
const SUB: usize = 3;

/// Piecewise-constant density from integer unit masses on a `G³` split of
/// the unit cube, with an equal-weight atom set (each unit becomes the
/// `SUB³` sub-cell centres of its cell).
fn unit_density(units: &[usize]) -> (DensityModel, DiscreteMeasure) {
    let total: usize = units.iter().sum();
    let masses: Vec<f64> = units.iter().map(|&u| u as f64 / total as f64).collect();
    let d = DensityModel::grid(Aabb::unit_cube(), [G; 3], masses).unwrap();
    let h = 1.0 / G as f64;
    let hs = h / SUB as f64;
    let mut atoms = Vec::new();
    for (c, &u) in units.iter().enumerate() {
        let lo = Point::new((c % G) as f64, ((c / G) % G) as f64, (c / (G * G)) as f64) * h;
        for _ in 0..u {
            for a in 0..SUB {
                for b in 0..SUB {
                    for e in 0..SUB {
                        atoms.push(lo + Point::new(a as f64 + 0.5, b as f64 + 0.5, e as f64 + 0.5) * hs);
                    }
                }
            }
        }
    }
    (d, DiscreteMeasure::uniform(atoms).unwrap())
}

#[test]
fn c10_w2_controls_hneg1() {
    let spec = BoxSpec::new(Point::repeat(0.5), 4.0, 32).unwrap();
    let mut rng = stream(10, 0, Purpose::Auxiliary);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let u0: Vec<usize> = (0..G * G * G).map(|_| rng.random_range(1..=4)).collect();
        let u1 = loop {
            let mut u = u0.clone();
            for _ in 0..rng.random_range(1..=6) {
                let (from, to) = (rng.random_range(0..u.len()), rng.random_range(0..u.len()));
                if u[from] > 0 {
                    u[from] -= 1;
                    u[to] += 1;
                }
            }
            if u != u0 {
                break u;
            }
        };
        let (d0, a0) = unit_density(&u0);
        let (d1, a1) = unit_density(&u1);
        let f = rasterize(Measure::Density(&d0), spec)
            .unwrap()
            .sub(&rasterize(Measure::Density(&d1), spec).unwrap())
            .unwrap();
        let h = h_neg1_norm(&f).unwrap();
        let rhs = d0.sup_norm().max(d1.sup_norm()).sqrt() * w2_assignment(&a0, &a1).unwrap();
        worst = worst.max(h / rhs);
        violations += (h > 1.05 * rhs) as usize;
    }
    let l = 2.0;
    let mode = GridField::from_fn(BoxSpec::new(Point::zeros(), l, 64).unwrap(), |x| (2.0 * PI * x[0] / l).sin());
    let want = ((l.powi(3) / 2.0) / (1.0 + (2.0 * PI / l).powi(2))).sqrt();
    let rel = (h_neg1_norm(&mode).unwrap() / want - 1.0).abs();
    verdict(
        10,
        "‖ν₀−ν₁‖_H⁻¹ ≤ max‖ν‖∞^½ W₂ on 200 pairs; single-mode oracle to 1e-6",
        violations == 0 && rel <= 1e-6,
        &format!("{violations} violations, worst ratio {worst:.3}; single-mode relative error {rel:.1e}"),
    );
}

#[test]
fn c11_brinkman_gap_stability() {
    let c = config("kind = \"brinkman-gap\"\nseed = 11\nn_list = [1000, 10000]\ntrials = 2\nalpha = 2.5\nbeta = 1.0\nlambda = 0.3\nref_factor = 1\n");
    let (r, took) = run(&c);
    let ratios: Vec<f64> = r.rows.iter().filter(|x| x.quantity == "gap_ratio").map(|x| x.statistic).collect();
    let growth = ratios[1] / ratios[0];
    verdict(
        11,
        "gap / bound ratio grows by less than 3× from N = 10³ to 10⁴",
        growth < 3.0,
        &format!("ratios {ratios:.4?}, growth {growth:.3}, {:.1} s", took.as_secs_f64()),
    );
}

#[test]
fn c12_assignment_matches_brute_force() {
    let mut rng = stream(12, 0, Purpose::Auxiliary);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = 1 + i % 6;
        let mut pts = || (0..n).map(|_| Point::new(rng.random(), rng.random(), rng.random())).collect::<Vec<_>>();
        let (a, b) = (pts(), pts());
        let exact = w2_brute_force(&a, &b).unwrap();
        let got = w2_assignment(&DiscreteMeasure::uniform(a).unwrap(), &DiscreteMeasure::uniform(b).unwrap()).unwrap();
        worst = worst.max((got - exact).abs() / exact.max(f64::MIN_POSITIVE));
    }
    verdict(
        12,
        "assignment solver equals factorial brute force, n ≤ 6",
        worst <= 1e-12,
        &format!("worst relative difference {worst:.1e} over 100 instances"),
    );
}

#[test]
fn c13_determinism_across_thread_counts() {
    let configs = [
        "kind = \"events\"\nseed = 13\nn_list = [300, 600]\ntrials = 40\n",
        "kind = \"events\"\nseed = 13\nn_list = [300]\ntrials = 40\nevent = \"smeared\"\n",
        "kind = \"eta-moments\"\nseed = 13\nn_list = [100, 1000]\ntrials = 300\nkappa = -1.0\n",
        "kind = \"w2-rates\"\nseed = 13\nn_list = [16, 32, 64]\ntrials = 6\n",
        "kind = \"nn-scaling\"\nseed = 13\nn_list = [100, 200, 400]\ntrials = 20\n",
        "kind = \"hneg1\"\nseed = 13\nn_list = [64, 128]\ntrials = 3\n[grid]\nn = 32\n",
        "kind = \"corrector\"\nseed = 13\nn_list = [4096, 32768, 262144]\n",
        "kind = \"resistance\"\nseed = 13\nn_list = [0, 1, 2]\nparticle_radius = 1.0\n",
        "kind = \"brinkman-gap\"\nseed = 13\nn_list = [50, 100]\ntrials = 2\n",
    ];
    let mut differing = Vec::new();
    for text in configs {
        let c = config(text);
        let one = run_experiment_with_threads(&c, 1).unwrap();
        let eight = run_experiment_with_threads(&c, 8).unwrap();
        if one.to_tsv() != eight.to_tsv() || one.to_json() != eight.to_json() {
            differing.push(c.kind);
        }
    }
    verdict(
        13,
        "reports byte-identical with 1 and 8 threads",
        differing.is_empty(),
        &format!("{} experiments, differing: {differing:?}", configs.len()),
    );
}
