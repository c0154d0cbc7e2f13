use super::*;
use crate::events::SmearedDensity;
use crate::geometry::{truncation_scales, Aabb, DensityModel, ParticleConfiguration, Point, ReferenceParticle};
use crate::rng::{stream, Purpose};
use crate::transport::DiscreteMeasure;
use nalgebra::Matrix3;
use rand::Rng;
use std::f64::consts::PI;

fn spec(n: usize, side: f64) -> BoxSpec {
    BoxSpec::new(Point::zeros(), side, n).unwrap()
}

#[test]
fn box_spec_validation() {
    assert!(BoxSpec::new(Point::zeros(), 1.0, 16).is_err());
    assert!(BoxSpec::new(Point::zeros(), 1.0, 48).is_err());
    assert!(BoxSpec::new(Point::zeros(), 0.0, 32).is_err());
    let b = BoxSpec::around(&Aabb::unit_cube(), 32).unwrap();
    assert!((b.side - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    b.check_margin(&Aabb::unit_cube()).unwrap();
}

#[test]
fn single_mode_oracle() {
    for &(n, l) in &[(32usize, 1.0f64), (64, 2.5), (32, 7.0)] {
        let s = spec(n, l);
        let f = GridField::from_fn(s, |x| (2.0 * PI * x[0] / l).sin());
        let want = ((l.powi(3) / 2.0) / (1.0 + (2.0 * PI / l).powi(2))).sqrt();
        let got = h_neg1_norm(&f).unwrap();
        assert!((got / want - 1.0).abs() < 1e-10, "n={n} L={l}: {got} vs {want}");
    }
}

#[test]
fn mixed_modes_are_orthogonal() {
    let l = 3.0;
    let s = spec(32, l);
    let f = GridField::from_fn(s, |x| (2.0 * PI * x[0] / l).cos() + 2.0 * (2.0 * PI * (x[1] + 2.0 * x[2]) / l).sin());
    let k1 = (2.0 * PI / l).powi(2);
    let k2 = 5.0 * k1;
    let want = (l.powi(3) / 2.0 / (1.0 + k1) + 4.0 * l.powi(3) / 2.0 / (1.0 + k2)).sqrt();
    assert!((h_neg1_norm(&f).unwrap() / want - 1.0).abs() < 1e-10);
}

#[test]
fn nonzero_mean_is_rejected_unless_dropped() {
    let s = spec(32, 1.0);
    let f = GridField::from_fn(s, |x| 1.0 + (2.0 * PI * x[2]).sin());
    assert!(matches!(h_neg1_norm(&f), Err(crate::Error::NonzeroMean { .. })));
    let g = GridField::from_fn(s, |x| (2.0 * PI * x[2]).sin());
    let a = h_neg1_norm_dropping_mean(&f).unwrap();
    let b = h_neg1_norm(&g).unwrap();
    assert!((a - b).abs() < 1e-12 * b);
}

fn bumps(s: BoxSpec) -> GridField {
    let g = |x: &Point, c: Point, w: f64| (-(x - c).norm_squared() / (2.0 * w * w)).exp() / (2.0 * PI * w * w).powf(1.5);
    GridField::from_fn(s, |x| g(x, Point::new(0.3, 0.1, 0.0), 0.25) - g(x, Point::new(-0.2, 0.0, 0.15), 0.3))
}

#[test]
fn shift_invariance_and_homogeneity() {
    let f = bumps(spec(32, 4.0));
    let base = h_neg1_norm_dropping_mean(&f).unwrap();
    let rolled = h_neg1_norm_dropping_mean(&f.rolled([5, 0, 17])).unwrap();
    assert!((base - rolled).abs() < 1e-12 * base);
    for c in [-3.0, 0.5, 7.0] {
        let v = h_neg1_norm_dropping_mean(&f.scaled(c)).unwrap();
        assert!((v - c.abs() * base).abs() < 1e-12 * base);
    }
}

#[test]
fn refinement_changes_smooth_norm_by_under_one_percent() {
    let coarse = h_neg1_norm_dropping_mean(&bumps(spec(32, 4.0))).unwrap();
    let fine = h_neg1_norm_dropping_mean(&bumps(spec(64, 4.0))).unwrap();
    assert!((coarse / fine - 1.0).abs() < 0.01, "{coarse} {fine}");
}

#[test]
fn rasterized_masses_are_conserved() {
    let s = BoxSpec::new(Point::repeat(0.5), 4.0, 32).unwrap();
    let mut rng = stream(3, 0, Purpose::Auxiliary);
    let pts: Vec<Point> = (0..500).map(|_| Point::new(rng.random(), rng.random(), rng.random())).collect();
    let m = DiscreteMeasure::uniform(pts.clone()).unwrap();
    let f = rasterize(Measure::Discrete(&m), s).unwrap();
    assert!((f.integral() - 1.0).abs() < 1e-9);

    let cfg = ParticleConfiguration::from_centers(pts, 2.5).unwrap();
    let sm = SmearedDensity::new(&cfg, 0.3).unwrap();
    let f = rasterize(Measure::Smeared(&sm), s).unwrap();
    assert!((f.integral() - 1.0).abs() < 1e-9);

    let f = rasterize(
        Measure::SphereSurface {
            center: Point::new(0.5, 0.4, 0.6),
            radius: 0.3,
        },
        s,
    )
    .unwrap();
    assert!((f.integral() - 1.0).abs() < 1e-9);

    for d in [
        DensityModel::unit_cube(),
        DensityModel::uniform_ball(Point::repeat(0.5), 0.45).unwrap(),
        DensityModel::grid(Aabb::unit_cube(), [2, 3, 1], vec![0.1, 0.2, 0.05, 0.15, 0.3, 0.2]).unwrap(),
    ] {
        let f = rasterize(Measure::Density(&d), s).unwrap();
        assert!((f.integral() - 1.0).abs() < 1e-9);
        assert!(f.values.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn uniform_cube_on_aligned_grid_is_exact() {
    // cell 1/8 puts the unit cube on cell faces
    let s = BoxSpec::new(Point::repeat(0.5), 4.0, 32).unwrap();
    let f = rasterize(Measure::Density(&DensityModel::unit_cube()), s).unwrap();
    let inside = f.values.iter().filter(|&&v| v != 0.0).count();
    assert_eq!(inside, 512);
    assert!(f.values.iter().all(|&v| v == 0.0 || (v - 1.0).abs() < 1e-12));
}

#[test]
fn support_near_the_edge_is_rejected() {
    let s = BoxSpec::new(Point::zeros(), 2.0, 32).unwrap();
    let m = DiscreteMeasure::uniform(vec![Point::new(0.6, 0.0, 0.0)]).unwrap();
    assert!(matches!(rasterize(Measure::Discrete(&m), s), Err(crate::Error::OutsideBox(_))));
    let m = DiscreteMeasure::uniform(vec![Point::new(0.45, 0.0, 0.0)]).unwrap();
    rasterize(Measure::Discrete(&m), s).unwrap();
}

#[test]
fn cic_pairing_matches_direct_sum() {
    let s = BoxSpec::around(&Aabb::unit_cube(), 256).unwrap();
    let mut rng = stream(9, 0, Purpose::Auxiliary);
    let pts: Vec<Point> = (0..100).map(|_| Point::new(rng.random(), rng.random(), rng.random())).collect();
    let m = DiscreteMeasure::uniform(pts.clone()).unwrap();
    let f = rasterize(Measure::Discrete(&m), s).unwrap();
    let psi = |x: &Point| (-(x - Point::repeat(0.5)).norm_squared() / 2.0).exp();
    let direct: f64 = pts.iter().map(psi).sum::<f64>() / 100.0;
    let grid = f.pair(psi);
    assert!((grid - direct).abs() < 1e-4 * direct.abs(), "{grid} {direct}");
}

#[test]
fn rigid_shift_is_bounded_by_the_shift() {
    let s = BoxSpec::new(Point::repeat(0.5), 4.0, 64).unwrap();
    let base = rasterize(Measure::Density(&DensityModel::unit_cube()), s).unwrap();
    for axis in 0..3 {
        for t in [0.01, 0.05, 0.1, 0.2] {
            let mut shift = Point::zeros();
            shift[axis] = t;
            let moved = DensityModel::uniform_box(Aabb::new(shift, Point::repeat(1.0) + shift)).unwrap();
            let g = rasterize(Measure::Density(&moved), s).unwrap();
            let norm = h_neg1_norm(&base.sub(&g).unwrap()).unwrap();
            assert!(norm <= t, "axis {axis} t {t}: {norm}");
        }
    }
}

#[test]
fn shell_pairing_matches_surface_average() {
    let s = BoxSpec::new(Point::zeros(), 2.0, 64).unwrap();
    let f = rasterize(
        Measure::SphereSurface {
            center: Point::zeros(),
            radius: 0.25,
        },
        s,
    )
    .unwrap();
    // the average of x² over the sphere is r²/3
    let got = f.pair(|x| x[0] * x[0]);
    let want = 0.25f64.powi(2) / 3.0;
    assert!((got / want - 1.0).abs() < 0.02, "{got} {want}");
}

#[test]
fn binary_round_trip() {
    let f = bumps(spec(32, 4.0));
    let mut buf = Vec::new();
    f.write_binary(&mut buf).unwrap();
    assert_eq!(buf.len(), 8 * (5 + 32 * 32 * 32));
    let g = GridField::read_binary(&mut buf.as_slice()).unwrap();
    assert_eq!(f, g);
}

fn lattice_config(m: usize, alpha: f64) -> ParticleConfiguration {
    let mut c = Vec::new();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                c.push(Point::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) / m as f64);
            }
        }
    }
    ParticleConfiguration::from_centers(c, alpha).unwrap()
}

fn pairing(amp: Point, width: f64) -> BrinkmanResult {
    let cfg = lattice_config(6, 1.5);
    let scales = truncation_scales(&cfg, 1.0, 1.0).unwrap();
    let particle = ReferenceParticle::default();
    let r = Matrix3::identity() * 6.0 * PI * particle.sphere_radius().unwrap();
    let psi = GaussianBump {
        center: Point::repeat(0.5),
        width,
        amplitude: amp,
    };
    let dom = BoxSpec::around(&Aabb::unit_cube(), 32).unwrap();
    let params = BrinkmanParams {
        lambda: 0.3,
        ref_samples: 4 * cfg.len(),
        seed: 1,
    };
    brinkman_gap_pairing(&cfg, &scales, &particle, &r, &DensityModel::unit_cube(), &psi, dom, &params).unwrap()
}

#[test]
fn zero_test_field_gives_zero_everything() {
    let res = pairing(Point::zeros(), 0.2);
    assert_eq!(res.gap, 0.0);
    assert_eq!(res.bound.total(), 0.0);
    assert!(res.bound.w2 > 0.0);
}

#[test]
fn constant_test_field_recovers_resistance() {
    let amp = Point::new(0.3, -1.0, 2.0);
    let res = pairing(amp, 1e7);
    // the sphere average of (ℛ_k + 3(ℛ_k·n)n)/2 against c is ℛ_k·c
    let rule = crate::quadrature::SphereRule::new(6, 12);
    for k in 0..3 {
        let rk = Point::ith(k, 1.0);
        let avg: f64 = rule.iter().map(|(n, w)| w * (rk + n * (3.0 * rk.dot(n))).dot(&amp) / 2.0).sum::<f64>() / (4.0 * PI);
        assert!((avg - amp[k]).abs() < 1e-12);
    }
    let r0 = ReferenceParticle::default().sphere_radius().unwrap();
    for k in 0..3 {
        let want = 6.0 * PI * r0 * amp[k];
        assert!((res.force[k] - want).abs() < 1e-8, "{k}: {} vs {want}", res.force[k]);
        assert!((res.limit[k] - want).abs() < 1e-8);
    }
    assert!(res.gap < 1e-8);
}

#[test]
fn gaussian_gap_is_below_bound() {
    let res = pairing(Point::new(1.0, 0.5, -0.2), 0.2);
    assert!(res.gap.is_finite() && res.gap > 0.0);
    assert!(res.gap < res.bound.total(), "{} {:?}", res.gap, res.bound);
}
