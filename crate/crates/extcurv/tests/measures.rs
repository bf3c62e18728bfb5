mod common;

use common::v;
use extcurv::geometry::{FermiPoint, HeightFunction, ManifoldModel};
use extcurv::measures::{
    fermi_density_expansion, poisson_count, poisson_tube, quadrature_measure, sample_tube, segment_volume,
    DiscreteMeasure, QuadratureMeasure, TubeSegmentSpec,
};
use extcurv::rng::{stream, Role};
use extcurv::Error;
use rand::Rng;
use std::f64::consts::PI;

fn circle_spec(sigma: f64, eps: f64) -> TubeSegmentSpec {
    TubeSegmentSpec::new(ManifoldModel::circle(1.0), v(&[1.0, 0.0]), v(&[0.0, 1.0]), sigma, eps).unwrap()
}

fn sphere_spec(sigma: f64, eps: f64) -> TubeSegmentSpec {
    TubeSegmentSpec::new(ManifoldModel::sphere(2, 1.0), v(&[0.0, 0.0, 1.0]), v(&[1.0, 0.0, 0.0]), sigma, eps).unwrap()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn circle_quadrature_moments_match_weighted_interval() {
    // Outward offsets carry density (1 + β/R); on [−σ, σ] this gives
    // E[β] = σ²/(3R) and E[β²] = σ²/3 exactly.
    let (s, e) = (0.1, 0.1);
    let q = quadrature_measure(&circle_spec(s, e), 8).unwrap();
    let m1 = q.integrate_fermi(|p| p.beta[0]);
    let m2 = q.integrate_fermi(|p| p.beta[0].powi(2));
    assert!((m1 - s * s / 3.0).abs() < 1e-12);
    assert!((m2 - s * s / 3.0).abs() < 1e-12);
    assert!((q.integrate_fermi(|p| p.alpha[0].powi(2)) - e * e / 3.0).abs() < 1e-12);
    assert!((q.volume - 4.0 * s * e).abs() < 1e-14);
}

#[test]
fn degenerate_tube_reduces_to_geodesic_ball_rule() {
    let q = quadrature_measure(&circle_spec(1e-9, 0.1), 6).unwrap();
    assert!(q.fermi.iter().all(|p| p.beta[0].abs() <= 1e-9));
    // Weights are then products of Gauss–Legendre weights in α and β.
    let gl = extcurv::quadrature::gauss_legendre(12);
    let w0: f64 = gl.weights.iter().sum();
    for (i, w) in q.weights.iter().enumerate() {
        let expect = gl.weights[i / 12] * gl.weights[i % 12] / (w0 * w0);
        assert!((w - expect).abs() < 1e-9 * expect);
    }
}

#[test]
fn sphere_segment_volume_matches_shell_cap() {
    let (s, e) = (0.1, 0.1);
    let q = quadrature_measure(&sphere_spec(s, e), 8).unwrap();
    let exact = 2.0 * PI * (1.0 - e.cos()) * ((1.0 + s).powi(3) - (1.0 - s).powi(3)) / 3.0;
    assert!((q.volume - exact).abs() < 1e-6 * exact, "{} vs {exact}", q.volume);
    assert!((segment_volume(&sphere_spec(s, e)).unwrap() - exact).abs() < 1e-6 * exact);
}

#[test]
fn flat_moments_equal_ball_moments() {
    let line = ManifoldModel::planar_curve(extcurv::geometry::CurveShape::Line).unwrap();
    let spec = TubeSegmentSpec::new(line, v(&[0.0, 0.0]), v(&[1.0, 0.0]), 0.07, 0.11).unwrap();
    let q = quadrature_measure(&spec, 6).unwrap();
    assert!((q.integrate_fermi(|p| p.beta[0].powi(2)) - 0.07f64.powi(2) / 3.0).abs() < 1e-8);
    assert!((q.integrate_fermi(|p| p.alpha[0].powi(2)) - 0.11f64.powi(2) / 3.0).abs() < 1e-8);

    let plane = ManifoldModel::graph_surface(HeightFunction::Quadratic { a: 0.0, b: 0.0, c: 0.0 }, 1.0).unwrap();
    let spec = TubeSegmentSpec::new(plane, v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), 0.07, 0.11).unwrap();
    let q = quadrature_measure(&spec, 6).unwrap();
    assert!((q.integrate_fermi(|p| p.beta[0].powi(2)) - 0.07f64.powi(2) / 3.0).abs() < 1e-8);
    for i in 0..2 {
        assert!((q.integrate_fermi(|p| p.alpha[i].powi(2)) - 0.11f64.powi(2) / 4.0).abs() < 1e-8);
    }
    assert!(q.integrate_fermi(|p| p.alpha[0] * p.alpha[1]).abs() < 1e-8);
}

fn check_normalized_and_inside(spec: &TubeSegmentSpec, mu: &DiscreteMeasure) {
    assert!((mu.total_mass() - 1.0).abs() < 1e-12);
    for p in mu.points() {
        assert!(spec.contains(&v(p)), "atom {p:?} outside the segment");
    }
}

#[test]
fn every_construction_is_normalized_and_supported_in_the_segment() {
    let specs = [
        circle_spec(0.1, 0.1),
        sphere_spec(0.1, 0.15),
        TubeSegmentSpec::new(
            ManifoldModel::flat_torus(1.0, 2.0),
            v(&[1.0, 0.0, 2.0, 0.0]),
            v(&[0.0, 1.0, 0.0, 0.0]),
            0.1,
            0.1,
        )
        .unwrap(),
    ];
    for (i, spec) in specs.iter().enumerate() {
        let q = quadrature_measure(spec, 5).unwrap();
        check_normalized_and_inside(spec, &q.to_discrete());
        let mut rng = stream(11, i as u64, 0, Role::Source);
        check_normalized_and_inside(spec, &sample_tube(spec, 300, &mut rng).unwrap());
        check_normalized_and_inside(spec, &poisson_tube(spec, 2e5, &mut rng).unwrap());
        let one = sample_tube(spec, 1, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        assert!(spec.contains(&v(one.point(0))));
    }
}

#[test]
fn circle_samples_have_the_analytic_mean_offset() {
    let spec = circle_spec(0.1, 0.1);
    let chart = spec.chart().unwrap();
    let mu = sample_tube(&spec, 100_000, &mut stream(3, 0, 0, Role::Source)).unwrap();
    let betas: Vec<f64> = mu.points().map(|p| chart.coords(&v(p)).unwrap().beta[0]).collect();
    let (mean, se) = mean_and_se(&betas);
    assert!((mean - 0.01 / 3.0).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn sphere_samples_match_quadrature_second_moment() {
    let spec = sphere_spec(0.1, 0.1);
    let chart = spec.chart().unwrap();
    let q = quadrature_measure(&spec, 8).unwrap();
    let exact = q.integrate_fermi(|p| p.alpha[0].powi(2));
    // m = 2 ball moment to leading order.
    assert!((exact - 0.01 / 4.0).abs() < 0.05 * 0.01 / 4.0);
    let mu = sample_tube(&spec, 100_000, &mut stream(4, 0, 0, Role::Source)).unwrap();
    let a2: Vec<f64> = mu.points().map(|p| chart.coords(&v(p)).unwrap().alpha[0].powi(2)).collect();
    let (mean, se) = mean_and_se(&a2);
    assert!((mean - exact).abs() < 3.0 * se, "{mean} ± {se} vs {exact}");
}

fn random_cubic(rng: &mut impl Rng, dim: usize) -> Vec<(Vec<usize>, f64)> {
    // Monomials z_i z_j z_l (indices may repeat) plus lower-degree terms.
    let mut terms = vec![(vec![], rng.random_range(-1.0..1.0))];
    for _ in 0..6 {
        let deg = rng.random_range(1..=3);
        let idx = (0..deg).map(|_| rng.random_range(0..dim)).collect();
        terms.push((idx, rng.random_range(-1.0..1.0)));
    }
    terms
}

fn eval_poly(terms: &[(Vec<usize>, f64)], z: &[f64]) -> f64 {
    terms.iter().map(|(idx, c)| c * idx.iter().map(|&i| z[i]).product::<f64>()).sum()
}

fn quadrature_vs_monte_carlo(spec: &TubeSegmentSpec, seed: u64) {
    let q: QuadratureMeasure = quadrature_measure(spec, 8).unwrap();
    let mu = sample_tube(spec, 1_000_000, &mut stream(seed, 0, 0, Role::Source)).unwrap();
    let mut rng = stream(seed, 0, 0, Role::Auxiliary);
    let dim = spec.manifold.ambient_dim();
    for _ in 0..10 {
        let f = random_cubic(&mut rng, dim);
        let exact = q.integrate(|z| eval_poly(&f, z.as_slice()));
        let vals: Vec<f64> = mu.points().map(|z| eval_poly(&f, z)).collect();
        let (mean, se) = mean_and_se(&vals);
        assert!((mean - exact).abs() <= 4.0 * se, "{}: {mean} ± {se} vs {exact}", spec.manifold.label());
    }
}

#[test]
fn quadrature_agrees_with_monte_carlo_on_cubic_test_functions() {
    quadrature_vs_monte_carlo(&circle_spec(0.1, 0.1), 21);
    quadrature_vs_monte_carlo(&sphere_spec(0.1, 0.1), 22);
}

#[test]
fn odd_moments_along_the_geodesic_vanish_under_reflection_symmetry() {
    for spec in [circle_spec(0.1, 0.1), sphere_spec(0.1, 0.1)] {
        let q = quadrature_measure(&spec, 8).unwrap();
        for pow in [1, 3] {
            assert!(q.integrate_fermi(|p| p.alpha[0].powi(pow)).abs() <= 1e-10);
            assert!(q.integrate_fermi(|p| p.alpha[0].powi(pow) * p.beta[0]).abs() <= 1e-10);
        }
        let chart = spec.chart().unwrap();
        let mu = sample_tube(&spec, 50_000, &mut stream(5, 0, 0, Role::Source)).unwrap();
        let a: Vec<f64> = mu.points().map(|p| chart.coords(&v(p)).unwrap().alpha[0]).collect();
        let (mean, se) = mean_and_se(&a);
        assert!(mean.abs() < 3.0 * se);
    }
}

#[test]
fn poisson_counts_have_mean_intensity_times_volume() {
    let spec = circle_spec(0.1, 0.1);
    let n = 1000.0;
    assert!((segment_volume(&spec).unwrap() - 0.04).abs() < 1e-14);
    let counts: Vec<f64> = (0..200)
        .map(|t| poisson_tube(&spec, n, &mut stream(6, 0, t, Role::Source)).map_or(0.0, |m| m.len() as f64))
        .collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 0.04 * n).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn vanishing_intensity_yields_empty_cloud() {
    let spec = circle_spec(0.1, 0.1);
    let r = poisson_tube(&spec, 1e-9, &mut stream(7, 0, 0, Role::Source));
    assert!(matches!(r, Err(Error::EmptyCloud)));
}

#[test]
fn counts_on_disjoint_segments_are_uncorrelated() {
    let a = circle_spec(0.1, 0.1);
    let far = v(&[(1.0f64).cos(), (1.0f64).sin()]);
    let b = a.recentered(far, v(&[-(1.0f64).sin(), (1.0f64).cos()])).unwrap();
    let (va, vb) = (segment_volume(&a).unwrap(), segment_volume(&b).unwrap());
    let mut rng = stream(8, 0, 0, Role::Auxiliary);
    let pairs: Vec<(f64, f64)> = (0..500)
        .map(|_| (poisson_count(500.0 * va, &mut rng).unwrap() as f64, poisson_count(500.0 * vb, &mut rng).unwrap() as f64))
        .collect();
    let n = pairs.len() as f64;
    let (ma, mb) = (pairs.iter().map(|p| p.0).sum::<f64>() / n, pairs.iter().map(|p| p.1).sum::<f64>() / n);
    let cov: f64 = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>();
    let sa: f64 = pairs.iter().map(|p| (p.0 - ma).powi(2)).sum::<f64>().sqrt();
    let sb: f64 = pairs.iter().map(|p| (p.1 - mb).powi(2)).sum::<f64>().sqrt();
    assert!((cov / (sa * sb)).abs() < 0.1);
}

#[test]
fn rejection_sampler_reports_misconfigured_geometry() {
    // A very thin tube around a tiny arc of a large circle in a wide box.
    let m = ManifoldModel::circle(100.0);
    let spec = TubeSegmentSpec::new(m, v(&[100.0, 0.0]), v(&[0.0, 1.0]), 5e-7, 1e-2).unwrap();
    let r = sample_tube(&spec, 1000, &mut stream(9, 0, 0, Role::Source));
    assert!(matches!(r, Err(Error::Misconfiguration(_))));
}

#[test]
fn density_expansion_is_one_at_the_origin() {
    let s = ManifoldModel::sphere(2, 1.0);
    let chart = s.fermi_chart(&v(&[0.0, 0.0, 1.0]), &v(&[1.0, 0.0, 0.0])).unwrap();
    let val = fermi_density_expansion(&chart, &FermiPoint::new(vec![0.0, 0.0], vec![0.0])).unwrap();
    assert!((val - 1.0).abs() < 1e-12);
}

#[test]
fn circle_density_expansion_is_exact() {
    // Inward offset β gives the polar density 1 − β; outward is 1 + β.
    let c = ManifoldModel::circle(1.0);
    let chart = c.fermi_chart(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap();
    for (a, b) in [(0.05, 0.03), (-0.08, -0.02), (0.1, 0.09)] {
        let val = fermi_density_expansion(&chart, &FermiPoint::new(vec![a], vec![-b])).unwrap();
        assert!((val - (1.0 - b)).abs() < 1e-8);
    }
}

#[test]
fn sphere_density_expansion_has_cubic_remainder() {
    let s = ManifoldModel::sphere(2, 1.0);
    let chart = s.fermi_chart(&v(&[0.0, 0.0, 1.0]), &v(&[1.0, 0.0, 0.0])).unwrap();
    let probes = [[0.6, -0.4, 0.5], [-0.3, 0.9, -0.7], [0.8, 0.5, 0.2], [0.1, -0.7, -0.9]];
    let worst = |delta: f64| {
        probes
            .iter()
            .map(|p| {
                let fp = FermiPoint::new(vec![delta * p[0], delta * p[1]], vec![delta * p[2]]);
                (fermi_density_expansion(&chart, &fp).unwrap() - chart.volume_density(&fp).unwrap()).abs()
            })
            .fold(0.0, f64::max)
    };
    let errs: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&d| worst(d)).collect();
    let c: Vec<f64> = errs.iter().zip([0.2f64, 0.1, 0.05]).map(|(e, d)| e / d.powi(3)).collect();
    assert!(c.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() < 0.25), "{errs:?} {c:?}");
}

#[test]
fn graph_density_expansion_tracks_jacobian() {
    let g = ManifoldModel::graph_surface(HeightFunction::Quadratic { a: 1.0, b: 0.5, c: 0.2 }, 1.0).unwrap();
    let x0 = g.embed(&[0.1, -0.1]).unwrap();
    let e = g.tangent_frame(&x0).unwrap();
    let chart = g.fermi_chart(&x0, &e[0]).unwrap();
    let fp = FermiPoint::new(vec![0.02, -0.03], vec![0.025]);
    let d = (fermi_density_expansion(&chart, &fp).unwrap() - chart.volume_density(&fp).unwrap()).abs();
    assert!(d < 5e-4, "{d}");
}
