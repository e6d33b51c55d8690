//! Estimators against one-dimensional adaptive integration, exact Gaussian
//! moments, and each other.

mod common;

use common::{gaussian_density, hermite_wick, simpson_line};
use padic_qft::lattice::{covariance_matrix, precision_matrix, CovarianceMatrix};
use padic_qft::model::FieldParams;
use padic_qft::sampler::*;
use padic_qft::ultrametric::Region;
use padic_qft::wick::WickPolynomial;

fn base() -> FieldParams {
    FieldParams::new(3, 1, 1.0, 1.0, 1.0).unwrap()
}

fn covariance(balls: usize) -> CovarianceMatrix {
    let region = Region::new(3, 1, 0, (0..balls as u32).map(|d| vec![d]).collect()).unwrap();
    let lat = region.refine(0).unwrap();
    covariance_matrix(&precision_matrix(&lat, &base()).unwrap()).unwrap()
}

fn unit(eta: usize, i: usize) -> Vec<f64> {
    let mut h = vec![0.0; eta];
    h[i] = 1.0;
    h
}

#[test]
fn single_cell_quartic_matches_adaptive_integration() {
    let m = covariance(1);
    let var = m.entries()[(0, 0)];
    let wick_var = free_wick_variances(&m).unwrap()[0];
    let p = WickPolynomial::quartic(0.0).unwrap();
    let weight = |x: f64| (-hermite_wick(x, 4, wick_var)).exp() * gaussian_density(x, var);
    let z = simpson_line(&weight, 12.0, 1e-13);
    let second = simpson_line(&|x: f64| x * x * weight(x), 12.0, 1e-13) / z;

    let source = SourceSpec::new(vec![1.0], vec![vec![1.0], vec![1.0]]).unwrap();
    let quad = schwinger_quadrature(&m, &p, &source).unwrap();
    assert!(
        (quad.value - second).abs() <= 1e-6 * second,
        "{} vs {second}",
        quad.value
    );
    assert!((quad.partition - z).abs() <= 1e-6 * z);

    let mc = schwinger_mc(&m, &p, &source, 99, 100_000).unwrap();
    assert!((mc.value - second).abs() <= 3.0 * mc.std_error);
    assert!((mc.partition - z).abs() <= 3.0 * mc.partition_std_error);
}

#[test]
fn free_two_point_function_is_the_covariance() {
    let m = covariance(3);
    let p = WickPolynomial::quartic(0.0).unwrap();
    for (i, j) in [(0, 0), (0, 2), (1, 2)] {
        let source = SourceSpec::new(vec![0.0; 3], vec![unit(3, i), unit(3, j)]).unwrap();
        let exact = m.entries()[(i, j)];
        let quad = schwinger_quadrature(&m, &p, &source).unwrap();
        assert!((quad.value - exact).abs() < 1e-8);
        let mc = schwinger_mc(&m, &p, &source, 7, 50_000).unwrap();
        assert!(
            (mc.value - exact).abs() <= 3.0 * mc.std_error,
            "{} vs {exact}",
            mc.value
        );
    }
}

#[test]
fn even_interaction_has_vanishing_one_point_function() {
    let m = covariance(2);
    let p = WickPolynomial::quartic(0.0).unwrap();
    let source = SourceSpec::new(vec![0.3, 0.3], vec![unit(2, 0)]).unwrap();
    let mc = schwinger_mc(&m, &p, &source, 3, 20_000).unwrap();
    assert!(mc.value.abs() <= 3.0 * mc.std_error.max(1e-300));
    let quad = schwinger_quadrature(&m, &p, &source).unwrap();
    assert!(quad.value.abs() < 1e-12);
}

#[test]
fn normalisation_is_exact() {
    let m = covariance(2);
    let source = SourceSpec::new(vec![0.5, 0.5], vec![]).unwrap();
    let p = WickPolynomial::quartic(0.5).unwrap();
    assert_eq!(schwinger_mc(&m, &p, &source, 1, 2_000).unwrap().value, 1.0);
    assert_eq!(schwinger_quadrature(&m, &p, &source).unwrap().value, 1.0);
}

#[test]
fn griffiths_on_small_lattices() {
    for eta in 1..=3 {
        let m = covariance(eta);
        for lambda in [0.0, 0.5] {
            for g in [0.1, 0.2, 0.5] {
                let p = WickPolynomial::quartic(lambda).unwrap();
                let source = SourceSpec::constant(eta, g).unwrap();
                let rep =
                    griffiths_check(&m, &p, &source, &GriffithsRequest::standard(eta), &Method::quadrature()).unwrap();
                assert!(rep.pass, "eta={eta} lambda={lambda} g={g}: {rep:?}");
            }
        }
    }
}

#[test]
fn non_ferromagnetic_input_is_rejected() {
    let m = covariance(2);
    let p = WickPolynomial::new(vec![0.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
    let source = SourceSpec::constant(2, 0.1).unwrap();
    let err = griffiths_check(&m, &p, &source, &GriffithsRequest::standard(2), &Method::quadrature());
    assert!(matches!(err, Err(padic_qft::Error::Hypothesis(_))));
}

#[test]
fn monte_carlo_error_shrinks_like_inverse_root_n() {
    let m = covariance(2);
    let p = WickPolynomial::quartic(0.0).unwrap();
    let source = SourceSpec::new(vec![0.5, 0.5], vec![unit(2, 0), unit(2, 0)]).unwrap();
    let exact = schwinger_quadrature(&m, &p, &source).unwrap().value;
    let sizes = [2_000usize, 8_000, 32_000, 128_000];
    let pts: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&n| {
            let ms: f64 = (0..24u64)
                .map(|seed| (schwinger_mc(&m, &p, &source, 1000 + seed, n).unwrap().value - exact).powi(2))
                .sum::<f64>()
                / 24.0;
            ((n as f64).ln(), 0.5 * ms.ln())
        })
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
}

#[test]
fn sampling_is_reproducible_and_correlated() {
    let m = covariance(2);
    let a: Vec<FieldSample> = sample_field(&m, 5, 1000).collect();
    let b: Vec<FieldSample> = sample_field(&m, 5, 1000).collect();
    assert_eq!(a, b);
    let draws: Vec<FieldSample> = sample_field(&m, 6, 40_000).collect();
    let n = draws.len() as f64;
    let mean = |f: &dyn Fn(&[f64]) -> f64| draws.iter().map(|s| f(&s.values)).sum::<f64>() / n;
    let c01 = mean(&|t| t[0] * t[1]);
    let v0 = mean(&|t| t[0] * t[0]);
    let v1 = mean(&|t| t[1] * t[1]);
    let corr = c01 / (v0 * v1).sqrt();
    assert!((corr - 52.0 / 286.0).abs() < 0.02, "{corr}");
}

#[test]
fn stability_matches_adaptive_integration() {
    let m = covariance(1);
    let var = m.entries()[(0, 0)];
    let wick_var = free_wick_variances(&m).unwrap()[0];
    let p = WickPolynomial::quartic(0.0).unwrap();
    let source = SourceSpec::constant(1, 1.0).unwrap();
    let rho = [1.0, 2.0, 4.0];
    let rep = partition_stability(&m, &p, &source, &rho, 17, 100_000).unwrap();
    assert!(rep.pass);
    for row in &rep.rows {
        let w = |x: f64| (-row.rho * hermite_wick(x, 4, wick_var)).exp() * gaussian_density(x, var);
        let z = simpson_line(&w, 12.0, 1e-12 * w(0.0).max(1.0));
        assert!(
            (row.partition - z).abs() <= 3.0 * row.std_error,
            "rho={}: {} vs {z}",
            row.rho,
            row.partition
        );
    }
}
