//! Model integrals against brute-force character sums and plain series.

mod common;

use approx::assert_relative_eq;
use common::{character_sum, shell, symbol};
use padic_qft::model::*;
use padic_qft::ultrametric::Distance;

fn params(p: u32, alpha: f64, m_sq: f64, gamma: f64) -> FieldParams {
    FieldParams::new(p, 1, alpha, m_sq, gamma).unwrap()
}

/// `Σ_m χ-integral(m, d) / (a_m + m²)` over `lo ≤ m ≤ hi`.
fn resolvent_series(p: u32, bh: f64, m_sq: f64, gamma: f64, d: Option<i32>, lo: i32, hi: i32) -> f64 {
    (lo..=hi)
        .rev()
        .map(|m| character_sum(p, m, d) / (symbol(gamma, f64::from(p), bh, m) + m_sq))
        .sum()
}

#[test]
fn character_integral_matches_residue_sums() {
    for p in [3u32, 5] {
        let par = params(p, 1.0, 1.0, 1.0);
        for m in -3..=4 {
            assert_relative_eq!(character_shell_integral(&par, m, NormExp::Zero), shell(f64::from(p), m));
            for d in -3..=(7 - m).min(4) {
                let got = character_shell_integral(&par, m, NormExp::Exp(d));
                let want = character_sum(p, m, Some(d));
                assert!(
                    (got - want).abs() < 1e-12 * shell(f64::from(p), m).max(1.0),
                    "p={p} m={m} d={d}"
                );
            }
        }
    }
}

#[test]
fn green_function_matches_character_series() {
    for (p, alpha, m_sq, gamma) in [(3u32, 1.0, 1.0, 1.0), (5, 0.8, 0.5, 1.5), (3, 1.5, 2.0, 0.7)] {
        let par = params(p, alpha, m_sq, gamma);
        let bh = par.beta_hat();
        for d in -2..=3 {
            let want = resolvent_series(p, bh, m_sq, gamma, Some(d), -120, 7 - d);
            let got = green_function(&par, NormExp::Exp(d), 1e-14).unwrap().finite().unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
        let origin = resolvent_series(p, bh, m_sq, gamma, None, -120, 400);
        let got = green_function(&par, NormExp::Zero, 1e-14).unwrap().finite().unwrap();
        assert_relative_eq!(got, origin, max_relative = 1e-9);
    }
}

#[test]
fn green_function_at_unit_norm_value() {
    // Σ_{m≤0} shell/(9^m+1) − 1/10
    let e = green_function(&params(3, 1.0, 1.0, 1.0), NormExp::Exp(0), 1e-14)
        .unwrap()
        .finite()
        .unwrap();
    assert!((e - 0.543506).abs() < 1e-6, "{e}");
}

#[test]
fn ball_and_tail_integrals_match_series() {
    let par = params(5, 0.75, 0.3, 2.0);
    let (p, bh) = (5.0, par.beta_hat());
    for kappa in [-3, 0, 4] {
        for beta in [1.0, 1.5, 2.0] {
            let want: f64 = (kappa - 200..=kappa)
                .map(|m| shell(p, m) * (symbol(2.0, p, bh, m) + 0.3).powf(-beta))
                .sum();
            let got = resolvent_ball_integral(&par, kappa, beta, 1e-15).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-12);
            let want: f64 = (kappa..kappa + 400)
                .rev()
                .map(|m| shell(p, m) * (symbol(2.0, p, bh, m) + 0.3).powf(-beta))
                .sum();
            let got = resolvent_tail_integral(&par, kappa, beta, 1e-15 * want).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }
}

#[test]
fn ball_integral_example_value() {
    let v = c_kappa_sq(&params(3, 1.0, 1.0, 1.0), 0, 1e-14).unwrap();
    assert!((v - 0.643506).abs() < 1e-6);
}

#[test]
fn tail_integral_below_geometric_bound() {
    let v = resolvent_tail_integral(&params(3, 1.0, 1.0, 1.0), 1, 2.0, 1e-14).unwrap();
    assert!(v <= (2.0 / 3.0) * 3f64.powi(-3) / (1.0 - 3f64.powi(-3)));
}

#[test]
fn critical_increments_approach_shell_over_gamma() {
    let par = params(3, 0.5, 1.0, 1.0);
    let inc = |k| c_kappa_sq(&par, k, 1e-14).unwrap() - c_kappa_sq(&par, k - 1, 1e-14).unwrap();
    assert!((inc(40) - 2.0 / 3.0).abs() < 1e-12);
    let c1 = ball_bound_constant(&par);
    for k in 1..=50 {
        assert!(c_kappa_sq(&par, k, 1e-14).unwrap() / f64::from(k) <= c1);
    }
}

#[test]
fn omega_closes_plancherel_identity() {
    // spectral: Σ_{m≤0} a_m shell(m); kernel: −Ω Σ_{j≥1} shell(j) q^{-j(β̂+1)}
    for q in [3.0f64, 5.0, 9.0, 25.0] {
        for bh in [0.5, 1.0, 2.0, 3.0] {
            let spectral: f64 = (-300..=0).map(|m| symbol(1.0, q, bh, m) * shell(q, m)).sum();
            let kernel_unit: f64 = (1..300).map(|j| (1.0 - 1.0 / q) * q.powf(-f64::from(j) * bh)).sum();
            let omega = omega_for(q, bh, 1.0);
            assert_relative_eq!(-omega * kernel_unit, spectral, max_relative = 1e-12);
        }
    }
    assert_relative_eq!(
        vladimirov_omega(&params(3, 1.0, 1.0, 1.0)),
        -108.0 / 13.0,
        max_relative = 1e-14
    );
    assert_relative_eq!(
        vladimirov_omega(&params(3, 0.5, 1.0, 1.0)),
        -9.0 / 4.0,
        max_relative = 1e-14
    );
    assert!(omega_for(3.0, 1e-9, 1.0).abs() < 1e-8);
}

#[test]
fn regularized_green_function_limits() {
    let par = params(3, 1.0, 1.0, 1.0);
    for d in -3..=3 {
        let x = NormExp::Exp(d);
        let full = green_function(&par, x, 1e-14).unwrap().finite().unwrap();
        assert_relative_eq!(
            green_regularized(&par, 30, x, 1e-14).unwrap(),
            full,
            max_relative = 1e-12
        );
        for kappa in -4..=4 {
            let e = green_regularized(&par, kappa, x, 1e-14).unwrap();
            let ck = c_kappa_sq(&par, kappa, 1e-14).unwrap();
            assert!(e <= ck + 1e-15);
            if d <= -kappa {
                assert_relative_eq!(e, ck, max_relative = 1e-14);
            }
        }
    }
}

#[test]
fn free_covariance_examples() {
    let par = params(3, 1.0, 1.0, 1.0);
    let var = free_covariance_entry(&par, 0, Distance::Same, 1e-14).unwrap();
    let near = free_covariance_entry(&par, 0, Distance::Exp(1), 1e-14).unwrap();
    assert!((var - 0.643506).abs() < 1e-6);
    assert!((near - 0.143506).abs() < 1e-6);
    assert!(free_covariance_entry(&par, 0, Distance::Exp(20), 1e-14).unwrap() < 1e-25);
}
