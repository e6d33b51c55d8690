//! Oracles shared by the integration tests. Nothing here calls into the
//! library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 20)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_R f` for an integrand negligible outside `[-half_width, half_width]`,
/// split into unit panels so the adaptive rule sees every bump.
pub fn simpson_line<F: Fn(f64) -> f64>(f: &F, half_width: f64, tol: f64) -> f64 {
    let panels = (2.0 * half_width).ceil() as usize;
    let h = 2.0 * half_width / panels as f64;
    (0..panels)
        .map(|i| {
            let a = -half_width + i as f64 * h;
            simpson(f, a, a + h, tol / panels as f64)
        })
        .sum()
}

pub fn gaussian_density(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
}

/// `:x^k:` with variance `v`, by the three-term Hermite recursion.
pub fn hermite_wick(x: f64, k: usize, v: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if k == 0 {
        return a;
    }
    for j in 1..k {
        let c = x * b - j as f64 * v * a;
        a = b;
        b = c;
    }
    b
}

/// `p`-adic valuation of a nonzero integer.
pub fn valuation(mut x: i64, p: i64) -> u32 {
    assert_ne!(x, 0);
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// The integer whose base-`p` digits, least significant first, are `digits`.
pub fn digits_to_int(digits: &[u32], p: u32) -> i64 {
    digits
        .iter()
        .rev()
        .fold(0i64, |acc, &d| acc * i64::from(p) + i64::from(d))
}

/// Haar measure of the sphere `‖ξ‖ = p^m` in `Q_p`.
pub fn shell(p: f64, m: i32) -> f64 {
    p.powi(m) * (1.0 - 1.0 / p)
}

/// `∫_{‖ξ‖ = p^m} χ(xξ) dξ` for `‖x‖ = p^d` (`d = None` for `x = 0`) in
/// `Q_p`, by summing the additive character over unit residues modulo
/// `p^{d+m}`. Supports `d + m ≤ 7`.
pub fn character_sum(p: u32, m: i32, d: Option<i32>) -> f64 {
    let s = shell(f64::from(p), m);
    let Some(d) = d else { return s };
    let n = d + m;
    if n <= 0 {
        return s;
    }
    assert!(n <= 7, "brute force limited to p^7 residues");
    let modulus = u64::from(p).pow(n as u32);
    let (mut sum, mut count) = (0.0, 0u64);
    for u in 0..modulus {
        if u % u64::from(p) != 0 {
            sum += (2.0 * PI * u as f64 / modulus as f64).cos();
            count += 1;
        }
    }
    s * sum / count as f64
}

/// Model symbol `γ p^{mβ̂}`.
pub fn symbol(gamma: f64, p: f64, beta_hat: f64, m: i32) -> f64 {
    gamma * p.powf(f64::from(m) * beta_hat)
}
