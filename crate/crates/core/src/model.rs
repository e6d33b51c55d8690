//! Radial elliptic symbol `a(ξ) = γ‖ξ‖^β̂`, its resolvent integrals and the
//! Green functions of `A + m²`.
//!
//! Everything is radial, so integrals over `K` reduce to sums over spheres
//! `‖ξ‖ = q^m` of Haar measure `q^m (1 - 1/q)`. Series are truncated with
//! geometric tail bounds against a caller-supplied tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ultrametric::Distance;

/// Default truncation tolerance for shell series.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Norm exponent of a point: `‖x‖ = q^d`, or `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormExp {
    Zero,
    Exp(i32),
}

/// Value of the Green function, which blows up at the origin when `α = n/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenValue {
    Finite(f64),
    Infinite,
}

impl GreenValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            GreenValue::Finite(v) => Some(v),
            GreenValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, GreenValue::Infinite)
    }
}

/// The model: residue field `F_q` with `q = p^n`, symbol exponent `2α/n`,
/// mass `m²`, radial symbol constant `γ` and radial kernel constant `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    p: u32,
    n: u32,
    q: u32,
    alpha: f64,
    m_sq: f64,
    gamma: f64,
    omega: f64,
}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

impl FieldParams {
    /// Validated parameters with `Ω` resolved from `γ` (see [`vladimirov_omega`]).
    pub fn new(p: u32, n: u32, alpha: f64, m_sq: f64, gamma: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !is_prime(p) || p == 2 {
            problems.push(format!("p = {p} must be an odd prime"));
        }
        if !(1..=4).contains(&n) {
            problems.push(format!("n = {n} must be in 1..=4"));
        }
        if !(alpha.is_finite() && alpha >= f64::from(n) / 2.0) {
            problems.push(format!("alpha must be ≥ n/2 (alpha = {alpha}, n = {n})"));
        }
        if !(m_sq.is_finite() && m_sq > 0.0) {
            problems.push(format!("m_sq = {m_sq} must be positive"));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            problems.push(format!("gamma = {gamma} must be positive"));
        }
        if !problems.is_empty() {
            return Err(Error::Argument(problems.join("; ")));
        }
        let q = p
            .checked_pow(n)
            .ok_or_else(|| Error::Argument(format!("{p}^{n} overflows")))?;
        let beta_hat = 2.0 * alpha / f64::from(n);
        let omega = omega_for(f64::from(q), beta_hat, gamma);
        Ok(Self {
            p,
            n,
            q,
            alpha,
            m_sq,
            gamma,
            omega,
        })
    }

    /// Replace the kernel constant by an explicit nonpositive value.
    pub fn with_omega(mut self, omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega <= 0.0) {
            return Err(Error::Argument(format!("omega = {omega} must be nonpositive")));
        }
        self.omega = omega;
        Ok(self)
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn m_sq(&self) -> f64 {
        self.m_sq
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Symbol exponent `2α/n`.
    pub fn beta_hat(&self) -> f64 {
        2.0 * self.alpha / f64::from(self.n)
    }

    /// `α = n/2`: logarithmic Green function at the origin.
    pub fn is_critical(&self) -> bool {
        (self.beta_hat() - 1.0).abs() < 1e-12
    }

    fn qf(&self) -> f64 {
        f64::from(self.q)
    }

    fn resolvent(&self, m: i32) -> f64 {
        symbol_a(self, m) + self.m_sq
    }
}

/// Haar measure of the sphere `‖ξ‖ = q^m`.
pub fn shell_measure(params: &FieldParams, m: i32) -> f64 {
    let q = params.qf();
    q.powi(m) * (1.0 - 1.0 / q)
}

/// `a(ξ)` on the sphere `‖ξ‖ = q^m`.
pub fn symbol_a(params: &FieldParams, m: i32) -> f64 {
    params.gamma * params.qf().powf(f64::from(m) * params.beta_hat())
}

/// `∫_{‖ξ‖ = q^m} χ(xξ) dξ` for `‖x‖ = q^d` with a rank-zero character χ.
pub fn character_shell_integral(params: &FieldParams, m: i32, x: NormExp) -> f64 {
    let q = params.qf();
    match x {
        NormExp::Zero => shell_measure(params, m),
        NormExp::Exp(d) => match m + d {
            s if s <= 0 => shell_measure(params, m),
            1 => -q.powi(m - 1),
            _ => 0.0,
        },
    }
}

/// `Σ_{m ≤ top} shell(m) f(m)`, given `|f| ≤ bound` on that range. The
/// omitted part `Σ_{m < lo}` is at most `q^(lo-1) · bound < tol`.
fn downward_series(q: f64, top: i32, bound: f64, tol: f64, f: impl Fn(i32) -> f64) -> f64 {
    let cut = ((tol / bound).ln() / q.ln()).floor() as i32;
    let lo = cut.min(top);
    (lo..=top).map(|m| q.powi(m) * (1.0 - 1.0 / q) * f(m)).sum()
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("tolerance {tol} must be positive")))
    }
}

/// `∫_{‖ξ‖ ≤ q^κ} (a(ξ) + m²)^(-β) dξ`.
pub fn resolvent_ball_integral(params: &FieldParams, kappa: i32, beta: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Argument(format!("exponent beta = {beta} must be positive")));
    }
    let bound = params.m_sq.powf(-beta);
    Ok(downward_series(params.qf(), kappa, bound, tol, |m| {
        params.resolvent(m).powf(-beta)
    }))
}

/// `∫_{‖ξ‖ ≥ q^κ} (a(ξ) + m²)^(-β) dξ`; finite only when `β̂β > 1`.
pub fn resolvent_tail_integral(params: &FieldParams, kappa: i32, beta: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let decay = params.beta_hat() * beta - 1.0;
    if !(decay > 1e-12) {
        return Err(Error::Divergent(format!(
            "tail integral needs 2αβ/n > 1, got {}",
            decay + 1.0
        )));
    }
    let q = params.qf();
    // terms are dominated by (1 - 1/q) γ^-β r^m with r = q^-(β̂β - 1)
    let ratio = q.powf(-decay);
    let scale = (1.0 - 1.0 / q) * params.gamma.powf(-beta);
    let mut last = kappa;
    while scale * ratio.powi(last + 1) / (1.0 - ratio) >= tol {
        last += 1;
    }
    Ok((kappa..=last)
        .rev()
        .map(|m| shell_measure(params, m) * params.resolvent(m).powf(-beta))
        .sum())
}

/// `c_κ² = ∫_{‖ξ‖ ≤ q^κ} (a(ξ) + m²)^-1 dξ`, the variance of the smoothed field.
pub fn c_kappa_sq(params: &FieldParams, kappa: i32, tol: f64) -> Result<f64> {
    resolvent_ball_integral(params, kappa, 1.0, tol)
}

/// Constant `c₁ = m⁻² + γ⁻¹(1 - 1/q)` bounding `c_κ² ≤ c₁ κ` for `κ ≥ 1`.
pub fn ball_bound_constant(params: &FieldParams) -> f64 {
    1.0 / params.m_sq + (1.0 - 1.0 / params.qf()) / params.gamma
}

/// Constant `c₂ = γ^-β (1 - 1/q) / (1 - q^(1 - β̂β))` bounding the tail
/// integral by `c₂ q^(-κ(β̂β - 1))`.
pub fn tail_bound_constant(params: &FieldParams, beta: f64) -> Result<f64> {
    let decay = params.beta_hat() * beta - 1.0;
    if !(decay > 1e-12) {
        return Err(Error::Divergent(format!("2αβ/n = {} must exceed 1", decay + 1.0)));
    }
    let q = params.qf();
    Ok(params.gamma.powf(-beta) * (1.0 - 1.0 / q) / (1.0 - q.powf(-decay)))
}

/// Radial kernel constant for which the hypersingular representation
/// `∫ ‖y‖^(-β̂-1) Ω [z(x-y) - z(x)] dy` reproduces the symbol `γ‖ξ‖^β̂`.
pub fn omega_for(q: f64, beta_hat: f64, gamma: f64) -> f64 {
    -gamma * (q.powf(beta_hat) - 1.0) / (1.0 - q.powf(-beta_hat - 1.0))
}

pub fn vladimirov_omega(params: &FieldParams) -> f64 {
    omega_for(params.qf(), params.beta_hat(), params.gamma)
}

/// `(AΔ)(0)` for the unit-ball indicator Δ from the Fourier side:
/// `∫_{‖ξ‖ ≤ 1} a(ξ) dξ`.
pub fn unit_ball_spectral(q: f64, beta_hat: f64, gamma: f64) -> f64 {
    gamma * (1.0 - 1.0 / q) / (1.0 - q.powf(-beta_hat - 1.0))
}

/// `(AΔ)(0)` for the unit-ball indicator from the hypersingular kernel:
/// `-Ω ∫_{‖y‖ > 1} ‖y‖^(-β̂-1) dy`.
pub fn unit_ball_hypersingular(q: f64, beta_hat: f64, omega: f64) -> f64 {
    -omega * (1.0 - 1.0 / q) * q.powf(-beta_hat) / (1.0 - q.powf(-beta_hat))
}

/// Green function `E(x)` of `A + m²` at `‖x‖ = q^d`.
///
/// Away from the origin only the spheres `m ≤ -d` (full measure) and
/// `m = 1 - d` (weight `-q^-d`) contribute. Since the full spheres have
/// total measure `q^-d`, the sum is rearranged into the cancellation-free
/// form `Σ_{m ≤ -d} shell(m) (a_{1-d} - a_m) / ((a_m + m²)(a_{1-d} + m²))`,
/// which is manifestly nonnegative.
pub fn green_function(params: &FieldParams, x: NormExp, tol: f64) -> Result<GreenValue> {
    check_tol(tol)?;
    match x {
        NormExp::Zero => {
            if params.beta_hat() <= 1.0 + 1e-12 {
                Ok(GreenValue::Infinite)
            } else {
                let inner = c_kappa_sq(params, 0, tol / 2.0)?;
                let outer = resolvent_tail_integral(params, 1, 1.0, tol / 2.0)?;
                Ok(GreenValue::Finite(inner + outer))
            }
        }
        NormExp::Exp(d) => Ok(GreenValue::Finite(green_off_origin(params, d, tol))),
    }
}

fn green_off_origin(params: &FieldParams, d: i32, tol: f64) -> f64 {
    let q = params.qf();
    let outer = params.resolvent(1 - d);
    let a_outer = symbol_a(params, 1 - d);
    // sup of the integrand; the tolerance is made relative to the leading
    // sphere so that tiny values far from the origin keep full precision
    let bound = a_outer / (params.m_sq * outer);
    let lead = (1.0 - 1.0 / q) * q.powi(-d) * bound;
    let tol = tol.min(tol * lead);
    // factored so that neither product overflows for large |d|
    downward_series(q, -d, bound, tol, |m| {
        (a_outer - symbol_a(params, m)) / outer / params.resolvent(m)
    })
}

/// `E_κ = δ_κ * E`: the Green function with its Fourier transform cut to
/// `‖ξ‖ ≤ q^κ`. Equals `c_κ²` for `‖x‖ ≤ q^-κ` and `E(x)` once the cut
/// includes the boundary sphere `m = 1 - d`.
pub fn green_regularized(params: &FieldParams, kappa: i32, x: NormExp, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    match x {
        NormExp::Zero => c_kappa_sq(params, kappa, tol),
        NormExp::Exp(d) if kappa <= -d => c_kappa_sq(params, kappa, tol),
        NormExp::Exp(d) => Ok(green_off_origin(params, d, tol)),
    }
}

/// `E_{κ₁}(x) - E_{κ₂}(x)` for `κ₁ ≥ κ₂`, summed directly over the spheres
/// `κ₂ < m ≤ κ₁` so no large values are subtracted.
pub fn green_regularized_gap(params: &FieldParams, kappa1: i32, kappa2: i32, x: NormExp) -> f64 {
    (kappa2 + 1..=kappa1)
        .map(|m| character_shell_integral(params, m, x) / params.resolvent(m))
        .sum()
}

/// Free covariance `(e_i, (A + m²)^-1 e_j)` between normalised level-`l`
/// cell indicators at distance `q^d`; `Same` gives the cell variance
/// `σ_l² = q^l c²_{-l}`.
pub fn free_covariance_entry(params: &FieldParams, l: i32, d: Distance, tol: f64) -> Result<f64> {
    let x = match d {
        Distance::Same => NormExp::Zero,
        Distance::Exp(e) => NormExp::Exp(e),
    };
    Ok(params.qf().powi(l) * green_regularized(params, -l, x, tol)?)
}
