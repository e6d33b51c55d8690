//! Wick calculus relative to a Gaussian variance: coefficient tables,
//! Wick powers and their inverse, change of the ordering variance,
//! polynomials with a pointwise lower bound, and the exact L₂ distance
//! between Wick powers of the field smoothed at two Fourier cutoffs.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::{green_regularized, green_regularized_gap, shell_measure, FieldParams, NormExp, DEFAULT_TOL};
use crate::ultrametric::{Distance, LatticeSpec};

/// Largest order with an exactly tabulated coefficient set.
pub const MAX_WICK_ORDER: usize = 40;

/// Exact coefficients `w_{k,j} = (-1)^j k! / (2^j j! (k-2j)!)` of
/// `:X^k: = Σ_j w_{k,j} c^{2j} X^{k-2j}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WickTable {
    k: usize,
    exact: Vec<i128>,
}

impl WickTable {
    fn build(k: usize) -> Self {
        let mut exact = Vec::with_capacity(k / 2 + 1);
        let mut w: i128 = 1;
        exact.push(w);
        for j in 0..k / 2 {
            let top = ((k - 2 * j) * (k - 2 * j - 1)) as i128;
            let bottom = 2 * (j as i128 + 1);
            // w * top fits comfortably for k <= 40 and is divisible by bottom
            w = -(w.checked_mul(top).expect("wick coefficient overflow") / bottom);
            exact.push(w);
        }
        Self { k, exact }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `w_{k,j}` for `j = 0..=k/2`.
    pub fn exact(&self) -> &[i128] {
        &self.exact
    }

    pub fn coefficient(&self, j: usize) -> f64 {
        self.exact[j] as f64
    }

    /// `k! / (2^j j! (k-2j)!)`, the number of ways to pair `2j` of `k` points.
    pub fn pairings(&self, j: usize) -> f64 {
        self.exact[j].unsigned_abs() as f64
    }

    pub fn evaluate(&self, x: f64, variance: f64) -> f64 {
        let k = self.k as i32;
        self.exact
            .iter()
            .enumerate()
            .map(|(j, &w)| w as f64 * x.powi(k - 2 * j as i32) * variance.powi(j as i32))
            .sum()
    }
}

fn tables() -> &'static [WickTable] {
    static TABLES: OnceLock<Vec<WickTable>> = OnceLock::new();
    TABLES.get_or_init(|| (0..=MAX_WICK_ORDER).map(WickTable::build).collect())
}

fn table(k: usize) -> Result<&'static WickTable> {
    tables()
        .get(k)
        .ok_or_else(|| Error::Argument(format!("wick order {k} exceeds the supported maximum {MAX_WICK_ORDER}")))
}

pub fn wick_coefficients(k: usize) -> Result<WickTable> {
    table(k).cloned()
}

/// `:x^k:` relative to `variance`.
pub fn wick_power(x: f64, k: usize, variance: f64) -> f64 {
    match table(k) {
        Ok(t) => t.evaluate(x, variance),
        Err(_) => hermite_recursion(x, k, variance),
    }
}

/// `:X^{j+1}: = X :X^j: - j c² :X^{j-1}:`, used past the tabulated range.
fn hermite_recursion(x: f64, k: usize, variance: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = x * cur - j as f64 * variance * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `x^k` recovered from Wick powers: `Σ_j k!/(2^j j!(k-2j)!) c^{2j} :x^{k-2j}:`.
pub fn wick_unpower(x: f64, k: usize, variance: f64) -> Result<f64> {
    let t = table(k)?;
    Ok((0..=k / 2)
        .map(|j| t.pairings(j) * variance.powi(j as i32) * wick_power(x, k - 2 * j, variance))
        .sum())
}

/// Value at `x` of `:X^k:` ordered w.r.t. `var_from`, computed from powers
/// ordered w.r.t. `var_to` via the shift `var_to - var_from`.
pub fn wick_change_of_variance(k: usize, var_from: f64, var_to: f64, x: f64) -> Result<f64> {
    let t = table(k)?;
    let shift = var_to - var_from;
    Ok((0..=k / 2)
        .map(|j| t.pairings(j) * shift.powi(j as i32) * wick_power(x, k - 2 * j, var_to))
        .sum())
}

/// Ordinary coefficients `b` (by degree) to coefficients in the Wick basis
/// `{:X^j:}` relative to `variance`.
pub fn to_wick_basis(coeffs: &[f64], variance: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; coeffs.len()];
    for (k, &b) in coeffs.iter().enumerate() {
        let t = table(k)?;
        for j in 0..=k / 2 {
            out[k - 2 * j] += b * t.pairings(j) * variance.powi(j as i32);
        }
    }
    Ok(out)
}

/// Wick-basis coefficients back to ordinary coefficients.
pub fn from_wick_basis(wick: &[f64], variance: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; wick.len()];
    for (k, &a) in wick.iter().enumerate() {
        let t = table(k)?;
        for j in 0..=k / 2 {
            out[k - 2 * j] += a * t.coefficient(j) * variance.powi(j as i32);
        }
    }
    Ok(out)
}

/// Wick-basis coefficients for `var_from` re-expressed for `var_to`. The
/// top coefficient is unchanged.
pub fn change_of_variance_coeffs(wick: &[f64], var_from: f64, var_to: f64) -> Result<Vec<f64>> {
    let shift = var_to - var_from;
    let mut out = vec![0.0; wick.len()];
    for (k, &a) in wick.iter().enumerate() {
        let t = table(k)?;
        for j in 0..=k / 2 {
            out[k - 2 * j] += a * t.pairings(j) * shift.powi(j as i32);
        }
    }
    Ok(out)
}

/// `P(X) = a_s X^s + ... + a_0` with `s` even and `a_s > 0`, whose Wick
/// ordering `:P: = Σ a_j :X^j:` enters the interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct WickPolynomial {
    coeffs: Vec<f64>,
    ferromagnetic: bool,
}

impl WickPolynomial {
    /// Coefficients by increasing degree; trailing entry is the leading one.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let mut problems = Vec::new();
        if coeffs.len() < 3 {
            problems.push("polynomial must have even degree s >= 2".to_string());
        } else {
            let s = coeffs.len() - 1;
            if !s.is_multiple_of(2) {
                problems.push(format!("degree s = {s} must be even for a semibounded interaction"));
            }
            if s > MAX_WICK_ORDER {
                problems.push(format!("degree s = {s} exceeds {MAX_WICK_ORDER}"));
            }
            if !(coeffs[s] > 0.0) {
                problems.push(format!("leading coefficient a_s = {} must be positive", coeffs[s]));
            }
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            problems.push("coefficients must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(Self {
                coeffs,
                ferromagnetic: false,
            })
        } else {
            Err(Error::Config(problems))
        }
    }

    /// `Q(X) - λX` with `Q` even; `q_coeffs` are the coefficients of `Q`.
    pub fn q_minus_lambda(q_coeffs: Vec<f64>, lambda: f64) -> Result<Self> {
        if let Some(j) = q_coeffs.iter().enumerate().position(|(j, c)| j % 2 == 1 && *c != 0.0) {
            return Err(Error::Hypothesis(format!(
                "Q must be even but has a nonzero X^{j} term"
            )));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Hypothesis(format!("lambda = {lambda} must be nonnegative")));
        }
        let mut coeffs = q_coeffs;
        if coeffs.len() < 2 {
            coeffs.resize(2, 0.0);
        }
        coeffs[1] = -lambda;
        let mut p = Self::new(coeffs)?;
        p.ferromagnetic = true;
        Ok(p)
    }

    /// `X^4 - λX`, the standard test interaction.
    pub fn quartic(lambda: f64) -> Result<Self> {
        Self::q_minus_lambda(vec![0.0, 0.0, 0.0, 0.0, 1.0], lambda)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    /// `λ = -a_1`.
    pub fn lambda(&self) -> f64 {
        -self.coeffs[1]
    }

    /// Whether the `Q - λX` form was asserted at construction.
    pub fn claims_q_minus_lambda(&self) -> bool {
        self.ferromagnetic
    }

    /// Verifies the even-ferromagnet hypotheses: no odd terms of degree
    /// `>= 3` and `λ >= 0`.
    pub fn check_q_minus_lambda(&self) -> Result<()> {
        for (j, &c) in self.coeffs.iter().enumerate().skip(3).step_by(2) {
            if c != 0.0 {
                return Err(Error::Hypothesis(format!(
                    "Q must be even but the X^{j} coefficient is {c}"
                )));
            }
        }
        if self.lambda() < 0.0 {
            return Err(Error::Hypothesis(format!(
                "lambda = {} must be nonnegative",
                self.lambda()
            )));
        }
        Ok(())
    }

    /// `B = max_j |a_j|`.
    pub fn b_const(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `D = a_s ‖g‖₁ (1 + max_{j<s} (|a_j/a_s| + 1)^{s/(s-j)})`.
    pub fn d_const(&self, g_l1: f64) -> f64 {
        let s = self.degree();
        let a_s = self.leading();
        let worst = (0..s)
            .map(|j| (self.coeffs[j].abs() / a_s + 1.0).powf(s as f64 / (s - j) as f64))
            .fold(0.0, f64::max);
        a_s * g_l1 * (1.0 + worst)
    }

    /// Ordinary coefficients of `:P:` relative to `variance`.
    pub fn expanded(&self, variance: f64) -> Vec<f64> {
        from_wick_basis(&self.coeffs, variance).expect("degree checked at construction")
    }

    /// `:P(x):` at a single point.
    pub fn eval(&self, x: f64, variance: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(j, &a)| a * wick_power(x, j, variance))
            .sum()
    }

    /// Same polynomial with every coefficient scaled by `rho`.
    pub fn scaled(&self, rho: f64) -> Result<Self> {
        let mut p = Self::new(self.coeffs.iter().map(|c| c * rho).collect())?;
        p.ferromagnetic = self.ferromagnetic;
        Ok(p)
    }
}

/// `:P(φ):(g) = Σ_i g_i Σ_j a_j :t_i^j:` with per-cell ordering variances.
pub fn wick_poly_eval(p: &WickPolynomial, values: &[f64], g: &[f64], variances: &[f64]) -> Result<f64> {
    if values.len() != g.len() || g.len() != variances.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} values, {} weights, {} variances",
            values.len(),
            g.len(),
            variances.len()
        )));
    }
    if let Some(i) = g.iter().position(|&w| !(w >= 0.0)) {
        return Err(Error::Argument(format!("coupling g[{i}] = {} is negative", g[i])));
    }
    Ok(values
        .iter()
        .zip(g)
        .zip(variances)
        .filter(|((_, &w), _)| w != 0.0)
        .map(|((&t, &w), &v)| w * p.eval(t, v))
        .sum())
}

/// Lower bound for `min_x Σ_i b_i x^i` obtained by splitting `a_s x^s`
/// evenly over the nonzero lower monomials.
fn split_lower_bound(b: &[f64]) -> f64 {
    let s = b.len() - 1;
    let a_s = b[s];
    let active: Vec<usize> = (1..s).filter(|&i| b[i] != 0.0).collect();
    let share = a_s / active.len().max(1) as f64;
    let mut total = b[0];
    let mut scale = b[0].abs();
    for &i in &active {
        let c = b[i] / share;
        if i % 2 == 0 && c >= 0.0 {
            continue;
        }
        let (si, ii) = (s as f64, i as f64);
        let ca = c.abs();
        let min = -ca * (si - ii) / si * (ca * ii / si).powf(ii / (si - ii));
        total += share * min;
        scale += (share * min).abs();
    }
    // absorbs rounding in the caller's evaluation of the same polynomial
    total - 1e-12 * scale
}

/// Deterministic lower bound on `:P:(g)` when every cell uses `variance`
/// and `Σ g_i = g_l1`.
pub fn wick_poly_lower_bound(p: &WickPolynomial, g_l1: f64, variance: f64) -> Result<f64> {
    if !(g_l1 >= 0.0) {
        return Err(Error::Argument(format!("‖g‖₁ = {g_l1} must be nonnegative")));
    }
    if !(variance >= 0.0) {
        return Err(Error::Argument(format!("variance {variance} must be nonnegative")));
    }
    Ok(g_l1 * split_lower_bound(&p.expanded(variance)))
}

/// Squared L₂ distance between `:φ_{κ₁}^k:(g)` and `:φ_{κ₂}^k:(g)` and its root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WickDistance {
    pub squared: f64,
    pub distance: f64,
}

/// `A^k - B^k` from `A`, `B` and the independently computed gap `A - B`.
fn power_gap(a: f64, b: f64, gap: f64, k: u32) -> f64 {
    let sum: f64 = (0..k).map(|i| a.powi(i as i32) * b.powi((k - 1 - i) as i32)).sum();
    gap * sum
}

/// `k! [(g, E_{κ₁}^k * g) - (g, E_{κ₂}^k * g)]` for `g` constant on the
/// cells of `lattice`.
pub fn wick_l2_distance(
    params: &FieldParams,
    kappa1: i32,
    kappa2: i32,
    k: u32,
    lattice: &LatticeSpec,
    g: &[f64],
) -> Result<WickDistance> {
    if kappa1 < kappa2 {
        return Err(Error::Argument(format!("kappa1 = {kappa1} is below kappa2 = {kappa2}")));
    }
    if g.len() != lattice.len() {
        return Err(Error::Argument(format!(
            "g has {} values for {} cells",
            g.len(),
            lattice.len()
        )));
    }
    if kappa1 == kappa2 || k == 0 {
        return Ok(WickDistance {
            squared: 0.0,
            distance: 0.0,
        });
    }
    let q = f64::from(params.q());
    let l = lattice.cell_level();
    let diff = |x: NormExp| -> Result<f64> {
        let a = green_regularized(params, kappa1, x, DEFAULT_TOL)?;
        let b = green_regularized(params, kappa2, x, DEFAULT_TOL)?;
        Ok(power_gap(a, b, green_regularized_gap(params, kappa1, kappa2, x), k))
    };

    // ∫_{‖z‖ ≤ q^l} (E_{κ₁}^k - E_{κ₂}^k)(z) dz: both are constant below
    // q^{-κ₁} and agree above q^{-κ₂}
    let inner_top = l.min(-kappa1);
    let mut ball = q.powi(inner_top) * diff(NormExp::Zero)?;
    for m in (-kappa1 + 1)..=l.min(-kappa2) {
        ball += shell_measure(params, m) * diff(NormExp::Exp(m))?;
    }

    let mut total = 0.0;
    for i in 0..lattice.len() {
        if g[i] == 0.0 {
            continue;
        }
        total += g[i] * g[i] * q.powi(l) * ball;
        for j in i + 1..lattice.len() {
            if g[j] == 0.0 {
                continue;
            }
            if let Distance::Exp(d) = lattice.distance(i, j)? {
                total += 2.0 * g[i] * g[j] * q.powi(2 * l) * diff(NormExp::Exp(d))?;
            }
        }
    }
    let squared = total * (1..=k).map(f64::from).product::<f64>();
    Ok(WickDistance {
        squared,
        distance: squared.max(0.0).sqrt(),
    })
}

/// `(κ₂, distance)` for `κ₂ = lo..=hi` at fixed `κ₁`.
pub fn wick_decay_series(
    params: &FieldParams,
    kappa1: i32,
    kappa2: std::ops::RangeInclusive<i32>,
    k: u32,
    lattice: &LatticeSpec,
    g: &[f64],
) -> Result<Vec<(i32, f64)>> {
    kappa2
        .map(|k2| Ok((k2, wick_l2_distance(params, kappa1, k2, k, lattice, g)?.distance)))
        .collect()
}

/// Least-squares rate `τ` in `distance ≈ C q^{-τ κ₂}`; zero distances are
/// skipped.
pub fn fitted_decay_rate(q: u32, series: &[(i32, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|&(k, d)| (f64::from(k), d.ln() / f64::from(q).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ultrametric::Region;
    use approx::assert_relative_eq;

    #[test]
    fn small_tables() {
        assert_eq!(wick_coefficients(0).unwrap().exact(), &[1]);
        assert_eq!(wick_coefficients(2).unwrap().exact(), &[1, -1]);
        assert_eq!(wick_coefficients(4).unwrap().exact(), &[1, -6, 3]);
        assert_eq!(wick_coefficients(6).unwrap().exact(), &[1, -15, 45, -15]);
        assert!(wick_coefficients(41).is_err());
    }

    #[test]
    fn table_matches_factorial_formula_exactly() {
        // independent: ratio of products of u128 factorial pieces, k <= 30
        for k in 0..=30usize {
            let t = wick_coefficients(k).unwrap();
            for j in 0..=k / 2 {
                let num: u128 = ((k - 2 * j + 1)..=k).map(|x| x as u128).product();
                let den: u128 = (1..=j).map(|x| 2 * x as u128).product();
                let mag = (num / den) as i128;
                let want = if j % 2 == 0 { mag } else { -mag };
                assert_eq!(t.exact()[j], want, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn top_order_fits() {
        let t = wick_coefficients(40).unwrap();
        assert_eq!(t.exact()[0], 1);
        // (2j-1)!! at j = 20 with k = 2j
        let double_fact: i128 = (1..=39).step_by(2).product();
        assert_eq!(t.exact()[20], double_fact);
    }

    #[test]
    fn wick_power_examples() {
        assert_relative_eq!(wick_power(1.7, 5, 0.0), 1.7f64.powi(5), max_relative = 1e-15);
        assert_relative_eq!(wick_power(0.0, 4, 0.3), 3.0 * 0.09);
        assert_relative_eq!(wick_power(2.0, 2, 0.5), 3.5);
        assert_relative_eq!(wick_power(1.3, 45, 0.2), hermite_recursion(1.3, 45, 0.2));
    }

    #[test]
    fn unpower_round_trip() {
        for k in 0..=8 {
            for &x in &[-10.0, -2.5, 0.0, 0.7, 10.0] {
                for &v in &[0.0, 0.4, 10.0] {
                    let back = wick_unpower(x, k, v).unwrap();
                    let want = f64::powi(x, k as i32);
                    assert!(
                        (back - want).abs() <= 1e-12 * want.abs().max(1.0) * 10f64.powi(k as i32 / 2),
                        "{k} {x} {v}"
                    );
                }
            }
        }
        assert_relative_eq!(wick_unpower(1.5, 2, 0.4).unwrap(), 2.25, max_relative = 1e-15);
    }

    #[test]
    fn basis_round_trip() {
        let b = vec![0.3, -1.0, 2.0, 0.0, 1.5, 0.2, 1.0];
        let w = to_wick_basis(&b, 0.8).unwrap();
        let back = from_wick_basis(&w, 0.8).unwrap();
        for (x, y) in b.iter().zip(&back) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn change_of_variance_examples() {
        assert_relative_eq!(
            wick_change_of_variance(2, 0.3, 0.7, 1.1).unwrap(),
            1.21 - 0.3,
            epsilon = 1e-14
        );
        for k in 0..=10 {
            for &x in &[-1.5, 0.2, 2.0] {
                let direct = wick_power(x, k, 0.45);
                let via = wick_change_of_variance(k, 0.45, 0.9, x).unwrap();
                assert!((direct - via).abs() <= 1e-11 * direct.abs().max(1.0));
                assert_eq!(wick_change_of_variance(k, 0.45, 0.45, x).unwrap(), direct);
            }
        }
        let w = vec![0.1, 0.0, -2.0, 0.0, 1.0];
        let there = change_of_variance_coeffs(&w, 0.6, 0.25).unwrap();
        assert_eq!(there[4], 1.0);
        let back = change_of_variance_coeffs(&there, 0.25, 0.6).unwrap();
        for (x, y) in w.iter().zip(&back) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn polynomial_validation() {
        assert!(WickPolynomial::new(vec![0.0, 0.0, -1.0]).is_err());
        assert!(WickPolynomial::new(vec![0.0, 0.0, 0.0, 1.0]).is_err());
        assert!(WickPolynomial::q_minus_lambda(vec![0.0, 0.0, 0.0, 1.0, 1.0], 0.0).is_err());
        assert!(WickPolynomial::quartic(-0.5).is_err());
        let p = WickPolynomial::quartic(0.5).unwrap();
        assert_eq!(p.lambda(), 0.5);
        assert!(p.check_q_minus_lambda().is_ok());
        let odd = WickPolynomial::new(vec![0.0, 0.0, 0.0, 0.3, 1.0]).unwrap();
        assert!(matches!(odd.check_q_minus_lambda(), Err(Error::Hypothesis(_))));
        assert_eq!(odd.b_const(), 1.0);
    }

    #[test]
    fn poly_eval_examples() {
        let lin = [0.0, 1.0];
        let square = WickPolynomial::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(wick_poly_eval(&square, &[1.2], &[1.0], &[0.3]).unwrap(), 1.44 - 0.3);
        let q = WickPolynomial::new(vec![0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        // only the linear piece survives after subtracting the quartic part
        let t = [0.4, -1.0, 2.0];
        let g = [0.5, 1.0, 0.25];
        let v = [0.2, 0.3, 0.4];
        let full = wick_poly_eval(&q, &t, &g, &v).unwrap();
        let quartic: f64 = (0..3).map(|i| g[i] * wick_power(t[i], 4, v[i])).sum();
        let want: f64 = (0..3).map(|i| g[i] * t[i] * lin[1]).sum();
        assert_relative_eq!(full - quartic, want, epsilon = 1e-14);
        assert_eq!(wick_poly_eval(&square, &t, &[0.0; 3], &v).unwrap(), 0.0);
        assert!(wick_poly_eval(&square, &t, &g, &v[..2]).is_err());
        // zero variance is the ordinary polynomial
        assert_relative_eq!(
            wick_poly_eval(&q, &[1.5], &[1.0], &[0.0]).unwrap(),
            1.5 + 1.5f64.powi(4)
        );
    }

    #[test]
    fn lower_bound_examples() {
        let square = WickPolynomial::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(
            wick_poly_lower_bound(&square, 1.0, 0.7).unwrap(),
            -0.7,
            max_relative = 1e-11
        );
        let quartic = WickPolynomial::quartic(0.0).unwrap();
        let v = 0.8;
        let bound = wick_poly_lower_bound(&quartic, 1.0, v).unwrap();
        let grid_min = (-40_000..=40_000)
            .map(|i| quartic.eval(f64::from(i) * 1e-4, v))
            .fold(f64::INFINITY, f64::min);
        assert!(bound <= grid_min);
        assert_relative_eq!(bound, -6.0 * v * v, max_relative = 1e-10);
        let positive = WickPolynomial::new(vec![1.0, 0.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(wick_poly_lower_bound(&positive, 3.0, 0.0).unwrap() <= 3.0);
    }

    fn single_cell(l: i32) -> LatticeSpec {
        Region::new(3, 1, 0, vec![vec![1]]).unwrap().refine(l).unwrap()
    }

    #[test]
    fn l2_distance_first_order_matches_fourier_side() {
        // g = indicator of a level-0 ball, resolved on level-0 and level-(-2)
        // cells; its transform has |ĝ|² = 1 on ‖ξ‖ <= 1
        let p = FieldParams::new(3, 1, 1.0, 1.0, 1.0).unwrap();
        let (k1, k2) = (6, -3);
        let fourier: f64 = ((k2 + 1)..=k1.min(0))
            .map(|m| shell_measure(&p, m) / (crate::model::symbol_a(&p, m) + 1.0))
            .sum();
        for l in [-2, 0] {
            let lat = single_cell(l);
            let g = vec![1.0; lat.len()];
            let got = wick_l2_distance(&p, k1, k2, 1, &lat, &g).unwrap();
            assert_relative_eq!(got.squared, fourier, max_relative = 1e-12);
        }
    }

    #[test]
    fn l2_distance_basics() {
        let p = FieldParams::new(3, 1, 1.0, 1.0, 1.0).unwrap();
        let lat = Region::new(3, 1, 0, vec![vec![0], vec![2]])
            .unwrap()
            .refine(-1)
            .unwrap();
        let g: Vec<f64> = (0..lat.len()).map(|i| 1.0 + 0.1 * i as f64).collect();
        assert_eq!(wick_l2_distance(&p, 4, 4, 3, &lat, &g).unwrap().squared, 0.0);
        assert!(wick_l2_distance(&p, 2, 4, 3, &lat, &g).is_err());
        let mut prev = f64::INFINITY;
        for k2 in 0..12 {
            let d = wick_l2_distance(&p, 15, k2, 3, &lat, &g).unwrap();
            assert!(d.squared >= 0.0 && d.squared <= prev);
            prev = d.squared;
        }
    }
}
