//! Expectations under the interacting lattice measure
//! `dμ ∝ exp(-:P(t):(g)) dN(0, M)(t)`.
//!
//! Two engines share one accumulator: self-normalised importance sampling
//! from the Gaussian (chains in parallel, antithetic pairs `±t`) and a
//! Gauss–Hermite tensor grid in the whitened coordinates `t = L z`.

use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{covariance_matrix, precision_matrix, CovarianceMatrix};
use crate::model::{free_covariance_entry, FieldParams, DEFAULT_TOL};
use crate::report::CheckReport;
use crate::ultrametric::{Distance, Region};
use crate::wick::{wick_poly_eval, WickPolynomial};

pub const DEFAULT_CHAINS: usize = 32;
pub const DEFAULT_QUADRATURE_ORDER: usize = 40;
pub const MAX_QUADRATURE_DIM: usize = 4;
pub const MIN_MC_SAMPLES: usize = 1000;
/// Below this effective sample size an estimate is flagged.
pub const LOW_ESS: f64 = 10.0;

const QUAD_RTOL: f64 = 1e-6;
const QUAD_ATOL: f64 = 1e-10;
/// Largest tensor grid evaluated by the quadrature engine.
const QUAD_POINT_BUDGET: usize = 1 << 26;

/// One Gaussian draw `t = L z` with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub seed: u64,
    pub chain: u64,
    pub index: u64,
}

fn chain_rng(seed: u64, chain: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

fn draw(factor: &DMatrix<f64>, rng: &mut ChaCha20Rng, z: &mut [f64], t: &mut [f64]) {
    for zi in z.iter_mut() {
        *zi = StandardNormal.sample(rng);
    }
    lower_mul(factor, z, t);
}

fn lower_mul(factor: &DMatrix<f64>, z: &[f64], t: &mut [f64]) {
    for (i, ti) in t.iter_mut().enumerate() {
        *ti = (0..=i).map(|k| factor[(i, k)] * z[k]).sum();
    }
}

/// Reproducible stream of draws from `N(0, M)` on one chain.
pub struct FieldSampler<'a> {
    factor: &'a DMatrix<f64>,
    rng: ChaCha20Rng,
    seed: u64,
    chain: u64,
    next: u64,
    remaining: usize,
    z: Vec<f64>,
}

impl Iterator for FieldSampler<'_> {
    type Item = FieldSample;

    fn next(&mut self) -> Option<FieldSample> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let mut t = vec![0.0; self.z.len()];
        draw(self.factor, &mut self.rng, &mut self.z, &mut t);
        let index = self.next;
        self.next += 1;
        Some(FieldSample {
            values: t,
            seed: self.seed,
            chain: self.chain,
            index,
        })
    }
}

pub fn sample_field(m: &CovarianceMatrix, seed: u64, count: usize) -> FieldSampler<'_> {
    sample_chain(m, seed, 0, count)
}

pub fn sample_chain(m: &CovarianceMatrix, seed: u64, chain: u64, count: usize) -> FieldSampler<'_> {
    FieldSampler {
        factor: m.factor(),
        rng: chain_rng(seed, chain),
        seed,
        chain,
        next: 0,
        remaining: count,
        z: vec![0.0; m.len()],
    }
}

/// Coupling `g` and test functions `h_1..h_r`, all constant on cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    g: Vec<f64>,
    h_list: Vec<Vec<f64>>,
}

impl SourceSpec {
    pub fn new(g: Vec<f64>, h_list: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(i) = g.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Argument(format!(
                "coupling g[{i}] = {} must be finite and >= 0",
                g[i]
            )));
        }
        for (k, h) in h_list.iter().enumerate() {
            if h.len() != g.len() {
                return Err(Error::Argument(format!(
                    "test function h{} has {} values, expected {}",
                    k + 1,
                    h.len(),
                    g.len()
                )));
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("test function h{} is not finite", k + 1)));
            }
        }
        Ok(Self { g, h_list })
    }

    /// Constant coupling on `eta` cells and no test functions.
    pub fn constant(eta: usize, g: f64) -> Result<Self> {
        Self::new(vec![g; eta], Vec::new())
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn h_list(&self) -> &[Vec<f64>] {
        &self.h_list
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn with_h(mut self, h_list: Vec<Vec<f64>>) -> Result<Self> {
        self.h_list = h_list;
        Self::new(self.g, self.h_list)
    }

    /// Coupling multiplied by `rho`.
    pub fn scaled(&self, rho: f64) -> Result<Self> {
        Self::new(self.g.iter().map(|w| w * rho).collect(), self.h_list.clone())
    }

    /// Same functions read on a larger lattice, zero off the image of `embed`.
    pub fn zero_extend(&self, embed: &[usize], outer_len: usize) -> Result<Self> {
        if embed.len() != self.len() {
            return Err(Error::Argument("embedding length differs from source length".into()));
        }
        let lift = |v: &[f64]| {
            let mut out = vec![0.0; outer_len];
            for (i, &o) in embed.iter().enumerate() {
                out[o] = v[i];
            }
            out
        };
        Self::new(lift(&self.g), self.h_list.iter().map(|h| lift(h)).collect())
    }
}

/// Exponents `α` of the moment `∏ t_i^{α_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn unit(eta: usize, i: usize, power: u32) -> Self {
        let mut a = vec![0; eta];
        a[i] = power;
        Self(a)
    }

    pub fn pair(eta: usize, i: usize, j: usize, power: u32) -> Self {
        let mut a = vec![0; eta];
        a[i] += power;
        a[j] += power;
        Self(a)
    }

    pub fn plus(&self, other: &MultiIndex) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }
}

/// A function of the lattice field whose expectation is estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `∏_k φ(h_k)` with `φ(h) = Σ_i h_i t_i`.
    Fields(Vec<Vec<f64>>),
    Monomial(MultiIndex),
}

impl Observable {
    fn eval(&self, t: &[f64]) -> f64 {
        match self {
            Observable::Fields(hs) => hs
                .iter()
                .map(|h| h.iter().zip(t).map(|(a, b)| a * b).sum::<f64>())
                .product(),
            Observable::Monomial(a) => {
                a.0.iter()
                    .zip(t)
                    .filter(|(p, _)| **p > 0)
                    .map(|(&p, &x)| x.powi(p as i32))
                    .product()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    #[serde(rename = "mc")]
    MonteCarlo,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub seed: u64,
    pub n_samples: usize,
    pub chains: usize,
}

impl McOptions {
    pub fn new(seed: u64, n_samples: usize) -> Self {
        Self {
            seed,
            n_samples,
            chains: DEFAULT_CHAINS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    MonteCarlo(McOptions),
    /// Starting points per axis; doubled until converged.
    Quadrature {
        order: usize,
    },
}

impl Method {
    pub fn kind(&self) -> MethodKind {
        match self {
            Method::MonteCarlo(_) => MethodKind::MonteCarlo,
            Method::Quadrature { .. } => MethodKind::Quadrature,
        }
    }

    pub fn quadrature() -> Self {
        Method::Quadrature {
            order: DEFAULT_QUADRATURE_ORDER,
        }
    }

    pub fn mc(seed: u64, n_samples: usize) -> Self {
        Method::MonteCarlo(McOptions::new(seed, n_samples))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchwingerEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub method: MethodKind,
    /// Effective sample size, Monte Carlo only.
    pub ess: Option<f64>,
    /// Set when the effective sample size is below [`LOW_ESS`].
    pub low_quality: bool,
    /// Estimate of the normalisation `Z = E[exp(-:P:(g))]`.
    pub partition: f64,
    pub partition_std_error: f64,
}

/// Free cell variances `σ_l²` used for Wick ordering on every cell.
pub fn free_wick_variances(m: &CovarianceMatrix) -> Result<Vec<f64>> {
    let s = free_covariance_entry(m.params(), m.lattice().cell_level(), Distance::Same, DEFAULT_TOL)?;
    Ok(vec![s; m.len()])
}

/// Diagonal of `M`, for ordering relative to the region-restricted measure.
pub fn concentrated_wick_variances(m: &CovarianceMatrix) -> Vec<f64> {
    (0..m.len()).map(|i| m.entries()[(i, i)]).collect()
}

/// `exp(-:P(t):(g))`.
pub fn interaction_weight(
    sample: &FieldSample,
    p: &WickPolynomial,
    source: &SourceSpec,
    variances: &[f64],
) -> Result<f64> {
    Ok((-wick_poly_eval(p, &sample.values, source.g(), variances)?).exp())
}

/// Running weighted sums with a moving log-shift so that
/// `exp(log w - shift)` never overflows.
#[derive(Debug, Clone)]
struct Acc {
    shift: f64,
    sw: f64,
    sw2: f64,
    so: Vec<f64>,
    n: usize,
}

impl Acc {
    fn new(k: usize) -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            sw: 0.0,
            sw2: 0.0,
            so: vec![0.0; k],
            n: 0,
        }
    }

    fn rescale(&mut self, shift: f64) {
        if shift > self.shift {
            let f = if self.shift == f64::NEG_INFINITY {
                0.0
            } else {
                (self.shift - shift).exp()
            };
            self.sw *= f;
            self.sw2 *= f * f;
            for s in &mut self.so {
                *s *= f;
            }
            self.shift = shift;
        }
    }

    fn push(&mut self, log_w: f64, obs: impl Iterator<Item = f64>) {
        self.n += 1;
        if log_w > self.shift {
            self.rescale(log_w);
        }
        let w = (log_w - self.shift).exp();
        self.sw += w;
        self.sw2 += w * w;
        for (s, o) in self.so.iter_mut().zip(obs) {
            *s += w * o;
        }
    }

    fn merge(mut self, mut other: Acc) -> Acc {
        let shift = self.shift.max(other.shift);
        self.rescale(shift);
        other.rescale(shift);
        self.sw += other.sw;
        self.sw2 += other.sw2;
        for (a, b) in self.so.iter_mut().zip(&other.so) {
            *a += b;
        }
        self.n += other.n;
        self
    }

    fn ratios(&self) -> Vec<f64> {
        self.so.iter().map(|s| s / self.sw).collect()
    }
}

/// Expectations of several observables under one interacting measure.
#[derive(Debug, Clone)]
pub struct Moments {
    pub values: Vec<f64>,
    /// Per-batch expectations (Monte Carlo only), one row per batch.
    pub batches: Vec<Vec<f64>>,
    pub partition: f64,
    pub partition_std_error: f64,
    pub ess: Option<f64>,
    pub n_samples: usize,
    pub method: MethodKind,
}

impl Moments {
    /// `f` of the expectation vector with its batch-statistic standard error.
    pub fn statistic(&self, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let value = f(&self.values);
        (value, batch_std_error(self.batches.iter().map(|b| f(b))))
    }

    pub fn std_error(&self, k: usize) -> f64 {
        self.statistic(|v| v[k]).1
    }

    pub fn low_quality(&self) -> bool {
        self.ess.is_some_and(|e| e < LOW_ESS)
    }
}

fn batch_std_error(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let b = v.len();
    if b < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / b as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

struct Setup<'a> {
    factor: &'a DMatrix<f64>,
    poly: &'a WickPolynomial,
    g: &'a [f64],
    variances: &'a [f64],
    observables: &'a [Observable],
}

impl Setup<'_> {
    fn log_weight(&self, t: &[f64]) -> f64 {
        -self
            .g
            .iter()
            .zip(t)
            .zip(self.variances)
            .filter(|((w, _), _)| **w != 0.0)
            .map(|((w, &x), &v)| w * self.poly.eval(x, v))
            .sum::<f64>()
    }

    fn push(&self, acc: &mut Acc, t: &[f64], log_extra: f64) {
        let lw = self.log_weight(t) + log_extra;
        acc.push(lw, self.observables.iter().map(|o| o.eval(t)));
    }
}

fn validate(m: &CovarianceMatrix, source: &SourceSpec, variances: &[f64]) -> Result<()> {
    if source.len() != m.len() || variances.len() != m.len() {
        return Err(Error::Argument(format!(
            "lattice has {} cells but source has {} and variances {}",
            m.len(),
            source.len(),
            variances.len()
        )));
    }
    Ok(())
}

/// Self-normalised importance sampling of several observables.
pub fn moments_mc(
    m: &CovarianceMatrix,
    p: &WickPolynomial,
    source: &SourceSpec,
    variances: &[f64],
    observables: &[Observable],
    opts: &McOptions,
) -> Result<Moments> {
    validate(m, source, variances)?;
    if opts.n_samples < MIN_MC_SAMPLES {
        return Err(Error::Argument(format!(
            "n_samples = {} is below the minimum {MIN_MC_SAMPLES}",
            opts.n_samples
        )));
    }
    if opts.chains < 2 {
        return Err(Error::Argument("at least two chains are needed for error bars".into()));
    }
    let setup = Setup {
        factor: m.factor(),
        poly: p,
        g: source.g(),
        variances,
        observables,
    };
    let eta = m.len();
    let pairs = opts.n_samples.div_ceil(2);
    let per_chain = |c: usize| pairs / opts.chains + usize::from(c < pairs % opts.chains);

    let accs: Vec<Acc> = (0..opts.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(opts.seed, c as u64);
            let mut acc = Acc::new(observables.len());
            let (mut z, mut t) = (vec![0.0; eta], vec![0.0; eta]);
            for _ in 0..per_chain(c) {
                draw(setup.factor, &mut rng, &mut z, &mut t);
                setup.push(&mut acc, &t, 0.0);
                for x in &mut t {
                    *x = -*x;
                }
                setup.push(&mut acc, &t, 0.0);
            }
            acc
        })
        .collect();

    let batches: Vec<Vec<f64>> = accs.iter().filter(|a| a.n > 0).map(Acc::ratios).collect();
    let total = accs.iter().cloned().reduce(Acc::merge).expect("at least two chains");
    let shift = total.shift;
    let n = total.n;
    let partition = shift.exp() * total.sw / n as f64;
    let partition_std_error = batch_std_error(
        accs.iter()
            .filter(|a| a.n > 0)
            .map(|a| (a.shift.exp() * a.sw) / a.n as f64),
    );
    Ok(Moments {
        values: total.ratios(),
        batches,
        partition,
        partition_std_error,
        ess: Some(total.sw * total.sw / total.sw2),
        n_samples: n,
        method: MethodKind::MonteCarlo,
    })
}

/// Gauss–Hermite rule for the standard normal as `(node, ln weight)`,
/// dropping nodes whose weight is below `e^-80` of the largest.
fn hermite_rule(order: usize) -> Result<Vec<(f64, f64)>> {
    let n = NonZeroUsize::new(order).ok_or_else(|| Error::Argument("quadrature order must be positive".into()))?;
    let rule = GaussHermite::new(n);
    let norm = std::f64::consts::PI.sqrt();
    let pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|&(x, w)| (std::f64::consts::SQRT_2 * x, (w / norm).ln()))
        .collect();
    let top = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(pairs.into_iter().filter(|p| p.1 >= top - 80.0).collect())
}

fn grid_moments(setup: &Setup<'_>, eta: usize, rule: &[(f64, f64)]) -> (Acc, usize) {
    let width = rule.len();
    let rest = eta - 1;
    let inner_points = width.pow(rest as u32);
    // slices over the first coordinate run in parallel and merge in order
    let slices: Vec<Acc> = rule
        .par_iter()
        .map(|&(z0, lw0)| {
            let mut acc = Acc::new(setup.observables.len());
            let mut idx = vec![0usize; rest];
            let (mut z, mut t) = (vec![0.0; eta], vec![0.0; eta]);
            z[0] = z0;
            for _ in 0..inner_points {
                let mut lw = lw0;
                for (k, &i) in idx.iter().enumerate() {
                    z[k + 1] = rule[i].0;
                    lw += rule[i].1;
                }
                lower_mul(setup.factor, &z, &mut t);
                setup.push(&mut acc, &t, lw);
                for d in idx.iter_mut() {
                    *d += 1;
                    if *d < width {
                        break;
                    }
                    *d = 0;
                }
            }
            acc
        })
        .collect();
    let total = slices.into_iter().reduce(Acc::merge).expect("rule is nonempty");
    (total, width.pow(eta as u32))
}

/// Tensor-grid Gauss–Hermite expectations in the whitened coordinates.
///
/// Starting from `order` points per axis the order is doubled until two
/// successive grids agree to `1e-6` relative (plus `1e-10` absolute) on
/// every expectation and on `Z`; the finer grid is returned. Running out of
/// the point budget before that is an error.
pub fn moments_quadrature(
    m: &CovarianceMatrix,
    p: &WickPolynomial,
    source: &SourceSpec,
    variances: &[f64],
    observables: &[Observable],
    order: usize,
) -> Result<Moments> {
    validate(m, source, variances)?;
    let eta = m.len();
    if eta == 0 || eta > MAX_QUADRATURE_DIM {
        return Err(Error::Argument(format!(
            "quadrature supports 1..={MAX_QUADRATURE_DIM} cells, got {eta}"
        )));
    }
    let setup = Setup {
        factor: m.factor(),
        poly: p,
        g: source.g(),
        variances,
        observables,
    };
    let summary = |acc: &Acc| {
        let mut v = acc.ratios();
        v.push(acc.shift.exp() * acc.sw);
        v
    };
    let mut order = order;
    let (mut prev, _) = grid_moments(&setup, eta, &hermite_rule(order)?);
    let mut last_gap = String::new();
    loop {
        let next_order = 2 * order;
        let rule = hermite_rule(next_order)?;
        if rule.len().saturating_pow(eta as u32) > QUAD_POINT_BUDGET {
            return Err(Error::Quadrature(format!(
                "no convergence up to {order} points per axis ({last_gap})"
            )));
        }
        let (fine, points) = grid_moments(&setup, eta, &rule);
        let (a, b) = (summary(&prev), summary(&fine));
        let worst = a
            .iter()
            .zip(&b)
            .enumerate()
            .find(|(_, (x, y))| !((*x - *y).abs() <= QUAD_RTOL * y.abs() + QUAD_ATOL));
        match worst {
            None => {
                let partition = b[b.len() - 1];
                return Ok(Moments {
                    values: fine.ratios(),
                    batches: Vec::new(),
                    partition,
                    partition_std_error: 0.0,
                    ess: None,
                    n_samples: points,
                    method: MethodKind::Quadrature,
                });
            }
            Some((k, (x, y))) => {
                last_gap = format!("quantity {k}: {x} vs {y}");
            }
        }
        prev = fine;
        order = next_order;
    }
}

pub fn moments(
    m: &CovarianceMatrix,
    p: &WickPolynomial,
    source: &SourceSpec,
    variances: &[f64],
    observables: &[Observable],
    method: &Method,
) -> Result<Moments> {
    match method {
        Method::MonteCarlo(opts) => moments_mc(m, p, source, variances, observables, opts),
        Method::Quadrature { order } => moments_quadrature(m, p, source, variances, observables, *order),
    }
}

fn to_estimate(mo: &Moments, r: usize) -> SchwingerEstimate {
    let (value, std_error) = if r == 0 {
        (1.0, 0.0)
    } else {
        (mo.values[0], mo.std_error(0))
    };
    SchwingerEstimate {
        value,
        std_error,
        n_samples: mo.n_samples,
        method: mo.method,
        ess: mo.ess,
        low_quality: mo.low_quality(),
        partition: mo.partition,
        partition_std_error: mo.partition_std_error,
    }
}

/// `S(h_1, ..., h_r)` under the interacting measure with the given
/// ordering variances.
pub fn schwinger_with(
    m: &CovarianceMatrix,
    p: &WickPolynomial,
    source: &SourceSpec,
    variances: &[f64],
    method: &Method,
) -> Result<SchwingerEstimate> {
    let obs = [Observable::Fields(source.h_list().to_vec())];
    let mo = moments(m, p, source, variances, &obs, method)?;
    Ok(to_estimate(&mo, source.h_list().len()))
}

/// Monte Carlo Schwinger function with free-measure Wick ordering.
pub fn schwinger_mc(
    m: &CovarianceMatrix,
    p: &WickPolynomial,
    source: &SourceSpec,
    seed: u64,
    n_samples: usize,
) -> Result<SchwingerEstimate> {
    schwinger_with(m, p, source, &free_wick_variances(m)?, &Method::mc(seed, n_samples))
}

/// Quadrature Schwinger function (at most four cells) with free-measure
/// Wick ordering and the default order.
pub fn schwinger_quadrature(
    m: &CovarianceMatrix,
    p: &WickPolynomial,
    source: &SourceSpec,
) -> Result<SchwingerEstimate> {
    schwinger_with(m, p, source, &free_wick_variances(m)?, &Method::quadrature())
}

/// Which correlation inequality an entry tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GriffithsKind {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriffithsEntry {
    pub kind: GriffithsKind,
    pub indices: Vec<MultiIndex>,
    /// `⟨t^i⟩`, or `⟨t^{i₁+i₂}⟩ - ⟨t^{i₁}⟩⟨t^{i₂}⟩`.
    pub margin: f64,
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriffithsReport {
    pub entries: Vec<GriffithsEntry>,
    pub pass: bool,
    /// Smallest `margin + allowance` over all entries.
    pub worst_margin: f64,
    pub low_quality: bool,
}

impl GriffithsReport {
    pub fn to_check(&self, name: &str) -> CheckReport {
        let failed = self.entries.iter().filter(|e| !e.pass).count();
        CheckReport::new(name, self.pass, self.worst_margin)
            .with_detail(format!("{} inequalities, {failed} failed", self.entries.len()))
    }
}

/// The moments to test.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GriffithsRequest {
    pub first: Vec<MultiIndex>,
    pub second: Vec<(MultiIndex, MultiIndex)>,
}

impl GriffithsRequest {
    /// `⟨t_i⟩`, `⟨t_i t_j⟩` and `⟨t_i² t_j²⟩` for `i <= j`; the second
    /// inequality for `(t_i, t_j)` with `i <= j` and `(t_i², t_j²)` with `i < j`.
    pub fn standard(eta: usize) -> Self {
        let mut req = Self::default();
        for i in 0..eta {
            req.first.push(MultiIndex::unit(eta, i, 1));
            for j in i..eta {
                req.first.push(MultiIndex::pair(eta, i, j, 1));
                req.first.push(MultiIndex::pair(eta, i, j, 2));
                req.second
                    .push((MultiIndex::unit(eta, i, 1), MultiIndex::unit(eta, j, 1)));
                if i < j {
                    req.second
                        .push((MultiIndex::unit(eta, i, 2), MultiIndex::unit(eta, j, 2)));
                }
            }
        }
        req
    }
}

/// Checks the even-ferromagnet hypotheses shared by the correlation
/// inequalities.
pub fn check_ferromagnet(m: &CovarianceMatrix, p: &WickPolynomial, source: &SourceSpec) -> Result<()> {
    p.check_q_minus_lambda()?;
    if let Some(i) = source.g().iter().position(|&w| w < 0.0) {
        return Err(Error::Hypothesis(format!("coupling g[{i}] is negative")));
    }
    for (k, h) in source.h_list().iter().enumerate() {
        if let Some(i) = h.iter().position(|&v| v < 0.0) {
            return Err(Error::Hypothesis(format!("test function h{}[{i}] is negative", k + 1)));
        }
    }
    let n = m.precision();
    for i in 0..n.nrows() {
        if !(n[(i, i)] > 0.0) {
            return Err(Error::Hypothesis(format!(
                "precision diagonal N[{i},{i}] is not positive"
            )));
        }
        for j in 0..n.ncols() {
            if i != j && n[(i, j)] > 0.0 {
                return Err(Error::Hypothesis(format!("precision coupling N[{i},{j}] is positive")));
            }
        }
    }
    Ok(())
}

/// Griffiths' first and second inequalities; exact tolerance `1e-8` by
/// quadrature, three standard errors by Monte Carlo.
pub fn griffiths_check(
    m: &CovarianceMatrix,
    p: &WickPolynomial,
    source: &SourceSpec,
    request: &GriffithsRequest,
    method: &Method,
) -> Result<GriffithsReport> {
    check_ferromagnet(m, p, source)?;
    let eta = m.len();
    let mut index: Vec<MultiIndex> = Vec::new();
    let slot = |a: &MultiIndex, index: &mut Vec<MultiIndex>| -> Result<usize> {
        if a.0.len() != eta {
            return Err(Error::Argument(format!(
                "multi-index has {} entries, expected {eta}",
                a.0.len()
            )));
        }
        Ok(match index.iter().position(|b| b == a) {
            Some(k) => k,
            None => {
                index.push(a.clone());
                index.len() - 1
            }
        })
    };
    let mut first = Vec::new();
    for a in &request.first {
        first.push((a.clone(), slot(a, &mut index)?));
    }
    let mut second = Vec::new();
    for (a, b) in &request.second {
        let ab = a.plus(b);
        second.push((
            a.clone(),
            b.clone(),
            slot(a, &mut index)?,
            slot(b, &mut index)?,
            slot(&ab, &mut index)?,
        ));
    }
    let obs: Vec<Observable> = index.iter().cloned().map(Observable::Monomial).collect();
    let mo = moments(m, p, source, &free_wick_variances(m)?, &obs, method)?;
    let allowance = |se: f64| match method {
        Method::Quadrature { .. } => 1e-8,
        Method::MonteCarlo(_) => 3.0 * se,
    };

    let mut entries = Vec::new();
    for (a, k) in first {
        let (margin, se) = mo.statistic(|v| v[k]);
        entries.push(GriffithsEntry {
            kind: GriffithsKind::First,
            indices: vec![a],
            margin,
            std_error: se,
            pass: margin >= -allowance(se),
        });
    }
    for (a, b, ka, kb, kab) in second {
        let (margin, se) = mo.statistic(|v| v[kab] - v[ka] * v[kb]);
        entries.push(GriffithsEntry {
            kind: GriffithsKind::Second,
            indices: vec![a, b],
            margin,
            std_error: se,
            pass: margin >= -allowance(se),
        });
    }
    let worst = entries
        .iter()
        .map(|e| e.margin + allowance(e.std_error))
        .fold(f64::INFINITY, f64::min);
    let low_quality = mo.low_quality();
    Ok(GriffithsReport {
        pass: !low_quality && entries.iter().all(|e| e.pass),
        worst_margin: worst,
        entries,
        low_quality,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub inner: SchwingerEstimate,
    pub outer: SchwingerEstimate,
    /// `S^(Π') - S^(Π)`.
    pub margin: f64,
    /// Amount by which the margin may fall below zero.
    pub allowance: f64,
    pub pass: bool,
}

impl MonotonicityReport {
    pub fn to_check(&self, name: &str) -> CheckReport {
        CheckReport::new(name, self.pass, self.margin + self.allowance).with_detail(format!(
            "S_inner = {}, S_outer = {}",
            self.inner.value, self.outer.value
        ))
    }
}

/// `S^(Π)(h) <= S^(Π')(h)` for `Π ⊂ Π'`, with `g` and `h` given on the
/// cells of `Π` and extended by zero.
pub fn monotonicity_experiment(
    pi: &Region,
    pi_prime: &Region,
    l: i32,
    params: &FieldParams,
    p: &WickPolynomial,
    source: &SourceSpec,
    method: &Method,
) -> Result<MonotonicityReport> {
    if !pi.is_subregion_of(pi_prime) {
        return Err(Error::Argument("inner region is not contained in the outer one".into()));
    }
    let inner_lat = pi.refine(l)?;
    let outer_lat = pi_prime.refine(l)?;
    if source.len() != inner_lat.len() {
        return Err(Error::Argument(format!(
            "source lives on {} cells but the inner lattice has {}",
            source.len(),
            inner_lat.len()
        )));
    }
    let embed = inner_lat.embed_into(&outer_lat)?;
    let outer_source = source.zero_extend(&embed, outer_lat.len())?;
    let m = covariance_matrix(&precision_matrix(&inner_lat, params)?)?;
    let m_prime = covariance_matrix(&precision_matrix(&outer_lat, params)?)?;
    check_ferromagnet(&m, p, source)?;
    check_ferromagnet(&m_prime, p, &outer_source)?;
    let inner = schwinger_with(&m, p, source, &free_wick_variances(&m)?, method)?;
    let outer = schwinger_with(&m_prime, p, &outer_source, &free_wick_variances(&m_prime)?, method)?;
    let margin = outer.value - inner.value;
    let allowance = match method {
        Method::Quadrature { .. } => 1e-8,
        Method::MonteCarlo(_) => 3.0 * inner.std_error.hypot(outer.std_error),
    };
    let pass = margin >= -allowance && !inner.low_quality && !outer.low_quality;
    Ok(MonotonicityReport {
        inner,
        outer,
        margin,
        allowance,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub rho: f64,
    /// Estimate of `Z(ρg)`.
    pub partition: f64,
    pub std_error: f64,
    pub ess: f64,
    /// `‖exp(-:P:(g))‖_ρ` from the same draws.
    pub norm: f64,
    /// `|‖w‖_ρ - Z(ρg)^{1/ρ}|`.
    pub identity_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Deterministic bound `L <= :P:(g)` used to shift the weights.
    pub lower_bound: f64,
    /// Draws with `:P:(g) < L`; the bound guarantees none.
    pub bound_violations: usize,
    /// `(b, fraction of draws with -:P:(g) > b)`.
    pub tail: Vec<(f64, f64)>,
    pub pass: bool,
}

impl StabilityReport {
    pub fn to_check(&self, name: &str) -> CheckReport {
        let worst = self.rows.iter().map(|r| r.ess - 100.0).fold(f64::INFINITY, f64::min);
        CheckReport::new(name, self.pass, worst).with_detail(format!(
            "{} rho values, {} bound violations",
            self.rows.len(),
            self.bound_violations
        ))
    }
}

/// Finiteness of `Z(ρg) = ‖exp(-:P:(g))‖_ρ^ρ` for each `ρ`, estimated from
/// one set of Gaussian draws.
pub fn partition_stability(
    m: &CovarianceMatrix,
    p: &WickPolynomial,
    source: &SourceSpec,
    rho_list: &[f64],
    seed: u64,
    n_samples: usize,
) -> Result<StabilityReport> {
    let variances = free_wick_variances(m)?;
    validate(m, source, &variances)?;
    if let Some(r) = rho_list.iter().find(|r| !(**r >= 1.0)) {
        return Err(Error::Argument(format!("rho = {r} must be at least 1")));
    }
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::Argument(format!(
            "n_samples = {n_samples} is below {MIN_MC_SAMPLES}"
        )));
    }
    let lower_bound: f64 = source
        .g()
        .iter()
        .zip(&variances)
        .map(|(&w, &v)| crate::wick::wick_poly_lower_bound(p, w, v))
        .sum::<Result<f64>>()?;

    // interaction values :P:(g) on one stream of draws
    let chains = DEFAULT_CHAINS;
    let per_chain = |c: usize| n_samples / chains + usize::from(c < n_samples % chains);
    let eta = m.len();
    let factor = m.factor();
    let chunks: Vec<Vec<f64>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(seed, c as u64);
            let (mut z, mut t) = (vec![0.0; eta], vec![0.0; eta]);
            (0..per_chain(c))
                .map(|_| {
                    draw(factor, &mut rng, &mut z, &mut t);
                    wick_poly_eval(p, &t, source.g(), &variances).expect("lengths validated")
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    let mut pass = true;
    for &rho in rho_list {
        // Z(ρg) batch by batch, shifted by the deterministic bound
        let shift = -rho * lower_bound;
        let batch: Vec<(f64, f64, usize)> = chunks
            .iter()
            .map(|c| {
                let sw: f64 = c.iter().map(|&v| (-rho * v - shift).exp()).sum();
                let sw2: f64 = c.iter().map(|&v| (-2.0 * rho * v - 2.0 * shift).exp()).sum();
                (sw, sw2, c.len())
            })
            .collect();
        let (sw, sw2): (f64, f64) = batch.iter().fold((0.0, 0.0), |(a, b), &(x, y, _)| (a + x, b + y));
        let n = n_samples as f64;
        let partition = shift.exp() * sw / n;
        let std_error = batch_std_error(batch.iter().map(|&(x, _, k)| shift.exp() * x / k as f64));
        let ess = sw * sw / sw2;
        // ‖w‖_ρ from the unit-coupling weights raised to the ρ-th power
        let norm_pow: f64 = chunks.iter().flatten().map(|&v| (-v).exp().powf(rho)).sum::<f64>() / n;
        let norm = norm_pow.powf(1.0 / rho);
        let identity_gap = (norm - partition.powf(1.0 / rho)).abs();
        let ok = partition.is_finite() && partition > 0.0 && ess > 100.0 && identity_gap <= 1e-10 * norm.max(1.0);
        pass &= ok;
        rows.push(StabilityRow {
            rho,
            partition,
            std_error,
            ess,
            norm,
            identity_gap,
        });
    }

    let all: Vec<f64> = chunks.into_iter().flatten().collect();
    let bound_violations = all.iter().filter(|&&v| v < lower_bound).count();
    pass &= bound_violations == 0;
    let top = -lower_bound;
    let tail = (0..=8)
        .map(|k| {
            let b = if top > 0.0 {
                top * f64::from(k) / 8.0
            } else {
                f64::from(k)
            };
            let frac = all.iter().filter(|&&v| -v > b).count() as f64 / all.len() as f64;
            (b, frac)
        })
        .collect();
    Ok(StabilityReport {
        rows,
        lower_bound,
        bound_violations,
        tail,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{covariance_matrix, precision_matrix};
    use approx::assert_relative_eq;

    fn params() -> FieldParams {
        FieldParams::new(3, 1, 1.0, 1.0, 1.0).unwrap()
    }

    fn cov(balls: &[u32]) -> CovarianceMatrix {
        let r = Region::new(3, 1, 0, balls.iter().map(|&b| vec![b]).collect()).unwrap();
        covariance_matrix(&precision_matrix(&r.refine(0).unwrap(), &params()).unwrap()).unwrap()
    }

    #[test]
    fn sampler_is_deterministic() {
        let m = cov(&[0, 1]);
        let a: Vec<_> = sample_field(&m, 7, 50).collect();
        let b: Vec<_> = sample_field(&m, 7, 50).collect();
        assert_eq!(a, b);
        assert_eq!(a[49].index, 49);
        let c: Vec<_> = sample_chain(&m, 7, 1, 50).collect();
        assert_ne!(a[0].values, c[0].values);
    }

    #[test]
    fn two_cell_correlation() {
        let m = cov(&[0, 1]);
        let n = 100_000;
        let (mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0);
        for s in sample_field(&m, 3, n) {
            s11 += s.values[0] * s.values[0];
            s22 += s.values[1] * s.values[1];
            s12 += s.values[0] * s.values[1];
        }
        let corr = s12 / (s11 * s22).sqrt();
        assert!((corr - 52.0 / 286.0).abs() < 0.01, "{corr}");
    }

    #[test]
    fn interaction_weight_examples() {
        let p = WickPolynomial::new(vec![0.0, 0.0, 1.0]).unwrap();
        let s = FieldSample {
            values: vec![0.0],
            seed: 0,
            chain: 0,
            index: 0,
        };
        let src = SourceSpec::constant(1, 1.0).unwrap();
        assert_relative_eq!(interaction_weight(&s, &p, &src, &[0.4]).unwrap(), 0.4f64.exp());
        let free = SourceSpec::constant(1, 0.0).unwrap();
        assert_eq!(interaction_weight(&s, &p, &free, &[0.4]).unwrap(), 1.0);
    }

    #[test]
    fn normalisation_is_exact() {
        let m = cov(&[0, 1]);
        let p = WickPolynomial::quartic(0.0).unwrap();
        let src = SourceSpec::constant(2, 0.3).unwrap();
        let mc = schwinger_mc(&m, &p, &src, 1, 2000).unwrap();
        assert_eq!(mc.value, 1.0);
        let q = schwinger_quadrature(&m, &p, &src).unwrap();
        assert_eq!(q.value, 1.0);
        assert_eq!(q.std_error, 0.0);
    }

    #[test]
    fn free_quadrature_reproduces_covariance() {
        let m = cov(&[0, 1]);
        let p = WickPolynomial::quartic(0.0).unwrap();
        let src = SourceSpec::new(vec![0.0; 2], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let q = schwinger_quadrature(&m, &p, &src).unwrap();
        assert_relative_eq!(q.value, 52.0 / 468.0, epsilon = 1e-8);
        assert_relative_eq!(q.partition, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn antithetic_pairs_cancel_odd_moments() {
        let m = cov(&[0, 1, 2]);
        let p = WickPolynomial::quartic(0.0).unwrap();
        let src = SourceSpec::new(vec![0.5; 3], vec![vec![1.0, 0.0, 0.0]]).unwrap();
        let mc = schwinger_mc(&m, &p, &src, 11, 4000).unwrap();
        assert!(mc.value.abs() < 1e-12);
    }

    #[test]
    fn quadrature_rejects_large_lattices() {
        let r = Region::new(3, 1, 0, vec![vec![0], vec![1], vec![2]]).unwrap();
        let m = covariance_matrix(&precision_matrix(&r.refine(-1).unwrap(), &params()).unwrap()).unwrap();
        let p = WickPolynomial::quartic(0.0).unwrap();
        let src = SourceSpec::constant(9, 0.1).unwrap();
        assert!(matches!(schwinger_quadrature(&m, &p, &src), Err(Error::Argument(_))));
    }

    #[test]
    fn griffiths_hypotheses_are_named() {
        let m = cov(&[0, 1]);
        let odd = WickPolynomial::new(vec![0.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        let src = SourceSpec::constant(2, 0.1).unwrap();
        let req = GriffithsRequest::standard(2);
        assert!(matches!(
            griffiths_check(&m, &odd, &src, &req, &Method::quadrature()),
            Err(Error::Hypothesis(_))
        ));
        let neg_h = SourceSpec::new(vec![0.1; 2], vec![vec![-1.0, 0.0]]).unwrap();
        let p = WickPolynomial::quartic(0.0).unwrap();
        assert!(matches!(
            griffiths_check(&m, &p, &neg_h, &req, &Method::quadrature()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn griffiths_quadrature_small() {
        let m = cov(&[0, 1]);
        for lambda in [0.0, 0.5] {
            let p = WickPolynomial::quartic(lambda).unwrap();
            let src = SourceSpec::constant(2, 0.2).unwrap();
            let rep = griffiths_check(&m, &p, &src, &GriffithsRequest::standard(2), &Method::quadrature()).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn monotonicity_free_case_and_equal_regions() {
        let two = Region::new(3, 1, 0, vec![vec![0], vec![1]]).unwrap();
        let three = Region::new(3, 1, 0, vec![vec![0], vec![1], vec![2]]).unwrap();
        let p = WickPolynomial::quartic(0.0).unwrap();
        let src = SourceSpec::new(vec![0.0; 2], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let rep = monotonicity_experiment(&two, &three, 0, &params(), &p, &src, &Method::quadrature()).unwrap();
        assert!(rep.pass);
        assert_relative_eq!(rep.inner.value, 1.0 / 9.0, epsilon = 1e-8);
        assert_relative_eq!(rep.outer.value, 1.0 / 7.0, epsilon = 1e-8);
        let same = monotonicity_experiment(&two, &two, 0, &params(), &p, &src, &Method::quadrature()).unwrap();
        assert!(same.margin.abs() <= 1e-12);
    }

    #[test]
    fn stability_free_theory() {
        let m = cov(&[0]);
        let p = WickPolynomial::quartic(0.0).unwrap();
        let src = SourceSpec::constant(1, 0.0).unwrap();
        let rep = partition_stability(&m, &p, &src, &[1.0, 2.0, 4.0], 5, 2000).unwrap();
        assert!(rep.pass);
        for r in &rep.rows {
            assert_eq!(r.partition, 1.0);
        }
    }
}
