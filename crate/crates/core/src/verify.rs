//! The one-shot invariant suite run by the `verify` subcommand, plus the
//! seeded random region generators it shares with the test suites.

use gauss_quad::GaussHermite;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::lattice::{covariance_matrix, domination_check, monotonicity_check, precision_matrix, restriction_check};
use crate::model::{
    ball_bound_constant, c_kappa_sq, green_function, omega_for, resolvent_tail_integral, tail_bound_constant,
    unit_ball_hypersingular, unit_ball_spectral, FieldParams, NormExp,
};
use crate::report::CheckReport;
use crate::sampler::{
    free_wick_variances, griffiths_check, monotonicity_experiment, partition_stability, schwinger_with,
    GriffithsRequest, McOptions, Method, SourceSpec, MAX_QUADRATURE_DIM,
};
use crate::ultrametric::{LatticeSpec, Region};
use crate::wick::{
    fitted_decay_rate, wick_coefficients, wick_decay_series, wick_poly_eval, wick_poly_lower_bound, wick_power,
};

/// Digits of ball number `index` among the `q^depth` balls below a root.
fn digits_of(mut index: usize, q: u32, depth: usize) -> Vec<u32> {
    let mut d = vec![0; depth];
    for slot in d.iter_mut().rev() {
        *slot = (index % q as usize) as u32;
        index /= q as usize;
    }
    d
}

/// `count` distinct balls of level `ambient_level - depth`.
pub fn random_region<R: Rng>(rng: &mut R, q: u32, ambient_level: i32, depth: usize, count: usize) -> Result<Region> {
    let total = (q as usize).pow(depth as u32);
    let picks = sample(rng, total, count.clamp(1, total));
    let balls = picks.into_iter().map(|i| digits_of(i, q, depth)).collect();
    Region::new(q, ambient_level, ambient_level - depth as i32, balls)
}

/// Random lattice with `q ∈ {3, 5}` and at most `max_cells` cells.
pub fn random_lattice<R: Rng>(rng: &mut R, max_cells: usize) -> Result<LatticeSpec> {
    let (outer, _, l) = random_nested(rng, max_cells)?;
    outer.refine(l)
}

/// Random `(Π, Π', l)` with `Π ⊂ Π'`, `q ∈ {3, 5}` and at most
/// `max_cells` cells in the refinement of `Π'`.
pub fn random_nested<R: Rng>(rng: &mut R, max_cells: usize) -> Result<(Region, Region, i32)> {
    let q = if rng.random_bool(0.5) { 3 } else { 5 };
    let amb = rng.random_range(-1..=2);
    let depth = rng.random_range(1..=2usize);
    let available = (q as usize).pow(depth as u32);
    let mut refine = 0u32;
    while refine < 2 && rng.random_bool(0.5) && (q as usize).pow(refine + 1) <= max_cells {
        refine += 1;
    }
    let per_ball = (q as usize).pow(refine);
    let max_balls = (max_cells / per_ball).clamp(1, available);
    let outer_count = rng.random_range(1..=max_balls);
    let outer = random_region(rng, q, amb, depth, outer_count)?;
    let inner_count = rng.random_range(1..=outer_count);
    let keep: Vec<usize> = sample(rng, outer_count, inner_count).into_iter().collect();
    let inner = outer.subregion(&keep)?;
    let l = outer.ball_level() - refine as i32;
    Ok((inner, outer, l))
}

/// Random admissible model for residue cardinality `q` (with `n = 1`).
pub fn random_params<R: Rng>(rng: &mut R, q: u32) -> Result<FieldParams> {
    let alpha = rng.random_range(0.5..2.0);
    let m_sq = rng.random_range(0.1..2.0);
    let gamma = rng.random_range(0.5..2.0);
    FieldParams::new(q, 1, alpha, m_sq, gamma)
}

type Check = Box<dyn Fn(&Ctx, &mut ChaCha20Rng) -> Result<CheckReport>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
}

const SUITE_SIZE: usize = 20;

/// Runs every check; a check that errors is recorded as a failure.
pub fn run_verify(cfg: &RunConfig, config_hash: &str) -> Result<VerifyReport> {
    let params = cfg.params()?;
    let lattice = cfg.lattice(&params)?;
    let poly = cfg.polynomial()?;
    let source = cfg.source(&lattice)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.run.seed);
    let ctx = Ctx {
        cfg,
        params,
        lattice,
        poly,
        source,
    };

    let checks: Vec<(&str, Check)> = vec![
        ("omega_unit_ball_identity", Box::new(|_, _| Ok(omega_identity()))),
        ("ball_integral_bound", Box::new(|c, _| ball_bound(c))),
        ("tail_integral_bound", Box::new(|c, _| tail_bound(c))),
        ("green_function_profile", Box::new(|c, _| green_profile(c))),
        ("precision_sign_structure", Box::new(sign_structure)),
        ("covariance_inverse", Box::new(covariance_inverse)),
        ("restriction_identity", Box::new(|_, r| restriction(r))),
        ("covariance_domination", Box::new(domination)),
        ("domain_monotonicity", Box::new(|_, r| monotonicity(r))),
        ("wick_hermite_recursion", Box::new(|_, _| Ok(hermite_recursion()))),
        ("wick_gaussian_orthogonality", Box::new(orthogonality)),
        ("wick_l2_decay", Box::new(|c, _| l2_decay(c))),
        ("wick_lower_bound", Box::new(lower_bound)),
        ("partition_stability", Box::new(|c, _| stability(c))),
        ("griffiths_inequalities", Box::new(|c, _| griffiths(c))),
        ("schwinger_monotonicity", Box::new(|c, _| schwinger_monotone(c))),
        ("mc_quadrature_agreement", Box::new(|c, _| agreement(c))),
    ];
    let mut reports = Vec::new();
    for (name, f) in checks {
        let mut r = match f(&ctx, &mut rng) {
            Ok(r) => r,
            Err(e) => CheckReport::new(name, false, f64::NEG_INFINITY).with_detail(format!("error: {e}")),
        };
        r.check = name.to_string();
        reports.push(r);
    }
    Ok(VerifyReport {
        config_hash: config_hash.to_string(),
        seed: cfg.run.seed,
        pass: reports.iter().all(|r| r.pass),
        checks: reports,
    })
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    params: FieldParams,
    lattice: LatticeSpec,
    poly: crate::wick::WickPolynomial,
    source: SourceSpec,
}

fn omega_identity() -> CheckReport {
    let mut margins = Vec::new();
    for q in [3.0, 5.0, 9.0, 25.0] {
        for bh in [0.5, 1.0, 2.0, 3.0] {
            let spectral = unit_ball_spectral(q, bh, 1.0);
            let kernel = unit_ball_hypersingular(q, bh, omega_for(q, bh, 1.0));
            margins.push(1e-12 - ((spectral - kernel) / spectral).abs());
        }
    }
    CheckReport::from_margins("", margins)
}

fn ball_bound(c: &Ctx) -> Result<CheckReport> {
    let c1 = ball_bound_constant(&c.params);
    let mut margins = Vec::new();
    for kappa in 1..=c.cfg.run.kappa_max.max(1) {
        let bound = c1 * f64::from(kappa);
        margins.push((bound - c_kappa_sq(&c.params, kappa, c.cfg.run.tol)?) / bound);
    }
    Ok(CheckReport::from_margins("", margins))
}

fn tail_bound(c: &Ctx) -> Result<CheckReport> {
    let mut margins = Vec::new();
    let bh = c.params.beta_hat();
    for beta in [1.5, 2.0, 3.0] {
        if bh * beta <= 1.0 + 1e-12 {
            continue;
        }
        let c2 = tail_bound_constant(&c.params, beta)?;
        for kappa in 1..=c.cfg.run.kappa_max.max(1) {
            // in logs, since the bound underflows for large q and κ
            let ln_bound = c2.ln() - f64::from(kappa) * (bh * beta - 1.0) * f64::from(c.params.q()).ln();
            let tol = (c.cfg.run.tol * ln_bound.exp()).max(f64::MIN_POSITIVE);
            let v = resolvent_tail_integral(&c.params, kappa, beta, tol)?;
            // rounding of the two logs
            let round = 4.0 * f64::EPSILON * (ln_bound.abs() + v.ln().abs() + 1.0);
            margins.push(1.0 + round - (v.ln() - ln_bound).exp());
        }
    }
    Ok(CheckReport::from_margins("", margins))
}

fn green_profile(c: &Ctx) -> Result<CheckReport> {
    let km = c.cfg.run.kappa_max.max(1);
    let mut margins = Vec::new();
    let mut prev = f64::INFINITY;
    for d in -km..=km {
        let e = green_function(&c.params, NormExp::Exp(d), c.cfg.run.tol)?
            .finite()
            .unwrap_or(f64::INFINITY);
        margins.push(e);
        // nonincreasing in the distance
        margins.push(prev - e);
        prev = e;
    }
    Ok(CheckReport::from_margins("", margins))
}

fn suite_lattices(c: &Ctx, rng: &mut ChaCha20Rng) -> Result<Vec<(LatticeSpec, FieldParams)>> {
    let mut out = vec![(c.lattice.clone(), c.params)];
    for _ in 0..SUITE_SIZE {
        let lat = random_lattice(rng, 40)?;
        let p = random_params(rng, lat.q())?;
        out.push((lat, p));
    }
    Ok(out)
}

fn sign_structure(c: &Ctx, rng: &mut ChaCha20Rng) -> Result<CheckReport> {
    let mut margins = Vec::new();
    for (lat, p) in suite_lattices(c, rng)? {
        margins.push(precision_matrix(&lat, &p)?.sign_check().worst_margin);
    }
    Ok(CheckReport::from_margins("", margins))
}

fn covariance_inverse(c: &Ctx, rng: &mut ChaCha20Rng) -> Result<CheckReport> {
    let mut margins = Vec::new();
    for (lat, p) in suite_lattices(c, rng)? {
        let m = covariance_matrix(&precision_matrix(&lat, &p)?)?;
        margins.push(1e-10 * m.len() as f64 - m.inverse_residual());
        margins.push(m.min_entry());
    }
    Ok(CheckReport::from_margins("", margins))
}

fn restriction(rng: &mut ChaCha20Rng) -> Result<CheckReport> {
    let mut margins = Vec::new();
    for _ in 0..SUITE_SIZE {
        let (inner, outer, l) = random_nested(rng, 40)?;
        let p = random_params(rng, inner.q())?;
        margins.push(if restriction_check(&inner, &outer, l, &p)? {
            0.0
        } else {
            -1.0
        });
    }
    Ok(CheckReport::from_margins("", margins))
}

fn domination(c: &Ctx, rng: &mut ChaCha20Rng) -> Result<CheckReport> {
    let mut margins = Vec::new();
    let mut violations = 0;
    for (lat, p) in suite_lattices(c, rng)? {
        let r = domination_check(&covariance_matrix(&precision_matrix(&lat, &p)?)?, 1e-9)?;
        violations += r.violations.len();
        margins.push(r.worst_margin);
    }
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CheckReport::new("", violations == 0, worst).with_detail(format!("{violations} violation(s)")))
}

fn monotonicity(rng: &mut ChaCha20Rng) -> Result<CheckReport> {
    let mut margins = Vec::new();
    let mut violations = 0;
    for _ in 0..SUITE_SIZE {
        let (inner, outer, l) = random_nested(rng, 40)?;
        let p = random_params(rng, inner.q())?;
        let r = monotonicity_check(&inner, &outer, l, &p, 1e-12)?;
        violations += r.violations.len();
        margins.push(r.worst_margin);
    }
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CheckReport::new("", violations == 0, worst).with_detail(format!("{violations} violation(s)")))
}

/// Integer table against `w_{k+1,j} = w_{k,j} - k w_{k-1,j-1}`.
fn hermite_recursion() -> CheckReport {
    let mut bad = 0;
    for k in 1..20 {
        let (prev, cur, next) = (
            wick_coefficients(k - 1).expect("k <= 40"),
            wick_coefficients(k).expect("k <= 40"),
            wick_coefficients(k + 1).expect("k <= 40"),
        );
        for j in 0..=k.div_ceil(2) {
            let a = cur.exact().get(j).copied().unwrap_or(0);
            let b = if j == 0 {
                0
            } else {
                prev.exact().get(j - 1).copied().unwrap_or(0)
            };
            if next.exact()[j] != a - k as i128 * b {
                bad += 1;
            }
        }
    }
    CheckReport::new("", bad == 0, if bad == 0 { 0.0 } else { -f64::from(bad) })
        .with_detail(format!("{bad} mismatched coefficient(s)"))
}

fn orthogonality(c: &Ctx, _: &mut ChaCha20Rng) -> Result<CheckReport> {
    let var = free_wick_variances(&covariance_matrix(&precision_matrix(&c.lattice, &c.params)?)?)?[0];
    let rule = GaussHermite::new(std::num::NonZeroUsize::new(40).expect("nonzero"));
    let mut margins = Vec::new();
    for j in 0..=4usize {
        for k in 0..=4usize {
            let got = rule.integrate(|x| {
                let t = std::f64::consts::SQRT_2 * var.sqrt() * x;
                wick_power(t, j, var) * wick_power(t, k, var)
            }) / std::f64::consts::PI.sqrt();
            let want = if j == k {
                (1..=k).product::<usize>() as f64 * var.powi(k as i32)
            } else {
                0.0
            };
            margins.push(1e-8 * want.abs().max(1.0) - (got - want).abs());
        }
    }
    Ok(CheckReport::from_margins("", margins))
}

fn l2_decay(c: &Ctx) -> Result<CheckReport> {
    let g: Vec<f64> = if c.source.g().iter().all(|&w| w == 0.0) {
        vec![1.0; c.lattice.len()]
    } else {
        c.source.g().to_vec()
    };
    let w = &c.cfg.wick;
    let series = wick_decay_series(&c.params, w.kappa1, 1..=w.kappa2_max.max(2), w.power, &c.lattice, &g)?;
    let monotone = series.windows(2).all(|p| p[1].1 <= p[0].1);
    let tau = fitted_decay_rate(c.params.q(), &series).unwrap_or(f64::NEG_INFINITY);
    Ok(CheckReport::new("", tau > 0.0 && monotone, tau).with_detail(format!("fitted rate {tau}")))
}

fn lower_bound(c: &Ctx, rng: &mut ChaCha20Rng) -> Result<CheckReport> {
    let m = covariance_matrix(&precision_matrix(&c.lattice, &c.params)?)?;
    let vars = free_wick_variances(&m)?;
    let g = c.source.g();
    let bound: f64 = g
        .iter()
        .zip(&vars)
        .map(|(&w, &v)| wick_poly_lower_bound(&c.poly, w, v))
        .sum::<Result<f64>>()?;
    let mut worst = f64::INFINITY;
    let mut t = vec![0.0; g.len()];
    for _ in 0..100_000 {
        let scale = 10f64.powf(rng.random_range(-1.0..1.0));
        for x in t.iter_mut() {
            *x = scale * rng.random_range(-3.0..3.0);
        }
        worst = worst.min(wick_poly_eval(&c.poly, &t, g, &vars)? - bound);
    }
    Ok(CheckReport::from_margins("", [worst]))
}

fn stability(c: &Ctx) -> Result<CheckReport> {
    let m = covariance_matrix(&precision_matrix(&c.lattice, &c.params)?)?;
    let rep = partition_stability(
        &m,
        &c.poly,
        &c.source,
        &[1.0, 2.0, 4.0],
        c.cfg.run.seed,
        c.cfg.run.n_samples.max(1000),
    )?;
    Ok(rep.to_check(""))
}

fn griffiths(c: &Ctx) -> Result<CheckReport> {
    let m = covariance_matrix(&precision_matrix(&c.lattice, &c.params)?)?;
    let method = method_for(c, m.len());
    let rep = griffiths_check(&m, &c.poly, &c.source, &GriffithsRequest::standard(m.len()), &method)?;
    Ok(rep.to_check(""))
}

fn method_for(c: &Ctx, eta: usize) -> Method {
    match c.cfg.method() {
        Method::Quadrature { .. } if eta > MAX_QUADRATURE_DIM => Method::MonteCarlo(McOptions {
            seed: c.cfg.run.seed,
            n_samples: c.cfg.run.n_samples,
            chains: c.cfg.run.chains,
        }),
        m => m,
    }
}

/// The configured region against itself enlarged by the first ball of the
/// ambient ball that it does not contain.
fn schwinger_monotone(c: &Ctx) -> Result<CheckReport> {
    let region = c.lattice.region();
    let depth = (region.ambient_level() - region.ball_level()) as usize;
    let total = (region.q() as usize).pow(depth as u32);
    let mut balls: Vec<Vec<u32>> = region.balls().iter().map(|b| b.digits().to_vec()).collect();
    let extra = (0..total)
        .map(|i| digits_of(i, region.q(), depth))
        .find(|d| !balls.contains(d));
    let Some(extra) = extra else {
        return Ok(CheckReport::new("", true, 0.0).with_detail("region fills the ambient ball; nothing to compare"));
    };
    balls.push(extra);
    let outer = Region::new(region.q(), region.ambient_level(), region.ball_level(), balls)?;
    let outer_cells = outer.refine(c.lattice.cell_level())?.len();
    let source = if c.source.h_list().is_empty() {
        let mut h = vec![0.0; c.lattice.len()];
        h[0] = 1.0;
        c.source.clone().with_h(vec![h.clone(), h])?
    } else {
        c.source.clone()
    };
    let rep = monotonicity_experiment(
        region,
        &outer,
        c.lattice.cell_level(),
        &c.params,
        &c.poly,
        &source,
        &method_for(c, outer_cells),
    )?;
    Ok(rep.to_check(""))
}

fn agreement(c: &Ctx) -> Result<CheckReport> {
    if c.lattice.len() > 3 {
        return Ok(CheckReport::new("", true, 0.0).with_detail("more than three cells; quadrature oracle not run"));
    }
    let m = covariance_matrix(&precision_matrix(&c.lattice, &c.params)?)?;
    let vars = free_wick_variances(&m)?;
    let quad = schwinger_with(
        &m,
        &c.poly,
        &c.source,
        &vars,
        &Method::Quadrature {
            order: c.cfg.run.quadrature_order,
        },
    )?;
    let mc = schwinger_with(
        &m,
        &c.poly,
        &c.source,
        &vars,
        &Method::MonteCarlo(McOptions {
            seed: c.cfg.run.seed,
            n_samples: c.cfg.run.n_samples,
            chains: c.cfg.run.chains,
        }),
    )?;
    let allowance = 4.0 * mc.std_error;
    let gap = (mc.value - quad.value).abs();
    Ok(
        CheckReport::new("", gap <= allowance && !mc.low_quality, allowance - gap)
            .with_detail(format!("mc {} ± {}, quadrature {}", mc.value, mc.std_error, quad.value)),
    )
}
