//! Finite-dimensional approximation on a lattice of balls: the precision
//! matrix `N = (e_i, (A_Π + m²) e_j)` in the orthonormal basis of normalised
//! cell indicators, its inverse covariance `M`, and the structural checks
//! that make the lattice measure an even Ising ferromagnet.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{free_covariance_entry, FieldParams, DEFAULT_TOL};
use crate::report::{CheckReport, EntryViolation, EntrywiseReport};
use crate::ultrametric::{Distance, LatticeSpec, Region};

/// Default upper bound on the number of cells for dense matrices.
pub const DEFAULT_MAX_CELLS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeOptions {
    /// Add the `m²` inner-product term on the diagonal. Turning this off
    /// reproduces the bare kernel integral alone.
    pub diagonal_mass_term: bool,
    pub max_cells: usize,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        Self {
            diagonal_mass_term: true,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

/// Matrix entry of `A + m²` between level-`l` cells at distance `d`.
///
/// Off the diagonal the kernel `‖y‖^(-β̂-1) Ω` is constant on the ball of
/// integration, giving `Ω q^l q^(-d(β̂+1))`. On the diagonal the kernel is
/// integrated over the complement of the cell.
pub fn precision_entry(params: &FieldParams, l: i32, d: Distance, mass_term: bool) -> f64 {
    let q = f64::from(params.q());
    let bh = params.beta_hat();
    let omega = params.omega();
    match d {
        Distance::Same => {
            let complement = -omega * (1.0 - 1.0 / q) * q.powf(-bh * f64::from(l + 1)) / (1.0 - q.powf(-bh));
            if mass_term {
                params.m_sq() + complement
            } else {
                complement
            }
        }
        Distance::Exp(e) => omega * q.powi(l) * q.powf(-f64::from(e) * (bh + 1.0)),
    }
}

#[derive(Debug, Clone)]
pub struct PrecisionMatrix {
    lattice: LatticeSpec,
    params: FieldParams,
    entries: DMatrix<f64>,
}

impl PrecisionMatrix {
    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Strict diagonal positivity and nonpositive couplings.
    pub fn sign_check(&self) -> CheckReport {
        let n = self.len();
        let mut margins = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = self.entries[(i, j)];
                margins.push(if i == j { v } else { -v });
            }
        }
        let mut report = CheckReport::from_margins("precision_sign_structure", margins);
        // the diagonal must be strictly positive
        if (0..n).any(|i| self.entries[(i, i)] <= 0.0) {
            report.pass = false;
        }
        report
    }

    pub fn to_csv(&self) -> String {
        matrix_csv("N", &self.lattice, &self.entries)
    }
}

pub fn precision_matrix(lattice: &LatticeSpec, params: &FieldParams) -> Result<PrecisionMatrix> {
    precision_matrix_with(lattice, params, LatticeOptions::default())
}

pub fn precision_matrix_with(
    lattice: &LatticeSpec,
    params: &FieldParams,
    options: LatticeOptions,
) -> Result<PrecisionMatrix> {
    if lattice.q() != params.q() {
        return Err(Error::Structure(format!(
            "lattice built for q = {} but model has q = {}",
            lattice.q(),
            params.q()
        )));
    }
    let eta = lattice.len();
    if eta > options.max_cells {
        return Err(Error::Argument(format!(
            "lattice has {eta} cells, above the limit of {}",
            options.max_cells
        )));
    }
    let l = lattice.cell_level();
    let mut entries = DMatrix::zeros(eta, eta);
    for i in 0..eta {
        for j in i..eta {
            let v = precision_entry(params, l, lattice.distance(i, j)?, options.diagonal_mass_term);
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(PrecisionMatrix {
        lattice: lattice.clone(),
        params: *params,
        entries,
    })
}

/// Lower-triangular `L` with `A = L Lᵀ`, reporting the first bad pivot.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Structure("cholesky needs a square matrix".into()));
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Inverse of `L Lᵀ` given the factor `L`.
fn inverse_from_factor(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let y = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("factor has positive diagonal");
    let mut m = y.transpose() * y;
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    m
}

/// Lattice covariance `M = N⁻¹` with its own Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    lattice: LatticeSpec,
    params: FieldParams,
    entries: DMatrix<f64>,
    factor: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Lower-triangular `L` with `M = L Lᵀ`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `max |M N - I|`.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.len();
        let prod = &self.entries * &self.precision;
        (prod - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// Smallest entry of `M`.
    pub fn min_entry(&self) -> f64 {
        self.entries.min()
    }

    pub fn to_csv(&self) -> String {
        matrix_csv("M", &self.lattice, &self.entries)
    }
}

pub fn covariance_matrix(n: &PrecisionMatrix) -> Result<CovarianceMatrix> {
    let ln = cholesky(&n.entries)?;
    let entries = inverse_from_factor(&ln);
    let factor = cholesky(&entries)?;
    Ok(CovarianceMatrix {
        lattice: n.lattice.clone(),
        params: n.params,
        entries,
        factor,
        precision: n.entries.clone(),
    })
}

fn lattice_pair(pi: &Region, pi_prime: &Region, l: i32) -> Result<(LatticeSpec, LatticeSpec, Vec<usize>)> {
    if !pi.is_subregion_of(pi_prime) {
        return Err(Error::Argument("regions are not nested".into()));
    }
    let inner = pi.refine(l)?;
    let outer = pi_prime.refine(l)?;
    let embed = inner.embed_into(&outer)?;
    Ok((inner, outer, embed))
}

/// True iff the precision entries of `Π` coincide bit for bit with the
/// corresponding block of those of `Π'`.
pub fn restriction_check(pi: &Region, pi_prime: &Region, l: i32, params: &FieldParams) -> Result<bool> {
    restriction_check_between(pi, params, pi_prime, params, l)
}

/// Same as [`restriction_check`] with independently specified models.
pub fn restriction_check_between(
    pi: &Region,
    params: &FieldParams,
    pi_prime: &Region,
    params_prime: &FieldParams,
    l: i32,
) -> Result<bool> {
    let (inner, outer, embed) = lattice_pair(pi, pi_prime, l)?;
    let n = precision_matrix(&inner, params)?;
    let n_prime = precision_matrix(&outer, params_prime)?;
    for (i, &oi) in embed.iter().enumerate() {
        for (j, &oj) in embed.iter().enumerate() {
            if n.entries[(i, j)].to_bits() != n_prime.entries[(oi, oj)].to_bits() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn entrywise(
    len: usize,
    value: impl Fn(usize, usize) -> f64,
    limit: impl Fn(usize, usize) -> f64,
    tol: f64,
) -> EntrywiseReport {
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    for i in 0..len {
        for j in 0..len {
            let (v, lim) = (value(i, j), limit(i, j));
            worst = worst.min(lim - v);
            if v > lim + tol {
                violations.push(EntryViolation {
                    i,
                    j,
                    value: v,
                    limit: lim,
                });
            }
        }
    }
    EntrywiseReport {
        violations,
        worst_margin: worst,
    }
}

/// `M_ij <= C_ij + tol` against the free covariance of the same cells.
pub fn domination_check(m: &CovarianceMatrix, tol: f64) -> Result<EntrywiseReport> {
    let lat = &m.lattice;
    let l = lat.cell_level();
    let eta = lat.len();
    let mut free = DMatrix::zeros(eta, eta);
    for i in 0..eta {
        for j in i..eta {
            let c = free_covariance_entry(&m.params, l, lat.distance(i, j)?, DEFAULT_TOL)?;
            free[(i, j)] = c;
            free[(j, i)] = c;
        }
    }
    Ok(entrywise(eta, |i, j| m.entries[(i, j)], |i, j| free[(i, j)], tol))
}

/// `M^(Π)_ij <= M^(Π')_ij + tol` on the cells of `Π`.
pub fn monotonicity_check(
    pi: &Region,
    pi_prime: &Region,
    l: i32,
    params: &FieldParams,
    tol: f64,
) -> Result<EntrywiseReport> {
    let (inner, outer, embed) = lattice_pair(pi, pi_prime, l)?;
    let m = covariance_matrix(&precision_matrix(&inner, params)?)?;
    let m_prime = covariance_matrix(&precision_matrix(&outer, params)?)?;
    Ok(entrywise(
        inner.len(),
        |i, j| m.entries[(i, j)],
        |i, j| m_prime.entries[(embed[i], embed[j])],
        tol,
    ))
}

fn matrix_csv(name: &str, lattice: &LatticeSpec, a: &DMatrix<f64>) -> String {
    let region = lattice.region();
    let mut out = format!(
        "# matrix={name} q={} region={} l={} eta={}\n",
        region.q(),
        region.to_text(),
        lattice.cell_level(),
        lattice.len()
    );
    let labels: Vec<String> = lattice
        .cells()
        .iter()
        .map(|c| crate::ultrametric::encode_digits(c.digits(), region.q()))
        .collect();
    out.push_str("cell");
    for lab in &labels {
        let _ = write!(out, ",{lab}");
    }
    out.push('\n');
    for (i, lab) in labels.iter().enumerate() {
        out.push_str(lab);
        for j in 0..a.ncols() {
            let _ = write!(out, ",{}", a[(i, j)]);
        }
        out.push('\n');
    }
    out
}
