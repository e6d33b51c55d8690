//! Sectioned run configuration (TOML syntax) with validation that reports
//! every problem at once, and a canonical emitter whose output parses back
//! to the same value.

use std::fmt::Write as _;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::lattice::LatticeOptions;
use crate::model::FieldParams;
use crate::sampler::{McOptions, Method, MethodKind, SourceSpec, DEFAULT_CHAINS, DEFAULT_QUADRATURE_ORDER};
use crate::ultrametric::{decode_digits, LatticeSpec, Region};
use crate::wick::WickPolynomial;

/// Text of the bundled default configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Unknown keys are errors.
    #[default]
    Strict,
    /// Unknown keys are ignored.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaSpec {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSpec {
    Constant(f64),
    PerCell(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSection {
    pub p: u32,
    pub n: u32,
    pub alpha: f64,
    pub m_sq: f64,
    pub gamma_const: f64,
    pub omega: OmegaSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSection {
    pub ambient_level: i32,
    pub k: i32,
    pub balls: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSection {
    /// Coefficients by increasing degree. With `lambda` present these are
    /// the coefficients of the even part `Q` and `P = Q - λX`.
    pub coefficients: Vec<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSection {
    pub g: CouplingSpec,
    pub h: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WickSection {
    pub power: u32,
    pub kappa1: i32,
    pub kappa2_max: i32,
    pub table_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub seed: u64,
    pub n_samples: usize,
    pub chains: usize,
    pub method: MethodKind,
    pub quadrature_order: usize,
    pub tol: f64,
    pub kappa_max: i32,
    pub out: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub field: FieldSection,
    pub region: RegionSection,
    pub lattice_level: i32,
    /// Include `m²` on the precision diagonal; `false` gives the bare kernel.
    pub diagonal_mass_term: bool,
    pub polynomial: PolynomialSection,
    pub source: SourceSection,
    pub wick: WickSection,
    pub run: RunSection,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("field", &["p", "n", "alpha", "m_sq", "gamma_const", "omega"]),
    ("region", &["ambient_level", "k", "balls"]),
    ("lattice", &["l", "diagonal_mass_term"]),
    ("polynomial", &["coefficients", "lambda"]),
    ("source", &["g", "h"]),
    ("wick", &["power", "kappa1", "kappa2_max", "table_max"]),
    (
        "run",
        &[
            "seed",
            "n_samples",
            "chains",
            "method",
            "quadrature_order",
            "tol",
            "kappa_max",
            "out",
        ],
    ),
];

/// Pulls typed values out of a section and records every problem.
struct Reader<'a> {
    errors: &'a mut Vec<String>,
    section: &'static str,
    table: Option<&'a Table>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn fail(&mut self, key: &str, what: &str) {
        self.errors.push(format!("{}.{key}: {what}", self.section));
    }

    fn int(&mut self, key: &str, default: Option<i64>) -> Option<i64> {
        match self.raw(key) {
            Some(Value::Integer(i)) => Some(*i),
            Some(_) => {
                self.fail(key, "expected an integer");
                None
            }
            None if default.is_some() => default,
            None => {
                self.fail(key, "missing");
                None
            }
        }
    }

    fn nonneg<T: TryFrom<i64>>(&mut self, key: &str, default: Option<i64>) -> Option<T> {
        let v = self.int(key, default)?;
        match T::try_from(v) {
            Ok(x) if v >= 0 => Some(x),
            _ => {
                self.fail(key, "out of range");
                None
            }
        }
    }

    fn level(&mut self, key: &str, default: Option<i64>) -> Option<i32> {
        let v = self.int(key, default)?;
        match i32::try_from(v) {
            Ok(x) => Some(x),
            Err(_) => {
                self.fail(key, "out of range");
                None
            }
        }
    }

    fn float_value(v: &Value) -> Option<f64> {
        match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn float(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        match self.raw(key) {
            Some(v) => match Self::float_value(v) {
                Some(f) if f.is_finite() => Some(f),
                _ => {
                    self.fail(key, "expected a finite number");
                    None
                }
            },
            None if default.is_some() => default,
            None => {
                self.fail(key, "missing");
                None
            }
        }
    }

    fn flag(&mut self, key: &str, default: bool) -> Option<bool> {
        match self.raw(key) {
            Some(Value::Boolean(b)) => Some(*b),
            Some(_) => {
                self.fail(key, "expected true or false");
                None
            }
            None => Some(default),
        }
    }

    fn floats(&mut self, v: &Value, key: &str) -> Option<Vec<f64>> {
        let arr = v.as_array();
        let out: Option<Vec<f64>> = arr.and_then(|a| a.iter().map(Self::float_value).collect());
        if out.is_none() {
            self.fail(key, "expected an array of numbers");
        }
        out
    }

    fn string(&mut self, key: &str, default: Option<&str>) -> Option<String> {
        match self.raw(key) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.fail(key, "expected a string");
                None
            }
            None => match default {
                Some(d) => Some(d.to_string()),
                None => {
                    self.fail(key, "missing");
                    None
                }
            },
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, Strictness::Strict)
    }

    pub fn parse_with(text: &str, strictness: Strictness) -> Result<Self> {
        let doc: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
        let mut errors = Vec::new();
        if strictness == Strictness::Strict {
            for (name, value) in &doc {
                match SECTIONS.iter().find(|(s, _)| s == name) {
                    None => errors.push(format!("unknown section [{name}]")),
                    Some((_, keys)) => match value.as_table() {
                        Some(t) => {
                            for key in t.keys().filter(|k| !keys.contains(&k.as_str())) {
                                errors.push(format!("unknown key {name}.{key}"));
                            }
                        }
                        None => errors.push(format!("[{name}] must be a table")),
                    },
                }
            }
        }
        let section = |name: &str| doc.get(name).and_then(Value::as_table);

        let mut r = Reader {
            errors: &mut errors,
            section: "field",
            table: section("field"),
        };
        let p = r.nonneg::<u32>("p", None);
        let n = r.nonneg::<u32>("n", Some(1));
        let alpha = r.float("alpha", None);
        let m_sq = r.float("m_sq", None);
        let gamma_const = r.float("gamma_const", Some(1.0));
        let omega = match r.raw("omega") {
            None => Some(OmegaSpec::Auto),
            Some(Value::String(s)) if s == "auto" => Some(OmegaSpec::Auto),
            Some(v) => match Reader::float_value(v) {
                Some(w) if w.is_finite() && w <= 0.0 => Some(OmegaSpec::Value(w)),
                _ => {
                    r.fail("omega", "must be \"auto\" or a nonpositive number");
                    None
                }
            },
        };

        let mut r = Reader {
            errors: &mut errors,
            section: "region",
            table: section("region"),
        };
        let ambient_level = r.level("ambient_level", None);
        let k = r.level("k", None);
        let balls = match r.raw("balls") {
            Some(Value::Array(a)) => {
                let s: Option<Vec<String>> = a.iter().map(|v| v.as_str().map(str::to_string)).collect();
                if s.is_none() {
                    r.fail("balls", "expected an array of digit strings");
                }
                s
            }
            Some(_) => {
                r.fail("balls", "expected an array of digit strings");
                None
            }
            None => {
                r.fail("balls", "missing");
                None
            }
        };

        let mut r = Reader {
            errors: &mut errors,
            section: "lattice",
            table: section("lattice"),
        };
        let lattice_level = r.level("l", None);
        let diagonal_mass_term = r.flag("diagonal_mass_term", true);

        let mut r = Reader {
            errors: &mut errors,
            section: "polynomial",
            table: section("polynomial"),
        };
        let coefficients = match r.raw("coefficients").cloned() {
            Some(v) => r.floats(&v, "coefficients"),
            None => Some(vec![0.0, 0.0, 0.0, 0.0, 1.0]),
        };
        let lambda = match r.raw("lambda") {
            None => None,
            Some(_) => r.float("lambda", None).map(Some).unwrap_or(Some(f64::NAN)),
        };

        let mut r = Reader {
            errors: &mut errors,
            section: "source",
            table: section("source"),
        };
        let g = match r.raw("g").cloned() {
            None => Some(CouplingSpec::Constant(0.0)),
            Some(v @ Value::Array(_)) => r.floats(&v, "g").map(CouplingSpec::PerCell),
            Some(_) => r.float("g", None).map(CouplingSpec::Constant),
        };
        let h = match r.raw("h").cloned() {
            None => Some(Vec::new()),
            Some(Value::Array(rows)) => {
                let parsed: Option<Vec<Vec<f64>>> = rows.iter().map(|row| r.floats(row, "h")).collect();
                parsed
            }
            Some(_) => {
                r.fail("h", "expected an array of arrays");
                None
            }
        };

        let mut r = Reader {
            errors: &mut errors,
            section: "wick",
            table: section("wick"),
        };
        let power = r.nonneg::<u32>("power", Some(4));
        let kappa1 = r.level("kappa1", Some(20));
        let kappa2_max = r.level("kappa2_max", Some(10));
        let table_max = r.nonneg::<usize>("table_max", Some(12));

        let mut r = Reader {
            errors: &mut errors,
            section: "run",
            table: section("run"),
        };
        let seed = r.nonneg::<u64>("seed", Some(1));
        let n_samples = r.nonneg::<usize>("n_samples", Some(100_000));
        let chains = r.nonneg::<usize>("chains", Some(DEFAULT_CHAINS as i64));
        let method = match r.string("method", Some("quadrature")).as_deref() {
            Some("quadrature") => Some(MethodKind::Quadrature),
            Some("mc") => Some(MethodKind::MonteCarlo),
            Some(other) => {
                r.fail(
                    "method",
                    &format!("unknown method {other:?}, expected \"mc\" or \"quadrature\""),
                );
                None
            }
            None => None,
        };
        let quadrature_order = r.nonneg::<usize>("quadrature_order", Some(DEFAULT_QUADRATURE_ORDER as i64));
        let tol = r.float("tol", Some(1e-12));
        let kappa_max = r.level("kappa_max", Some(30));
        let out = r.string("out", Some("out"));

        if let Some(t) = tol {
            if t <= 0.0 {
                errors.push("run.tol: must be positive".into());
            }
        }
        if let Some(c) = chains {
            if c < 2 {
                errors.push("run.chains: at least 2 chains are required".into());
            }
        }
        if let Some(o) = quadrature_order {
            if o == 0 {
                errors.push("run.quadrature_order: must be positive".into());
            }
        }

        let parsed = (|| {
            Some(RunConfig {
                field: FieldSection {
                    p: p?,
                    n: n?,
                    alpha: alpha?,
                    m_sq: m_sq?,
                    gamma_const: gamma_const?,
                    omega: omega?,
                },
                region: RegionSection {
                    ambient_level: ambient_level?,
                    k: k?,
                    balls: balls?,
                },
                lattice_level: lattice_level?,
                diagonal_mass_term: diagonal_mass_term?,
                polynomial: PolynomialSection {
                    coefficients: coefficients.clone()?,
                    lambda,
                },
                source: SourceSection { g: g?, h: h? },
                wick: WickSection {
                    power: power?,
                    kappa1: kappa1?,
                    kappa2_max: kappa2_max?,
                    table_max: table_max?,
                },
                run: RunSection {
                    seed: seed?,
                    n_samples: n_samples?,
                    chains: chains?,
                    method: method?,
                    quadrature_order: quadrature_order?,
                    tol: tol?,
                    kappa_max: kappa_max?,
                    out: out?,
                },
            })
        })();

        // semantic checks on whatever parsed cleanly
        if let Some(cfg) = &parsed {
            cfg.semantic_errors(&mut errors);
        } else {
            if let (Some(p), Some(n), Some(a), Some(m), Some(g)) = (p, n, alpha, m_sq, gamma_const) {
                push_err(&mut errors, FieldParams::new(p, n, a, m, g).err().as_ref());
            }
            if let Some(c) = &coefficients {
                push_err(&mut errors, polynomial_from(c, lambda).err().as_ref());
            }
        }
        match parsed {
            Some(cfg) if errors.is_empty() => Ok(cfg),
            _ => Err(Error::Config(errors)),
        }
    }

    fn semantic_errors(&self, errors: &mut Vec<String>) {
        let params = self.params();
        push_err(errors, params.as_ref().err());
        push_err(errors, self.polynomial().err().as_ref());
        if let Ok(params) = &params {
            match self.lattice(params) {
                Ok(lat) => push_err(errors, self.source(&lat).err().as_ref()),
                Err(e) => push_err(errors, Some(&e)),
            }
        }
        if self.wick.kappa1 < self.wick.kappa2_max {
            errors.push("wick.kappa1 must be at least wick.kappa2_max".into());
        }
        if self.wick.table_max > crate::wick::MAX_WICK_ORDER {
            errors.push(format!("wick.table_max exceeds {}", crate::wick::MAX_WICK_ORDER));
        }
    }

    pub fn params(&self) -> Result<FieldParams> {
        let f = &self.field;
        let params = FieldParams::new(f.p, f.n, f.alpha, f.m_sq, f.gamma_const)?;
        match f.omega {
            OmegaSpec::Auto => Ok(params),
            OmegaSpec::Value(w) => params.with_omega(w),
        }
    }

    pub fn region(&self, q: u32) -> Result<Region> {
        let balls = self
            .region
            .balls
            .iter()
            .map(|s| decode_digits(s, q))
            .collect::<Result<Vec<_>>>()?;
        Region::new(q, self.region.ambient_level, self.region.k, balls)
    }

    pub fn lattice(&self, params: &FieldParams) -> Result<LatticeSpec> {
        self.region(params.q())?.refine(self.lattice_level)
    }

    pub fn lattice_options(&self) -> LatticeOptions {
        LatticeOptions {
            diagonal_mass_term: self.diagonal_mass_term,
            ..LatticeOptions::default()
        }
    }

    pub fn polynomial(&self) -> Result<WickPolynomial> {
        polynomial_from(&self.polynomial.coefficients, self.polynomial.lambda)
    }

    pub fn source(&self, lattice: &LatticeSpec) -> Result<SourceSpec> {
        let eta = lattice.len();
        let g = match &self.source.g {
            CouplingSpec::Constant(c) => vec![*c; eta],
            CouplingSpec::PerCell(v) => v.clone(),
        };
        if g.len() != eta {
            return Err(Error::Argument(format!(
                "source.g has {} values for {eta} cells",
                g.len()
            )));
        }
        SourceSpec::new(g, self.source.h.clone())
    }

    pub fn method(&self) -> Method {
        match self.run.method {
            MethodKind::Quadrature => Method::Quadrature {
                order: self.run.quadrature_order,
            },
            MethodKind::MonteCarlo => Method::MonteCarlo(McOptions {
                seed: self.run.seed,
                n_samples: self.run.n_samples,
                chains: self.run.chains,
            }),
        }
    }

    /// Canonical text: fixed section and key order, every key present.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let f = &self.field;
        let _ = writeln!(s, "[field]");
        let _ = writeln!(s, "p = {}", f.p);
        let _ = writeln!(s, "n = {}", f.n);
        let _ = writeln!(s, "alpha = {}", num(f.alpha));
        let _ = writeln!(s, "m_sq = {}", num(f.m_sq));
        let _ = writeln!(s, "gamma_const = {}", num(f.gamma_const));
        match f.omega {
            OmegaSpec::Auto => {
                let _ = writeln!(s, "omega = \"auto\"");
            }
            OmegaSpec::Value(w) => {
                let _ = writeln!(s, "omega = {}", num(w));
            }
        }
        let _ = writeln!(s, "\n[region]");
        let _ = writeln!(s, "ambient_level = {}", self.region.ambient_level);
        let _ = writeln!(s, "k = {}", self.region.k);
        let balls: Vec<String> = self.region.balls.iter().map(|b| format!("\"{b}\"")).collect();
        let _ = writeln!(s, "balls = [{}]", balls.join(", "));
        let _ = writeln!(s, "\n[lattice]");
        let _ = writeln!(s, "l = {}", self.lattice_level);
        let _ = writeln!(s, "diagonal_mass_term = {}", self.diagonal_mass_term);
        let _ = writeln!(s, "\n[polynomial]");
        let _ = writeln!(s, "coefficients = {}", nums(&self.polynomial.coefficients));
        if let Some(l) = self.polynomial.lambda {
            let _ = writeln!(s, "lambda = {}", num(l));
        }
        let _ = writeln!(s, "\n[source]");
        match &self.source.g {
            CouplingSpec::Constant(c) => {
                let _ = writeln!(s, "g = {}", num(*c));
            }
            CouplingSpec::PerCell(v) => {
                let _ = writeln!(s, "g = {}", nums(v));
            }
        }
        let rows: Vec<String> = self.source.h.iter().map(|h| nums(h)).collect();
        let _ = writeln!(s, "h = [{}]", rows.join(", "));
        let w = &self.wick;
        let _ = writeln!(s, "\n[wick]");
        let _ = writeln!(s, "power = {}", w.power);
        let _ = writeln!(s, "kappa1 = {}", w.kappa1);
        let _ = writeln!(s, "kappa2_max = {}", w.kappa2_max);
        let _ = writeln!(s, "table_max = {}", w.table_max);
        let r = &self.run;
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "seed = {}", r.seed);
        let _ = writeln!(s, "n_samples = {}", r.n_samples);
        let _ = writeln!(s, "chains = {}", r.chains);
        let method = match r.method {
            MethodKind::Quadrature => "quadrature",
            MethodKind::MonteCarlo => "mc",
        };
        let _ = writeln!(s, "method = \"{method}\"");
        let _ = writeln!(s, "quadrature_order = {}", r.quadrature_order);
        let _ = writeln!(s, "tol = {}", num(r.tol));
        let _ = writeln!(s, "kappa_max = {}", r.kappa_max);
        let _ = writeln!(s, "out = {}", Value::String(r.out.clone()));
        s
    }
}

fn push_err(errors: &mut Vec<String>, e: Option<&Error>) {
    match e {
        Some(Error::Config(list)) => errors.extend(list.iter().cloned()),
        Some(other) => errors.push(other.to_string()),
        None => {}
    }
}

fn polynomial_from(coeffs: &[f64], lambda: Option<f64>) -> Result<WickPolynomial> {
    match lambda {
        None => WickPolynomial::new(coeffs.to_vec()),
        Some(l) => WickPolynomial::q_minus_lambda(coeffs.to_vec(), l),
    }
}

/// Float in a TOML-valid form that parses back to the same bits.
fn num(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn nums(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("[{}]", parts.join(", "))
}
