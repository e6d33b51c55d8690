//! Command-line front end. The binary is a one-line wrapper around [`main`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Strictness, DEFAULT_CONFIG};
use crate::error::{Error, Result};
use crate::lattice::{covariance_matrix, precision_matrix_with};
use crate::model::{
    ball_bound_constant, c_kappa_sq, green_function, green_regularized, resolvent_tail_integral, tail_bound_constant,
    GreenValue, NormExp,
};
use crate::sampler::{free_wick_variances, schwinger_with, SchwingerEstimate};
use crate::verify::run_verify;
use crate::wick::{wick_coefficients, wick_decay_series};

/// Prefix of the environment variables mirroring the flags.
pub const ENV_PREFIX: &str = "PADIC_QFT_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Integrals,
    Green,
    Lattice,
    Wick,
    Schwinger,
    Verify,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Self::Integrals => "integrals",
            Self::Green => "green",
            Self::Lattice => "lattice",
            Self::Wick => "wick",
            Self::Schwinger => "schwinger",
            Self::Verify => "verify",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "padic-qft", version, about = "Ultrametric lattice field theory numerics")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Subcommand,
    /// Config file; the bundled default is used when absent.
    #[arg(long, env = "PADIC_QFT_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "PADIC_QFT_SEED")]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, env = "PADIC_QFT_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "PADIC_QFT_TOL")]
    pub tol: Option<f64>,
    /// Reject unknown config keys (default).
    #[arg(long, conflicts_with = "lenient")]
    pub strict: bool,
    /// Ignore unknown config keys.
    #[arg(long, env = "PADIC_QFT_LENIENT")]
    pub lenient: bool,
}

impl Args {
    /// Parsed, validated config with flag overrides applied.
    pub fn load_config(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(path) => {
                fs::read_to_string(path).map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?
            }
            None => DEFAULT_CONFIG.to_string(),
        };
        let strictness = if self.lenient && !self.strict {
            Strictness::Lenient
        } else {
            Strictness::Strict
        };
        let mut cfg = RunConfig::parse_with(&text, strictness)?;
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::Argument(format!("tol must be a positive number, got {tol}")));
            }
            cfg.run.tol = tol;
        }
        if let Some(out) = &self.out {
            cfg.run.out = out.display().to_string();
        }
        Ok(cfg)
    }
}

/// First 16 hex digits of the SHA-256 of the canonical config, with the
/// output directory blanked so relocating a run keeps its file names.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.run.out.clear();
    let digest = Sha256::digest(c.emit().as_bytes());
    hex::encode(&digest[..8])
}

/// Files written by a run. Dropping an uncommitted set deletes them.
#[derive(Debug)]
struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("creating {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        // record first so a half-written file is also cleaned up
        self.written.push(path.clone());
        fs::write(&path, contents).map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// Result of a successful subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False when a check inside the run failed.
    pub pass: bool,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

fn csv_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        String::new()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(format!("serializing: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Runs one subcommand, writing its artifacts under `cfg.run.out`.
pub fn run_subcommand(cmd: Subcommand, cfg: &RunConfig) -> Result<Outcome> {
    let hash = config_hash(cfg);
    let stem = format!("{}-{hash}", cmd.name());
    let mut art = Artifacts::new(Path::new(&cfg.run.out))?;
    let pass = match cmd {
        Subcommand::Integrals => integrals(cfg, &stem, &mut art)?,
        Subcommand::Green => green(cfg, &stem, &mut art)?,
        Subcommand::Lattice => lattice(cfg, &stem, &mut art)?,
        Subcommand::Wick => wick(cfg, &stem, &mut art)?,
        Subcommand::Schwinger => schwinger(cfg, &hash, &stem, &mut art)?,
        Subcommand::Verify => {
            let report = run_verify(cfg, &hash)?;
            art.write(&format!("{stem}.json"), &json(&report)?)?;
            report.pass
        }
    };
    Ok(Outcome {
        pass,
        artifacts: art.commit(),
    })
}

fn integrals(cfg: &RunConfig, stem: &str, art: &mut Artifacts) -> Result<bool> {
    let params = cfg.params()?;
    let tol = cfg.run.tol;
    let c1 = ball_bound_constant(&params);
    let mut pass = true;
    let mut s = String::from("kappa,ball_integral,ball_bound\n");
    for kappa in 1..=cfg.run.kappa_max {
        let v = c_kappa_sq(&params, kappa, tol)?;
        let bound = c1 * f64::from(kappa);
        pass &= v <= bound;
        let _ = writeln!(s, "{kappa},{},{}", csv_num(v), csv_num(bound));
    }
    art.write(&format!("{stem}-ball.csv"), &s)?;

    let bh = params.beta_hat();
    let mut s = String::from("kappa,beta,tail_integral,tail_bound\n");
    for beta in [1.5, 2.0, 3.0] {
        if bh * beta <= 1.0 {
            continue;
        }
        let c2 = tail_bound_constant(&params, beta)?;
        for kappa in 1..=cfg.run.kappa_max {
            let ln_bound = c2.ln() - f64::from(kappa) * (bh * beta - 1.0) * f64::from(params.q()).ln();
            let bound = ln_bound.exp();
            let v = resolvent_tail_integral(&params, kappa, beta, (tol * bound).max(f64::MIN_POSITIVE))?;
            pass &= v.ln() <= ln_bound + tol;
            let _ = writeln!(s, "{kappa},{beta},{},{}", csv_num(v), csv_num(bound));
        }
    }
    art.write(&format!("{stem}-tail.csv"), &s)?;
    Ok(pass)
}

fn green(cfg: &RunConfig, stem: &str, art: &mut Artifacts) -> Result<bool> {
    let params = cfg.params()?;
    let kappa = cfg.wick.kappa1;
    let mut s = format!("norm_exp,green,green_kappa_{kappa}\n");
    let origin = match green_function(&params, NormExp::Zero, cfg.run.tol)? {
        GreenValue::Finite(v) => v,
        GreenValue::Infinite => f64::INFINITY,
    };
    let reg = green_regularized(&params, kappa, NormExp::Zero, cfg.run.tol)?;
    let _ = writeln!(s, "zero,{},{}", csv_num(origin), csv_num(reg));
    for d in -cfg.run.kappa_max..=cfg.run.kappa_max {
        let x = NormExp::Exp(d);
        let e = green_function(&params, x, cfg.run.tol)?
            .finite()
            .unwrap_or(f64::INFINITY);
        let r = green_regularized(&params, kappa, x, cfg.run.tol)?;
        let _ = writeln!(s, "{d},{},{}", csv_num(e), csv_num(r));
    }
    art.write(&format!("{stem}.csv"), &s)?;
    Ok(true)
}

fn lattice(cfg: &RunConfig, stem: &str, art: &mut Artifacts) -> Result<bool> {
    let params = cfg.params()?;
    let n = precision_matrix_with(&cfg.lattice(&params)?, &params, cfg.lattice_options())?;
    let m = covariance_matrix(&n)?;
    art.write(&format!("{stem}-N.csv"), &n.to_csv())?;
    art.write(&format!("{stem}-M.csv"), &m.to_csv())?;
    Ok(n.sign_check().pass && m.min_entry() >= 0.0)
}

fn wick(cfg: &RunConfig, stem: &str, art: &mut Artifacts) -> Result<bool> {
    let mut s = String::from("k,j,coefficient\n");
    for k in 0..=cfg.wick.table_max {
        let table = wick_coefficients(k)?;
        for (j, c) in table.exact().iter().enumerate() {
            let _ = writeln!(s, "{k},{j},{c}");
        }
    }
    art.write(&format!("{stem}-coefficients.csv"), &s)?;

    let params = cfg.params()?;
    let lattice = cfg.lattice(&params)?;
    let g = cfg.source(&lattice)?.g().to_vec();
    let series = wick_decay_series(
        &params,
        cfg.wick.kappa1,
        1..=cfg.wick.kappa2_max,
        cfg.wick.power,
        &lattice,
        &g,
    )?;
    let q = f64::from(params.q());
    let mut s = String::from("kappa2,distance,log_q_ratio\n");
    let mut prev: Option<f64> = None;
    for &(k2, d) in &series {
        let ratio = match prev {
            Some(p) if p > 0.0 && d > 0.0 => csv_num((d / p).ln() / q.ln()),
            _ => String::new(),
        };
        let _ = writeln!(s, "{k2},{},{ratio}", csv_num(d));
        prev = Some(d);
    }
    art.write(&format!("{stem}-decay.csv"), &s)?;
    Ok(true)
}

#[derive(Serialize)]
struct SchwingerOutput<'a> {
    config_hash: &'a str,
    seed: u64,
    cells: usize,
    estimate: SchwingerEstimate,
}

fn schwinger(cfg: &RunConfig, hash: &str, stem: &str, art: &mut Artifacts) -> Result<bool> {
    let params = cfg.params()?;
    let lattice = cfg.lattice(&params)?;
    let m = covariance_matrix(&precision_matrix_with(&lattice, &params, cfg.lattice_options())?)?;
    let vars = free_wick_variances(&m)?;
    let est = schwinger_with(&m, &cfg.polynomial()?, &cfg.source(&lattice)?, &vars, &cfg.method())?;
    let pass = !est.low_quality;
    let out = SchwingerOutput {
        config_hash: hash,
        seed: cfg.run.seed,
        cells: lattice.len(),
        estimate: est,
    };
    art.write(&format!("{stem}.json"), &json(&out)?)?;
    Ok(pass)
}

/// Parses `args`, runs, and maps the outcome to an exit status:
/// 0 success, 1 a check failed, 2 an error.
pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = args.load_config().and_then(|cfg| run_subcommand(args.command, &cfg));
    match result {
        Ok(outcome) => {
            for p in &outcome.artifacts {
                println!("{}", p.display());
            }
            if !outcome.pass {
                eprintln!("{}: one or more checks failed", args.command.name());
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {}: {e}", args.command.name());
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_output_directory() {
        let mut a = RunConfig::parse(DEFAULT_CONFIG).unwrap();
        let h = config_hash(&a);
        a.run.out = "elsewhere".into();
        assert_eq!(config_hash(&a), h);
        a.run.seed += 1;
        assert_ne!(config_hash(&a), h);
        assert_eq!(h.len(), 16);
    }

    #[test]
    fn uncommitted_artifacts_are_removed() {
        let dir = tempfile::tempdir().unwrap();
        let path = {
            let mut art = Artifacts::new(dir.path()).unwrap();
            art.write("x.csv", "1\n").unwrap();
            art.written[0].clone()
        };
        assert!(!path.exists());
    }
}
