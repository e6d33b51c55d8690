//! The full self-check suite on the bundled configuration, as run by the
//! `verify` subcommand.

use padic_qft::cli::config_hash;
use padic_qft::config::{RunConfig, DEFAULT_CONFIG};
use padic_qft::verify::run_verify;

fn main() -> padic_qft::Result<()> {
    let cfg = RunConfig::parse(DEFAULT_CONFIG)?;
    let report = run_verify(&cfg, &config_hash(&cfg))?;
    for c in &report.checks {
        println!(
            "{:<5} {:<28} margin {:.3e}",
            if c.pass { "ok" } else { "FAIL" },
            c.check,
            c.worst_margin
        );
    }
    println!(
        "config {} seed {}: {}",
        report.config_hash,
        report.seed,
        if report.pass { "pass" } else { "fail" }
    );
    Ok(())
}
