//! Partition function of a scaled interaction, with the deterministic lower
//! bound on the Wick polynomial that keeps it finite.

use padic_qft::lattice::{covariance_matrix, precision_matrix};
use padic_qft::model::FieldParams;
use padic_qft::sampler::{partition_stability, SourceSpec};
use padic_qft::ultrametric::Region;
use padic_qft::wick::WickPolynomial;

fn main() -> padic_qft::Result<()> {
    let params = FieldParams::new(3, 1, 1.0, 1.0, 1.0)?;
    let lattice = Region::new(3, 0, 0, vec![vec![]])?.refine(0)?;
    let m = covariance_matrix(&precision_matrix(&lattice, &params)?)?;
    let p = WickPolynomial::quartic(0.0)?;
    let source = SourceSpec::constant(1, 1.0)?;

    let report = partition_stability(&m, &p, &source, &[1.0, 2.0, 4.0, 8.0], 3, 100_000)?;
    println!(
        "lower bound on :P:(g) = {:.6}, violations {}",
        report.lower_bound, report.bound_violations
    );
    for row in &report.rows {
        println!(
            "  rho = {:<3} Z = {:<12.6} se {:.2e}  ESS {:.0}",
            row.rho, row.partition, row.std_error, row.ess
        );
    }
    println!("stable: {}", report.pass);
    Ok(())
}
