//! Covariances and Schwinger functions grow with the region.

use padic_qft::lattice::monotonicity_check;
use padic_qft::model::FieldParams;
use padic_qft::sampler::{monotonicity_experiment, Method, SourceSpec};
use padic_qft::ultrametric::Region;
use padic_qft::wick::WickPolynomial;

fn main() -> padic_qft::Result<()> {
    let params = FieldParams::new(3, 1, 1.0, 1.0, 1.0)?;
    let inner = Region::new(3, 1, 0, vec![vec![0], vec![1]])?;
    let outer = Region::new(3, 1, 0, vec![vec![0], vec![1], vec![2]])?;

    let free = monotonicity_check(&inner, &outer, 0, &params, 1e-12)?;
    println!(
        "free covariance: pass {}, smallest gap {:.6e}",
        free.pass(),
        free.worst_margin
    );

    let p = WickPolynomial::quartic(0.0)?;
    let source = SourceSpec::constant(2, 0.5)?.with_h(vec![vec![1.0, 0.0], vec![0.0, 1.0]])?;
    let report = monotonicity_experiment(&inner, &outer, 0, &params, &p, &source, &Method::quadrature())?;
    println!(
        "interacting two-point function: S = {:.6} on 2 cells, {:.6} on 3 cells, pass {}",
        report.inner.value, report.outer.value, report.pass
    );
    Ok(())
}
