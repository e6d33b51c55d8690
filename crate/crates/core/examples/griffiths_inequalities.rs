//! Both Griffiths inequalities for a ferromagnetic quartic model.

use padic_qft::lattice::{covariance_matrix, precision_matrix};
use padic_qft::model::FieldParams;
use padic_qft::sampler::{griffiths_check, GriffithsKind, GriffithsRequest, Method, SourceSpec};
use padic_qft::ultrametric::Region;
use padic_qft::wick::WickPolynomial;

fn main() -> padic_qft::Result<()> {
    let params = FieldParams::new(3, 1, 1.0, 1.0, 1.0)?;
    let lattice = Region::new(3, 1, 0, vec![vec![0], vec![1], vec![2]])?.refine(0)?;
    let m = covariance_matrix(&precision_matrix(&lattice, &params)?)?;
    let p = WickPolynomial::quartic(0.5)?;
    let source = SourceSpec::constant(3, 0.5)?;
    let request = GriffithsRequest::standard(3);

    let report = griffiths_check(&m, &p, &source, &request, &Method::quadrature())?;
    println!("{} inequalities, all hold: {}", report.entries.len(), report.pass);
    for e in report
        .entries
        .iter()
        .filter(|e| e.kind == GriffithsKind::Second)
        .take(4)
    {
        let idx: Vec<_> = e.indices.iter().map(|a| a.0.clone()).collect();
        println!("  second, {idx:?}: margin {:.6e}", e.margin);
    }

    // a test function with a negative entry breaks the hypotheses
    let bad = SourceSpec::constant(3, 0.5)?.with_h(vec![vec![1.0, -1.0, 0.0]])?;
    match griffiths_check(&m, &p, &bad, &request, &Method::quadrature()) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
