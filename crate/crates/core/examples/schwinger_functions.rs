//! Interacting Schwinger functions by tensor quadrature and by Monte Carlo.

use padic_qft::lattice::{covariance_matrix, precision_matrix};
use padic_qft::model::FieldParams;
use padic_qft::sampler::{schwinger_mc, schwinger_quadrature, SourceSpec};
use padic_qft::ultrametric::Region;
use padic_qft::wick::WickPolynomial;

fn main() -> padic_qft::Result<()> {
    let params = FieldParams::new(3, 1, 1.0, 1.0, 1.0)?;
    let lattice = Region::new(3, 1, 0, vec![vec![0], vec![1]])?.refine(0)?;
    let m = covariance_matrix(&precision_matrix(&lattice, &params)?)?;
    let p = WickPolynomial::quartic(0.0)?;

    let cases = [
        ("<phi_0 phi_0>", vec![vec![1.0, 0.0], vec![1.0, 0.0]]),
        ("<phi_0 phi_1>", vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
        ("<phi_0^4>", vec![vec![1.0, 0.0]; 4]),
    ];
    for g in [0.0, 0.5, 2.0] {
        println!("g = {g}");
        for (name, h) in &cases {
            let source = SourceSpec::constant(2, g)?.with_h(h.clone())?;
            let quad = schwinger_quadrature(&m, &p, &source)?;
            let mc = schwinger_mc(&m, &p, &source, 11, 100_000)?;
            println!(
                "  {name:<14} quadrature {:.6}   mc {:.6} +- {:.6} (ESS {:.0})",
                quad.value,
                mc.value,
                mc.std_error,
                mc.ess.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
