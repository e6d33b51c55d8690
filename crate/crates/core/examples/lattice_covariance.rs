//! Precision and covariance matrices of the free field on a lattice, with
//! the structural checks they satisfy.

use padic_qft::lattice::{covariance_matrix, domination_check, precision_matrix, restriction_check};
use padic_qft::model::FieldParams;
use padic_qft::ultrametric::Region;

fn main() -> padic_qft::Result<()> {
    let params = FieldParams::new(3, 1, 1.0, 1.0, 1.0)?;
    let region = Region::new(3, 1, 0, vec![vec![0], vec![1]])?;
    let lattice = region.refine(0)?;

    let n = precision_matrix(&lattice, &params)?;
    println!("N =\n{:.6}", n.entries());
    println!("sign structure: {:?}", n.sign_check());

    let m = covariance_matrix(&n)?;
    println!("M =\n{:.6}", m.entries());
    println!("|MN - I| = {:.2e}", m.inverse_residual());

    let dom = domination_check(&m, 1e-9)?;
    println!(
        "M <= free covariance: {} (smallest gap {:.6e})",
        dom.pass(),
        dom.worst_margin
    );

    let outer = Region::new(3, 1, 0, vec![vec![0], vec![1], vec![2]])?;
    println!(
        "N restricts exactly: {}",
        restriction_check(&region, &outer, 0, &params)?
    );
    Ok(())
}
