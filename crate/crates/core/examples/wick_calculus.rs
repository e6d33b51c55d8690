//! Wick powers, basis changes, the polynomial lower bound and the L2 decay
//! of regularised Wick powers.

use padic_qft::model::FieldParams;
use padic_qft::ultrametric::Region;
use padic_qft::wick::{
    fitted_decay_rate, from_wick_basis, to_wick_basis, wick_change_of_variance, wick_coefficients, wick_decay_series,
    wick_poly_lower_bound, wick_power, WickPolynomial,
};

fn main() -> padic_qft::Result<()> {
    for k in 0..=6 {
        println!(":X^{k}: coefficients {:?}", wick_coefficients(k)?.exact());
    }
    println!(":x^4: at x = 1.5, variance 0.7: {:.6}", wick_power(1.5, 4, 0.7));
    println!(
        "same value expanded in variance-0.3 Wick powers: {:.6}",
        wick_change_of_variance(4, 0.7, 0.3, 1.5)?
    );

    let monomial = [0.0, 0.0, 0.0, 0.0, 1.0];
    let wick = to_wick_basis(&monomial, 0.7)?;
    println!("X^4 in the Wick basis: {wick:?}");
    println!("and back: {:?}", from_wick_basis(&wick, 0.7)?);

    let p = WickPolynomial::quartic(0.5)?;
    println!(
        "lower bound of g :P(x): with g = 0.25, variance 1: {:.6}",
        wick_poly_lower_bound(&p, 0.25, 1.0)?
    );

    let params = FieldParams::new(3, 1, 1.0, 1.0, 1.0)?;
    let lattice = Region::new(3, 1, 0, vec![vec![0], vec![1]])?.refine(0)?;
    let g = vec![1.0; lattice.len()];
    for k in 2..=4 {
        let series = wick_decay_series(&params, 20, 1..=10, k, &lattice, &g)?;
        let rate = fitted_decay_rate(3, &series).unwrap_or(f64::NAN);
        println!(
            "k = {k}: distance at kappa2 = 10 is {:.3e}, fitted rate {rate:.3}",
            series[9].1
        );
    }
    Ok(())
}
