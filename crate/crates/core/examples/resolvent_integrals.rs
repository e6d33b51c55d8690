//! Shell-series integrals of the resolvent symbol and their growth bounds.

use padic_qft::model::{
    ball_bound_constant, c_kappa_sq, resolvent_ball_integral, resolvent_tail_integral, tail_bound_constant,
    FieldParams, DEFAULT_TOL,
};

fn main() -> padic_qft::Result<()> {
    let params = FieldParams::new(3, 1, 1.0, 1.0, 1.0)?;
    println!(
        "ball integral, kappa = 0, beta = 1: {:.6}",
        resolvent_ball_integral(&params, 0, 1.0, DEFAULT_TOL)?
    );

    let c1 = ball_bound_constant(&params);
    println!("\nkappa  c_kappa^2    c1 * kappa");
    for kappa in [1, 2, 5, 10, 20] {
        println!(
            "{kappa:>5}  {:<11.6}  {:.6}",
            c_kappa_sq(&params, kappa, DEFAULT_TOL)?,
            c1 * f64::from(kappa)
        );
    }

    let beta = 2.0;
    let c2 = tail_bound_constant(&params, beta)?;
    let decay = params.beta_hat() * beta - 1.0;
    println!("\nkappa  tail(beta = 2)  bound");
    for kappa in 1..=5 {
        let bound = c2 * 3f64.powf(-f64::from(kappa) * decay);
        let tail = resolvent_tail_integral(&params, kappa, beta, DEFAULT_TOL)?;
        println!("{kappa:>5}  {tail:<14.6e}  {bound:.6e}");
    }

    // at beta_hat * beta = 1 the tail diverges
    let critical = FieldParams::new(3, 1, 0.5, 1.0, 1.0)?;
    println!(
        "\ncritical exponent: {}",
        resolvent_tail_integral(&critical, 1, 1.0, DEFAULT_TOL).unwrap_err()
    );
    Ok(())
}
