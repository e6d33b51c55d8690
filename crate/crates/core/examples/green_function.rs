//! Radial profile of the Green function and its regularised versions.

use padic_qft::model::{green_function, green_regularized, vladimirov_omega, FieldParams, NormExp, DEFAULT_TOL};

fn main() -> padic_qft::Result<()> {
    for alpha in [1.0, 0.5] {
        let params = FieldParams::new(3, 1, alpha, 1.0, 1.0)?;
        println!("alpha = {alpha}, omega = {:.6}", vladimirov_omega(&params));
        println!("  norm       G(x)        G_kappa=5(x)");
        let points = [
            NormExp::Zero,
            NormExp::Exp(-2),
            NormExp::Exp(0),
            NormExp::Exp(2),
            NormExp::Exp(4),
        ];
        for x in points {
            let g = green_function(&params, x, DEFAULT_TOL)?;
            let shown = g.finite().map_or("inf".to_string(), |v| format!("{v:.6e}"));
            let reg = green_regularized(&params, 5, x, DEFAULT_TOL)?;
            let label = match x {
                NormExp::Zero => "0".to_string(),
                NormExp::Exp(d) => format!("3^{d}"),
            };
            println!("  {label:<9}  {shown:<10}  {reg:.6e}");
        }
    }
    Ok(())
}
