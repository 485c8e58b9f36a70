//! Radial profile of the charge-one hyperbolic monopole and its Bogomolny
//! residual at a few bulk points.

use monopole_boundary::field::{bogomolny_residual, hedgehog_field, MonopoleField};
use monopole_boundary::geom::BulkPoint;
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = hedgehog_field(1.0)?;
    let p = f.profile();
    println!("mass {}  h'(0) = {:.12}", p.mass(), p.slope());
    for rho in [0.1, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let (h, k) = p.eval(rho);
        println!("rho {rho:>4}: h = {h:.10}  K = {k:.10}");
    }
    for r in [0.2, 0.6, 0.9] {
        let x = BulkPoint::new(Vector3::new(r / 3f64.sqrt(), r / 3f64.sqrt(), r / 3f64.sqrt()))?;
        println!("|x| = {r}: |Phi| = {:.10}, residual = {:.2e}", f.eval(&x).phi_norm(), bogomolny_residual(&f, &x, 1e-3)?);
    }
    p.write_csv(std::io::stdout().lock(), 6.0, 7)?;
    Ok(())
}
