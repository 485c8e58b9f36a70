//! Decaying solutions of the scattering equation along one geodesic and
//! their pairing.

use monopole_boundary::field::hedgehog_field;
use monopole_boundary::geom::{make_geodesic, BoundaryPoint};
use monopole_boundary::scatter::{solve_pairing, ScatterOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = hedgehog_field(1.0)?;
    let opts = ScatterOptions::default();
    let g = make_geodesic(BoundaryPoint::new(0.3, -0.2), BoundaryPoint::new(-1.0, 0.8), opts.truncation(1.0))?;
    let p = solve_pairing(&f, &g, &opts)?;
    println!("truncation T = {:.4}", g.t_max);
    println!("(r, s) = {:.12}", p.value);
    println!("|(r, s)|^2 = {:.12}", p.value.norm_sqr());
    println!("constancy deviation {:.2e}, drift {:.2e}", p.constancy_dev, p.drift);
    println!("r: {} RHS evaluations, normalization residual {:.2e}", p.r.evals(), p.r.norm_residual);
    p.s.write_csv(std::io::stdout().lock(), 9)?;
    Ok(())
}
