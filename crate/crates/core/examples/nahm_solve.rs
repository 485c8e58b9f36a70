//! Solves the discrete Nahm equations, fixes a canonical gauge and checks
//! the spectral determinant against the pairing of the monad map.

use monopole_boundary::geom::{antipode, BoundaryPoint};
use monopole_boundary::linalg::c;
use monopole_boundary::nahm::{
    beta_map, canonical_gauge, gauge_act, nahm_residual, solve_nahm, spectral_coeffs, spectral_det, GaugeTuple, HalfInt,
    NahmError,
};
use rand::SeedableRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m: HalfInt = "3/2".parse()?;
    let sol = solve_nahm(2, m, 0)?;
    println!("k = 2, m = {m}: residual {:.2e} after restart {}", sol.residual, sol.restart);
    let canon = canonical_gauge(&sol.data)?;
    println!("canonical v = {:.6}", canon.v.transpose());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let moved = gauge_act(&sol.data, &GaugeTuple::random(2, m, &mut rng))?;
    println!("residual after a random gauge transformation {:.2e}", nahm_residual(&moved)?);

    let md = canon.monad();
    println!("spectral polynomial coefficients\n{:.6}", spectral_coeffs(&md));
    let (w, z) = (c(0.4, -0.7), c(-1.1, 0.2));
    let pairing = beta_map(&md, antipode(BoundaryPoint::Finite(w))).dotc(&beta_map(&md, BoundaryPoint::Finite(z)));
    println!("det = {:.10}, pairing = {:.10}", spectral_det(&md, w, z), pairing);

    match solve_nahm(1, HalfInt::new(1)?, 0) {
        Err(NahmError::NonConvergence { best, degenerate, .. }) => {
            println!("m = 1/2: no solution (degenerate = {degenerate}, best residual {best:.3})")
        }
        other => println!("m = 1/2: unexpected {other:?}"),
    }
    println!("{}", serde_json::to_string_pretty(&canon.to_json())?);
    Ok(())
}
