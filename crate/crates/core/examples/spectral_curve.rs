//! Locates the spectral curve of the hedgehog as the zero set of
//! `<P_{w^} P_z>`, fits a bidegree (1, 1) polynomial and recovers the
//! holomorphic sphere from it.

use monopole_boundary::boundary::{estimate_charge, fit_spectral_poly, spectral_scan, write_locus_csv, ComplexGrid};
use monopole_boundary::field::hedgehog_field;
use monopole_boundary::linalg::{c, C64};
use monopole_boundary::rep::{degree, q_from_spectral};
use monopole_boundary::scatter::ScatterOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = hedgehog_field(1.0)?;
    let opts = ScatterOptions::default();
    let w_grid = ComplexGrid::square(1.5, 4).points();
    let z_grid = ComplexGrid::square(2.0, 24);
    let locus = spectral_scan(&f, &w_grid, &z_grid, 1e-3, &opts)?;
    println!("{} locus points, max |z - w| = {:.2e}", locus.len(), locus.iter().map(|p| (p.z - p.w).norm()).fold(0.0, f64::max));

    let pairs: Vec<(C64, C64)> = locus.iter().map(|p| (p.w, p.z)).collect();
    let fit = fit_spectral_poly(&pairs, 1)?;
    println!("fit residual {:.2e}, coefficients\n{:.6}", fit.fit_residual, fit.coeffs);

    let q = q_from_spectral(&fit)?;
    println!("recovered sphere of degree {}:\n{:.6}", degree(&q).degree, q.coefficients());
    println!("charge estimate on w = 0.3-0.2i: {}", estimate_charge(&f, c(0.3, -0.2), &z_grid, 1e-3, &opts)?);
    write_locus_csv(std::io::stdout().lock(), &locus)?;
    Ok(())
}
