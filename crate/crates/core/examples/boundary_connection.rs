//! Connection and curvature read off the 2-point function, compared with
//! the Fubini-Study curvature of the identity sphere.

use monopole_boundary::boundary::{connection_map, curvature_fd, lambda_fd, write_connection_csv, ComplexGrid, FD_STEP, FD_STEP_2};
use monopole_boundary::field::hedgehog_field;
use monopole_boundary::geom::BoundaryPoint;
use monopole_boundary::rep::{fs_curvature, HoloSphere};
use monopole_boundary::scatter::ScatterOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = hedgehog_field(1.0)?;
    let opts = ScatterOptions::default();
    let q = HoloSphere::identity();
    let w = BoundaryPoint::new(2.0, 0.5);
    println!("lambda(0, 1) = {:.8}", lambda_fd(&f, BoundaryPoint::new(0.0, 0.0), BoundaryPoint::new(1.0, 0.0), FD_STEP, &opts)?);
    for (x, y) in [(0.0, 0.0), (0.5, 0.0), (-0.3, 0.7), (1.0, 1.0)] {
        let z = BoundaryPoint::new(x, y);
        let scat = curvature_fd(&f, z, w, FD_STEP_2, &opts)?;
        let fs = fs_curvature(&q, z, FD_STEP_2)?;
        println!("z = {x:+.1}{y:+.1}i: F = {scat:.8}, -FS = {:.8}", -fs);
    }
    let rows = connection_map(&f, w, &ComplexGrid::square(1.0, 8), &opts);
    write_connection_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
