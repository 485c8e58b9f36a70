//! 2-, 3- and 4-point functions of the hedgehog, with cyclic invariance,
//! coalescence and the Gram matrix of 2-point values.

use monopole_boundary::field::{abelian_field, hedgehog_field};
use monopole_boundary::geom::{fibonacci_points, BoundaryPoint};
use monopole_boundary::linalg::{cr, hermitian_eigen};
use monopole_boundary::npoint::{gram_matrix, n_point, write_npoint_csv, PointTuple};
use monopole_boundary::scatter::ScatterOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = hedgehog_field(1.0)?;
    let opts = ScatterOptions::default();
    let bp = BoundaryPoint::new;
    let tuples = [
        PointTuple::new(vec![bp(0.0, 0.0), bp(1.0, 0.0)])?,
        PointTuple::new(vec![bp(0.0, 0.0), bp(1.0, 0.0), bp(0.0, 1.0)])?,
        PointTuple::new(vec![bp(0.5, 0.5), bp(-1.0, 0.2), BoundaryPoint::Infinity, bp(0.1, -2.0)])?,
        PointTuple::new(vec![bp(0.2, 0.2), bp(0.2, 0.2), bp(1.0, -1.0)])?,
    ];
    let mut rows = Vec::new();
    for t in &tuples {
        let v = n_point(&f, t, &opts)?;
        let rot = n_point(&f, &t.rotated(1), &opts)?;
        println!(
            "n = {} (reduced to {}): {:.10}  err {:.1e}  |rotated - value| {:.1e}",
            t.len(),
            v.reduced_len,
            v.value,
            v.err,
            (rot.value - v.value).norm()
        );
        rows.push((t.clone(), v));
    }
    let trivial = n_point(&abelian_field(1.0)?, &tuples[2], &opts)?;
    println!("abelian 4-point: {:.12}", trivial.value);

    let pts = fibonacci_points(8);
    let g = gram_matrix(&f, &pts, &opts)?;
    let (eig, _) = hermitian_eigen(&g.map(cr));
    println!("gram eigenvalues: {:?}", eig.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>());

    write_npoint_csv(std::io::stdout().lock(), 4, &rows)?;
    Ok(())
}

