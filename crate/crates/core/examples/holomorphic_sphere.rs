//! Trace representation of a holomorphic sphere: degree, area, 4-point
//! reconstruction and the subalgebra generated by two projections.

use monopole_boundary::geom::{fibonacci_points, BoundaryPoint};
use monopole_boundary::npoint::PointTuple;
use monopole_boundary::rep::{degree, fs_degree_integral, subalgebra_structure, trace_npoint, FourPointTensor, HoloSphere};
use rand::SeedableRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for (name, q) in [("veronese", HoloSphere::veronese()), ("random", HoloSphere::random(2, &mut rng))] {
        let d = degree(&q);
        println!("{name}: degree {}, (1/pi) area {:.10}", d.degree, fs_degree_integral(&q, 400)?);
        let base = fibonacci_points(3);
        let t = FourPointTensor::new(&q, &base)?;
        let (w, z) = (BoundaryPoint::new(0.3, 0.9), BoundaryPoint::new(-1.2, 0.1));
        let direct = trace_npoint(&q, &PointTuple::new(vec![w, z])?)?;
        println!(
            "  4-point tensor cond {:.2e}, rank {}: reconstructed {:.12} vs direct {:.12}",
            t.cond,
            t.rank,
            t.reconstruct(&q, w, z)?,
            direct
        );
        match subalgebra_structure(&q, BoundaryPoint::new(0.4, -0.3)) {
            Ok(s) => println!("  tr R1 R2 = {:.8}, closure residual {:.1e}", s.tau, s.closure_residual),
            Err(e) => println!("  subalgebra: {e}"),
        }
    }
    Ok(())
}
