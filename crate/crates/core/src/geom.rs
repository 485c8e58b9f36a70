//! Ball model of hyperbolic three-space, its boundary sphere as the Riemann
//! sphere, and unit-speed geodesics joining boundary points.
//!
//! The chart is stereographic projection from the north pole,
//! `z = (x1 + i x2) / (1 - x3)`, so `(0, 0, -1) -> 0`, `(0, 0, 1) -> inf`, and
//! the antipodal map of the sphere reads `z -> -1 / conj(z)`.
//!
//! Geodesics are built through the hyperboloid model: with null vectors
//! `n1 = (1, p1)` and `n2 = (1, p2)` for the endpoint sphere points,
//! `X(t) = (e^{-t} n1 + e^{t} n2) / sqrt(2 (1 - p1.p2))` is the unit-speed
//! geodesic from `p1` to `p2`, and `t = 0` is its point nearest the origin.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("geodesic endpoints coincide (chordal distance {0:.3e})")]
    CoincidentEndpoints(f64),
    #[error("parameter t = {t} outside [-{t_max}, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },
    #[error("point {0:?} is not inside the open unit ball")]
    OutsideBall([f64; 3]),
    #[error("cannot parse boundary point from {0:?}")]
    Parse(String),
}

/// A point of the Riemann sphere: a finite complex number or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint {
    Finite(C64),
    Infinity,
}

impl BoundaryPoint {
    pub fn new(re: f64, im: f64) -> Self {
        BoundaryPoint::Finite(c(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, BoundaryPoint::Infinity)
    }

    pub fn finite(&self) -> Option<C64> {
        match self {
            BoundaryPoint::Finite(z) => Some(*z),
            BoundaryPoint::Infinity => None,
        }
    }

    /// Inverse chart: the unit vector on the sphere.
    pub fn to_sphere(&self) -> Vector3<f64> {
        match self {
            BoundaryPoint::Infinity => Vector3::new(0.0, 0.0, 1.0),
            BoundaryPoint::Finite(z) => {
                let n = z.norm_sqr();
                if !n.is_finite() {
                    return Vector3::new(0.0, 0.0, 1.0);
                }
                let d = 1.0 + n;
                Vector3::new(2.0 * z.re / d, 2.0 * z.im / d, (n - 1.0) / d)
            }
        }
    }

    /// Chart: stereographic coordinate of a unit vector.
    pub fn from_sphere(p: &Vector3<f64>) -> Self {
        let p = p.normalize();
        if p[2] <= 0.0 {
            BoundaryPoint::Finite(c(p[0], p[1]) / (1.0 - p[2]))
        } else {
            let w = c(p[0], -p[1]);
            if w.norm() == 0.0 {
                BoundaryPoint::Infinity
            } else {
                BoundaryPoint::Finite(c(1.0 + p[2], 0.0) / w)
            }
        }
    }

    /// Euclidean distance between the sphere points (chordal metric).
    pub fn chordal(&self, other: &BoundaryPoint) -> f64 {
        (self.to_sphere() - other.to_sphere()).norm()
    }

    /// Uniformly distributed point of the sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let p: [f64; 3] = UnitSphere.sample(rng);
        BoundaryPoint::from_sphere(&Vector3::from(p))
    }
}

impl From<C64> for BoundaryPoint {
    fn from(z: C64) -> Self {
        BoundaryPoint::Finite(z)
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Infinity => write!(f, "inf"),
            BoundaryPoint::Finite(z) => {
                let sign = if z.im.is_sign_negative() { '-' } else { '+' };
                write!(f, "{:.16e}{}{:.16e}i", z.re, sign, z.im.abs())
            }
        }
    }
}

impl FromStr for BoundaryPoint {
    type Err = GeomError;

    /// Accepts `inf`, `a`, `bi`, `a+bi`, `a-bi` (also with `j`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || GeomError::Parse(s.to_string());
        let t: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
        let lower = t.to_ascii_lowercase();
        if lower == "inf" || lower == "infinity" || lower == "∞" {
            return Ok(BoundaryPoint::Infinity);
        }
        if lower.is_empty() {
            return Err(err());
        }
        let Some(body) = lower.strip_suffix('i').or_else(|| lower.strip_suffix('j')) else {
            return lower.parse::<f64>().map(|re| BoundaryPoint::new(re, 0.0)).map_err(|_| err());
        };
        // split at the last sign that is not an exponent sign or the leading sign
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            if (bytes[idx] == b'+' || bytes[idx] == b'-') && bytes[idx - 1] != b'e' {
                split = Some(idx);
                break;
            }
        }
        let parse_im = |txt: &str| -> Result<f64, GeomError> {
            match txt {
                "" | "+" => Ok(1.0),
                "-" => Ok(-1.0),
                other => other.parse::<f64>().map_err(|_| err()),
            }
        };
        match split {
            Some(idx) => {
                let re = body[..idx].parse::<f64>().map_err(|_| err())?;
                let im = parse_im(&body[idx..])?;
                Ok(BoundaryPoint::new(re, im))
            }
            None => Ok(BoundaryPoint::new(0.0, parse_im(body)?)),
        }
    }
}

/// Antipodal map `z -> -1 / conj(z)`, with `0 <-> inf`.
pub fn antipode(z: BoundaryPoint) -> BoundaryPoint {
    match z {
        BoundaryPoint::Infinity => BoundaryPoint::Finite(c(0.0, 0.0)),
        BoundaryPoint::Finite(w) if w.norm() == 0.0 => BoundaryPoint::Infinity,
        BoundaryPoint::Finite(w) => BoundaryPoint::Finite(-1.0 / w.conj()),
    }
}

/// `n` nearly evenly spread boundary points (Fibonacci lattice on the
/// sphere), a deterministic choice of well-separated base points.
pub fn fibonacci_points(n: usize) -> Vec<BoundaryPoint> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            BoundaryPoint::from_sphere(&Vector3::new(r * phi.cos(), r * phi.sin(), z))
        })
        .collect()
}

/// A point of the open unit ball, carrying `1 - |x|^2` separately so that
/// points far out towards the boundary keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkPoint {
    x: Vector3<f64>,
    gap: f64,
}

impl BulkPoint {
    pub fn new(x: Vector3<f64>) -> Result<Self, GeomError> {
        let gap = 1.0 - x.norm_squared();
        if gap > 0.0 && x.iter().all(|v| v.is_finite()) {
            Ok(Self { x, gap })
        } else {
            Err(GeomError::OutsideBall([x[0], x[1], x[2]]))
        }
    }

    /// Uniformly distributed point of the Euclidean ball of radius `r_max < 1`.
    pub fn random<R: Rng + ?Sized>(r_max: f64, rng: &mut R) -> Self {
        let dir: [f64; 3] = UnitSphere.sample(rng);
        let r = r_max * rng.random::<f64>().cbrt();
        let x = Vector3::from(dir) * r;
        BulkPoint { x, gap: 1.0 - r * r }
    }

    pub fn origin() -> Self {
        Self { x: Vector3::zeros(), gap: 1.0 }
    }

    /// Point of the ball from a point `(X0, X)` of the upper hyperboloid.
    pub fn from_hyperboloid(h: &Vector4<f64>) -> Self {
        let denom = 1.0 + h[0];
        Self { x: Vector3::new(h[1], h[2], h[3]) / denom, gap: 2.0 / denom }
    }

    pub fn to_hyperboloid(&self) -> Vector4<f64> {
        let x0 = 2.0 / self.gap - 1.0;
        let s = 2.0 / self.gap;
        Vector4::new(x0, s * self.x[0], s * self.x[1], s * self.x[2])
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.x
    }

    /// `1 - |x|^2`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Conformal factor of the metric `4 |dx|^2 / (1 - |x|^2)^2`.
    pub fn lambda(&self) -> f64 {
        2.0 / self.gap
    }

    /// Hyperbolic distance to the origin.
    pub fn rho(&self) -> f64 {
        let r = self.x.norm();
        ((1.0 + r) * (1.0 + r) / self.gap).ln()
    }
}

/// Oriented geodesic between distinct boundary points, truncated to
/// `[-t_max, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geodesic {
    pub start: BoundaryPoint,
    pub end: BoundaryPoint,
    p1: Vector3<f64>,
    p2: Vector3<f64>,
    scale: f64,
    offset: f64,
    pub t_max: f64,
}

pub fn make_geodesic(start: BoundaryPoint, end: BoundaryPoint, t_max: f64) -> Result<Geodesic, GeomError> {
    let p1 = start.to_sphere();
    let p2 = end.to_sphere();
    let chord = (p1 - p2).norm();
    if chord < 1e-9 {
        return Err(GeomError::CoincidentEndpoints(chord));
    }
    // 2 (1 - p1.p2) = |p1 - p2|^2 for unit vectors
    Ok(Geodesic { start, end, p1, p2, scale: 1.0 / chord, offset: 0.0, t_max })
}

impl Geodesic {
    pub fn with_t_max(&self, t_max: f64) -> Geodesic {
        Geodesic { t_max, ..self.clone() }
    }

    pub fn reversed(&self) -> Geodesic {
        Geodesic { start: self.end, end: self.start, p1: self.p2, p2: self.p1, offset: -self.offset, ..self.clone() }
    }

    /// The same oriented geodesic with its parameter origin moved by `shift`,
    /// i.e. `t = 0` now sits where the original parameter was `shift`.
    pub fn shifted(&self, shift: f64) -> Geodesic {
        Geodesic { offset: self.offset + shift, ..self.clone() }
    }

    pub fn start_sphere(&self) -> Vector3<f64> {
        self.p1
    }

    pub fn end_sphere(&self) -> Vector3<f64> {
        self.p2
    }

    /// Point and velocity without the range check.
    pub fn eval(&self, t: f64) -> (BulkPoint, Vector3<f64>) {
        let t = t + self.offset;
        let a = self.scale * (-t).exp();
        let b = self.scale * t.exp();
        let x0 = a + b;
        let xs = self.p1 * a + self.p2 * b;
        let dx0 = b - a;
        let dxs = self.p2 * b - self.p1 * a;
        let denom = 1.0 + x0;
        let point = BulkPoint { x: xs / denom, gap: 2.0 / denom };
        let tangent = dxs / denom - xs * (dx0 / (denom * denom));
        (point, tangent)
    }

    /// Point on the geodesic at arclength `t` and its unit tangent (unit in
    /// the hyperbolic metric).
    pub fn point(&self, t: f64) -> Result<(BulkPoint, Vector3<f64>), GeomError> {
        if !(t.abs() <= self.t_max * (1.0 + 1e-12)) {
            return Err(GeomError::OutOfRange { t, t_max: self.t_max });
        }
        Ok(self.eval(t))
    }
}

pub fn geodesic_point(g: &Geodesic, t: f64) -> Result<(BulkPoint, Vector3<f64>), GeomError> {
    g.point(t)
}

/// Hyperbolic speed `lambda(x) |dx/dt|` of a velocity at a point.
pub fn hyperbolic_norm(x: &BulkPoint, v: &Vector3<f64>) -> f64 {
    x.lambda() * v.norm()
}

/// Orientation-preserving isometry of the ball, stored as a Lorentz matrix
/// acting on the hyperboloid model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallIsometry {
    lorentz: Matrix4<f64>,
}

impl BallIsometry {
    pub fn identity() -> Self {
        Self { lorentz: Matrix4::identity() }
    }

    /// Rotation of the ball.
    pub fn rotation(r: Matrix3<f64>) -> Self {
        let mut l = Matrix4::identity();
        l.fixed_view_mut::<3, 3>(1, 1).copy_from(&r);
        Self { lorentz: l }
    }

    /// Hyperbolic translation by distance `alpha` along the `x3` axis; it
    /// moves the origin towards the north pole (`z = inf`).
    pub fn boost_x3(alpha: f64) -> Self {
        let (ch, sh) = (alpha.cosh(), alpha.sinh());
        let mut l = Matrix4::identity();
        l[(0, 0)] = ch;
        l[(0, 3)] = sh;
        l[(3, 0)] = sh;
        l[(3, 3)] = ch;
        Self { lorentz: l }
    }

    pub fn compose(&self, other: &BallIsometry) -> Self {
        Self { lorentz: self.lorentz * other.lorentz }
    }

    pub fn inverse(&self) -> Self {
        // Lorentz inverse: eta L^T eta
        let eta = Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0));
        Self { lorentz: eta * self.lorentz.transpose() * eta }
    }

    pub fn apply(&self, x: &BulkPoint) -> BulkPoint {
        BulkPoint::from_hyperboloid(&(self.lorentz * x.to_hyperboloid()))
    }

    /// Jacobian `d(apply(x))_j / dx_i` as the matrix with rows j, columns i.
    pub fn jacobian(&self, x: &BulkPoint) -> Matrix3<f64> {
        let g = x.gap;
        let xv = x.x;
        // derivatives of the hyperboloid lift, columns indexed by i
        let mut dh = nalgebra::Matrix4x3::<f64>::zeros();
        for i in 0..3 {
            dh[(0, i)] = 4.0 * xv[i] / (g * g);
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                dh[(j + 1, i)] = 2.0 * delta / g + 4.0 * xv[j] * xv[i] / (g * g);
            }
        }
        let h = self.lorentz * x.to_hyperboloid();
        let dy = self.lorentz * dh;
        let denom = 1.0 + h[0];
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            for i in 0..3 {
                jac[(j, i)] = dy[(j + 1, i)] / denom - h[j + 1] * dy[(0, i)] / (denom * denom);
            }
        }
        jac
    }

    /// Induced conformal map of the boundary sphere.
    pub fn apply_boundary(&self, z: BoundaryPoint) -> BoundaryPoint {
        let p = z.to_sphere();
        let n = self.lorentz * Vector4::new(1.0, p[0], p[1], p[2]);
        BoundaryPoint::from_sphere(&Vector3::new(n[1], n[2], n[3]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assume, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fibonacci_points_are_separated() {
        for n in [2usize, 3, 5, 12] {
            let pts = fibonacci_points(n);
            assert_eq!(pts.len(), n);
            let min = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| pts[i].chordal(&pts[j])).fold(f64::MAX, f64::min);
            assert!(min > 1.0 / (n as f64).sqrt(), "n = {n}: {min}");
        }
    }

    fn close(a: BoundaryPoint, b: BoundaryPoint, tol: f64) -> bool {
        a.chordal(&b) < tol
    }

    #[test]
    fn antipode_examples() {
        assert_eq!(antipode(BoundaryPoint::new(0.0, 0.0)), BoundaryPoint::Infinity);
        let z = antipode(BoundaryPoint::new(0.0, 1.0)).finite().unwrap();
        assert!((z - c(0.0, -1.0)).norm() < 1e-15);
        let z = antipode(BoundaryPoint::new(1.0, 1.0)).finite().unwrap();
        assert!((z - c(-0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn antipode_is_sphere_antipode() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let z = BoundaryPoint::random(&mut rng);
            let a = antipode(z).to_sphere();
            assert!((a + z.to_sphere()).norm() < 1e-12);
        }
    }

    #[test]
    fn chart_round_trip() {
        for z in [c(0.3, -2.0), c(0.0, 0.0), c(1e3, 5.0), c(-0.7, 0.1)] {
            let back = BoundaryPoint::from_sphere(&BoundaryPoint::Finite(z).to_sphere()).finite().unwrap();
            assert!((back - z).norm() < 1e-12 * (1.0 + z.norm_sqr()));
        }
        assert_eq!(BoundaryPoint::from_sphere(&Vector3::new(0.0, 0.0, 1.0)), BoundaryPoint::Infinity);
        assert_eq!(BoundaryPoint::new(0.0, 0.0).to_sphere(), Vector3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn parse_points() {
        let cases = [
            ("inf", BoundaryPoint::Infinity),
            ("1", BoundaryPoint::new(1.0, 0.0)),
            ("2i", BoundaryPoint::new(0.0, 2.0)),
            ("-i", BoundaryPoint::new(0.0, -1.0)),
            ("1+i", BoundaryPoint::new(1.0, 1.0)),
            ("-1+0.3i", BoundaryPoint::new(-1.0, 0.3)),
            ("1e-3-2.5e+1i", BoundaryPoint::new(1e-3, -25.0)),
        ];
        for (txt, want) in cases {
            assert_eq!(txt.parse::<BoundaryPoint>().unwrap(), want, "{txt}");
        }
        assert!("abc".parse::<BoundaryPoint>().is_err());
        let z = BoundaryPoint::new(0.1, -3.0);
        assert_eq!(z.to_string().parse::<BoundaryPoint>().unwrap(), z);
    }

    #[test]
    fn diameter_geodesic() {
        let g = make_geodesic(BoundaryPoint::new(0.0, 0.0), BoundaryPoint::Infinity, 10.0).unwrap();
        let (x, _) = g.point(0.0).unwrap();
        assert!(x.coords().norm() < 1e-15);
        for t in [-3.0, -0.5, 0.7, 2.0, 9.0] {
            let (x, v) = g.point(t).unwrap();
            let want = Vector3::new(0.0, 0.0, (t / 2.0f64).tanh());
            assert!((x.coords() - want).norm() < 1e-14);
            assert!((hyperbolic_norm(&x, &v) - 1.0).abs() < 1e-12);
        }
        assert!(matches!(g.point(10.5), Err(GeomError::OutOfRange { .. })));
    }

    #[test]
    fn reversal_flips_the_parameter() {
        let a = BoundaryPoint::new(0.3, -1.2);
        let b = BoundaryPoint::new(2.0, 0.5);
        let g = make_geodesic(a, b, 10.0).unwrap();
        let r = make_geodesic(b, a, 10.0).unwrap();
        for t in [-7.0, -1.0, 0.0, 0.4, 5.5] {
            let (x, v) = g.point(t).unwrap();
            let (y, w) = r.point(-t).unwrap();
            assert!((x.coords() - y.coords()).norm() < 1e-12);
            assert!((v + w).norm() < 1e-12);
        }
        let (x, _) = g.shifted(0.7).point(1.0).unwrap();
        let (y, _) = g.point(1.7).unwrap();
        assert!((x.coords() - y.coords()).norm() < 1e-15);
    }

    #[test]
    fn coincident_endpoints_rejected() {
        let z = BoundaryPoint::new(0.0, 0.0);
        assert!(matches!(make_geodesic(z, z, 10.0), Err(GeomError::CoincidentEndpoints(_))));
    }

    #[test]
    fn antipodal_pair_passes_through_origin() {
        let g = make_geodesic(BoundaryPoint::new(1.0, 0.0), BoundaryPoint::new(-1.0, 0.0), 10.0).unwrap();
        let (x, _) = g.point(0.0).unwrap();
        assert!(x.coords().norm() < 1e-15);
    }

    #[test]
    fn endpoints_approached_exponentially() {
        let a = BoundaryPoint::new(0.3, 0.4);
        let b = BoundaryPoint::new(-2.0, 1.0);
        let g = make_geodesic(a, b, 30.0).unwrap();
        let mut prev = f64::INFINITY;
        for t in [4.0, 8.0, 12.0, 16.0] {
            let (x, _) = g.point(t).unwrap();
            let d = (x.coords() - b.to_sphere()).norm();
            assert!(d < prev);
            assert!(d < 2.0 * (-t).exp() * 4.0);
            prev = d;
        }
    }

    #[test]
    fn isometry_jacobian_matches_finite_differences() {
        let iso = BallIsometry::boost_x3(0.4).compose(&BallIsometry::rotation(
            nalgebra::Rotation3::from_euler_angles(0.2, -0.5, 1.1).into_inner(),
        ));
        let x = BulkPoint::new(Vector3::new(0.2, -0.3, 0.5)).unwrap();
        let jac = iso.jacobian(&x);
        let h = 1e-6;
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = h;
            let yp = iso.apply(&BulkPoint::new(x.coords() + e).unwrap());
            let ym = iso.apply(&BulkPoint::new(x.coords() - e).unwrap());
            let col = (yp.coords() - ym.coords()) / (2.0 * h);
            assert!((col - jac.column(i)).norm() < 1e-8);
        }
        let back = iso.inverse().apply(&iso.apply(&x));
        assert!((back.coords() - x.coords()).norm() < 1e-14);
    }

    #[test]
    fn boost_moves_boundary_points() {
        let iso = BallIsometry::boost_x3(0.5);
        assert!(close(iso.apply_boundary(BoundaryPoint::Infinity), BoundaryPoint::Infinity, 1e-14));
        // z -> e^{alpha} z on the boundary for this boost
        let z = iso.apply_boundary(BoundaryPoint::new(1.0, 0.0)).finite().unwrap();
        assert!((z - c(0.5f64.exp(), 0.0)).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn sphere_chart_round_trip(seed in any::<u64>()) {
            let z = BoundaryPoint::random(&mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(BoundaryPoint::from_sphere(&z.to_sphere()).chordal(&z) < 1e-14);
            let parsed: BoundaryPoint = z.to_string().parse().unwrap();
            prop_assert!(parsed.chordal(&z) < 1e-15);
        }

        #[test]
        fn geodesics_have_unit_speed(seed in any::<u64>(), t in -6.0f64..6.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (BoundaryPoint::random(&mut rng), BoundaryPoint::random(&mut rng));
            prop_assume!(a.chordal(&b) > 1e-3);
            let g = make_geodesic(a, b, 10.0).unwrap();
            let (x, v) = g.eval(t);
            prop_assert!((hyperbolic_norm(&x, &v) - 1.0).abs() < 1e-10);
            prop_assert!((g.eval(20.0).0.coords() - b.to_sphere()).norm() < 1e-7);
            prop_assert!((g.eval(-20.0).0.coords() - a.to_sphere()).norm() < 1e-7);
        }

        #[test]
        fn isometries_preserve_speed(seed in any::<u64>(), alpha in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let axis: [f64; 3] = UnitSphere.sample(&mut rng);
            let rot = nalgebra::Rotation3::from_scaled_axis(Vector3::from(axis) * rng.random_range(0.0..3.0));
            let iso = BallIsometry::boost_x3(alpha).compose(&BallIsometry::rotation(*rot.matrix()));
            let x = BulkPoint::random(0.9, &mut rng);
            let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let before = hyperbolic_norm(&x, &v);
            let after = hyperbolic_norm(&iso.apply(&x), &(iso.jacobian(&x) * v));
            prop_assert!((after - before).abs() < 1e-9 * before.max(1.0));
            let back = iso.inverse().apply(&iso.apply(&x));
            prop_assert!((back.coords() - x.coords()).norm() < 1e-12);
        }
    }
}
