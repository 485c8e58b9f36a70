//! Small dense complex linear algebra shared by the field, scattering and
//! representation code.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Vec2 = Vector2<C64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Pauli matrices.
pub fn pauli() -> [Mat2; 3] {
    let z = cr(0.0);
    let o = cr(1.0);
    [
        Mat2::new(z, o, o, z),
        Mat2::new(z, -I, I, z),
        Mat2::new(o, z, z, -o),
    ]
}

/// Anti-Hermitian generators `t_a = -(i/2) sigma_a`, with `[t_a, t_b] = eps_abc t_c`.
pub fn su2_basis() -> [Mat2; 3] {
    let s = pauli();
    let h = c(0.0, -0.5);
    [s[0] * h, s[1] * h, s[2] * h]
}

#[inline]
pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

/// Levi-Civita symbol on `{0, 1, 2}`.
#[inline]
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Operator (spectral) norm of a 2x2 complex matrix.
pub fn op_norm2(m: &Mat2) -> f64 {
    // largest singular value from the eigenvalues of m^dagger m
    let h = m.adjoint() * m;
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)].norm();
    let mean = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean + disc).max(0.0).sqrt()
}

/// Eigen-decomposition of a 2x2 Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen2(h: &Mat2) -> ([f64; 2], [Vec2; 2]) {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let disc = (half * half + b.norm_sqr()).sqrt();
    let lo = mean - disc;
    let hi = mean + disc;
    let vec_for = |lambda: f64| -> Vec2 {
        // rows of (h - lambda): pick the better-conditioned null vector
        let r1 = Vec2::new(b, cr(lambda - a));
        let r2 = Vec2::new(cr(lambda - d), b.conj());
        let v = if r1.norm() >= r2.norm() { r1 } else { r2 };
        if v.norm() < 1e-300 {
            // h is a multiple of the identity
            if lambda == lo {
                Vec2::new(cr(1.0), cr(0.0))
            } else {
                Vec2::new(cr(0.0), cr(1.0))
            }
        } else {
            v / cr(v.norm())
        }
    };
    let v_lo = vec_for(lo);
    let mut v_hi = vec_for(hi);
    if disc < 1e-300 {
        v_hi = Vec2::new(-v_lo[1].conj(), v_lo[0].conj());
    }
    ([lo, hi], [v_lo, v_hi])
}

/// Multiply by a phase so that the first component with modulus above
/// `tol * norm` is real and positive.
pub fn fix_phase(v: &CVec, tol: f64) -> CVec {
    let scale = v.norm();
    if scale == 0.0 {
        return v.clone();
    }
    match v.iter().find(|x| x.norm() > tol * scale) {
        Some(first) => v * (first.conj() / first.norm()),
        None => v.clone(),
    }
}

/// Two-component version of [`fix_phase`]; components below `1e-6` of the
/// norm count as zero.
pub fn fix_phase2(v: &Vec2) -> Vec2 {
    let k = if v[0].norm() > 1e-6 * v.norm() { 0 } else { 1 };
    let p = v[k];
    if p.norm() == 0.0 {
        return *v;
    }
    v * (p.conj() / p.norm())
}

/// `(a, b) = sum conj(a_i) b_i`.
#[inline]
pub fn hdot(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    (m - m.adjoint()).norm() <= tol * m.norm().max(1.0)
}

/// Determinant of a small complex matrix by LU.
pub fn det(m: &CMat) -> C64 {
    if m.nrows() == 0 {
        return cr(1.0);
    }
    m.clone().lu().determinant()
}

/// Classical adjugate via cofactors; exact in the sense that no inverse is
/// formed, so it stays finite at singular matrices.
pub fn adjugate(m: &CMat) -> CMat {
    let n = m.nrows();
    if n == 1 {
        return CMat::from_element(1, 1, cr(1.0));
    }
    let mut adj = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = m.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // adj = transpose of the cofactor matrix
            adj[(j, i)] = det(&minor) * sign;
        }
    }
    adj
}

/// Hermitian eigen-decomposition (ascending eigenvalues, orthonormal columns).
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * cr(0.5);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Roots of `sum_b coeffs[b] z^b` via the companion matrix. Leading zero
/// coefficients (relative to `tol`) are dropped first.
pub fn poly_roots(coeffs: &[C64], tol: f64) -> Vec<C64> {
    let scale = coeffs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= tol * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut comp = CMat::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = cr(1.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let (_, t) = comp.schur().unpack();
    (0..deg).map(|i| t[(i, i)]).collect()
}

pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(cr(0.0), |acc, &a| acc * z + a)
}

/// Row-major real/imaginary serialization of a complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMat> for MatJson {
    fn from(m: &CMat) -> Self {
        let mut re = Vec::with_capacity(m.len());
        let mut im = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), re, im }
    }
}

impl MatJson {
    pub fn to_matrix(&self) -> Option<CMat> {
        if self.re.len() != self.rows * self.cols || self.im.len() != self.re.len() {
            return None;
        }
        Some(CMat::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            c(self.re[k], self.im[k])
        }))
    }
}

/// Real/imaginary serialization of a complex vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VecJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CVec> for VecJson {
    fn from(v: &CVec) -> Self {
        Self { re: v.iter().map(|x| x.re).collect(), im: v.iter().map(|x| x.im).collect() }
    }
}

impl VecJson {
    pub fn to_vector(&self) -> Option<CVec> {
        if self.re.len() != self.im.len() {
            return None;
        }
        Some(CVec::from_iterator(self.re.len(), self.re.iter().zip(&self.im).map(|(&a, &b)| c(a, b))))
    }
}

/// Random Haar-like unitary from the QR factorization of a complex Gaussian
/// matrix (with the phases of the diagonal of R absorbed).
pub fn random_unitary<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    use rand_distr::{Distribution, StandardNormal};
    let m = CMat::from_fn(n, n, |_, _| {
        c(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let qr = m.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Complex Gaussian matrix with entries of variance `scale^2`.
pub fn random_gaussian<R: rand::Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> CMat {
    use rand_distr::{Distribution, StandardNormal};
    let s = scale / std::f64::consts::SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        c(s * a, s * b)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let m = CMat::from_fn(2, 3, |i, j| c(i as f64, j as f64 - 0.5));
        assert_eq!(MatJson::from(&m).to_matrix().unwrap(), m);
        let v = CVec::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.25)]);
        assert_eq!(VecJson::from(&v).to_vector().unwrap(), v);
    }

    #[test]
    fn random_unitary_is_unitary() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(4, &mut rng);
        assert!((u.adjoint() * &u - CMat::identity(4, 4)).norm() < 1e-13);
    }

    #[test]
    fn su2_basis_brackets() {
        let t = su2_basis();
        for a in 0..3 {
            for b in 0..3 {
                let lhs = commutator(&t[a], &t[b]);
                let mut rhs = Mat2::zeros();
                for (cc, tc) in t.iter().enumerate() {
                    rhs += tc * cr(levi_civita(a, b, cc));
                }
                assert!((lhs - rhs).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn eigen2_matches_definition() {
        let h = Mat2::new(cr(0.3), c(0.2, -0.7), c(0.2, 0.7), cr(-1.1));
        let (vals, vecs) = hermitian_eigen2(&h);
        for k in 0..2 {
            let r = h * vecs[k] - vecs[k] * cr(vals[k]);
            assert!(r.norm() < 1e-14);
        }
        assert!(vals[0] < vals[1]);
        assert!(vecs[0].dotc(&vecs[1]).norm() < 1e-14);
    }

    #[test]
    fn adjugate_times_matrix_is_det() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[c(1.0, 0.5), c(0.0, 2.0), cr(-1.0), cr(0.3), c(2.0, -1.0), c(0.1, 0.1), cr(4.0), cr(0.0), c(0.0, -1.0)],
        );
        let prod = &m * adjugate(&m);
        let d = det(&m);
        assert!((prod - CMat::identity(3, 3) * d).norm() < 1e-12);
    }

    #[test]
    fn companion_roots() {
        // (z - 1)(z - 2i) = z^2 - (1 + 2i) z + 2i
        let roots = poly_roots(&[c(0.0, 2.0), c(-1.0, -2.0), cr(1.0)], 1e-14);
        assert_eq!(roots.len(), 2);
        for r in roots {
            assert!((r - cr(1.0)).norm() < 1e-12 || (r - c(0.0, 2.0)).norm() < 1e-12);
        }
    }
}
