//! Holomorphic spheres `q: S^2 -> CP^k` and the projection representation
//! `z -> R_z = |q(z)><q(z)|` of the boundary algebra.
//!
//! A sphere is stored through the coefficient matrix `U` of an unnormalized
//! polynomial representative, `q~(z)_i = sum_b U_ib z^b`. All n-point values
//! of the representation are traces of products of the rank-one projections
//! `R_z`, so they reduce to cyclic products of normalized inner products.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::SpectralCurveFit;
use crate::geom::{antipode, BoundaryPoint};
use crate::linalg::{c, cr, hermitian_eigen, poly_eval, poly_roots, CMat, CVec, MatJson, C64};
use crate::nahm::{beta_map_coeffs, MonadData};
use crate::npoint::PointTuple;

/// Relative size below which polynomial coefficients count as zero.
const COEFF_TOL: f64 = 1e-12;
/// Eigenvalues of the factorized Gram matrix above this count toward the rank.
pub const RANK_TOL: f64 = 1e-8;
/// Largest admissible condition number of the 4-point tensor.
pub const MAX_COND: f64 = 1e8;
/// Relative singular value cutoff of the truncated pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepError {
    #[error("coefficient matrix must have at least two columns and one nonzero entry")]
    Empty,
    #[error("q vanishes at {0}: base point")]
    BasePoint(String),
    #[error("map has degree {degree} after removing common factors, expected {expected}")]
    DegenerateMap { degree: usize, expected: usize },
    #[error("spectral coefficients do not come from a Hermitian form (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("Hermitian form is not positive semidefinite (smallest eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },
    #[error("basepoints are degenerate for the 4-point tensor (condition number {cond:.3e})")]
    DegenerateBasepoints { cond: f64 },
    #[error("the two roots of <q(w)|q(z)> = 0 coincide (separation {separation:.3e})")]
    DegenerateRoots { separation: f64 },
    #[error("operation requires k = {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
}

/// Holomorphic sphere with polynomial coefficient matrix `u` (rows:
/// components, columns: powers of `z`).
#[derive(Debug, Clone, PartialEq)]
pub struct HoloSphere {
    u: CMat,
}

/// Rank-one orthogonal projection onto a line of `C^{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub r: CMat,
}

impl Projection {
    /// Largest of `|R^2 - R|`, `|R - R^*|` and `|tr R - 1|`.
    pub fn defect(&self) -> f64 {
        let idem = (&self.r * &self.r - &self.r).norm();
        let herm = (&self.r - self.r.adjoint()).norm();
        let tr = (self.r.trace() - cr(1.0)).norm();
        idem.max(herm).max(tr)
    }
}

impl HoloSphere {
    pub fn new(u: CMat) -> Result<Self, RepError> {
        if u.ncols() < 2 || u.nrows() == 0 || u.norm() == 0.0 {
            return Err(RepError::Empty);
        }
        Ok(Self { u })
    }

    /// `q(z) = (1, z)`, the identity map of the sphere.
    pub fn identity() -> Self {
        Self { u: CMat::identity(2, 2) }
    }

    /// `q(z) = (1, sqrt(2) z, z^2)`, the degree-2 Veronese curve.
    pub fn veronese() -> Self {
        let mut u = CMat::zeros(3, 3);
        u[(0, 0)] = cr(1.0);
        u[(1, 1)] = cr(std::f64::consts::SQRT_2);
        u[(2, 2)] = cr(1.0);
        Self { u }
    }

    /// Random sphere with complex Gaussian coefficients.
    pub fn random<R: rand::Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        Self { u: crate::linalg::random_gaussian(k + 1, k + 1, 1.0, rng) }
    }

    pub fn coefficients(&self) -> &CMat {
        &self.u
    }

    /// Declared degree bound `k` (number of columns minus one).
    pub fn k(&self) -> usize {
        self.u.ncols() - 1
    }

    /// Dimension of the ambient space `C^{rows}`.
    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    fn max_degree(&self) -> usize {
        let scale = self.u.norm();
        (0..self.u.ncols()).rev().find(|&b| self.u.column(b).norm() > COEFF_TOL * scale).unwrap_or(0)
    }

    /// Unnormalized representative `q~(z)`; at infinity, the coefficient
    /// column of the highest power present.
    pub fn eval(&self, z: BoundaryPoint) -> CVec {
        match z {
            BoundaryPoint::Finite(z) => {
                let mut out = CVec::zeros(self.u.nrows());
                let mut p = cr(1.0);
                for b in 0..self.u.ncols() {
                    out += self.u.column(b) * p;
                    p *= z;
                }
                out
            }
            BoundaryPoint::Infinity => self.u.column(self.max_degree()).into_owned(),
        }
    }

    /// `d q~ / dz` at a finite point.
    pub fn derivative(&self, z: C64) -> CVec {
        let mut out = CVec::zeros(self.u.nrows());
        let mut p = cr(1.0);
        for b in 1..self.u.ncols() {
            out += self.u.column(b) * (p * b as f64);
            p *= z;
        }
        out
    }

    /// Unit representative `q(z) = q~(z) / |q~(z)|`.
    pub fn normalized(&self, z: BoundaryPoint) -> Result<CVec, RepError> {
        let v = self.eval(z);
        let n = v.norm();
        let scale = self.u.norm() * z.finite().map_or(1.0, |z| z.norm().max(1.0).powi(self.k() as i32));
        if n <= COEFF_TOL * scale || n == 0.0 {
            return Err(RepError::BasePoint(z.to_string()));
        }
        Ok(v / cr(n))
    }

    /// `<q(a)|q(b)>` of unit representatives.
    pub fn inner(&self, a: BoundaryPoint, b: BoundaryPoint) -> Result<C64, RepError> {
        Ok(self.normalized(a)?.dotc(&self.normalized(b)?))
    }

    pub fn to_json(&self) -> HoloSphereJson {
        HoloSphereJson { k: self.k(), u: MatJson::from(&self.u) }
    }

    pub fn from_json(j: &HoloSphereJson) -> Result<Self, RepError> {
        let u = j.u.to_matrix().ok_or(RepError::Empty)?;
        if u.ncols() != j.k + 1 {
            return Err(RepError::WrongDimension { expected: j.k + 1, got: u.ncols() });
        }
        Self::new(u)
    }
}

/// JSON form of a [`HoloSphere`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoloSphereJson {
    pub k: usize,
    pub u: MatJson,
}

/// `R_z = |q(z)><q(z)|`.
pub fn projection(q: &HoloSphere, z: BoundaryPoint) -> Result<Projection, RepError> {
    let v = q.normalized(z)?;
    Ok(Projection { r: &v * v.adjoint() })
}

/// `tr R_{z1} ... R_{zn} = <q(z1)|q(z2)> ... <q(zn)|q(z1)>`.
pub fn trace_npoint(q: &HoloSphere, tuple: &PointTuple) -> Result<C64, RepError> {
    let vs: Vec<CVec> = tuple.points.iter().map(|&z| q.normalized(z)).collect::<Result<_, _>>()?;
    let n = vs.len();
    Ok((0..n).fold(cr(1.0), |acc, i| acc * vs[i].dotc(&vs[(i + 1) % n])))
}

/// Matrix `tr R_{z_i} R_{z_j}` over a list of points.
pub fn projection_gram(q: &HoloSphere, points: &[BoundaryPoint]) -> Result<DMatrix<f64>, RepError> {
    let vs: Vec<CVec> = points.iter().map(|&z| q.normalized(z)).collect::<Result<_, _>>()?;
    Ok(DMatrix::from_fn(vs.len(), vs.len(), |i, j| vs[i].dotc(&vs[j]).norm_sqr()))
}

/// Degree of a sphere computed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegreeInfo {
    /// Maximal component degree after removing common roots.
    pub degree: usize,
    /// Maximal component degree before common-factor removal.
    pub max_degree: usize,
    pub common_roots: usize,
    /// Number of solutions of `<q(w0^)|q(z)> = 0` for a generic `w0`,
    /// counting roots at infinity and excluding common roots.
    pub root_count: usize,
}

fn is_common_root(u: &CMat, z: C64) -> bool {
    let zn = z.norm().max(1.0);
    u.row_iter().all(|row| {
        let coeffs: Vec<C64> = row.iter().copied().collect();
        let size: f64 = coeffs.iter().enumerate().map(|(b, x)| x.norm() * zn.powi(b as i32)).sum();
        poly_eval(&coeffs, z).norm() <= 1e-7 * size.max(1e-300)
    })
}

fn trim(coeffs: &[C64]) -> Vec<C64> {
    let scale = coeffs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut v = coeffs.to_vec();
    while v.len() > 1 && v[v.len() - 1].norm() <= COEFF_TOL * scale {
        v.pop();
    }
    v
}

/// Degree of the map: the highest power present minus the number of
/// finite common roots of the components, cross-checked by counting the
/// solutions of `<q(w0^)|q(z)> = 0`.
pub fn degree(q: &HoloSphere) -> DegreeInfo {
    let u = q.coefficients();
    let max_degree = q.max_degree();
    let weights: Vec<C64> = (0..u.nrows()).map(|i| C64::from_polar(1.0, 1.0 + 2.399963 * i as f64)).collect();
    let combo: Vec<C64> = (0..u.ncols()).map(|b| (0..u.nrows()).map(|i| weights[i] * u[(i, b)]).sum()).collect();
    let combo = trim(&combo);
    let common: Vec<C64> = poly_roots(&combo, 1e-12).into_iter().filter(|&z| is_common_root(u, z)).collect();
    let common_roots = common.len().min(max_degree);
    let degree = max_degree - common_roots;

    let w0 = BoundaryPoint::Finite(c(0.613, -0.287));
    let a = q.eval(antipode(w0));
    let section: Vec<C64> = (0..=max_degree).map(|b| a.dotc(&u.column(b).into_owned())).collect();
    let section = trim(&section);
    let at_infinity = max_degree + 1 - section.len();
    let finite = poly_roots(&section, 1e-12).into_iter().filter(|&z| !is_common_root(u, z)).count();
    DegreeInfo { degree, max_degree, common_roots, root_count: finite + at_infinity }
}

/// Spheres whose coefficient columns are the components of `beta_map`.
pub fn q_from_monad(md: &MonadData) -> Result<HoloSphere, RepError> {
    let q = HoloSphere::new(beta_map_coeffs(md))?;
    let d = degree(&q);
    if d.degree < md.k() {
        return Err(RepError::DegenerateMap { degree: d.degree, expected: md.k() });
    }
    Ok(q)
}

/// Hermitian form `G_ab = (-1)^a c_{k-a, b}` read off a bidegree `(k, k)`
/// polynomial, rotated so that its trace is real and positive.
pub fn spectral_form(fit: &SpectralCurveFit) -> CMat {
    let k = fit.k;
    let mut g = CMat::from_fn(k + 1, k + 1, |a, b| {
        let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
        fit.coeffs[(k - a, b)] * sign
    });
    let tr = g.trace();
    if tr.norm() > 0.0 {
        g *= tr.conj() / tr.norm();
    }
    g
}

/// Inverse of [`spectral_form`]: the coefficients of `w^k (q(w^), q(z))`.
pub fn spectral_coefficients(g: &CMat) -> CMat {
    let k = g.nrows() - 1;
    CMat::from_fn(k + 1, k + 1, |a, b| {
        let sign = if (k - a) % 2 == 0 { 1.0 } else { -1.0 };
        g[(k - a, b)] * sign
    })
}

/// Sphere `q` with `w^k (q(w^), q(z)) = psi(w, z)` up to a positive factor,
/// from the factorization `G = U^* U` with eigenvalues floored at zero.
pub fn q_from_spectral(fit: &SpectralCurveFit) -> Result<HoloSphere, RepError> {
    q_from_spectral_tol(fit, 1e-6)
}

/// [`q_from_spectral`] with an explicit tolerance for the Hermitian and
/// positivity checks, relative to the largest eigenvalue.
pub fn q_from_spectral_tol(fit: &SpectralCurveFit, tol: f64) -> Result<HoloSphere, RepError> {
    let g = spectral_form(fit);
    let scale = g.norm().max(1e-300);
    let defect = (&g - g.adjoint()).norm() / scale;
    if defect > tol {
        return Err(RepError::NotHermitian { defect });
    }
    let h = (&g + g.adjoint()) * cr(0.5);
    let (vals, vecs) = hermitian_eigen(&h);
    let top = vals.last().copied().unwrap_or(0.0);
    if top <= 0.0 || vals[0] < -tol * top {
        return Err(RepError::NotPositive { min_eig: vals[0] / top.abs().max(1e-300) });
    }
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > RANK_TOL * top).collect();
    let u = CMat::from_fn(keep.len(), fit.k + 1, |r, b| {
        let i = keep[r];
        vecs[(b, i)].conj() * vals[i].sqrt()
    });
    HoloSphere::new(u)
}

/// Finite-difference `d/dz d/dzbar ln |q~(z)|^2` (five-point Laplacian with
/// one Richardson halving); the curvature coefficient is its negative.
pub fn fs_curvature(q: &HoloSphere, z: BoundaryPoint, h: f64) -> Result<f64, RepError> {
    let z0 = z.finite().ok_or_else(|| RepError::BasePoint("inf (use a chart centred elsewhere)".into()))?;
    q.normalized(z)?;
    let l = |d: C64| -> Result<f64, RepError> {
        let v = q.eval(BoundaryPoint::Finite(z0 + d));
        let n = v.norm_squared();
        if n == 0.0 {
            return Err(RepError::BasePoint(BoundaryPoint::Finite(z0 + d).to_string()));
        }
        Ok(n.ln())
    };
    let centre = l(C64::default())?;
    let lap = |h: f64| -> Result<f64, RepError> {
        Ok((l(c(h, 0.0))? + l(c(-h, 0.0))? + l(c(0.0, h))? + l(c(0.0, -h))? - 4.0 * centre) / (h * h))
    };
    let coarse = lap(h)?;
    let fine = lap(h / 2.0)?;
    Ok(0.25 * (4.0 * fine - coarse) / 3.0)
}

/// Closed form `|(1 - R_z) q~'(z)|^2 / |q~(z)|^2` of the pulled-back
/// Fubini-Study density.
pub fn fs_density(q: &HoloSphere, z: C64) -> Result<f64, RepError> {
    Ok(projective_differential(q, z)?.powi(2))
}

/// `|(1 - R_z) q~'(z)| / |q~(z)|`: vanishes exactly where the map is
/// singular.
pub fn projective_differential(q: &HoloSphere, z: C64) -> Result<f64, RepError> {
    let v = q.eval(BoundaryPoint::Finite(z));
    let n = v.norm();
    q.normalized(BoundaryPoint::Finite(z))?;
    let unit = &v / cr(n);
    let d = q.derivative(z);
    let perp = &d - &unit * unit.dotc(&d);
    Ok(perp.norm() / n)
}

/// `(1/pi) * integral of fs_density over the plane`, using `r = tan(s)`,
/// composite Simpson in `s` and the trapezoid rule in the angle.
pub fn fs_degree_integral(q: &HoloSphere, n: usize) -> Result<f64, RepError> {
    let ns = 2 * n.div_ceil(2).max(2);
    let nt = 2 * ns;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let hs = half_pi / ns as f64;
    let mut total = 0.0;
    for i in 0..=ns {
        let s = i as f64 * hs;
        if i == ns {
            continue;
        }
        let r = s.tan();
        let jac = r * (1.0 + r * r);
        let mut ring = 0.0;
        for j in 0..nt {
            let th = 2.0 * std::f64::consts::PI * j as f64 / nt as f64;
            ring += fs_density(q, C64::from_polar(r, th))?;
        }
        ring *= 2.0 * std::f64::consts::PI / nt as f64;
        let w = if i == 0 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * ring * jac;
    }
    Ok(total * hs / 3.0 / std::f64::consts::PI)
}

/// `|(1 - R_z) d/dzbar q(z)|` for the unit representative, by central
/// differences: zero for a holomorphic sphere up to O(h^2).
pub fn holomorphy_defect(q: &HoloSphere, z: C64, h: f64) -> Result<f64, RepError> {
    let at = |d: C64| q.normalized(BoundaryPoint::Finite(z + d));
    let dx = (at(c(h, 0.0))? - at(c(-h, 0.0))?) / cr(2.0 * h);
    let dy = (at(c(0.0, h))? - at(c(0.0, -h))?) / cr(2.0 * h);
    let dbar = (dx + dy * c(0.0, 1.0)) * cr(0.5);
    let unit = q.normalized(BoundaryPoint::Finite(z))?;
    let perp = &dbar - &unit * unit.dotc(&dbar);
    Ok(perp.norm())
}

/// Tensor `g_(ij),(kl) = tr R_i R_j R_k R_l` over basepoints, with its
/// truncated pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct FourPointTensor {
    pub basepoints: Vec<BoundaryPoint>,
    pub g: CMat,
    pub ginv: CMat,
    pub cond: f64,
    pub rank: usize,
}

/// Diagnostics of a [`FourPointTensor`] for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourPointDiagnostics {
    pub cond: f64,
    pub rank: usize,
}

impl FourPointTensor {
    pub fn new(q: &HoloSphere, basepoints: &[BoundaryPoint]) -> Result<Self, RepError> {
        let vs: Vec<CVec> = basepoints.iter().map(|&z| q.normalized(z)).collect::<Result<_, _>>()?;
        let n = vs.len();
        let ip = |a: usize, b: usize| vs[a].dotc(&vs[b]);
        let g = CMat::from_fn(n * n, n * n, |p, r| {
            let (i, j, k, l) = (p / n, p % n, r / n, r % n);
            ip(i, j) * ip(j, k) * ip(k, l) * ip(l, i)
        });
        let svd = g.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        let rank = svd.singular_values.iter().filter(|&&s| s > PINV_CUTOFF * smax).count();
        if !(cond < MAX_COND) {
            return Err(RepError::DegenerateBasepoints { cond });
        }
        let ginv = svd.pseudo_inverse(PINV_CUTOFF * smax).map_err(|_| RepError::DegenerateBasepoints { cond })?;
        Ok(Self { basepoints: basepoints.to_vec(), g, ginv, cond, rank })
    }

    pub fn diagnostics(&self) -> FourPointDiagnostics {
        FourPointDiagnostics { cond: self.cond, rank: self.rank }
    }

    /// `<P_w P_z>` from 3-point traces against the basepoints.
    pub fn reconstruct(&self, q: &HoloSphere, w: BoundaryPoint, z: BoundaryPoint) -> Result<C64, RepError> {
        let n = self.basepoints.len();
        let vs: Vec<CVec> = self.basepoints.iter().map(|&p| q.normalized(p)).collect::<Result<_, _>>()?;
        let three = |x: BoundaryPoint| -> Result<CVec, RepError> {
            let u = q.normalized(x)?;
            Ok(CVec::from_fn(n * n, |p, _| {
                let (i, j) = (p / n, p % n);
                u.dotc(&vs[i]) * vs[i].dotc(&vs[j]) * vs[j].dotc(&u)
            }))
        };
        let bw = three(w)?;
        let cz = three(z)?;
        Ok((bw.transpose() * &self.ginv * cz)[(0, 0)])
    }
}

/// `g^{ijkl} <P_w P_k P_l> <P_z P_i P_j>` for the given basepoints.
pub fn four_point_reconstruct(
    q: &HoloSphere,
    basepoints: &[BoundaryPoint],
    w: BoundaryPoint,
    z: BoundaryPoint,
) -> Result<C64, RepError> {
    FourPointTensor::new(q, basepoints)?.reconstruct(q, w, z)
}

/// Products of the basis `{P1, P2, P1 P2, P2 P1}` expanded in that basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTable {
    pub roots: [BoundaryPoint; 2],
    /// `tr R_1 R_2`.
    pub tau: f64,
    /// `constants[a][b][c]`: coefficient of basis element `c` in `e_a e_b`.
    pub constants: Vec<Vec<Vec<C64>>>,
    pub closure_residual: f64,
}

fn roots_of_section(q: &HoloSphere, w: BoundaryPoint) -> Result<Vec<BoundaryPoint>, RepError> {
    let a = q.normalized(w)?;
    let u = q.coefficients();
    let k = q.k();
    let coeffs: Vec<C64> = (0..=k).map(|b| a.dotc(&u.column(b).into_owned())).collect();
    let scale = coeffs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut trimmed = coeffs.clone();
    while trimmed.len() > 1 && trimmed[trimmed.len() - 1].norm() <= 1e-10 * scale {
        trimmed.pop();
    }
    let mut out: Vec<BoundaryPoint> = poly_roots(&trimmed, 1e-14).into_iter().map(BoundaryPoint::Finite).collect();
    while out.len() < k {
        out.push(BoundaryPoint::Infinity);
    }
    Ok(out)
}

/// Structure constants of the algebra generated by `P_1 = P_{z1}` and
/// `P_2 = P_{z2}`, where `z1, z2` are the two solutions of
/// `<q(w)|q(z)> = 0` for a degree-2 sphere.
pub fn subalgebra_structure(q: &HoloSphere, w: BoundaryPoint) -> Result<StructureTable, RepError> {
    if q.k() != 2 || q.dim() != 3 {
        return Err(RepError::WrongDimension { expected: 2, got: q.k() });
    }
    let roots = roots_of_section(q, w)?;
    let separation = roots[0].chordal(&roots[1]);
    if separation < 1e-5 {
        return Err(RepError::DegenerateRoots { separation });
    }
    let r1 = projection(q, roots[0])?.r;
    let r2 = projection(q, roots[1])?.r;
    let basis = [r1.clone(), r2.clone(), &r1 * &r2, &r2 * &r1];
    let m = CMat::from_fn(9, 4, |p, col| basis[col][(p / 3, p % 3)]);
    let svd = m.clone().svd(true, true);
    let mut constants = vec![vec![vec![C64::default(); 4]; 4]; 4];
    let mut closure: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let prod = &basis[a] * &basis[b];
            let rhs = CVec::from_fn(9, |p, _| prod[(p / 3, p % 3)]);
            let x = svd.solve(&rhs, 1e-12).unwrap_or_else(|_| CVec::zeros(4));
            closure = closure.max((&m * &x - &rhs).norm());
            for cc in 0..4 {
                constants[a][b][cc] = x[cc];
            }
        }
    }
    let tau = (&r1 * &r2).trace().re;
    Ok(StructureTable { roots: [roots[0], roots[1]], tau, constants, closure_residual: closure })
}

/// Random element `sum_i c_i R_{z_i}` of the representation.
pub fn combination(q: &HoloSphere, points: &[BoundaryPoint], coeffs: &DVector<C64>) -> Result<CMat, RepError> {
    let n = q.dim();
    let mut a = CMat::zeros(n, n);
    for (z, &ci) in points.iter().zip(coeffs.iter()) {
        a += projection(q, *z)?.r * ci;
    }
    Ok(a)
}
