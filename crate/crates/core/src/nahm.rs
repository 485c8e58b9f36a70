//! Discrete Nahm data for half-integer mass, its gauge action, a restart
//! based least-squares solver, and the monad with its rational map and
//! determinant form of the spectral curve.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::BoundaryPoint;
use crate::linalg::{adjugate, c, cr, det, random_gaussian, random_unitary, CMat, CVec, MatJson, VecJson, C64};
use crate::optim::{levenberg_marquardt, LmOptions};

/// Number of independent solver restarts.
pub const RESTARTS: usize = 20;
/// Residual certificate demanded of a solver run.
pub const SOLVE_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum NahmError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("mass must be a positive half-integer, got {0}")]
    InvalidMass(String),
    #[error("no restart reached residual {tol:e}: best {best:e} after {restarts} restarts{}", if *.degenerate { " (degenerate index range: the boundary equation forces v = 0)" } else { "" })]
    NonConvergence { best: f64, tol: f64, restarts: usize, degenerate: bool },
}

/// Half-integer mass `m = two_m / 2` with `two_m` odd and positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt {
    two_m: i32,
}

impl HalfInt {
    pub fn new(two_m: i32) -> Result<Self, NahmError> {
        if two_m > 0 && two_m % 2 == 1 {
            Ok(Self { two_m })
        } else {
            Err(NahmError::InvalidMass(format!("{two_m}/2")))
        }
    }

    pub fn from_f64(m: f64) -> Result<Self, NahmError> {
        let t = 2.0 * m;
        if (t - t.round()).abs() > 1e-12 || t.round() > i32::MAX as f64 {
            return Err(NahmError::InvalidMass(m.to_string()));
        }
        Self::new(t.round() as i32)
    }

    pub fn twice(self) -> i32 {
        self.two_m
    }

    pub fn value(self) -> f64 {
        self.two_m as f64 / 2.0
    }

    /// Largest index `2m - 1` of the beta range.
    pub fn top(self) -> i32 {
        self.two_m - 1
    }

    /// Even indices `-2m+1, ..., 2m-1` carrying beta and the gauge group.
    pub fn beta_indices(self) -> impl Iterator<Item = i32> {
        let t = self.top();
        (-t..=t).step_by(2)
    }

    /// Odd indices `-2m+2, ..., 2m-2` carrying gamma.
    pub fn gamma_indices(self) -> impl Iterator<Item = i32> {
        let t = self.top() - 1;
        (-t..=t).step_by(2)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2", self.two_m)
    }
}

impl FromStr for HalfInt {
    type Err = NahmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num.trim().parse().map_err(|_| NahmError::InvalidMass(s.into()))?;
            match den.trim() {
                "2" => Self::new(num),
                "1" => Self::new(2 * num),
                _ => Err(NahmError::InvalidMass(s.into())),
            }
        } else {
            let m: f64 = s.parse().map_err(|_| NahmError::InvalidMass(s.into()))?;
            Self::from_f64(m)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Matrices `beta_j` (even j), `gamma_j` (odd j) and the vector `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct NahmData {
    pub k: usize,
    pub m: HalfInt,
    pub beta: BTreeMap<i32, CMat>,
    pub gamma: BTreeMap<i32, CMat>,
    pub v: CVec,
}

/// Unitary `g_j` on the even indices with `g_{-j} = conj(g_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTuple {
    pub m: HalfInt,
    pub g: BTreeMap<i32, CMat>,
}

/// The pair `(beta_{-2m+1}, v)` that determines the monad.
#[derive(Debug, Clone, PartialEq)]
pub struct MonadData {
    pub beta0: CMat,
    pub v: CVec,
}

fn frob2(m: &CMat) -> f64 {
    m.norm_squared()
}

fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

impl NahmData {
    pub fn zeros(k: usize, m: HalfInt) -> Self {
        let beta = m.beta_indices().map(|j| (j, CMat::zeros(k, k))).collect();
        let gamma = m.gamma_indices().map(|j| (j, CMat::zeros(k, k))).collect();
        Self { k, m, beta, gamma, v: CVec::zeros(k) }
    }

    /// Random data with the transpose symmetry imposed.
    pub fn random<R: rand::Rng + ?Sized>(k: usize, m: HalfInt, scale: f64, rng: &mut R) -> Self {
        let mut d = Self::zeros(k, m);
        for j in m.beta_indices().filter(|&j| j >= 0) {
            let mut b = random_gaussian(k, k, scale, rng);
            if j == 0 {
                b = (&b + b.transpose()) * cr(0.5);
            }
            d.beta.insert(-j, b.transpose());
            d.beta.insert(j, b);
        }
        for j in m.gamma_indices().filter(|&j| j > 0) {
            let g = random_gaussian(k, k, scale, rng);
            d.gamma.insert(-j, g.transpose());
            d.gamma.insert(j, g);
        }
        d.v = random_gaussian(k, 1, scale, rng).column(0).into_owned();
        d
    }

    pub fn check_shapes(&self) -> Result<(), NahmError> {
        let k = self.k;
        if k == 0 {
            return Err(NahmError::ShapeMismatch("k must be at least 1".into()));
        }
        if self.v.len() != k {
            return Err(NahmError::ShapeMismatch(format!("v has length {}, expected {k}", self.v.len())));
        }
        let check = |name: &str, map: &BTreeMap<i32, CMat>, idx: Vec<i32>| -> Result<(), NahmError> {
            let keys: Vec<i32> = map.keys().copied().collect();
            if keys != idx {
                return Err(NahmError::ShapeMismatch(format!("{name} indices {keys:?}, expected {idx:?}")));
            }
            for (j, a) in map {
                if a.shape() != (k, k) {
                    return Err(NahmError::ShapeMismatch(format!("{name}_{j} has shape {:?}", a.shape())));
                }
            }
            Ok(())
        };
        check("beta", &self.beta, self.m.beta_indices().collect())?;
        check("gamma", &self.gamma, self.m.gamma_indices().collect())
    }

    pub fn monad(&self) -> MonadData {
        MonadData { beta0: self.beta[&-self.m.top()].clone(), v: self.v.clone() }
    }

    /// Individual equation blocks whose squared norms make up the residual.
    fn equation_blocks(&self) -> Vec<CMat> {
        let m = self.m;
        let top = m.top();
        let mut out = Vec::new();
        for j in m.gamma_indices() {
            let g = &self.gamma[&j];
            out.push(&self.beta[&(j - 1)] * g - g * &self.beta[&(j + 1)]);
        }
        for j in m.beta_indices().filter(|&j| j.abs() < top) {
            let b = &self.beta[&j];
            let gm = &self.gamma[&(j - 1)];
            let gp = &self.gamma[&(j + 1)];
            out.push(comm(&b.adjoint(), b) + gm.adjoint() * gm - gp * gp.adjoint());
        }
        let b = &self.beta[&top];
        let mut bnd = comm(b, &b.adjoint()) + &self.v * self.v.adjoint();
        if let Some(g) = self.gamma.get(&(top - 1)) {
            bnd -= g.adjoint() * g;
        }
        out.push(bnd);
        for j in m.beta_indices().filter(|&j| j > 0) {
            out.push(&self.beta[&j] - self.beta[&-j].transpose());
        }
        out.push(&self.beta[&0] - self.beta[&0].transpose());
        for j in m.gamma_indices().filter(|&j| j > 0) {
            out.push(&self.gamma[&j] - self.gamma[&-j].transpose());
        }
        out
    }

    pub fn to_json(&self) -> NahmJson {
        let key = |j: &i32| j.to_string();
        NahmJson {
            k: self.k,
            m: self.m,
            beta: self.beta.iter().map(|(j, b)| (key(j), MatJson::from(b))).collect(),
            gamma: self.gamma.iter().map(|(j, g)| (key(j), MatJson::from(g))).collect(),
            v: VecJson::from(&self.v),
        }
    }

    pub fn from_json(j: &NahmJson) -> Result<Self, NahmError> {
        let parse = |map: &BTreeMap<String, MatJson>| -> Result<BTreeMap<i32, CMat>, NahmError> {
            map.iter()
                .map(|(key, mj)| {
                    let idx: i32 = key.parse().map_err(|_| NahmError::ShapeMismatch(format!("bad index {key}")))?;
                    let mat = mj.to_matrix().ok_or_else(|| NahmError::ShapeMismatch(format!("bad matrix at {key}")))?;
                    Ok((idx, mat))
                })
                .collect()
        };
        let d = Self {
            k: j.k,
            m: j.m,
            beta: parse(&j.beta)?,
            gamma: parse(&j.gamma)?,
            v: j.v.to_vector().ok_or_else(|| NahmError::ShapeMismatch("bad v".into()))?,
        };
        d.check_shapes()?;
        Ok(d)
    }
}

/// JSON form of [`NahmData`]: matrices as row-major Re/Im arrays keyed by
/// index, `m` as a rational string such as `"3/2"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NahmJson {
    pub k: usize,
    pub m: HalfInt,
    pub beta: BTreeMap<String, MatJson>,
    pub gamma: BTreeMap<String, MatJson>,
    pub v: VecJson,
}

/// Sum of squared Frobenius norms of the discrete Nahm equations and the
/// transpose symmetry violations.
pub fn nahm_residual(d: &NahmData) -> Result<f64, NahmError> {
    d.check_shapes()?;
    Ok(d.equation_blocks().iter().map(frob2).sum())
}

impl GaugeTuple {
    pub fn identity(k: usize, m: HalfInt) -> Self {
        Self { m, g: m.beta_indices().map(|j| (j, CMat::identity(k, k))).collect() }
    }

    /// Haar-random unitaries for `j > 0`, a random real orthogonal `g_0`.
    pub fn random<R: rand::Rng + ?Sized>(k: usize, m: HalfInt, rng: &mut R) -> Self {
        let mut g = BTreeMap::new();
        for j in m.beta_indices().filter(|&j| j > 0) {
            let u = random_unitary(k, rng);
            g.insert(-j, u.map(|x| x.conj()));
            g.insert(j, u);
        }
        let real = random_gaussian(k, k, 1.0, rng).map(|x| cr(x.re));
        let q = real.qr().q().map(|x| cr(x.re));
        g.insert(0, q);
        Self { m, g }
    }

    /// Diagonal phase `e^{i theta}` on the top index, its conjugate on the
    /// bottom one, identity elsewhere.
    pub fn phase(k: usize, m: HalfInt, theta: f64) -> Self {
        let mut t = Self::identity(k, m);
        if m.top() > 0 {
            let p = C64::from_polar(1.0, theta);
            t.g.insert(m.top(), CMat::identity(k, k) * p);
            t.g.insert(-m.top(), CMat::identity(k, k) * p.conj());
        }
        t
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.g
            .values()
            .map(|u| (u.adjoint() * u - CMat::identity(u.nrows(), u.nrows())).norm())
            .fold(0.0, f64::max)
    }
}

/// Gauge action `beta_j -> g_j beta_j g_j^{-1}`,
/// `gamma_j -> g_{j-1} gamma_j g_{j+1}^{-1}`, `v -> g_{2m-1} v`.
pub fn gauge_act(d: &NahmData, g: &GaugeTuple) -> Result<NahmData, NahmError> {
    d.check_shapes()?;
    if g.m != d.m {
        return Err(NahmError::ShapeMismatch(format!("gauge mass {} vs data mass {}", g.m, d.m)));
    }
    let keys: Vec<i32> = g.g.keys().copied().collect();
    if keys != d.m.beta_indices().collect::<Vec<_>>() || g.g.values().any(|u| u.shape() != (d.k, d.k)) {
        return Err(NahmError::ShapeMismatch("gauge tuple does not match the data".into()));
    }
    let inv = |j: i32| g.g[&j].adjoint();
    let mut out = d.clone();
    for (j, b) in out.beta.iter_mut() {
        *b = &g.g[j] * &*b * inv(*j);
    }
    for (j, gm) in out.gamma.iter_mut() {
        *gm = &g.g[&(j - 1)] * &*gm * inv(j + 1);
    }
    out.v = &g.g[&d.m.top()] * &d.v;
    Ok(out)
}

/// Layout of the real parameter vector: blocks with `j >= 0` only.
struct Layout {
    k: usize,
    m: HalfInt,
}

impl Layout {
    fn len(&self) -> usize {
        let k = self.k;
        let nb = self.m.beta_indices().filter(|&j| j > 0).count();
        let ng = self.m.gamma_indices().filter(|&j| j > 0).count();
        2 * (k * (k + 1) / 2 + (nb + ng) * k * k + k)
    }

    fn unpack(&self, x: &DVector<f64>) -> NahmData {
        let k = self.k;
        let mut it = x.as_slice().chunks_exact(2).map(|p| c(p[0], p[1]));
        let mut d = NahmData::zeros(k, self.m);
        let mut b0 = CMat::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let z = it.next().unwrap_or_default();
                b0[(i, j)] = z;
                b0[(j, i)] = z;
            }
        }
        d.beta.insert(0, b0);
        let block = || CMat::zeros(k, k);
        for j in self.m.beta_indices().filter(|&j| j > 0) {
            let mut b = block();
            for e in b.iter_mut() {
                *e = it.next().unwrap_or_default();
            }
            d.beta.insert(-j, b.transpose());
            d.beta.insert(j, b);
        }
        for j in self.m.gamma_indices().filter(|&j| j > 0) {
            let mut g = block();
            for e in g.iter_mut() {
                *e = it.next().unwrap_or_default();
            }
            d.gamma.insert(-j, g.transpose());
            d.gamma.insert(j, g);
        }
        for e in d.v.iter_mut() {
            *e = it.next().unwrap_or_default();
        }
        d
    }

    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.unpack(x);
        let mut out = Vec::new();
        for blk in d.equation_blocks() {
            for z in blk.iter() {
                out.push(z.re);
                out.push(z.im);
            }
        }
        out.push(d.v.norm_squared() - 1.0);
        DVector::from_vec(out)
    }
}

/// Result of a solver run together with its residual certificate.
#[derive(Debug, Clone)]
pub struct NahmSolution {
    pub data: NahmData,
    pub residual: f64,
    pub restart: usize,
}

/// Seeds restart `index` of a solve deterministically from `seed`.
fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Searches for discrete Nahm data normalized by `|v| = 1` by damped least
/// squares from [`RESTARTS`] random starts, returning the restart with the
/// lowest residual in canonical gauge.
pub fn solve_nahm(k: usize, m: HalfInt, seed: u64) -> Result<NahmSolution, NahmError> {
    if k == 0 {
        return Err(NahmError::ShapeMismatch("k must be at least 1".into()));
    }
    let layout = Layout { k, m };
    let n = layout.len();
    let scale = 1.0 / (k as f64).sqrt();
    let opts = LmOptions { max_iter: 300, target: 1e-24, ..LmOptions::default() };
    let runs: Vec<(usize, f64, NahmData)> = (0..RESTARTS)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(seed, i);
            let g = random_gaussian(n / 2, 1, scale, &mut rng);
            let x0 = DVector::from_iterator(n, g.iter().flat_map(|z| [z.re, z.im]));
            let min = levenberg_marquardt(|x| layout.residuals(x), x0, &opts);
            let d = layout.unpack(&min.x);
            let r = nahm_residual(&d).unwrap_or(f64::INFINITY);
            (i, r, d)
        })
        .collect();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    if best.1 < SOLVE_TOL {
        let data = canonical_gauge(&best.2)?;
        let residual = nahm_residual(&data)?;
        Ok(NahmSolution { data, residual, restart: best.0 })
    } else {
        Err(NahmError::NonConvergence { best: best.1, tol: SOLVE_TOL, restarts: RESTARTS, degenerate: is_degenerate(k, m) })
    }
}

/// Whether the index ranges leave only `[beta_0, beta_0^*] + v v^* = 0`,
/// whose trace forces `v = 0`.
pub fn is_degenerate(_k: usize, m: HalfInt) -> bool {
    m.twice() == 1
}

/// Gauge representative with `v` along the first basis vector with a
/// non-negative real entry and `beta_{-2m+1}` upper Hessenberg.
pub fn canonical_gauge(d: &NahmData) -> Result<NahmData, NahmError> {
    d.check_shapes()?;
    let k = d.k;
    let top = d.m.top();
    if top == 0 {
        return Ok(d.clone());
    }
    let mut g = GaugeTuple::identity(k, d.m);
    let w = householder_to_e1(&d.v);
    set_pair(&mut g, top, w);
    let stage = gauge_act(d, &g)?;
    if k > 2 {
        let hess = stage.beta[&-top].clone().hessenberg();
        let q = hess.q();
        let mut g2 = GaugeTuple::identity(k, d.m);
        set_pair(&mut g2, top, q.transpose());
        return gauge_act(&stage, &g2);
    }
    Ok(stage)
}

fn set_pair(g: &mut GaugeTuple, top: i32, u: CMat) {
    g.g.insert(-top, u.map(|x| x.conj()));
    g.g.insert(top, u);
}

/// Unitary `W` with `W v = |v| e_1`.
fn householder_to_e1(v: &CVec) -> CMat {
    let k = v.len();
    let nv = v.norm();
    if nv < 1e-300 {
        return CMat::identity(k, k);
    }
    let v0 = v[0];
    let phase = if v0.norm() > 0.0 { v0 / v0.norm() } else { cr(1.0) };
    let mut e = CVec::zeros(k);
    e[0] = phase * nv;
    let u = v - e;
    let nu = u.norm();
    let h = if nu < 1e-14 * nv {
        CMat::identity(k, k)
    } else {
        let u = u / cr(nu);
        CMat::identity(k, k) - &u * u.adjoint() * cr(2.0)
    };
    h * phase.conj()
}

impl MonadData {
    pub fn new(beta0: CMat, v: CVec) -> Result<Self, NahmError> {
        let k = v.len();
        if beta0.shape() != (k, k) || k == 0 {
            return Err(NahmError::ShapeMismatch(format!("beta {:?} with v of length {k}", beta0.shape())));
        }
        Ok(Self { beta0, v })
    }

    pub fn k(&self) -> usize {
        self.v.len()
    }

    pub fn random<R: rand::Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        Self {
            beta0: random_gaussian(k, k, 1.0, rng),
            v: random_gaussian(k, 1, 1.0, rng).column(0).into_owned(),
        }
    }
}

/// Polynomial representative `(-adj(beta^T - z) v, det(beta - z))` of the
/// rational map; at infinity, the vector of leading degree-k coefficients.
pub fn beta_map(md: &MonadData, z: BoundaryPoint) -> CVec {
    match z {
        BoundaryPoint::Finite(z) => beta_map_finite(md, z),
        BoundaryPoint::Infinity => {
            let u = beta_map_coeffs(md);
            u.column(md.k()).into_owned()
        }
    }
}

fn beta_map_finite(md: &MonadData, z: C64) -> CVec {
    let k = md.k();
    let shift = CMat::identity(k, k) * z;
    let top = -(adjugate(&(md.beta0.transpose() - &shift)) * &md.v);
    let mut out = CVec::zeros(k + 1);
    out.rows_mut(0, k).copy_from(&top);
    out[k] = det(&(&md.beta0 - shift));
    out
}

/// Coefficient matrix `U` with `beta_map(z)_i = sum_b U_ib z^b`, recovered
/// exactly by a discrete Fourier transform on the `(k+1)`-th roots of unity.
pub fn beta_map_coeffs(md: &MonadData) -> CMat {
    let k = md.k();
    let n = k + 1;
    let samples: Vec<CVec> = (0..n)
        .map(|l| beta_map_finite(md, C64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / n as f64)))
        .collect();
    CMat::from_fn(n, n, |i, b| {
        let s: C64 = (0..n)
            .map(|l| samples[l][i] * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (l * b) as f64 / n as f64))
            .sum();
        s / n as f64
    })
}

/// `det((beta^T - z)(conj(beta) + 1/w) + v conj(v)^T)` for finite nonzero
/// `w`; equal to the Hermitian pairing `(beta_map(w^), beta_map(z))`.
pub fn spectral_det(md: &MonadData, w: C64, z: C64) -> C64 {
    let k = md.k();
    let id = CMat::identity(k, k);
    let a = md.beta0.transpose() - &id * z;
    let b = md.beta0.map(|x| x.conj()) + &id * w.inv();
    det(&(a * b + &md.v * md.v.adjoint()))
}

/// `w^k` times [`spectral_det`], polynomial in both variables and valid at
/// `w = 0`.
pub fn spectral_poly(md: &MonadData, w: C64, z: C64) -> C64 {
    let k = md.k();
    let id = CMat::identity(k, k);
    let a = md.beta0.transpose() - &id * z;
    let b = md.beta0.map(|x| x.conj()) * w + &id;
    det(&(a * b + &md.v * md.v.adjoint() * w))
}

/// Coefficients `c[(a, b)]` of `w^a z^b` in [`spectral_poly`], by a
/// two-dimensional discrete Fourier transform.
pub fn spectral_coeffs(md: &MonadData) -> CMat {
    let n = md.k() + 1;
    let root = |l: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / n as f64);
    let vals = CMat::from_fn(n, n, |p, q| spectral_poly(md, root(p), root(q)));
    CMat::from_fn(n, n, |a, b| {
        let mut s = C64::default();
        for p in 0..n {
            for q in 0..n {
                s += vals[(p, q)] * root(p * a % n).conj() * root(q * b % n).conj();
            }
        }
        s / (n * n) as f64
    })
}

/// `(det(1 + u conj(v)^T), 1 + (v, u))`.
pub fn rank_one_det(u: &CVec, v: &CVec) -> (C64, C64) {
    let n = u.len();
    let m = CMat::identity(n, n) + u * v.adjoint();
    (det(&m), cr(1.0) + v.dotc(u))
}
