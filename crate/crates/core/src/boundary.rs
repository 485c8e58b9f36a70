//! Boundary data extracted from the 2-point function: the connection
//! `lambda(w, z) = (1/2) d/dzbar ln <P_w P_z>`, its curvature, and the
//! spectral curve located as the zero set of `<P_{w^} P_z>`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::field::MonopoleField;
use crate::geom::{antipode, BoundaryPoint};
use crate::linalg::{c, cr, CMat, C64};
use crate::npoint::{two_point, NpointError};
use crate::optim::nelder_mead;
use crate::scatter::ScatterOptions;

/// Default step for first derivatives.
pub const FD_STEP: f64 = 1e-3;
/// Default step for the mixed second derivative.
pub const FD_STEP_2: f64 = 5e-3;
/// Entries of a unit-norm fit below this modulus do not fix its phase.
pub const PHASE_ENTRY_MIN: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("2-point value {value:.3e} is within 10x its error {err:.3e} at {at}")]
    NearSingular { value: f64, err: f64, at: String },
    #[error("finite differences at steps h and h/2 disagree: {coarse:.6e} vs {fine:.6e}")]
    Unstable { coarse: f64, fine: f64 },
    #[error("design matrix is rank deficient ({points} points, {unknowns} unknowns)")]
    RankDeficient { points: usize, unknowns: usize },
    #[error("point must be finite for finite differences")]
    InfinitePoint,
    #[error(transparent)]
    Npoint(#[from] NpointError),
}

/// Polynomial `psi(w, z) = sum_ab coeffs[(a, b)] w^a z^b` of bidegree
/// `(k, k)` with unit coefficient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCurveFit {
    pub k: usize,
    pub coeffs: CMat,
    pub fit_residual: f64,
}

impl SpectralCurveFit {
    pub fn eval(&self, w: C64, z: C64) -> C64 {
        let n = self.k + 1;
        let mut s = C64::default();
        let mut wa = cr(1.0);
        for a in 0..n {
            let mut zb = cr(1.0);
            for b in 0..n {
                s += self.coeffs[(a, b)] * wa * zb;
                zb *= z;
            }
            wa *= w;
        }
        s
    }

    /// Squared overlap of the coefficients with a unit-normalized target.
    pub fn overlap(&self, target: &CMat) -> f64 {
        let t = target / cr(target.norm());
        let s: C64 = self.coeffs.iter().zip(t.iter()).map(|(a, b)| a.conj() * b).sum();
        s.norm_sqr()
    }
}

/// A sample of the boundary connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionSample {
    pub w: BoundaryPoint,
    pub z: BoundaryPoint,
    pub lambda: C64,
}

fn finite(z: BoundaryPoint) -> Result<C64, BoundaryError> {
    z.finite().ok_or(BoundaryError::InfinitePoint)
}

fn ln_two_point<F: MonopoleField + ?Sized>(
    f: &F,
    w: BoundaryPoint,
    z: C64,
    opts: &ScatterOptions,
) -> Result<f64, BoundaryError> {
    let v = two_point(f, w, BoundaryPoint::Finite(z), opts)?;
    let value = v.value.re;
    if value <= 10.0 * v.err || value <= 0.0 {
        return Err(BoundaryError::NearSingular { value, err: v.err, at: format!("({w}, {})", BoundaryPoint::Finite(z)) });
    }
    Ok(value.ln())
}

fn richardson(coarse: f64, fine: f64, floor: f64) -> Result<f64, BoundaryError> {
    if (coarse - fine).abs() > 0.1 * fine.abs() + floor {
        return Err(BoundaryError::Unstable { coarse, fine });
    }
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Central-difference `(1/2) d/dzbar ln two_point(w, z)` with one Richardson
/// halving of `h`.
pub fn lambda_fd<F: MonopoleField + ?Sized>(
    f: &F,
    w: BoundaryPoint,
    z: BoundaryPoint,
    h: f64,
    opts: &ScatterOptions,
) -> Result<C64, BoundaryError> {
    let z0 = finite(z)?;
    ln_two_point(f, w, z0, opts)?;
    let grad = |h: f64| -> Result<(f64, f64), BoundaryError> {
        let l = |d: C64| ln_two_point(f, w, z0 + d, opts);
        let dx = (l(c(h, 0.0))? - l(c(-h, 0.0))?) / (2.0 * h);
        let dy = (l(c(0.0, h))? - l(c(0.0, -h))?) / (2.0 * h);
        Ok((dx, dy))
    };
    let (cx, cy) = grad(h)?;
    let (fx, fy) = grad(h / 2.0)?;
    let dx = richardson(cx, fx, 1e-6)?;
    let dy = richardson(cy, fy, 1e-6)?;
    Ok(c(dx, dy) * 0.25)
}

/// Five-point Laplacian form of `d/dz d/dzbar ln two_point(w, z)`, the
/// coefficient of the boundary curvature, with one Richardson halving.
pub fn curvature_fd<F: MonopoleField + ?Sized>(
    f: &F,
    z: BoundaryPoint,
    w: BoundaryPoint,
    h: f64,
    opts: &ScatterOptions,
) -> Result<f64, BoundaryError> {
    let z0 = finite(z)?;
    let centre = ln_two_point(f, w, z0, opts)?;
    let lap = |h: f64| -> Result<f64, BoundaryError> {
        let l = |d: C64| ln_two_point(f, w, z0 + d, opts);
        let s = l(c(h, 0.0))? + l(c(-h, 0.0))? + l(c(0.0, h))? + l(c(0.0, -h))? - 4.0 * centre;
        Ok(s / (h * h))
    };
    let coarse = lap(h)?;
    let fine = lap(h / 2.0)?;
    Ok(0.25 * richardson(coarse, fine, 1e-4)?)
}

/// Regular square grid of `n x n` points covering `[-radius, radius]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexGrid {
    pub fn square(radius: f64, n: usize) -> Self {
        let axis: Vec<f64> = if n == 1 {
            vec![0.0]
        } else {
            (0..n).map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64).collect()
        };
        Self { re: axis.clone(), im: axis }
    }

    pub fn len(&self) -> usize {
        self.re.len() * self.im.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        c(self.re[i], self.im[j])
    }

    pub fn points(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.re.len() {
            for j in 0..self.im.len() {
                out.push(self.at(i, j));
            }
        }
        out
    }

    fn spacing(&self) -> f64 {
        let d = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]).abs() / (v.len() - 1) as f64 } else { 1.0 };
        d(&self.re).max(d(&self.im))
    }
}

/// A point `(w, z)` of the scanned spectral curve with the residual value
/// `two_point(w^, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocusPoint {
    pub w: C64,
    pub z: C64,
    pub value: f64,
}

/// Zeros of `z -> two_point(antipode(w), z)` for each `w`: local minima of
/// the grid below ten times `threshold`, polished by Nelder-Mead and kept
/// if the polished value is below `threshold`. Sorted lexicographically.
pub fn spectral_scan<F: MonopoleField + ?Sized>(
    f: &F,
    w_grid: &[C64],
    z_grid: &ComplexGrid,
    threshold: f64,
    opts: &ScatterOptions,
) -> Result<Vec<LocusPoint>, BoundaryError> {
    let mut out = Vec::new();
    for &w in w_grid {
        out.extend(scan_line(f, w, z_grid, threshold, opts)?);
    }
    out.sort_by(|a, b| {
        let key = |p: &LocusPoint| [p.w.re, p.w.im, p.z.re, p.z.im];
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// Locus points on the line `w = const`.
pub fn scan_line<F: MonopoleField + ?Sized>(
    f: &F,
    w: C64,
    z_grid: &ComplexGrid,
    threshold: f64,
    opts: &ScatterOptions,
) -> Result<Vec<LocusPoint>, BoundaryError> {
    let what = antipode(BoundaryPoint::Finite(w));
    let (nr, ni) = (z_grid.re.len(), z_grid.im.len());
    let idx: Vec<(usize, usize)> = (0..nr).flat_map(|i| (0..ni).map(move |j| (i, j))).collect();
    let values: Vec<f64> = idx
        .par_iter()
        .map(|&(i, j)| two_point(f, what, BoundaryPoint::Finite(z_grid.at(i, j)), opts).map(|v| v.value.re))
        .collect::<Result<_, _>>()?;
    let val = |i: usize, j: usize| values[i * ni + j];
    let mut seeds = Vec::new();
    for &(i, j) in &idx {
        let v = val(i, j);
        if v >= 10.0 * threshold {
            continue;
        }
        let mut is_min = true;
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= nr as i64 || b >= ni as i64 {
                    continue;
                }
                let u = val(a as usize, b as usize);
                let earlier = (a as usize, b as usize) < (i, j);
                if u < v || (u == v && earlier) {
                    is_min = false;
                }
            }
        }
        if is_min {
            seeds.push(z_grid.at(i, j));
        }
    }
    let step = 0.5 * z_grid.spacing();
    let polished: Vec<Option<LocusPoint>> = seeds
        .par_iter()
        .map(|&z0| {
            let obj = |x: &DVector<f64>| {
                two_point(f, what, BoundaryPoint::Finite(c(x[0], x[1])), opts).map(|v| v.value.re).unwrap_or(f64::INFINITY)
            };
            let m = nelder_mead(obj, &DVector::from_vec(vec![z0.re, z0.im]), step, 1e-16, 400);
            (m.value < threshold).then(|| LocusPoint { w, z: c(m.x[0], m.x[1]), value: m.value })
        })
        .collect();
    let mut out: Vec<LocusPoint> = Vec::new();
    for p in polished.into_iter().flatten() {
        if out.iter().all(|q| (q.z - p.z).norm() > 0.25 * step) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Scan-based charge estimate: the number of locus points on the generic
/// line `w = w0`.
pub fn estimate_charge<F: MonopoleField + ?Sized>(
    f: &F,
    w0: C64,
    z_grid: &ComplexGrid,
    threshold: f64,
    opts: &ScatterOptions,
) -> Result<usize, BoundaryError> {
    Ok(scan_line(f, w0, z_grid, threshold, opts)?.len())
}

/// Least-squares bidegree `(k, k)` polynomial through the locus: the right
/// singular vector of the smallest singular value of the design matrix,
/// with unit norm and its first entry of modulus above [`PHASE_ENTRY_MIN`]
/// (row-major order) real positive.
pub fn fit_spectral_poly(locus: &[(C64, C64)], k: usize) -> Result<SpectralCurveFit, BoundaryError> {
    let n = k + 1;
    let unknowns = n * n;
    if locus.len() < 2 * unknowns {
        return Err(BoundaryError::RankDeficient { points: locus.len(), unknowns });
    }
    let scale = locus.iter().fold(1.0f64, |s, (w, z)| s.max(w.norm()).max(z.norm()));
    let design = CMat::from_fn(locus.len(), unknowns, |r, col| {
        let (w, z) = locus[r];
        let (a, b) = (col / n, col % n);
        (w / scale).powu(a as u32) * (z / scale).powu(b as u32)
    });
    // the smallest right singular vector of A is the lowest eigenvector of A^* A
    let gram = design.adjoint() * &design;
    let (vals, vecs) = crate::linalg::hermitian_eigen(&gram);
    let top = vals[unknowns - 1].max(1e-300);
    if unknowns > 1 && vals[1] <= 1e-12 * top {
        return Err(BoundaryError::RankDeficient { points: locus.len(), unknowns });
    }
    let mut coeffs = CMat::from_fn(n, n, |a, b| vecs[(a * n + b, 0)] / scale.powi((a + b) as i32));
    coeffs /= cr(coeffs.norm());
    if let Some(first) = coeffs.transpose().iter().copied().find(|x| x.norm() > PHASE_ENTRY_MIN) {
        coeffs *= first.conj() / first.norm();
    }
    let fit_residual = locus
        .iter()
        .map(|&(w, z)| {
            let mut s = C64::default();
            for a in 0..n {
                for b in 0..n {
                    s += coeffs[(a, b)] * w.powu(a as u32) * z.powu(b as u32);
                }
            }
            s.norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    Ok(SpectralCurveFit { k, coeffs, fit_residual })
}

/// CSV `re_w,im_w,re_z,im_z,value`.
pub fn write_locus_csv<W: Write>(mut out: W, locus: &[LocusPoint]) -> std::io::Result<()> {
    writeln!(out, "re_w,im_w,re_z,im_z,value")?;
    for p in locus {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", p.w.re, p.w.im, p.z.re, p.z.im, p.value)?;
    }
    Ok(())
}

/// Row of the connection map: `lambda(w, z)` and the curvature coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConnectionRow {
    pub z: C64,
    pub lambda: C64,
    pub curvature: f64,
}

/// Connection and curvature over a grid of `z` for fixed `w`; points on or
/// near the singular set are skipped.
pub fn connection_map<F: MonopoleField + ?Sized>(
    f: &F,
    w: BoundaryPoint,
    z_grid: &ComplexGrid,
    opts: &ScatterOptions,
) -> Vec<ConnectionRow> {
    z_grid
        .points()
        .par_iter()
        .filter_map(|&z| {
            let zp = BoundaryPoint::Finite(z);
            let lambda = lambda_fd(f, w, zp, FD_STEP, opts).ok()?;
            let curvature = curvature_fd(f, zp, w, FD_STEP_2, opts).ok()?;
            Some(ConnectionRow { z, lambda, curvature })
        })
        .collect()
}

/// CSV `re_z,im_z,re_lambda,im_lambda,F`.
pub fn write_connection_csv<W: Write>(mut out: W, rows: &[ConnectionRow]) -> std::io::Result<()> {
    writeln!(out, "re_z,im_z,re_lambda,im_lambda,F")?;
    for r in rows {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", r.z.re, r.z.im, r.lambda.re, r.lambda.im, r.curvature)?;
    }
    Ok(())
}

/// Real design helper for tests of transverse vanishing: least-squares slope
/// of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let a = DMatrix::from_fn(xs.len(), 1, |i, _| lx[i] - mx);
    let b = DVector::from_fn(xs.len(), |i, _| ly[i] - my);
    (a.transpose() * b)[0] / (a.transpose() * a)[0]
}
