//! Boundary n-point functions assembled from scattering pairings.
//!
//! For an ordered tuple `z_1, ..., z_n` the value is the product of the
//! pairings `(r_i, s_i)` along the cycle of geodesics `z_i -> z_{i+1}`, after
//! re-phasing each `r_i` so that its boundary vector at `z_i` equals that of
//! `s_{i-1}` (cyclically). Consecutive points closer than
//! [`COALESCENCE_CHORD`] are merged first, using `P_z^2 = P_z`.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::field::MonopoleField;
use crate::geom::{make_geodesic, BoundaryPoint, GeomError};
use crate::linalg::{c, cr, C64};
use crate::scatter::{solve_pairing, End, PairingResult, ScatterError, ScatterOptions};

/// Consecutive points closer than this (chordal) are treated as equal.
pub const COALESCENCE_CHORD: f64 = 1e-3;
/// Largest admissible angle between boundary vectors that are chained.
pub const CHAIN_ANGLE_TOL: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NpointError {
    #[error("tuple must contain at least one point")]
    EmptyTuple,
    #[error("boundary vectors at point {index} are not parallel (angle {angle:.3e} rad): integration error")]
    ChainingFailed { index: usize, angle: f64 },
    #[error("no probe point gives a usable denominator")]
    DegenerateProbe,
    #[error(transparent)]
    Scatter(#[from] ScatterError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// An ordered tuple of boundary points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTuple {
    pub points: Vec<BoundaryPoint>,
}

impl PointTuple {
    pub fn new(points: Vec<BoundaryPoint>) -> Result<Self, NpointError> {
        if points.is_empty() {
            return Err(NpointError::EmptyTuple);
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// For each `i`, whether `z_i` and `z_{i+1}` (cyclically) are distinct.
    pub fn distinct_flags(&self) -> Vec<bool> {
        let n = self.points.len();
        (0..n).map(|i| self.points[i].chordal(&self.points[(i + 1) % n]) >= COALESCENCE_CHORD).collect()
    }

    pub fn rotated(&self, k: usize) -> PointTuple {
        let mut p = self.points.clone();
        p.rotate_left(k % self.points.len());
        PointTuple { points: p }
    }

    pub fn reversed(&self) -> PointTuple {
        let mut p = self.points.clone();
        p.reverse();
        PointTuple { points: p }
    }

    /// Concatenation of tuples, i.e. the product of the corresponding words.
    pub fn concat(parts: &[&PointTuple]) -> PointTuple {
        PointTuple { points: parts.iter().flat_map(|t| t.points.iter().copied()).collect() }
    }

    /// Random tuple of `n` points whose cyclically consecutive points are at
    /// least `min_sep` apart in chordal distance.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, min_sep: f64, rng: &mut R) -> PointTuple {
        loop {
            let points: Vec<BoundaryPoint> = (0..n.max(1)).map(|_| BoundaryPoint::random(rng)).collect();
            let t = PointTuple { points };
            let ok = (0..t.len()).all(|i| t.len() == 1 || t.points[i].chordal(&t.points[(i + 1) % t.len()]) >= min_sep);
            if ok {
                return t;
            }
        }
    }

    /// Merge cyclically consecutive coincident points.
    pub fn reduced(&self) -> PointTuple {
        let mut out: Vec<BoundaryPoint> = Vec::with_capacity(self.points.len());
        for p in &self.points {
            if out.last().is_none_or(|q| q.chordal(p) >= COALESCENCE_CHORD) {
                out.push(*p);
            }
        }
        while out.len() > 1 && out[0].chordal(&out[out.len() - 1]) < COALESCENCE_CHORD {
            out.pop();
        }
        PointTuple { points: out }
    }
}

/// Value of an n-point function with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NPointValue {
    pub value: C64,
    pub err: f64,
    /// Number of points left after coalescence reduction.
    pub reduced_len: usize,
    /// Whether coalescent points were merged.
    pub reduced: bool,
}

/// `<P_{z1} P_{z2}> = |(r, s)|^2` on the geodesic `z1 -> z2`.
pub fn two_point<F: MonopoleField + ?Sized>(
    f: &F,
    z1: BoundaryPoint,
    z2: BoundaryPoint,
    opts: &ScatterOptions,
) -> Result<NPointValue, NpointError> {
    if z1.chordal(&z2) < COALESCENCE_CHORD {
        return Ok(NPointValue { value: cr(1.0), err: 0.0, reduced_len: 1, reduced: true });
    }
    let p = pairing_between(f, z1, z2, opts)?;
    let modulus = p.value.norm();
    Ok(NPointValue { value: cr(modulus * modulus), err: 2.0 * modulus * p.err() + p.err() * p.err(), reduced_len: 2, reduced: false })
}

fn pairing_between<F: MonopoleField + ?Sized>(
    f: &F,
    a: BoundaryPoint,
    b: BoundaryPoint,
    opts: &ScatterOptions,
) -> Result<PairingResult, NpointError> {
    let g = make_geodesic(a, b, opts.truncation(f.mass()))?;
    Ok(solve_pairing(f, &g, opts)?)
}

/// `<P_{z1} ... P_{zn}>` by phase-chained pairings around the geodesic cycle.
pub fn n_point<F: MonopoleField + ?Sized>(
    f: &F,
    tuple: &PointTuple,
    opts: &ScatterOptions,
) -> Result<NPointValue, NpointError> {
    if tuple.is_empty() {
        return Err(NpointError::EmptyTuple);
    }
    let red = tuple.reduced();
    let reduced = red.len() != tuple.len();
    let n = red.len();
    if n == 1 {
        return Ok(NPointValue { value: cr(1.0), err: 0.0, reduced_len: 1, reduced });
    }
    if n == 2 {
        let mut v = two_point(f, red.points[0], red.points[1], opts)?;
        v.reduced = reduced;
        return Ok(v);
    }
    let pairings: Vec<PairingResult> = (0..n)
        .into_par_iter()
        .map(|i| pairing_between(f, red.points[i], red.points[(i + 1) % n], opts))
        .collect::<Result<_, _>>()?;

    let mut value = cr(1.0);
    let mut err = 0.0;
    for (i, p) in pairings.iter().enumerate() {
        let prev = &pairings[(i + n - 1) % n];
        let b_r = p.r.boundary_limit(End::Start);
        let b_s = prev.s.boundary_limit(End::End);
        let overlap = b_r.dotc(&b_s);
        let angle = overlap.norm().min(1.0).acos();
        if angle > CHAIN_ANGLE_TOL {
            return Err(NpointError::ChainingFailed { index: i, angle });
        }
        let phase = overlap / overlap.norm();
        value *= phase.conj() * p.value;
        err += p.err();
    }
    Ok(NPointValue { value, err, reduced_len: n, reduced })
}

/// Matrix of two-point functions with unit diagonal.
pub fn gram_matrix<F: MonopoleField + ?Sized>(
    f: &F,
    points: &[BoundaryPoint],
    opts: &ScatterOptions,
) -> Result<DMatrix<f64>, NpointError> {
    let n = points.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| two_point(f, points[i], points[j], opts).map(|v| v.value.re))
        .collect::<Result<_, _>>()?;
    let mut g = DMatrix::<f64>::identity(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        g[(i, j)] = v;
        g[(j, i)] = v;
    }
    Ok(g)
}

/// Ratio `<P_{z0} P_{z1} a P_{z2}> / <P_{z0} P_{z1} b P_{z2}>`, using the first
/// probe `z0` whose denominator exceeds ten times its error.
pub fn relation_constant<F: MonopoleField + ?Sized>(
    f: &F,
    probes: &[BoundaryPoint],
    z1: BoundaryPoint,
    z2: BoundaryPoint,
    a: &PointTuple,
    b: &PointTuple,
    opts: &ScatterOptions,
) -> Result<(C64, f64), NpointError> {
    let head = PointTuple { points: vec![BoundaryPoint::Infinity, z1] };
    let tail = PointTuple { points: vec![z2] };
    for &z0 in probes {
        let mut h = head.clone();
        h.points[0] = z0;
        let den = n_point(f, &PointTuple::concat(&[&h, b, &tail]), opts)?;
        if den.value.norm() <= 10.0 * den.err.max(1e-12) {
            continue;
        }
        if a == b {
            return Ok((cr(1.0), 0.0));
        }
        let num = n_point(f, &PointTuple::concat(&[&h, a, &tail]), opts)?;
        let ratio = num.value / den.value;
        let err = (num.err + ratio.norm() * den.err) / den.value.norm();
        return Ok((ratio, err));
    }
    Err(NpointError::DegenerateProbe)
}

/// Central-difference Wirtinger derivatives `(d/dz, d/dzbar)` of an n-point
/// value with respect to the point at `index` (which must be finite).
pub fn npoint_derivative<F: MonopoleField + ?Sized>(
    f: &F,
    tuple: &PointTuple,
    index: usize,
    h: f64,
    opts: &ScatterOptions,
) -> Result<(C64, C64), NpointError> {
    let z = tuple.points[index].finite().ok_or(NpointError::Geom(GeomError::Parse("inf".into())))?;
    let at = |dz: C64| -> Result<C64, NpointError> {
        let mut t = tuple.clone();
        t.points[index] = BoundaryPoint::Finite(z + dz);
        Ok(n_point(f, &t, opts)?.value)
    };
    let dx = (at(c(h, 0.0))? - at(c(-h, 0.0))?) / cr(2.0 * h);
    let dy = (at(c(0.0, h))? - at(c(0.0, -h))?) / cr(2.0 * h);
    let i = c(0.0, 1.0);
    Ok(((dx - i * dy) * cr(0.5), (dx + i * dy) * cr(0.5)))
}

/// CSV rows `z1, ..., zn, re, im, err`.
pub fn write_npoint_csv<W: Write>(
    mut out: W,
    n: usize,
    rows: &[(PointTuple, NPointValue)],
) -> std::io::Result<()> {
    let header: Vec<String> = (1..=n).map(|i| format!("z{i}")).chain(["re".into(), "im".into(), "err".into()]).collect();
    writeln!(out, "{}", header.join(","))?;
    for (t, v) in rows {
        let mut cells: Vec<String> = t.points.iter().map(|p| p.to_string()).collect();
        cells.resize(n, String::new());
        cells.push(format!("{:.16e}", v.value.re));
        cells.push(format!("{:.16e}", v.value.im));
        cells.push(format!("{:.16e}", v.err));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{abelian_field, hedgehog_field};
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pts(v: &[(f64, f64)]) -> PointTuple {
        PointTuple::new(v.iter().map(|&(a, b)| BoundaryPoint::new(a, b)).collect()).unwrap()
    }

    #[test]
    fn abelian_values_are_one() {
        let f = abelian_field(1.0).unwrap();
        let o = ScatterOptions::default();
        let v = two_point(&f, BoundaryPoint::new(0.3, 0.1), BoundaryPoint::new(-2.0, 1.0), &o).unwrap();
        assert!((v.value - cr(1.0)).norm() < 1e-6);
        let t = PointTuple::new(vec![BoundaryPoint::new(0.0, 0.0), BoundaryPoint::new(1.0, 0.0), BoundaryPoint::Infinity])
            .unwrap();
        assert!((n_point(&f, &t, &o).unwrap().value - cr(1.0)).norm() < 1e-6);
    }

    #[test]
    fn hedgehog_two_point_examples() {
        let f = hedgehog_field(1.0).unwrap();
        let o = ScatterOptions::default();
        let v = two_point(&f, BoundaryPoint::new(0.0, 0.0), BoundaryPoint::Infinity, &o).unwrap();
        assert!(v.value.norm() < 1e-3);
        let v = two_point(&f, BoundaryPoint::new(1.0, 0.0), BoundaryPoint::new(0.0, 1.0), &o).unwrap();
        assert!((v.value.re - 0.5).abs() < 1e-2);
        assert_eq!(v.value.im, 0.0);
    }

    #[test]
    fn hedgehog_three_point() {
        let f = hedgehog_field(1.0).unwrap();
        let v = n_point(&f, &pts(&[(1.0, 0.0), (0.0, 1.0), (0.0, 2.0)]), &ScatterOptions::default()).unwrap();
        assert!((v.value - c(0.45, -0.15)).norm() < 2e-2, "{}", v.value);
    }

    #[test]
    fn coalescent_tuple_reduces() {
        let f = hedgehog_field(1.0).unwrap();
        let o = ScatterOptions::default();
        let full = pts(&[(1.0, 0.0), (0.0, 1.0), (0.0, 1.0), (0.0, 2.0)]);
        let short = pts(&[(1.0, 0.0), (0.0, 1.0), (0.0, 2.0)]);
        let a = n_point(&f, &full, &o).unwrap();
        let b = n_point(&f, &short, &o).unwrap();
        assert!(a.reduced && !b.reduced);
        assert!((a.value - b.value).norm() < 1e-12);
        let one = n_point(&f, &pts(&[(0.0, 0.0), (0.0, 0.0)]), &o).unwrap();
        assert_eq!(one.value, cr(1.0));
        assert_eq!(one.reduced_len, 1);
    }

    #[test]
    fn reduction_is_cyclic() {
        let t = pts(&[(1.0, 0.0), (2.0, 0.0), (2.0, 0.0), (1.0, 0.0)]);
        assert_eq!(t.reduced(), pts(&[(1.0, 0.0), (2.0, 0.0)]));
        assert_eq!(t.distinct_flags(), vec![true, false, true, false]);
    }

    #[test]
    fn gram_examples() {
        let f = hedgehog_field(1.0).unwrap();
        let g = gram_matrix(&f, &[BoundaryPoint::new(1.0, 0.0), BoundaryPoint::new(0.0, 1.0)], &ScatterOptions::default())
            .unwrap();
        assert!((g[(0, 1)] - 0.5).abs() < 1e-2 && g[(0, 0)] == 1.0);
        let a = abelian_field(1.0).unwrap();
        let g = gram_matrix(
            &a,
            &[BoundaryPoint::new(1.0, 0.0), BoundaryPoint::new(0.0, 1.0), BoundaryPoint::Infinity],
            &ScatterOptions::default(),
        )
        .unwrap();
        assert!((g - DMatrix::from_element(3, 3, 1.0)).norm() < 1e-6);
    }

    #[test]
    fn relation_constant_examples() {
        let f = hedgehog_field(1.0).unwrap();
        let o = ScatterOptions::default();
        let a = pts(&[(0.0, 1.0)]);
        let b = pts(&[(0.0, 2.0)]);
        let z1 = BoundaryPoint::new(1.0, 0.0);
        let z2 = BoundaryPoint::new(-1.0, 0.3);
        let (c1, _) = relation_constant(&f, &[BoundaryPoint::new(0.5, 0.5)], z1, z2, &a, &b, &o).unwrap();
        let (c2, _) = relation_constant(&f, &[BoundaryPoint::new(-0.7, 1.4)], z1, z2, &a, &b, &o).unwrap();
        assert!((c1 - c2).norm() < 2e-2, "{c1} vs {c2}");
        let (same, _) = relation_constant(&f, &[BoundaryPoint::new(0.5, 0.5)], z1, z2, &a, &a, &o).unwrap();
        assert_eq!(same, cr(1.0));
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        let t = pts(&[(1.0, 0.0), (0.0, 1.0)]);
        let v = NPointValue { value: c(0.5, 0.0), err: 1e-9, reduced_len: 2, reduced: false };
        write_npoint_csv(&mut buf, 2, &[(t, v)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("z1,z2,re,im,err\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn hedgehog_values_are_cyclic_and_bounded(seed in any::<u64>(), n in 2usize..5) {
            let f = hedgehog_field(1.0).unwrap();
            let o = ScatterOptions::default();
            let t = PointTuple::random(n, 0.2, &mut ChaCha8Rng::seed_from_u64(seed));
            let v = n_point(&f, &t, &o).unwrap();
            prop_assert!(v.value.norm() <= 1.0 + v.err);
            let rot = n_point(&f, &t.rotated(1), &o).unwrap();
            prop_assert!((rot.value - v.value).norm() < 1e-6);
            let rev = n_point(&f, &t.reversed(), &o).unwrap();
            prop_assert!((rev.value - v.value.conj()).norm() < 1e-6);
        }

        #[test]
        fn reduction_removes_coalescent_neighbours(seed in any::<u64>(), n in 2usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = PointTuple::random(n, 0.2, &mut rng);
            let doubled = PointTuple::new(base.points.iter().flat_map(|&z| [z, z]).collect()).unwrap();
            let r = doubled.reduced();
            prop_assert_eq!(r.points.clone(), base.reduced().points);
            prop_assert!(r.distinct_flags().iter().all(|&d| d) || r.len() == 1);
            prop_assert_eq!(r.reduced().points, r.points);
        }
    }
}
