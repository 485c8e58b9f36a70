//! Decaying solutions of the scattering equations along a geodesic.
//!
//! Along `gamma(t)` with `A_t = sum_i A_i dx^i/dt`,
//!
//! ```text
//! s-type:  s' = ( i Phi - A_t) s,   s ~ e^{-m t} as t -> +inf
//! r-type:  r' = (-i Phi - A_t) r,   r ~ e^{+m t} as t -> -inf
//! ```
//!
//! Both are integrated in the bounded variables `e^{m t} s` and `e^{-m t} r`
//! against their decay direction, starting at the truncation point from the
//! eigenvector of the Hermitian matrix `i Phi` with eigenvalue near `-m`.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{SVector, Vector3};
use thiserror::Error;

use crate::field::MonopoleField;
use crate::geom::{Geodesic, GeomError};
use crate::linalg::{c, cr, fix_phase2, hermitian_eigen2, Mat2, Vec2, C64, I};
use crate::ode::{self, DenseSolution, Dop853Options, OdeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatterError {
    #[error("truncation too short: |Phi| = {phi_norm:.4} at t = {t} is below 0.9 m = {bound:.4}")]
    TruncationTooShort { t: f64, phi_norm: f64, bound: f64 },
    #[error("eigenvalue gap {gap:.4} of i Phi at the truncation point is below 0.5 m")]
    EigenGapTooSmall { gap: f64 },
    #[error("pairing needs an r-type and an s-type solution on the same geodesic")]
    MismatchedGeodesic,
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Which end a solution decays at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    /// `(d_t^A - i Phi) s = 0`, decaying as `t -> +inf`.
    S,
    /// `(d_t^A + i Phi) r = 0`, decaying as `t -> -inf`.
    R,
}

impl Sign {
    pub fn as_int(&self) -> i32 {
        match self {
            Sign::S => 1,
            Sign::R => -1,
        }
    }
}

/// End of a geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Target accuracy of pairings; drives the automatic truncation length.
    pub tol: f64,
    /// Explicit truncation half-length; `None` selects it from `tol` and `m`.
    pub t_max: Option<f64>,
    /// Deterministic extra phase applied to every initial eigenvector.
    pub phase_seed: u64,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, tol: 1e-8, t_max: None, phase_seed: 0 }
    }
}

/// Largest automatic truncation: beyond it the field is at its asymptotic
/// value to double precision and nothing is gained.
pub const T_CAP: f64 = 24.0;

impl ScatterOptions {
    /// `T = max(8, ln(1/tol) / m)`, with the corrections to the asymptotic
    /// Higgs field (decaying like `e^{-t}`) also bounded by `tol`.
    pub fn truncation(&self, m: f64) -> f64 {
        if let Some(t) = self.t_max {
            return t;
        }
        let ln = (1.0 / self.tol).ln();
        f64::max(8.0, f64::max(ln / m, ln)).min(T_CAP)
    }

    fn phase(&self) -> C64 {
        if self.phase_seed == 0 {
            return cr(1.0);
        }
        // golden-ratio sequence of angles
        let frac = (self.phase_seed as f64 * 0.618_033_988_749_894_9).fract();
        C64::from_polar(1.0, TAU * frac)
    }

    fn ode(&self) -> Dop853Options {
        Dop853Options { rtol: self.rtol, atol: self.atol, ..Default::default() }
    }
}

/// A decaying solution with its dense trajectory.
#[derive(Debug, Clone)]
pub struct ScatterSolution {
    pub geodesic: Geodesic,
    pub sign: Sign,
    pub mass: f64,
    /// `max |e^{+-2mt} |sol(t)|^2 - 1|` over the outer half of the decaying end.
    pub norm_residual: f64,
    trajectory: DenseSolution<4>,
    phase: C64,
}

fn pack(v: &Vec2) -> SVector<f64, 4> {
    SVector::<f64, 4>::new(v[0].re, v[0].im, v[1].re, v[1].im)
}

fn unpack(y: &SVector<f64, 4>) -> Vec2 {
    Vec2::new(c(y[0], y[1]), c(y[2], y[3]))
}

/// Hermitian matrix `i Phi` and the pulled-back connection at parameter `t`.
fn frame<F: MonopoleField + ?Sized>(f: &F, g: &Geodesic, t: f64) -> (Mat2, Mat2) {
    let (x, v): (_, Vector3<f64>) = g.eval(t);
    let sample = f.eval(&x);
    let a_t = sample.a[0] * cr(v[0]) + sample.a[1] * cr(v[1]) + sample.a[2] * cr(v[2]);
    (sample.phi * I, a_t)
}

/// The decaying solution of the given type along `g` (truncated at
/// `g.t_max`).
pub fn decaying_solution<F: MonopoleField + ?Sized>(
    f: &F,
    g: &Geodesic,
    sign: Sign,
    opts: &ScatterOptions,
) -> Result<ScatterSolution, ScatterError> {
    let m = f.mass();
    let t_max = g.t_max;
    let (t0, t1) = match sign {
        Sign::S => (t_max, -t_max),
        Sign::R => (-t_max, t_max),
    };
    let (i_phi, _) = frame(f, g, t0);
    let ([lo, hi], vecs) = hermitian_eigen2(&i_phi);
    let phi_norm = 0.5 * (hi - lo);
    if phi_norm <= 0.9 * m {
        return Err(ScatterError::TruncationTooShort { t: t0, phi_norm, bound: 0.9 * m });
    }
    if hi - lo < 0.5 * m {
        return Err(ScatterError::EigenGapTooSmall { gap: hi - lo });
    }
    let init = fix_phase2(&vecs[0]);

    let shift = match sign {
        Sign::S => m,
        Sign::R => -m,
    };
    let higgs_sign = match sign {
        Sign::S => cr(1.0),
        Sign::R => cr(-1.0),
    };
    let rhs = |t: f64, y: &SVector<f64, 4>| {
        let (i_phi, a_t) = frame(f, g, t);
        let u = unpack(y);
        let du = (i_phi * higgs_sign - a_t) * u + u * cr(shift);
        pack(&du)
    };
    let trajectory = ode::integrate(rhs, t0, pack(&init), t1, &opts.ode())?;

    let mut sol =
        ScatterSolution { geodesic: g.clone(), sign, mass: m, norm_residual: 0.0, trajectory, phase: opts.phase() };
    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        let t = t0 * (0.5 + 0.025 * i as f64);
        let dev = (sol.rescaled(t)?.norm_squared() - 1.0).abs();
        worst = worst.max(dev);
    }
    sol.norm_residual = worst;
    Ok(sol)
}

impl ScatterSolution {
    /// `e^{m t} s(t)` for s-type, `e^{-m t} r(t)` for r-type.
    pub fn rescaled(&self, t: f64) -> Result<Vec2, ScatterError> {
        Ok(unpack(&self.trajectory.eval(t)?) * self.phase)
    }

    /// The solution itself.
    pub fn value(&self, t: f64) -> Result<Vec2, ScatterError> {
        let scale = match self.sign {
            Sign::S => (-self.mass * t).exp(),
            Sign::R => (self.mass * t).exp(),
        };
        Ok(self.rescaled(t)? * cr(scale))
    }

    /// Unit vector of the renormalized solution at a truncation end.
    pub fn boundary_limit(&self, at: End) -> Vec2 {
        let t = match at {
            End::Start => -self.geodesic.t_max,
            End::End => self.geodesic.t_max,
        };
        let v = self.rescaled(t).expect("truncation ends are inside the trajectory");
        v / cr(v.norm())
    }

    /// The same solution multiplied by a unit phase.
    pub fn with_phase(&self, phase: C64) -> ScatterSolution {
        ScatterSolution { phase: self.phase * phase, ..self.clone() }
    }

    pub fn evals(&self) -> usize {
        self.trajectory.evals
    }

    /// Accepted integration mesh (parameter values).
    pub fn mesh(&self) -> impl Iterator<Item = f64> + '_ {
        self.trajectory.mesh.iter().map(|(t, _)| *t)
    }

    /// Trajectory dump: `t, re_1, im_1, re_2, im_2, norm` on a uniform grid.
    pub fn write_csv<W: Write>(&self, mut out: W, n: usize) -> std::io::Result<()> {
        writeln!(out, "t,re_1,im_1,re_2,im_2,norm")?;
        let t_max = self.geodesic.t_max;
        for i in 0..=n {
            let t = -t_max + 2.0 * t_max * i as f64 / n.max(1) as f64;
            let v = self.value(t).map_err(|e| std::io::Error::other(e.to_string()))?;
            writeln!(
                out,
                "{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                v[0].re,
                v[0].im,
                v[1].re,
                v[1].im,
                v.norm()
            )?;
        }
        Ok(())
    }
}

/// Value of `(r(t), s(t))` and its maximal deviation along the geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    pub value: C64,
    pub constancy_dev: f64,
}

/// `(r, s) = r^dagger s`, evaluated at `t = 0`, with the constancy diagnostic.
pub fn pairing(r: &ScatterSolution, s: &ScatterSolution) -> Result<Pairing, ScatterError> {
    if r.sign != Sign::R || s.sign != Sign::S || r.geodesic != s.geodesic {
        return Err(ScatterError::MismatchedGeodesic);
    }
    let at = |t: f64| -> Result<C64, ScatterError> { Ok(r.rescaled(t)?.dotc(&s.rescaled(t)?)) };
    let value = at(0.0)?;
    let t_max = r.geodesic.t_max;
    let mut dev: f64 = 0.0;
    let n = 64;
    for i in 0..=n {
        let t = -t_max + 2.0 * t_max * i as f64 / n as f64;
        dev = dev.max((at(t)? - value).norm());
    }
    Ok(Pairing { value, constancy_dev: dev })
}

/// Pairing with the full error budget used by the n-point functions.
#[derive(Debug, Clone)]
pub struct PairingResult {
    pub r: ScatterSolution,
    pub s: ScatterSolution,
    pub value: C64,
    pub constancy_dev: f64,
    /// Change of the pairing when the truncation grows by a factor 1.25.
    pub drift: f64,
}

impl PairingResult {
    pub fn err(&self) -> f64 {
        self.constancy_dev + self.drift
    }
}

/// Solve both decaying solutions on the oriented geodesic `a -> b`, pair
/// them, and measure the truncation drift.
pub fn solve_pairing<F: MonopoleField + ?Sized>(
    f: &F,
    g: &Geodesic,
    opts: &ScatterOptions,
) -> Result<PairingResult, ScatterError> {
    let r = decaying_solution(f, g, Sign::R, opts)?;
    let s = decaying_solution(f, g, Sign::S, opts)?;
    let p = pairing(&r, &s)?;
    let long = g.with_t_max(1.25 * g.t_max);
    let r2 = decaying_solution(f, &long, Sign::R, opts)?;
    let s2 = decaying_solution(f, &long, Sign::S, opts)?;
    let p2 = pairing(&r2, &s2)?;
    let drift = (p2.value.norm() - p.value.norm()).abs();
    Ok(PairingResult { r, s, value: p.value, constancy_dev: p.constancy_dev, drift })
}
