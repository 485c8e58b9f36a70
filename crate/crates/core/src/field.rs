//! SU(2) monopole fields on the ball model.
//!
//! Fields are evaluation maps `x -> (A_1, A_2, A_3, Phi)` in Cartesian ball
//! coordinates, valued in anti-Hermitian traceless 2x2 matrices. With the
//! conformal factor `lambda = 2 / (1 - |x|^2)` the Bogomolny equation reads
//!
//! ```text
//! d_i Phi + [A_i, Phi] = ORIENTATION * eps_ijk F_jk / (2 lambda)
//! ```

use std::io::Write;
use std::sync::Arc;

use nalgebra::Vector3;
use rand_distr::Distribution;
use thiserror::Error;

use crate::geom::{BallIsometry, BulkPoint};
use crate::linalg::{c, commutator, cr, levi_civita, op_norm2, pauli, su2_basis, Mat2, I};
use crate::ode::{self, DenseSolution, Dop853Options};

/// Sign of the Hodge star in the Bogomolny equation. With `-1` the built-in
/// hedgehog `Phi = -i h(rho) xhat.sigma` is a solution and its boundary data
/// is holomorphic in the chart `z = (x1 + i x2) / (1 - x3)`.
pub const ORIENTATION: f64 = -1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("radial shooting did not converge: {0}")]
    SolveFailed(String),
    #[error("finite-difference step too large: residual {coarse:.3e} vs {fine:.3e} under refinement")]
    StepTooLarge { coarse: f64, fine: f64 },
    #[error("mass must be positive, got {0}")]
    InvalidMass(f64),
    #[error("i/o error: {0}")]
    Io(String),
}

/// An anti-Hermitian traceless 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SU2Value(pub Mat2);

impl SU2Value {
    pub fn is_valid(&self, tol: f64) -> bool {
        let m = &self.0;
        (m + m.adjoint()).norm() <= tol && m.trace().norm() <= tol
    }

    pub fn norm(&self) -> f64 {
        op_norm2(&self.0)
    }
}

/// Gauge potential components and Higgs field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub a: [Mat2; 3],
    pub phi: Mat2,
}

impl FieldSample {
    pub fn zero() -> Self {
        Self { a: [Mat2::zeros(); 3], phi: Mat2::zeros() }
    }

    /// Operator norm of the Higgs field.
    pub fn phi_norm(&self) -> f64 {
        op_norm2(&self.phi)
    }
}

/// A monopole configuration: an evaluation map plus its mass and charge.
pub trait MonopoleField: Send + Sync {
    fn eval(&self, x: &BulkPoint) -> FieldSample;
    fn mass(&self) -> f64;
    fn charge(&self) -> u32;
    fn label(&self) -> String;
}

impl<F: MonopoleField + ?Sized> MonopoleField for Arc<F> {
    fn eval(&self, x: &BulkPoint) -> FieldSample {
        (**self).eval(x)
    }
    fn mass(&self) -> f64 {
        (**self).mass()
    }
    fn charge(&self) -> u32 {
        (**self).charge()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<F: MonopoleField + ?Sized> MonopoleField for Box<F> {
    fn eval(&self, x: &BulkPoint) -> FieldSample {
        (**self).eval(x)
    }
    fn mass(&self) -> f64 {
        (**self).mass()
    }
    fn charge(&self) -> u32 {
        (**self).charge()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// Constant Higgs field `diag(i m, -i m)` with vanishing connection.
#[derive(Debug, Clone, Copy)]
pub struct AbelianField {
    mass: f64,
    phi: Mat2,
}

pub fn abelian_field(m: f64) -> Result<AbelianField, FieldError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(FieldError::InvalidMass(m));
    }
    Ok(AbelianField { mass: m, phi: Mat2::new(c(0.0, m), cr(0.0), cr(0.0), c(0.0, -m)) })
}

impl MonopoleField for AbelianField {
    fn eval(&self, _x: &BulkPoint) -> FieldSample {
        FieldSample { a: [Mat2::zeros(); 3], phi: self.phi }
    }
    fn mass(&self) -> f64 {
        self.mass
    }
    fn charge(&self) -> u32 {
        0
    }
    fn label(&self) -> String {
        format!("abelian(m={})", self.mass)
    }
}

/// Radial profiles `h(rho)` (Higgs) and `K(rho)` (connection) of the
/// spherically symmetric charge-one solution, from
/// `h' = (1 - K^2) / (2 sinh^2 rho)`, `K' = -2 h K`, `K(0) = 1`, `h(0) = 0`,
/// `h(inf) = m`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    mass: f64,
    slope: f64,
    rho0: f64,
    rho_max: f64,
    table: DenseSolution<2>,
}

const PROFILE_RHO0: f64 = 1e-3;
const PROFILE_RHO_MAX: f64 = 14.0;
const BLEND_START: f64 = 7.0;
const BLEND_END: f64 = 9.0;

/// C^2 ramp from 0 (for `s <= 0`) to 1 (for `s >= 1`).
fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

impl RadialProfile {
    pub fn solve(m: f64) -> Result<Self, FieldError> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(FieldError::InvalidMass(m));
        }
        let opts = Dop853Options { rtol: 1e-13, atol: 1e-16, ..Default::default() };
        let shoot = |slope: f64| -> Result<(f64, DenseSolution<2>), FieldError> {
            let y0 = series(slope, PROFILE_RHO0);
            let sol = ode::integrate(rhs, PROFILE_RHO0, nalgebra::Vector2::new(y0.0, y0.1), PROFILE_RHO_MAX, &opts)
                .map_err(|e| FieldError::SolveFailed(e.to_string()))?;
            let end = sol.y_end();
            let h_inf = end[0] + 0.5 * (coth(PROFILE_RHO_MAX) - 1.0);
            Ok((h_inf - m, sol))
        };
        // h(inf) increases with the slope h'(0); bracket, then bisect/secant
        let mut lo = 0.0;
        let mut f_lo = -m;
        let mut hi = (m * (m + 1.0)).max(0.5);
        let mut f_hi = shoot(hi)?.0;
        let mut guard = 0;
        while f_hi <= 0.0 {
            lo = hi;
            f_lo = f_hi;
            hi *= 2.0;
            f_hi = shoot(hi)?.0;
            guard += 1;
            if guard > 60 {
                return Err(FieldError::SolveFailed("could not bracket the shooting slope".into()));
            }
        }
        let mut best = None;
        for _ in 0..200 {
            // regula falsi (Illinois) step, guarded by bisection
            let mut mid = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let (f_mid, sol) = shoot(mid)?;
            if f_mid.abs() < 1e-14 * m.max(1.0) || (hi - lo) < 1e-15 * hi {
                best = Some((mid, sol));
                break;
            }
            if (f_mid > 0.0) == (f_hi > 0.0) {
                hi = mid;
                f_hi = f_mid;
                f_lo *= 0.5;
            } else {
                lo = mid;
                f_lo = f_mid;
                f_hi *= 0.5;
            }
            best = Some((mid, sol));
        }
        let (slope, table) = best.ok_or_else(|| FieldError::SolveFailed("no iterations".into()))?;
        let (h_end, k_end) = {
            let e = table.y_end();
            (e[0], e[1])
        };
        if !(h_end.is_finite() && k_end.is_finite()) || k_end.abs() > 1e-2 {
            return Err(FieldError::SolveFailed(format!("profile end state h = {h_end}, K = {k_end}")));
        }
        Ok(Self { mass: m, slope, rho0: PROFILE_RHO0, rho_max: PROFILE_RHO_MAX, table })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `h'(0)`, the shooting parameter.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// `(h(rho), K(rho))`.
    ///
    /// Far out, `m - h` is far below the integration tolerance, so `h` is
    /// blended into its asymptotic form `m - (coth rho - 1) / 2` (the neglected
    /// term is of relative size `K^2`), which keeps `h < m` strict wherever it
    /// is representable.
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        if rho <= self.rho0 {
            return series(self.slope, rho);
        }
        let asymptotic_h = self.mass - 0.5 * (coth(rho) - 1.0);
        if rho > self.rho_max {
            let end = self.table.y_end();
            // K' = -2 h K integrated with the asymptotic form of h
            let log_sinh = |r: f64| r + (-(-2.0 * r).exp()).ln_1p() - std::f64::consts::LN_2;
            let integral = self.mass * (rho - self.rho_max)
                - 0.5 * ((log_sinh(rho) - rho) - (log_sinh(self.rho_max) - self.rho_max));
            return (asymptotic_h, end[1] * (-2.0 * integral).exp());
        }
        let y = self.table.eval(rho).expect("rho inside the table range");
        let w = smoothstep((rho - BLEND_START) / (BLEND_END - BLEND_START));
        ((1.0 - w) * y[0] + w * asymptotic_h, y[1])
    }

    /// Write `rho, h, a` rows (with `a = K`) on a uniform grid.
    pub fn write_csv<W: Write>(&self, mut out: W, rho_max: f64, n: usize) -> Result<(), FieldError> {
        let io = |e: std::io::Error| FieldError::Io(e.to_string());
        writeln!(out, "rho,h,a").map_err(io)?;
        for i in 0..=n {
            let rho = rho_max * i as f64 / n.max(1) as f64;
            let (h, k) = self.eval(rho);
            writeln!(out, "{rho:.16e},{h:.16e},{k:.16e}").map_err(io)?;
        }
        Ok(())
    }
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

fn rhs(rho: f64, y: &nalgebra::Vector2<f64>) -> nalgebra::Vector2<f64> {
    let s = rho.sinh();
    nalgebra::Vector2::new((1.0 - y[1] * y[1]) / (2.0 * s * s), -2.0 * y[0] * y[1])
}

/// Regular series at the origin for slope `c = h'(0)`.
fn series(slope: f64, rho: f64) -> (f64, f64) {
    let h3 = -0.4 * (slope * slope + slope / 3.0);
    let k4 = 0.5 * (slope * slope - h3);
    let r2 = rho * rho;
    (slope * rho + h3 * rho * r2, 1.0 - slope * r2 + k4 * r2 * r2)
}

/// Spherically symmetric charge-one monopole centred at the origin.
#[derive(Debug, Clone)]
pub struct HedgehogField {
    profile: Arc<RadialProfile>,
}

pub fn hedgehog_field(m: f64) -> Result<HedgehogField, FieldError> {
    Ok(HedgehogField { profile: Arc::new(RadialProfile::solve(m)?) })
}

impl HedgehogField {
    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }
}

impl MonopoleField for HedgehogField {
    fn eval(&self, x: &BulkPoint) -> FieldSample {
        let xv = x.coords();
        let r = xv.norm();
        if r == 0.0 {
            return FieldSample::zero();
        }
        let (h, k) = self.profile.eval(x.rho());
        let s = pauli();
        let t = su2_basis();
        let phi = (s[0] * cr(xv[0]) + s[1] * cr(xv[1]) + s[2] * cr(xv[2])) * (-I * (h / r));
        let coef = (1.0 - k) / (r * r);
        let mut a = [Mat2::zeros(); 3];
        for (i, ai) in a.iter_mut().enumerate() {
            for (aa, ta) in t.iter().enumerate() {
                for j in 0..3 {
                    let e = levi_civita(aa, i, j);
                    if e != 0.0 {
                        *ai += ta * cr(coef * e * xv[j]);
                    }
                }
            }
        }
        FieldSample { a, phi }
    }
    fn mass(&self) -> f64 {
        self.profile.mass
    }
    fn charge(&self) -> u32 {
        1
    }
    fn label(&self) -> String {
        format!("hedgehog(m={})", self.profile.mass)
    }
}

/// A field given by an arbitrary closure, e.g. for probing the residual oracle
/// with configurations that are not solutions.
#[derive(Clone)]
pub struct CustomField {
    pub mass: f64,
    pub charge: u32,
    pub label: String,
    pub eval: Arc<dyn Fn(&BulkPoint) -> FieldSample + Send + Sync>,
}

impl MonopoleField for CustomField {
    fn eval(&self, x: &BulkPoint) -> FieldSample {
        (self.eval)(x)
    }
    fn mass(&self) -> f64 {
        self.mass
    }
    fn charge(&self) -> u32 {
        self.charge
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// A field transported by an isometry: `f'(x) = (iso^{-1})^* f`.
#[derive(Debug, Clone)]
pub struct TranslatedField<F> {
    inner: F,
    inverse: BallIsometry,
}

pub fn translate_field<F: MonopoleField>(f: F, iso: BallIsometry) -> TranslatedField<F> {
    TranslatedField { inner: f, inverse: iso.inverse() }
}

impl<F: MonopoleField> MonopoleField for TranslatedField<F> {
    fn eval(&self, x: &BulkPoint) -> FieldSample {
        let y = self.inverse.apply(x);
        let jac = self.inverse.jacobian(x);
        let s = self.inner.eval(&y);
        let mut a = [Mat2::zeros(); 3];
        for (i, ai) in a.iter_mut().enumerate() {
            for j in 0..3 {
                *ai += s.a[j] * cr(jac[(j, i)]);
            }
        }
        FieldSample { a, phi: s.phi }
    }
    fn mass(&self) -> f64 {
        self.inner.mass()
    }
    fn charge(&self) -> u32 {
        self.inner.charge()
    }
    fn label(&self) -> String {
        format!("translated({})", self.inner.label())
    }
}

/// A smooth map into SU(2).
pub trait GaugeMap: Send + Sync {
    fn value(&self, x: &BulkPoint) -> Mat2;

    /// `d g / d x_i`. Defaults to central differences with step
    /// `1e-5 (1 - |x|)`.
    fn derivative(&self, x: &BulkPoint, i: usize) -> Mat2 {
        let h = 1e-5 * (1.0 - x.coords().norm());
        let mut e = Vector3::zeros();
        e[i] = h;
        let plus = BulkPoint::new(x.coords() + e).expect("step stays inside the ball");
        let minus = BulkPoint::new(x.coords() - e).expect("step stays inside the ball");
        (self.value(&plus) - self.value(&minus)) / cr(2.0 * h)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantGauge(pub Mat2);

impl GaugeMap for ConstantGauge {
    fn value(&self, _x: &BulkPoint) -> Mat2 {
        self.0
    }
    fn derivative(&self, _x: &BulkPoint, _i: usize) -> Mat2 {
        Mat2::zeros()
    }
}

/// `g(x) = exp(theta(x) tau)` with `tau = i n.sigma` (`tau^2 = -1`) and
/// `theta(x) = amp (1 - |x|^2)^2 (1 + x.c) + slope (x.e)`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothGauge {
    pub amp: f64,
    pub c: Vector3<f64>,
    pub slope: f64,
    pub e: Vector3<f64>,
    pub n: Vector3<f64>,
}

impl SmoothGauge {
    /// Random gauge with amplitude and slope of order one.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        let mut unit = || {
            let v: [f64; 3] = rand_distr::UnitSphere.sample(rng);
            Vector3::from(v)
        };
        let (c, e, n) = (unit() * 0.5, unit(), unit());
        let amp = 0.5 + rng.random::<f64>();
        let slope = 0.2 + 0.6 * rng.random::<f64>();
        Self { amp, c, slope, e, n }
    }

    fn theta_grad(&self, x: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let g = 1.0 - x.norm_squared();
        let lin = 1.0 + x.dot(&self.c);
        let theta = self.amp * g * g * lin + self.slope * x.dot(&self.e);
        let grad = (x * (-4.0 * g * lin) + self.c * (g * g)) * self.amp + self.e * self.slope;
        (theta, grad)
    }

    fn tau(&self) -> Mat2 {
        let s = pauli();
        let n = self.n.normalize();
        (s[0] * cr(n[0]) + s[1] * cr(n[1]) + s[2] * cr(n[2])) * I
    }
}

impl GaugeMap for SmoothGauge {
    fn value(&self, x: &BulkPoint) -> Mat2 {
        let (theta, _) = self.theta_grad(x.coords());
        Mat2::identity() * cr(theta.cos()) + self.tau() * cr(theta.sin())
    }
    fn derivative(&self, x: &BulkPoint, i: usize) -> Mat2 {
        let (theta, grad) = self.theta_grad(x.coords());
        (Mat2::identity() * cr(-theta.sin()) + self.tau() * cr(theta.cos())) * cr(grad[i])
    }
}

/// `A -> g A g^{-1} - (dg) g^{-1}`, `Phi -> g Phi g^{-1}`.
#[derive(Clone)]
pub struct GaugeTransformed<F, G> {
    field: F,
    gauge: G,
}

pub fn gauge_transform<F: MonopoleField, G: GaugeMap>(f: F, g: G) -> GaugeTransformed<F, G> {
    GaugeTransformed { field: f, gauge: g }
}

impl<F: MonopoleField, G: GaugeMap> MonopoleField for GaugeTransformed<F, G> {
    fn eval(&self, x: &BulkPoint) -> FieldSample {
        let s = self.field.eval(x);
        let g = self.gauge.value(x);
        let gi = g.adjoint();
        let mut a = [Mat2::zeros(); 3];
        for (i, ai) in a.iter_mut().enumerate() {
            *ai = g * s.a[i] * gi - self.gauge.derivative(x, i) * gi;
        }
        FieldSample { a, phi: g * s.phi * gi }
    }
    fn mass(&self) -> f64 {
        self.field.mass()
    }
    fn charge(&self) -> u32 {
        self.field.charge()
    }
    fn label(&self) -> String {
        format!("gauged({})", self.field.label())
    }
}

/// Central-difference derivatives of all field components along the axes.
fn field_derivatives<F: MonopoleField + ?Sized>(f: &F, x: &Vector3<f64>, h: f64) -> [FieldSample; 3] {
    let mut out = [FieldSample::zero(); 3];
    for (i, d) in out.iter_mut().enumerate() {
        let mut e = Vector3::zeros();
        e[i] = h;
        let p = f.eval(&BulkPoint::new(x + e).expect("inside ball"));
        let m = f.eval(&BulkPoint::new(x - e).expect("inside ball"));
        let inv = cr(1.0 / (2.0 * h));
        for k in 0..3 {
            d.a[k] = (p.a[k] - m.a[k]) * inv;
        }
        d.phi = (p.phi - m.phi) * inv;
    }
    out
}

fn residual_from(s: &FieldSample, d: &[FieldSample; 3], lambda: f64) -> f64 {
    // F_jk = d_j A_k - d_k A_j + [A_j, A_k]
    let curv = |j: usize, k: usize| d[j].a[k] - d[k].a[j] + commutator(&s.a[j], &s.a[k]);
    let mut total = 0.0;
    for i in 0..3 {
        let lhs = d[i].phi + commutator(&s.a[i], &s.phi);
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        // eps_ijk F_jk summed over j, k = 2 F_{j k} for the cyclic pair
        let rhs = curv(j, k) * cr(ORIENTATION / lambda);
        total += (lhs - rhs).norm_squared();
    }
    total.sqrt()
}

fn residual_at_step<F: MonopoleField + ?Sized>(f: &F, x: &BulkPoint, h: f64, richardson: bool) -> f64 {
    let s = f.eval(x);
    let d = if richardson {
        let coarse = field_derivatives(f, x.coords(), h);
        let fine = field_derivatives(f, x.coords(), 0.5 * h);
        let mut out = [FieldSample::zero(); 3];
        for i in 0..3 {
            for k in 0..3 {
                out[i].a[k] = (fine[i].a[k] * cr(4.0) - coarse[i].a[k]) / cr(3.0);
            }
            out[i].phi = (fine[i].phi * cr(4.0) - coarse[i].phi) / cr(3.0);
        }
        out
    } else {
        field_derivatives(f, x.coords(), h)
    };
    residual_from(&s, &d, x.lambda())
}

/// Frobenius norm of `D Phi - *F` at `x`, with derivatives by
/// Richardson-extrapolated central differences. The step is clamped to stay
/// inside the ball; the estimate is repeated at half the step and rejected if
/// the two disagree by more than 50% (and by more than `1e-7` absolutely).
pub fn bogomolny_residual<F: MonopoleField + ?Sized>(f: &F, x: &BulkPoint, h: f64) -> Result<f64, FieldError> {
    let h = h.min(0.5 * (1.0 - x.coords().norm()));
    let coarse = residual_at_step(f, x, h, true);
    let fine = residual_at_step(f, x, 0.5 * h, true);
    let change = (coarse - fine).abs();
    if change > 0.5 * coarse.max(fine) && change > 1e-7 {
        return Err(FieldError::StepTooLarge { coarse, fine });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exact_profile(m: f64, rho: f64) -> (f64, f64) {
        let n = 2.0 * m + 1.0;
        let h = 0.5 * (n * coth(n * rho) - coth(rho));
        let k = n * rho.sinh() / (n * rho).sinh();
        (h, k)
    }

    fn random_ball_point(rng: &mut ChaCha8Rng, r_max: f64) -> BulkPoint {
        loop {
            let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if v.norm() < 1.0 {
                return BulkPoint::new(v * r_max).unwrap();
            }
        }
    }

    #[test]
    fn shooting_matches_closed_form() {
        for m in [0.5, 1.0, 1.5, 2.5] {
            let p = RadialProfile::solve(m).unwrap();
            let want_slope = 2.0 * m * (m + 1.0) / 3.0;
            assert!((p.slope() - want_slope).abs() < 1e-10, "m={m}: {} vs {want_slope}", p.slope());
            for i in 1..400 {
                let rho = 0.05 * i as f64;
                let (h, k) = p.eval(rho);
                let (he, ke) = exact_profile(m, rho);
                assert!((h - he).abs() < 1e-9, "m={m} rho={rho}: h {h} vs {he}");
                assert!((k - ke).abs() < 1e-9, "m={m} rho={rho}: K {k} vs {ke}");
            }
        }
    }

    #[test]
    fn abelian_examples() {
        let f = abelian_field(1.0).unwrap();
        let x = BulkPoint::new(Vector3::new(0.1, 0.5, -0.2)).unwrap();
        let s = f.eval(&x);
        assert_eq!(s.phi, Mat2::new(c(0.0, 1.0), cr(0.0), cr(0.0), c(0.0, -1.0)));
        assert!((s.phi_norm() - 1.0).abs() < 1e-15);
        assert!(bogomolny_residual(&f, &x, 1e-3).unwrap() <= 1e-12);
        assert!(abelian_field(-1.0).is_err());
    }

    #[test]
    fn hedgehog_examples() {
        let f = hedgehog_field(1.0).unwrap();
        assert!(f.eval(&BulkPoint::origin()).phi_norm() < 1e-15);
        let x = BulkPoint::new(Vector3::new(0.3, 0.2, -0.4)).unwrap();
        assert!(bogomolny_residual(&f, &x, 1e-3).unwrap() < 1e-5);
        let dir = Vector3::new(0.3, -0.8, 0.2).normalize();
        let mut prev = 0.0;
        for i in 1..140 {
            let r = 1.0 - (-(i as f64) * 0.1).exp();
            let n = f.eval(&BulkPoint::new(dir * r).unwrap()).phi_norm();
            assert!(n >= prev && n < 1.0, "r = {r}: {n}");
            prev = n;
        }
        assert!(prev > 1.0 - 1e-6);
    }

    #[test]
    fn hedgehog_samples_are_su2() {
        let f = hedgehog_field(1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = f.eval(&random_ball_point(&mut rng, 0.99));
            assert!(SU2Value(s.phi).is_valid(1e-12));
            for a in s.a {
                assert!(SU2Value(a).is_valid(1e-12));
            }
        }
    }

    #[test]
    fn scaled_higgs_violates_bogomolny() {
        let hh = hedgehog_field(1.0).unwrap();
        let bad = CustomField {
            mass: 2.0,
            charge: 1,
            label: "scaled".into(),
            eval: Arc::new(move |x| {
                let mut s = hh.eval(x);
                s.phi *= cr(2.0);
                s
            }),
        };
        let x = BulkPoint::new(Vector3::new(0.3, 0.0, 0.0)).unwrap();
        assert!(bogomolny_residual(&bad, &x, 1e-3).unwrap() > 0.05);
    }

    #[test]
    fn spherical_symmetry_of_higgs_norm() {
        let f = hedgehog_field(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random_ball_point(&mut rng, 0.95);
            let r = Rotation3::from_euler_angles(rng.random(), rng.random(), rng.random());
            let y = BulkPoint::new(r * x.coords()).unwrap();
            assert!((f.eval(&x).phi_norm() - f.eval(&y).phi_norm()).abs() < 1e-8);
        }
    }

    #[test]
    fn gauge_covariance_of_residual() {
        let f = hedgehog_field(1.0).unwrap();
        let g = SmoothGauge {
            amp: 0.9,
            c: Vector3::new(0.3, -0.2, 0.5),
            slope: 0.4,
            e: Vector3::new(0.1, 0.7, -0.3),
            n: Vector3::new(1.0, 2.0, -0.5),
        };
        let gf = gauge_transform(f.clone(), g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = random_ball_point(&mut rng, 0.8);
            let r0 = bogomolny_residual(&f, &x, 1e-3).unwrap();
            let r1 = bogomolny_residual(&gf, &x, 1e-3).unwrap();
            assert!((r0 - r1).abs() < 1e-6, "{r0} vs {r1}");
        }
    }

    #[test]
    fn constant_gauge_conjugates_higgs() {
        let f = hedgehog_field(1.0).unwrap();
        let theta: f64 = 0.7;
        let g = Mat2::identity() * cr(theta.cos()) + pauli()[1] * I * cr(theta.sin());
        let gf = gauge_transform(f.clone(), ConstantGauge(g));
        let x = BulkPoint::new(Vector3::new(0.2, 0.1, 0.3)).unwrap();
        let s0 = f.eval(&x);
        let s1 = gf.eval(&x);
        assert!((s1.phi - g * s0.phi * g.adjoint()).norm() < 1e-14);
        assert!((s1.phi_norm() - s0.phi_norm()).abs() < 1e-14);
        let id = gauge_transform(f.clone(), ConstantGauge(Mat2::identity()));
        assert_eq!(id.eval(&x), s0);
    }

    #[test]
    fn gauge_fd_default_matches_analytic() {
        struct FdOnly(SmoothGauge);
        impl GaugeMap for FdOnly {
            fn value(&self, x: &BulkPoint) -> Mat2 {
                self.0.value(x)
            }
        }
        let g = SmoothGauge {
            amp: 0.5,
            c: Vector3::new(0.1, 0.2, 0.3),
            slope: 0.2,
            e: Vector3::new(0.0, 1.0, 0.0),
            n: Vector3::new(0.0, 0.0, 1.0),
        };
        let x = BulkPoint::new(Vector3::new(0.4, -0.3, 0.1)).unwrap();
        for i in 0..3 {
            let diff = (FdOnly(g).derivative(&x, i) - g.derivative(&x, i)).norm();
            assert!(diff < 1e-9, "{diff}");
        }
        let u = g.value(&x);
        assert!((u.adjoint() * u - Mat2::identity()).norm() < 1e-12);
        assert!((u.determinant() - cr(1.0)).norm() < 1e-12);
    }

    #[test]
    fn translated_hedgehog_is_a_solution() {
        let f = translate_field(hedgehog_field(1.0).unwrap(), BallIsometry::boost_x3(0.6));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x = random_ball_point(&mut rng, 0.8);
            assert!(bogomolny_residual(&f, &x, 1e-3).unwrap() < 1e-5);
        }
    }

    #[test]
    fn profile_csv_has_header_and_rows() {
        let p = RadialProfile::solve(1.0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf, 5.0, 10).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rho,h,a\n"));
        assert_eq!(text.lines().count(), 12);
    }
}
