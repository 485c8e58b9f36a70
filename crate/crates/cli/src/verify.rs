//! Verification suites: each check records the measured value, its
//! tolerance and a verdict.

use std::time::Instant;

use monopole_boundary::boundary::{curvature_fd, lambda_fd, scan_line, ComplexGrid, FD_STEP, FD_STEP_2};
use monopole_boundary::field::{abelian_field, gauge_transform, hedgehog_field, MonopoleField, SmoothGauge};
use monopole_boundary::geom::{antipode, make_geodesic, BoundaryPoint};
use monopole_boundary::linalg::{c, cr, hermitian_eigen, random_gaussian, C64};
use monopole_boundary::nahm::{
    beta_map, gauge_act, nahm_residual, rank_one_det, solve_nahm, spectral_det, GaugeTuple, HalfInt, MonadData, NahmError,
};
use monopole_boundary::npoint::{gram_matrix, n_point, PointTuple};
use monopole_boundary::rep::{
    degree, fs_degree_integral, projection, subalgebra_structure, trace_npoint, HoloSphere,
};
use monopole_boundary::scatter::solve_pairing;
use rand::Rng;
use rayon::prelude::*;

use crate::commands::{four_point_tensor, half_int, numerical, rng, scatter_options, sphere_from_nahm};
use crate::config::{FieldKind, RunConfig};
use crate::report::{Record, Report};
use crate::{CliError, Suite, EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFY};

/// Minimum chordal separation of consecutive points in random tuples.
const MIN_SEP: f64 = 0.2;
/// Soft wall-clock budget in seconds; exceeding it only adds a note.
const TIME_BUDGET: f64 = 600.0;

/// Outcome of one suite: checks plus whether a solver failed to converge.
#[derive(Default)]
struct SuiteRun {
    records: Vec<Record>,
    nonconverged: bool,
}

impl SuiteRun {
    fn push(&mut self, r: Record) {
        self.records.push(r);
    }
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn random_tuples(n: usize, sizes: std::ops::RangeInclusive<usize>, seed: u64) -> Vec<PointTuple> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let len = r.random_range(sizes.clone());
            PointTuple::random(len, MIN_SEP, &mut r)
        })
        .collect()
}

fn scatter_suite(cfg: &RunConfig) -> Result<SuiteRun, CliError> {
    let opts = scatter_options(cfg);
    let mut run = SuiteRun::default();
    let pairs = random_tuples(10, 2..=2, cfg.seed ^ 0x5ca7);
    let abelian = abelian_field(cfg.mass).map_err(|e| CliError::Input(e.to_string()))?;
    let hedgehog = hedgehog_field(cfg.mass).map_err(|e| CliError::Input(e.to_string()))?;
    let solve = |f: &dyn MonopoleField, t: &PointTuple| {
        let g = make_geodesic(t.points[0], t.points[1], opts.truncation(f.mass())).map_err(numerical)?;
        solve_pairing(f, &g, &opts).map_err(numerical)
    };
    let ab: Vec<_> = pairs.par_iter().map(|t| solve(&abelian, t)).collect::<Result<_, _>>()?;
    let dev = max_of(ab.iter().map(|p| (p.value.norm() - 1.0).abs()));
    let err = max_of(ab.iter().map(|p| p.err()));
    run.push(Record::check("abelian |(r,s)| - 1", dev, err, 1e-6));
    let hh: Vec<_> = pairs.par_iter().map(|t| solve(&hedgehog, t)).collect::<Result<_, _>>()?;
    run.push(Record::check("hedgehog pairing constancy", max_of(hh.iter().map(|p| p.constancy_dev)), 0.0, 1e-6));
    run.push(Record::check("hedgehog truncation drift", max_of(hh.iter().map(|p| p.drift)), 0.0, 1e-6));
    let norm = max_of(hh.iter().flat_map(|p| [p.r.norm_residual, p.s.norm_residual]));
    run.push(Record::check("decay normalization residual", norm, 0.0, 1e-4));
    Ok(run)
}

fn npoint_suite(cfg: &RunConfig) -> Result<SuiteRun, CliError> {
    let opts = scatter_options(cfg);
    let mut run = SuiteRun::default();
    let input = |e: monopole_boundary::field::FieldError| CliError::Input(e.to_string());
    let abelian = abelian_field(cfg.mass).map_err(input)?;
    let hedgehog = hedgehog_field(cfg.mass).map_err(input)?;
    let np = |f: &dyn MonopoleField, t: &PointTuple| n_point(f, t, &opts).map_err(numerical);

    let tuples = random_tuples(10, 2..=4, cfg.seed ^ 0x1);
    let vals: Vec<_> = tuples.par_iter().map(|t| np(&abelian, t)).collect::<Result<_, _>>()?;
    let dev = max_of(vals.iter().map(|v| (v.value - cr(1.0)).norm()));
    run.push(Record::check("abelian n-point = 1", dev, max_of(vals.iter().map(|v| v.err)), 1e-6));

    let coincident = PointTuple::new(vec![BoundaryPoint::new(0.0, 0.0), BoundaryPoint::new(0.0, 0.0)]).map_err(numerical)?;
    let v = np(&hedgehog, &coincident)?;
    run.push(Record::check_with("coalescence P_z P_z = P_z", (v.value - cr(1.0)).norm(), v.err, 1e-12, v.reduced && v.reduced_len == 1));

    let tuples = random_tuples(20, 2..=4, cfg.seed ^ 0x2);
    let vals: Vec<_> = tuples.par_iter().map(|t| np(&hedgehog, t)).collect::<Result<_, _>>()?;
    let top = max_of(vals.iter().map(|v| v.value.norm()));
    run.push(Record::check("strict bound max |n-point|", top, max_of(vals.iter().map(|v| v.err)), 1.0 - 1e-3));

    let triples = random_tuples(4, 3..=3, cfg.seed ^ 0x3);
    let cyc: Vec<f64> = triples
        .par_iter()
        .map(|t| Ok((np(&hedgehog, t)?.value - np(&hedgehog, &t.rotated(1))?.value).norm()))
        .collect::<Result<_, CliError>>()?;
    run.push(Record::check("cyclic invariance", max_of(cyc.into_iter()), 0.0, 1e-6));

    let gauged = gauge_transform(hedgehog_field(cfg.mass).map_err(input)?, SmoothGauge::random(&mut rng(cfg.seed ^ 0x4)));
    let tuples = random_tuples(4, 2..=3, cfg.seed ^ 0x5);
    let gauge: Vec<f64> = tuples
        .par_iter()
        .map(|t| Ok((np(&hedgehog, t)?.value - np(&gauged, t)?.value).norm()))
        .collect::<Result<_, CliError>>()?;
    run.push(Record::check("gauge invariance", max_of(gauge.into_iter()), 0.0, 1e-5));

    let pts = PointTuple::random(8, MIN_SEP, &mut rng(cfg.seed ^ 0x6)).points;
    let g = gram_matrix(&hedgehog, &pts, &opts).map_err(numerical)?;
    let (eig, _) = hermitian_eigen(&g.map(cr));
    let topv = eig[eig.len() - 1];
    let rank = eig.iter().filter(|&&v| v > 1e-6 * topv).count();
    run.push(Record::check_with("gram positivity (min eigenvalue)", eig[0], 0.0, -1e-8, eig[0] > -1e-8));
    run.push(Record::check_with("gram numerical rank", rank as f64, 0.0, 4.0, rank <= 4));
    Ok(run)
}

fn boundary_suite(cfg: &RunConfig) -> Result<SuiteRun, CliError> {
    let opts = scatter_options(cfg);
    let mut run = SuiteRun::default();
    let f = hedgehog_field(cfg.mass).map_err(|e| CliError::Input(e.to_string()))?;
    let bp = BoundaryPoint::new;
    let diag: Vec<f64> = [bp(0.4, 0.1), bp(-1.2, 0.7)]
        .par_iter()
        .map(|&w| lambda_fd(&f, w, w, FD_STEP, &opts).map(|l| l.norm()).map_err(numerical))
        .collect::<Result<_, _>>()?;
    run.push(Record::check("lambda(w, w) = 0", max_of(diag.into_iter()), 0.0, 1e-3));
    if (cfg.mass - 1.0).abs() < 1e-12 {
        let l = lambda_fd(&f, bp(0.0, 0.0), bp(1.0, 0.0), FD_STEP, &opts).map_err(numerical)?;
        run.push(Record::check("lambda(0, 1) = -1/4", (l - cr(-0.25)).norm(), 0.0, 5e-3));
        let k0 = curvature_fd(&f, bp(0.0, 0.0), bp(2.0, 0.0), FD_STEP_2, &opts).map_err(numerical)?;
        run.push(Record::check("curvature at 0 = -1", (k0 + 1.0).abs(), 0.0, 2e-2));
    }
    let ks: Vec<f64> = [bp(2.0, 0.0), bp(3.0, 1.0)]
        .par_iter()
        .map(|&w| curvature_fd(&f, bp(0.4, 0.0), w, FD_STEP_2, &opts).map_err(numerical))
        .collect::<Result<_, _>>()?;
    run.push(Record::check("curvature independent of w", (ks[0] - ks[1]).abs(), 0.0, 1e-3));
    let w = c(0.5, 0.2);
    let locus = scan_line(&f, w, &ComplexGrid::square(2.0, cfg.grid_n), cfg.threshold, &opts).map_err(numerical)?;
    let dev = locus.iter().map(|p| (p.z - w).norm()).fold(if locus.is_empty() { f64::INFINITY } else { 0.0 }, f64::max);
    run.push(Record::check("spectral locus at w is z = w", dev, 0.0, 0.05));
    Ok(run)
}

fn nahm_suite(cfg: &RunConfig, k: Option<usize>) -> Result<SuiteRun, CliError> {
    let mut run = SuiteRun::default();
    let cases: Vec<(usize, HalfInt)> = match k {
        Some(k) => vec![(k, half_int(cfg.mass)?)],
        None => vec![(1, HalfInt::new(3).map_err(numerical)?), (2, HalfInt::new(3).map_err(numerical)?)],
    };
    let mut r = rng(cfg.seed ^ 0x11);
    for (k, m) in cases {
        match solve_nahm(k, m, cfg.seed) {
            Ok(sol) => {
                run.push(Record::check(format!("nahm residual k={k} m={m}"), sol.residual, 0.0, 1e-8));
                let g = GaugeTuple::random(k, m, &mut r);
                let moved = gauge_act(&sol.data, &g).and_then(|d| nahm_residual(&d)).map_err(numerical)?;
                run.push(Record::check(format!("gauge invariance k={k} m={m}"), (moved - sol.residual).abs(), 0.0, 1e-10));
            }
            Err(NahmError::NonConvergence { best, tol, degenerate, .. }) => {
                run.nonconverged = true;
                let name = if degenerate {
                    format!("nahm k={k} m={m}: documented degeneracy, no solution with nonzero v")
                } else {
                    format!("nahm residual k={k} m={m}")
                };
                run.push(Record::check(name, best, 0.0, tol));
            }
            Err(e) => return Err(CliError::Input(e.to_string())),
        }
    }
    let mut rank_one: f64 = 0.0;
    for _ in 0..200 {
        let n = r.random_range(1..=6);
        let u = random_gaussian(n, 1, 1.0, &mut r).column(0).into_owned();
        let v = random_gaussian(n, 1, 1.0, &mut r).column(0).into_owned();
        let (a, b) = rank_one_det(&u, &v);
        rank_one = rank_one.max((a - b).norm() / b.norm().max(1.0));
    }
    run.push(Record::check("rank-one determinant identity", rank_one, 0.0, 1e-12));
    let mut spectral: f64 = 0.0;
    for k in 1..=3 {
        for _ in 0..100 {
            let md = MonadData::random(k, &mut r);
            let w: C64 = random_gaussian(1, 1, 1.5, &mut r)[(0, 0)];
            let z: C64 = random_gaussian(1, 1, 1.5, &mut r)[(0, 0)];
            let lhs = spectral_det(&md, w, z);
            let rhs = beta_map(&md, antipode(BoundaryPoint::Finite(w))).dotc(&beta_map(&md, BoundaryPoint::Finite(z)));
            spectral = spectral.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1.0));
        }
    }
    run.push(Record::check("spectral determinant = pairing", spectral, 0.0, 1e-10));
    Ok(run)
}

fn sphere_checks(label: &str, q: &HoloSphere, expected_degree: Option<usize>, seed: u64, run: &mut SuiteRun) -> Result<(), CliError> {
    let info = degree(q);
    if let Some(d) = expected_degree {
        run.push(Record::check_with(format!("{label}: degree"), info.degree as f64, 0.0, d as f64, info.degree == d));
    }
    let area = fs_degree_integral(q, 400).map_err(numerical)?;
    let rel = (area - info.degree as f64).abs() / info.degree.max(1) as f64;
    run.push(Record::check(format!("{label}: area integral / pi = degree"), rel, 0.0, 2e-2));
    let mut r = rng(seed);
    let t = match four_point_tensor(q, &mut r) {
        Ok(t) => t,
        Err(e) => {
            run.push(Record::failed(format!("{label}: 4-point tensor"), &e.to_string()));
            return Ok(());
        }
    };
    let mut rec: f64 = 0.0;
    let mut cyclic: f64 = 0.0;
    let mut proj: f64 = 0.0;
    for _ in 0..20 {
        let (w, z, x) = (BoundaryPoint::random(&mut r), BoundaryPoint::random(&mut r), BoundaryPoint::random(&mut r));
        let two = PointTuple::new(vec![w, z]).map_err(numerical)?;
        rec = rec.max((t.reconstruct(q, w, z).map_err(numerical)? - trace_npoint(q, &two).map_err(numerical)?).norm());
        let three = PointTuple::new(vec![w, z, x]).map_err(numerical)?;
        let a = trace_npoint(q, &three).map_err(numerical)?;
        let b = trace_npoint(q, &three.rotated(1)).map_err(numerical)?;
        cyclic = cyclic.max((a - b).norm());
        proj = proj.max(projection(q, w).map_err(numerical)?.defect());
    }
    run.push(Record::check(format!("{label}: 4-point reconstruction"), rec, 0.0, 1e-8));
    run.push(Record::check(format!("{label}: trace cyclic invariance"), cyclic, 0.0, 1e-12));
    run.push(Record::check(format!("{label}: projection defect"), proj, 0.0, 1e-12));
    Ok(())
}

/// Random sphere whose coefficient matrix has condition number below 100.
fn generic_sphere(k: usize, r: &mut rand_chacha::ChaCha8Rng) -> HoloSphere {
    loop {
        let q = HoloSphere::random(k, r);
        let sv = q.coefficients().singular_values();
        if sv.max() < 100.0 * sv.min() {
            return q;
        }
    }
}

fn rep_suite(cfg: &RunConfig) -> Result<SuiteRun, CliError> {
    let mut run = SuiteRun::default();
    sphere_checks("identity", &HoloSphere::identity(), Some(1), cfg.seed, &mut run)?;
    sphere_checks("veronese", &HoloSphere::veronese(), Some(2), cfg.seed, &mut run)?;
    let mut r = rng(cfg.seed ^ 0x21);
    for k in [1, 2] {
        sphere_checks(&format!("random k={k}"), &generic_sphere(k, &mut r), Some(k), cfg.seed, &mut run)?;
    }
    let q = generic_sphere(2, &mut r);
    let s = subalgebra_structure(&q, BoundaryPoint::new(0.4, -0.3)).map_err(numerical)?;
    run.push(Record::check("subalgebra closure residual", s.closure_residual, 0.0, 1e-8));
    if cfg.field == FieldKind::FromNahm {
        let q = sphere_from_nahm(cfg.charge as usize, cfg)?;
        sphere_checks("from-nahm", &q, Some(cfg.charge as usize), cfg.seed, &mut run)?;
    }
    Ok(run)
}

/// Runs `suite`, appending its checks to `report`, and returns the exit code.
pub fn run(suite: Suite, k: Option<usize>, cfg: &RunConfig, report: &mut Report) -> Result<i32, CliError> {
    let suites: Vec<Suite> = match suite {
        Suite::All => vec![Suite::Scatter, Suite::Npoint, Suite::Boundary, Suite::Nahm, Suite::Rep],
        s => vec![s],
    };
    let started = Instant::now();
    let mut nonconverged = false;
    for s in suites {
        let t = Instant::now();
        let name = format!("{s:?}").to_lowercase();
        let run = match s {
            Suite::Scatter => scatter_suite(cfg)?,
            Suite::Npoint => npoint_suite(cfg)?,
            Suite::Boundary => boundary_suite(cfg)?,
            Suite::Nahm => nahm_suite(cfg, k)?,
            Suite::Rep => rep_suite(cfg)?,
            Suite::All => unreachable!("expanded above"),
        };
        report.time(&name, t.elapsed().as_secs_f64());
        nonconverged |= run.nonconverged;
        for mut rec in run.records {
            rec.name = format!("{name}: {}", rec.name);
            report.push(rec);
        }
    }
    let failed = report.results.iter().filter(|r| r.pass == Some(false)).count();
    report.diagnostics.converged = !nonconverged;
    report.note(format!("{} checks, {failed} failed", report.results.len()));
    if started.elapsed().as_secs_f64() > TIME_BUDGET {
        report.note(format!("suite exceeded the {TIME_BUDGET} s time budget"));
    }
    Ok(if nonconverged {
        EXIT_NUMERICAL
    } else if failed > 0 {
        EXIT_VERIFY
    } else {
        EXIT_OK
    })
}
