//! Subcommand implementations.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use monopole_boundary::boundary::{
    connection_map, estimate_charge, fit_spectral_poly, spectral_scan, write_connection_csv, write_locus_csv, ComplexGrid,
    LocusPoint, SpectralCurveFit,
};
use monopole_boundary::field::{abelian_field, hedgehog_field, MonopoleField};
use monopole_boundary::geom::{fibonacci_points, BoundaryPoint};
use monopole_boundary::linalg::{c, C64};
use monopole_boundary::nahm::{canonical_gauge, solve_nahm, spectral_coeffs, HalfInt, NahmError};
use monopole_boundary::npoint::{n_point, write_npoint_csv, NPointValue, PointTuple};
use monopole_boundary::rep::{
    degree, fs_degree_integral, q_from_monad, q_from_spectral, subalgebra_structure, trace_npoint, FourPointTensor,
    HoloSphere, RepError,
};
use monopole_boundary::scatter::ScatterOptions;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{FieldKind, RunConfig};
use crate::report::{complex_value, matrix_value, Record, Report};
use crate::{verify, CliError, Command, Outcome, RepSource, EXIT_NUMERICAL, EXIT_OK};

/// A configured field: a bulk monopole, or the trace representation of a
/// holomorphic sphere obtained from Nahm data.
pub enum Source {
    Bulk(Box<dyn MonopoleField>),
    Trace(HoloSphere),
}

pub fn scatter_options(cfg: &RunConfig) -> ScatterOptions {
    ScatterOptions { rtol: cfg.ode_rtol, atol: cfg.ode_atol, t_max: cfg.t, ..Default::default() }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

pub fn half_int(mass: f64) -> Result<HalfInt, CliError> {
    HalfInt::from_f64(mass)
        .map_err(|_| CliError::Input(format!("Nahm mass must be a positive half-integer such as 1.5, got {mass}")))
}

pub fn nahm_error(e: NahmError) -> CliError {
    match e {
        NahmError::InvalidMass(_) | NahmError::ShapeMismatch(_) => CliError::Input(e.to_string()),
        NahmError::NonConvergence { .. } => CliError::Numerical(e.to_string()),
    }
}

/// Sphere of the monad of a solved Nahm system with the configured charge
/// and mass.
pub fn sphere_from_nahm(k: usize, cfg: &RunConfig) -> Result<HoloSphere, CliError> {
    let sol = solve_nahm(k, half_int(cfg.mass)?, cfg.seed).map_err(nahm_error)?;
    q_from_monad(&sol.data.monad()).map_err(numerical)
}

pub fn build_source(cfg: &RunConfig) -> Result<Source, CliError> {
    let input = |e: monopole_boundary::field::FieldError| CliError::Input(e.to_string());
    Ok(match cfg.field {
        FieldKind::Abelian => Source::Bulk(Box::new(abelian_field(cfg.mass).map_err(input)?)),
        FieldKind::Hedgehog => Source::Bulk(Box::new(hedgehog_field(cfg.mass).map_err(input)?)),
        FieldKind::FromNahm => Source::Trace(sphere_from_nahm(cfg.charge as usize, cfg)?),
    })
}

fn bulk_field(cfg: &RunConfig, command: &str) -> Result<Box<dyn MonopoleField>, CliError> {
    match build_source(cfg)? {
        Source::Bulk(f) => Ok(f),
        Source::Trace(_) => Err(CliError::Input(format!(
            "{command} needs a bulk field (abelian or hedgehog); from-nahm is available for npoint, rep and verify"
        ))),
    }
}

pub fn parse_point(s: &str) -> Result<BoundaryPoint, CliError> {
    BoundaryPoint::from_str(s).map_err(|e| CliError::Input(e.to_string()))
}

pub fn parse_tuple(s: &str) -> Result<PointTuple, CliError> {
    let points = s.split([',', ';']).map(parse_point).collect::<Result<Vec<_>, _>>()?;
    PointTuple::new(points).map_err(|e| CliError::Input(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = json!({ "config": cfg, "args": command });
    let mut report = Report::new(command.name(), params);
    let start = Instant::now();
    let code = match command {
        Command::Npoint { points, out } => npoint(cfg, points, out.as_deref(), &mut report)?,
        Command::Scan { w_grid, radius, k, out } => scan(cfg, *w_grid, *radius, *k, out.as_deref(), &mut report)?,
        Command::Boundary { w, radius, out } => boundary(cfg, w, *radius, out.as_deref(), &mut report)?,
        Command::Nahm { k } => nahm(cfg, *k, &mut report)?,
        Command::Rep { source, k, w_grid, radius } => rep(cfg, *source, *k, *w_grid, *radius, &mut report)?,
        Command::Verify { suite, k } => verify::run(*suite, *k, cfg, &mut report)?,
    };
    report.time("total", start.elapsed().as_secs_f64());
    Ok(Outcome { report, code })
}

fn npoint(cfg: &RunConfig, specs: &[String], out: Option<&Path>, report: &mut Report) -> Result<i32, CliError> {
    let tuples = specs.iter().map(|s| parse_tuple(s)).collect::<Result<Vec<_>, _>>()?;
    let source = build_source(cfg)?;
    let opts = scatter_options(cfg);
    let mut rows = Vec::with_capacity(tuples.len());
    for (i, t) in tuples.iter().enumerate() {
        let v = match &source {
            Source::Bulk(f) => n_point(f, t, &opts).map_err(numerical)?,
            Source::Trace(q) => {
                let red = t.reduced();
                let value = if red.len() == 1 { C64::new(1.0, 0.0) } else { trace_npoint(q, &red).map_err(numerical)? };
                NPointValue { value, err: 0.0, reduced_len: red.len(), reduced: red.len() != t.len() }
            }
        };
        if v.reduced {
            report.note(format!("tuple {i}: coalescent points merged (P_z^2 = P_z), {} -> {} points", t.len(), v.reduced_len));
        }
        let mut value = complex_value(v.value);
        value["reduced"] = json!(v.reduced);
        value["reduced_len"] = json!(v.reduced_len);
        value["points"] = json!(t.points.iter().map(|p| p.to_string()).collect::<Vec<_>>());
        report.push(Record::new(format!("npoint[{i}]"), value, v.err));
        rows.push((t.clone(), v));
    }
    if let Some(path) = out {
        let n = tuples.iter().map(PointTuple::len).max().unwrap_or(0);
        write_npoint_csv(create(path)?, n, &rows)?;
    }
    Ok(EXIT_OK)
}

/// Generic line `w = w0` used for the charge estimate.
fn generic_w(radius: f64) -> C64 {
    c(0.37, -0.23) * (radius / 2.0)
}

struct ScanResult {
    locus: Vec<LocusPoint>,
    fit: Result<SpectralCurveFit, String>,
}

fn run_scan(
    f: &dyn MonopoleField,
    cfg: &RunConfig,
    w_grid: usize,
    radius: f64,
    k: usize,
    report: &mut Report,
) -> Result<ScanResult, CliError> {
    if w_grid == 0 || !(radius > 0.0 && radius.is_finite()) {
        return Err(CliError::Input("scan needs w_grid >= 1 and a positive radius".into()));
    }
    let opts = scatter_options(cfg);
    let z_grid = ComplexGrid::square(radius, cfg.grid_n);
    let ws = ComplexGrid::square(radius, w_grid).points();
    let t = Instant::now();
    let locus = spectral_scan(f, &ws, &z_grid, cfg.threshold, &opts).map_err(numerical)?;
    report.time("scan", t.elapsed().as_secs_f64());
    let pairs: Vec<(C64, C64)> = locus.iter().map(|p| (p.w, p.z)).collect();
    let fit = fit_spectral_poly(&pairs, k).map_err(|e| e.to_string());
    Ok(ScanResult { locus, fit })
}

fn scan(
    cfg: &RunConfig,
    w_grid: usize,
    radius: f64,
    k: Option<usize>,
    out: Option<&Path>,
    report: &mut Report,
) -> Result<i32, CliError> {
    let f = bulk_field(cfg, "scan")?;
    let k = k.unwrap_or(f.charge().max(1) as usize);
    let res = run_scan(f.as_ref(), cfg, w_grid, radius, k, report)?;
    if let Some(path) = out {
        write_locus_csv(create(path)?, &res.locus)?;
    }
    let max_value = res.locus.iter().map(|p| p.value).fold(0.0, f64::max);
    report.push(Record::new("locus_points", res.locus.len(), max_value));
    let z_grid = ComplexGrid::square(radius, cfg.grid_n);
    let w0 = generic_w(radius);
    match estimate_charge(f.as_ref(), w0, &z_grid, cfg.threshold, &scatter_options(cfg)) {
        Ok(n) => report.push(Record::new("charge_estimate", n, 0.0)),
        Err(e) => report.note(format!("charge estimate at w = {w0}: {e}")),
    }
    match res.fit {
        Ok(fit) => {
            report.push(Record::new("spectral_fit", matrix_value(&fit.coeffs), fit.fit_residual));
            match q_from_spectral(&fit) {
                Ok(q) => report.push(Record::new("sphere", q.to_json(), fit.fit_residual)),
                Err(e) => report.note(format!("no sphere from the fit: {e}")),
            }
        }
        Err(e) => {
            report.diagnostics.converged = false;
            report.note(format!("spectral fit (k = {k}): {e}"));
        }
    }
    Ok(EXIT_OK)
}

fn boundary(cfg: &RunConfig, w: &str, radius: f64, out: Option<&Path>, report: &mut Report) -> Result<i32, CliError> {
    let f = bulk_field(cfg, "boundary")?;
    let w = parse_point(w)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CliError::Input("radius must be positive".into()));
    }
    let grid = ComplexGrid::square(radius, cfg.grid_n);
    let t = Instant::now();
    let rows = connection_map(f.as_ref(), w, &grid, &scatter_options(cfg));
    report.time("map", t.elapsed().as_secs_f64());
    if let Some(path) = out {
        write_connection_csv(create(path)?, &rows)?;
    }
    report.push(Record::new("map_points", rows.len(), 0.0));
    let skipped = grid.len() - rows.len();
    if skipped > 0 {
        report.note(format!("{skipped} grid points skipped (near-singular or unstable finite differences)"));
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        let mean = rows.iter().map(|r| r.curvature).sum::<f64>() / n;
        let spread = rows.iter().map(|r| (r.curvature - mean).abs()).fold(0.0, f64::max);
        report.push(Record::new("curvature_mean", mean, spread));
    }
    Ok(EXIT_OK)
}

fn nahm(cfg: &RunConfig, k: Option<usize>, report: &mut Report) -> Result<i32, CliError> {
    let k = k.unwrap_or(cfg.charge as usize);
    let m = half_int(cfg.mass)?;
    let t = Instant::now();
    let solved = solve_nahm(k, m, cfg.seed);
    report.time("solve", t.elapsed().as_secs_f64());
    match solved {
        Ok(sol) => {
            let data = canonical_gauge(&sol.data).map_err(nahm_error)?;
            report.push(Record::new("residual", sol.residual, sol.residual));
            report.push(Record::new("restart", sol.restart, 0.0));
            report.push(Record::new("nahm_data", data.to_json(), sol.residual));
            report.push(Record::new("spectral_coeffs", matrix_value(&spectral_coeffs(&data.monad())), sol.residual));
            Ok(EXIT_OK)
        }
        Err(NahmError::NonConvergence { best, tol, restarts, degenerate }) => {
            report.diagnostics.converged = false;
            report.push(Record::check("residual", best, best, tol));
            report.note(format!("no solution below {tol:.1e} after {restarts} restarts (best {best:.3e})"));
            if degenerate {
                report.note(format!("documented degeneracy: m = {m} admits no solution with nonzero v"));
            }
            Ok(EXIT_NUMERICAL)
        }
        Err(e) => Err(nahm_error(e)),
    }
}

/// 4-point tensor on evenly spread base points, falling back to a few
/// random base point sets when those are degenerate for `q`.
pub fn four_point_tensor(q: &HoloSphere, r: &mut ChaCha8Rng) -> Result<FourPointTensor, RepError> {
    let mut result = FourPointTensor::new(q, &fibonacci_points(q.dim()));
    for _ in 0..8 {
        if !matches!(result, Err(RepError::DegenerateBasepoints { .. })) {
            break;
        }
        let base: Vec<BoundaryPoint> = (0..q.dim()).map(|_| BoundaryPoint::random(r)).collect();
        result = FourPointTensor::new(q, &base);
    }
    result
}

/// Degree, area, 4-point and subalgebra diagnostics of a sphere.
pub fn sphere_records(q: &HoloSphere, seed: u64, report: &mut Report) {
    let info = degree(q);
    report.push(Record::new("degree", info, 0.0));
    match (fs_degree_integral(q, 400), fs_degree_integral(q, 200)) {
        (Ok(a), Ok(b)) => report.push(Record::new("fs_degree_integral", a, (a - b).abs())),
        (Err(e), _) | (_, Err(e)) => report.note(format!("degree integral: {e}")),
    }
    let mut r = rng(seed);
    match four_point_tensor(q, &mut r) {
        Ok(t) => {
            let mut err: f64 = 0.0;
            for _ in 0..10 {
                let (w, z) = (BoundaryPoint::random(&mut r), BoundaryPoint::random(&mut r));
                let direct = PointTuple::new(vec![w, z]).map_err(|e| e.to_string()).and_then(|p| trace_npoint(q, &p).map_err(|e| e.to_string()));
                if let (Ok(d), Ok(rec)) = (direct, t.reconstruct(q, w, z)) {
                    err = err.max((d - rec).norm());
                }
            }
            report.push(Record::new("four_point", t.diagnostics(), err));
        }
        Err(e) => report.note(format!("4-point tensor: {e}")),
    }
    if q.k() == 2 && q.dim() == 3 {
        match subalgebra_structure(q, BoundaryPoint::new(0.4, -0.3)) {
            Ok(s) => report.push(Record::new(
                "subalgebra",
                json!({ "tau": s.tau, "roots": s.roots.iter().map(|p| p.to_string()).collect::<Vec<_>>() }),
                s.closure_residual,
            )),
            Err(RepError::DegenerateRoots { separation }) => {
                report.note(format!("subalgebra: roots coincide (separation {separation:.2e}); no structure table"))
            }
            Err(e) => report.note(format!("subalgebra: {e}")),
        }
    }
    report.push(Record::new("sphere", q.to_json(), 0.0));
}

fn rep(
    cfg: &RunConfig,
    source: RepSource,
    k: Option<usize>,
    w_grid: usize,
    radius: f64,
    report: &mut Report,
) -> Result<i32, CliError> {
    let k = k.unwrap_or(cfg.charge as usize);
    let q = match source {
        RepSource::Identity => HoloSphere::identity(),
        RepSource::Veronese => HoloSphere::veronese(),
        RepSource::Random => HoloSphere::random(k, &mut rng(cfg.seed)),
        RepSource::Monad => sphere_from_nahm(k, cfg)?,
        RepSource::Scan => {
            let f = bulk_field(cfg, "rep --source scan")?;
            let res = run_scan(f.as_ref(), cfg, w_grid, radius, k, report)?;
            let fit = res.fit.map_err(CliError::Numerical)?;
            report.push(Record::new("spectral_fit", matrix_value(&fit.coeffs), fit.fit_residual));
            q_from_spectral(&fit).map_err(numerical)?
        }
    };
    sphere_records(&q, cfg.seed, report);
    Ok(EXIT_OK)
}
