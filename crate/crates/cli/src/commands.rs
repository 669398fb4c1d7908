//! Subcommand implementations.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Serialize;

use l2geom::dynamics::{geodesic_distance, integrate_geodesic, log_field, LogOptions};
use l2geom::io;
use l2geom::manifold::{registry, Manifold, DEFAULT_STEPS};
use l2geom::mapspace::{exp_field, MapField, TangentField};
use l2geom::reparam::{
    check_equivariance, check_metric_invariance, DiscreteDiffeo, EquivarianceInputs, EquivariantOp,
    InvarianceReport,
};
use l2geom::transport::{
    submersion_check, wasserstein2_assignment, wasserstein2_bruteforce, Assignment,
    DiscreteMeasure, BRUTEFORCE_MAX_ATOMS,
};
use l2geom::verification::{run_all, OracleReport};
use l2geom::GeomError;

use crate::args::{
    Command, CurvatureArgs, ExpArgs, GeodesicArgs, LogArgs, ReparamArgs, TransportArgs, VerifyArgs,
};
use crate::config::FileConfig;
use crate::CliError;

const DEFAULT_SNAPSHOTS: u64 = 11;
const DEFAULT_STEPS_PER_SNAPSHOT: u64 = 100;
const DEFAULT_INSTANCES: u64 = 100;
/// Tolerance of the measure-preserving invariance check.
const INVARIANCE_TOL: f64 = 1e-12;

type CmdResult = Result<u8, CliError>;

pub fn dispatch(command: Command, cfg: &FileConfig) -> CmdResult {
    match command {
        Command::ListManifolds => list_manifolds(),
        Command::Geodesic(a) => geodesic(a, cfg),
        Command::Exp(a) => exp(a, cfg),
        Command::Log(a) => log(a, cfg),
        Command::Distance(a) => distance(a, cfg),
        Command::Curvature(a) => curvature(a, cfg),
        Command::Verify(a) => verify(a, cfg),
        Command::Reparam(a) => reparam(a, cfg),
        Command::Transport(a) => transport(a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Wraps a parse/validation error with the offending file.
fn in_file(path: &Path) -> impl Fn(GeomError) -> CliError + '_ {
    move |e| CliError::input(format!("{}: {e}", path.display()))
}

fn computation(e: GeomError) -> CliError {
    CliError::failure(e.to_string())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Writes to `out` when given, otherwise prints to standard output.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_map(path: &Path) -> Result<MapField, CliError> {
    Ok(io::read_field(&read(path)?).map_err(in_file(path))?.0)
}

fn load_tangent(path: &Path) -> Result<TangentField, CliError> {
    io::read_tangent(&read(path)?).map_err(in_file(path))
}

fn manifold(flag: Option<String>, cfg: &FileConfig) -> Result<Manifold, CliError> {
    let spec = flag
        .or_else(|| cfg.manifold.clone())
        .ok_or_else(|| CliError::input("--manifold is required (flag or config file)"))?;
    registry::parse(&spec).map_err(|e| CliError::input(format!("--manifold {spec}: {e}")))
}

fn list_manifolds() -> CmdResult {
    println!(
        "{:<12}{:<34}{:<28}DESCRIPTION",
        "NAME", "KEYS", "REPRESENTATIONS"
    );
    for e in registry::entries() {
        println!(
            "{:<12}{:<34}{:<28}{}",
            e.name, e.keys, e.representations, e.description
        );
    }
    Ok(0)
}

fn geodesic(a: GeodesicArgs, cfg: &FileConfig) -> CmdResult {
    let h0 = load_tangent(&a.field)?;
    let snapshots = a.snapshots.or(cfg.snapshots).unwrap_or(DEFAULT_SNAPSHOTS) as usize;
    let sps = a
        .steps_per_snapshot
        .or(cfg.steps_per_snapshot)
        .unwrap_or(DEFAULT_STEPS_PER_SNAPSHOT) as usize;
    let (path, report) = integrate_geodesic(&h0, snapshots, sps).map_err(computation)?;
    if let Some(p) = &a.out.output {
        write(p, &io::path_to_json(&path))?;
    }
    if let Some(p) = &a.report {
        write(p, &io::to_json_string(&report))?;
    }
    if let Some(p) = &a.csv {
        write(p, &report.to_csv())?;
    }
    println!("snapshots: {snapshots}");
    println!("steps: {}", (snapshots - 1) * sps);
    println!(
        "max_pointwise_geodesic_residual: {:e}",
        report.max_pointwise_geodesic_residual
    );
    println!("constraint_drift: {:e}", report.constraint_drift);
    println!(
        "relative_energy_drift: {:e}",
        report.relative_energy_drift()
    );
    Ok(0)
}

fn exp(a: ExpArgs, cfg: &FileConfig) -> CmdResult {
    let h = load_tangent(&a.field)?;
    let steps = a.steps.or(cfg.steps).unwrap_or(DEFAULT_STEPS as u64) as usize;
    let q1 = exp_field(&h, steps).map_err(computation)?;
    emit(&a.out.output, &io::map_to_json(&q1))?;
    Ok(0)
}

fn log_inputs(a: &LogArgs, cfg: &FileConfig) -> Result<(MapField, MapField, LogOptions), CliError> {
    let q0 = load_map(&a.from)?;
    let q1 = load_map(&a.to)?;
    if !q0.same_space(&q1) {
        return Err(CliError::input(format!(
            "{} and {} live on different domains or targets",
            a.from.display(),
            a.to.display()
        )));
    }
    let defaults = LogOptions::default();
    let opts = LogOptions {
        steps: a.steps.or(cfg.steps).map_or(defaults.steps, |s| s as usize),
        max_iterations: a
            .max_iterations
            .or(cfg.max_iterations)
            .map_or(defaults.max_iterations, |s| s as usize),
        tolerance: a.tolerance.or(cfg.tolerance).unwrap_or(defaults.tolerance),
    };
    Ok((q0, q1, opts))
}

fn log(a: LogArgs, cfg: &FileConfig) -> CmdResult {
    let (q0, q1, opts) = log_inputs(&a, cfg)?;
    let h = log_field(&q0, &q1, &opts).map_err(computation)?;
    emit(&a.out.output, &io::tangent_to_json(&h))?;
    Ok(0)
}

fn distance(a: LogArgs, cfg: &FileConfig) -> CmdResult {
    let (q0, q1, opts) = log_inputs(&a, cfg)?;
    let d = geodesic_distance(&q0, &q1, &opts).map_err(computation)?;
    emit(&a.out.output, &format!("{d}\n"))?;
    Ok(0)
}

#[derive(Serialize)]
struct CurvatureOutput {
    manifold: String,
    point: Vec<f64>,
    h: Vec<f64>,
    k: Vec<f64>,
    l: Vec<f64>,
    curvature: Vec<f64>,
    /// `None` when h and k are linearly dependent.
    sectional: Option<f64>,
}

fn curvature(a: CurvatureArgs, cfg: &FileConfig) -> CmdResult {
    let man = manifold(a.manifold, cfg)?;
    let x = DVector::from_vec(a.point.0);
    let h = DVector::from_vec(a.h.0);
    let k = DVector::from_vec(a.k.0);
    let l = a.l.map_or_else(|| k.clone(), |c| DVector::from_vec(c.0));
    man.check_point(&x)
        .map_err(|e| CliError::input(format!("--point: {e}")))?;
    for (name, v) in [("--h", &h), ("--k", &k), ("--l", &l)] {
        man.check_tangent(&x, v)
            .map_err(|e| CliError::input(format!("{name}: {e}")))?;
    }
    let r = man.curvature(&x, &h, &k, &l).map_err(computation)?;
    let gram = |a: &DVector<f64>, b: &DVector<f64>| man.inner(&x, a, b).map_err(computation);
    let denom = gram(&h, &h)? * gram(&k, &k)? - gram(&h, &k)?.powi(2);
    let sectional = if denom > 1e-14 * gram(&h, &h)? * gram(&k, &k)? && denom > 0.0 {
        Some(man.sectional_curvature(&x, &h, &k).map_err(computation)?)
    } else {
        None
    };
    let out = CurvatureOutput {
        manifold: man.name().to_string(),
        point: x.iter().copied().collect(),
        h: h.iter().copied().collect(),
        k: k.iter().copied().collect(),
        l: l.iter().copied().collect(),
        curvature: r.iter().copied().collect(),
        sectional,
    };
    emit(&a.out.output, &io::to_json_string(&out))?;
    Ok(0)
}

fn report_table(reports: &[OracleReport]) -> String {
    let mut s = format!(
        "{:<28}{:>14}{:>12}{:>11}  RESULT\n",
        "CHECK", "MAX_ABS_ERROR", "TOLERANCE", "INSTANCES"
    );
    for r in reports {
        s.push_str(&format!(
            "{:<28}{:>14.3e}{:>12.1e}{:>11}  {}\n",
            r.check_name,
            r.max_abs_error,
            r.tolerance,
            r.instance_count,
            if r.passed { "PASS" } else { "FAIL" }
        ));
    }
    s
}

fn verify(a: VerifyArgs, cfg: &FileConfig) -> CmdResult {
    let man = manifold(a.manifold, cfg)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let instances = a.instances.or(cfg.instances).unwrap_or(DEFAULT_INSTANCES) as usize;
    let reports = run_all(&man, instances, seed).map_err(computation)?;
    println!(
        "manifold: {}  seed: {seed}  instances: {instances}",
        man.name()
    );
    print!("{}", report_table(&reports));
    if let Some(p) = &a.out.output {
        write(p, &io::to_json_string(&reports))?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        println!("{failed} check(s) failed");
        return Ok(1);
    }
    println!("all checks passed");
    Ok(0)
}

#[derive(Serialize)]
struct ReparamOutput {
    perm: Vec<usize>,
    pulled_weights: Vec<f64>,
    #[serde(flatten)]
    invariance: InvarianceReport,
    /// `|lhs − rhs| ≤ 1e-12`; only claimed when φ preserves μ.
    invariance_holds: Option<bool>,
    equivariance: Vec<OracleReport>,
}

fn reparam(a: ReparamArgs, cfg: &FileConfig) -> CmdResult {
    let h = load_tangent(&a.field)?;
    let k = match &a.other {
        Some(p) => {
            let k = load_tangent(p)?;
            if h.base() != k.base() {
                return Err(CliError::input(format!(
                    "{}: base map differs from {}",
                    p.display(),
                    a.field.display()
                )));
            }
            // Share the target instance so fields compare as one space.
            TangentField::new(h.base().clone(), k.vecs().to_vec()).map_err(in_file(p))?
        }
        None => h.clone(),
    };
    let perm = io::read_permutation(&read(&a.perm)?).map_err(in_file(&a.perm))?;
    let phi = DiscreteDiffeo::new(perm, h.domain()).map_err(in_file(&a.perm))?;
    let steps = a.steps.or(cfg.steps).unwrap_or(DEFAULT_STEPS as u64) as usize;

    let invariance = check_metric_invariance(&phi, h.base(), &h, &k).map_err(computation)?;
    let inputs = EquivarianceInputs {
        h: h.clone(),
        k: k.clone(),
        l: h.clone(),
        steps,
    };
    let equivariance = EquivariantOp::ALL
        .iter()
        .map(|op| check_equivariance(&phi, *op, &inputs))
        .collect::<Result<Vec<_>, _>>()
        .map_err(computation)?;
    let invariance_holds = invariance
        .measure_preserving
        .then(|| (invariance.lhs - invariance.rhs).abs() <= INVARIANCE_TOL);
    let ok = invariance_holds != Some(false) && equivariance.iter().all(|r| r.passed);
    let out = ReparamOutput {
        perm: phi.perm().to_vec(),
        pulled_weights: phi.pulled_weights().to_vec(),
        invariance,
        invariance_holds,
        equivariance,
    };
    emit(&a.out.output, &io::to_json_string(&out))?;
    Ok(if ok { 0 } else { 1 })
}

#[derive(Serialize)]
struct MeasureTransportOutput {
    assignment: Assignment,
    bruteforce: Option<Assignment>,
    solvers_agree: Option<bool>,
}

fn load_measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    io::from_json_str(&read(path)?).map_err(in_file(path))
}

fn transport(a: TransportArgs) -> CmdResult {
    match (&a.source, &a.target, &a.base, &a.rearranged) {
        (Some(src), Some(tgt), None, None) => {
            let mu = load_measure(src)?;
            let nu = load_measure(tgt)?;
            let assignment =
                wasserstein2_assignment(&mu, &nu).map_err(|e| CliError::input(e.to_string()))?;
            let bruteforce = if mu.len() <= BRUTEFORCE_MAX_ATOMS {
                Some(wasserstein2_bruteforce(&mu, &nu).map_err(computation)?)
            } else {
                None
            };
            let solvers_agree = bruteforce.as_ref().map(|b| b.cost == assignment.cost);
            let out = MeasureTransportOutput {
                assignment,
                bruteforce,
                solvers_agree,
            };
            emit(&a.out.output, &io::to_json_string(&out))?;
            Ok(if out.solvers_agree == Some(false) {
                1
            } else {
                0
            })
        }
        (None, None, Some(base), Some(phi)) => {
            let base_q = load_map(base)?;
            let phi_q = load_map(phi)?;
            if !base_q.same_space(&phi_q) {
                return Err(CliError::input(format!(
                    "{}: domain or target differs from {}",
                    phi.display(),
                    base.display()
                )));
            }
            let report =
                submersion_check(&base_q, &phi_q).map_err(|e| CliError::input(e.to_string()))?;
            emit(&a.out.output, &io::to_json_string(&report))?;
            Ok(if report.inequality_holds { 0 } else { 1 })
        }
        _ => Err(CliError::input(
            "transport needs either --source and --target, or --base and --rearranged",
        )),
    }
}
