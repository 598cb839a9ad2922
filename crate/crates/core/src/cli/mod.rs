//! Command-line front end: loads a problem file, runs one command, writes a
//! JSON report and any CSV series.
//!
//! Exit codes: 0 success, 1 usage, 2 input, 3 numerical failure, 4 failed
//! `--assert-*` check.

mod output;
mod problem;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::accessibility::{
    bracket_maneuver_3d, reachability_report_2d, zero_work_trace_2d, ManeuverOptions, TraceOptions,
};
use crate::auxiliary::{
    auxiliary_trajectory, nonlocal_hamiltonian_series, Accumulation, AuxiliaryOptions,
    AuxiliaryProblem,
};
use crate::darboux::{
    builtins, characteristic_deviation, classify, decompose3d, equivalence_residual,
    gauge_transform, parse_gauge_function, verify_representation, vpde_residual,
    CharacteristicOptions, PotentialSet, Thresholds,
};
use crate::dynamics::{integrate, work_energy_residual, Integrator, SimConfig};
use crate::error::Error;
use crate::fieldkit::{Region, SamplePlan, ScalarFieldDef};
use crate::pathwork::{line_work, stokes_work, ParamPath, QuadratureConfig};
use crate::types::{point, Dim, Vec3};

pub use output::{fmt_num, write_csv, Assertion, RunReport};
pub use problem::{Problem, ProblemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

/// Default number of region samples.
pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "curlforce", version, about = "Curl-force analysis toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Problem file (JSON).
    pub problem: PathBuf,
    /// Directory for report.json and CSV series; the report goes to stdout
    /// when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for quasi-random regions.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample count for quasi-random regions.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Tolerance for `--assert-value`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Named region from the problem file; defaults to the whole domain.
    #[arg(long)]
    pub region: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct Motion {
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
    pub x0: Coords,
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
    pub v0: Coords,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long, value_enum, default_value_t = IntegratorKind::Dopri45)]
    pub integrator: IntegratorKind,
    /// Fixed step for rk4.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub atol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    /// Largest dopri45 step; defaults to t_end/10.
    #[arg(long)]
    pub h_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorKind {
    Rk4,
    Dopri45,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AccumulationKind {
    Gauss,
    Trapezoid,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonical class of the force (conservative, two-potential, chiral).
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-8)]
        conservative_threshold: f64,
        #[arg(long, default_value_t = 1e-8)]
        chiral_threshold: f64,
        #[arg(long)]
        assert_class: Option<String>,
    },
    /// Residual of F + V grad U (+ grad W) for the problem's potentials.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        assert_residual: Option<f64>,
    },
    /// Residual of grad V x F - V curl F.
    Vpde {
        #[command(flatten)]
        common: Common,
        /// Candidate V; defaults to the problem's V.
        #[arg(long)]
        v: Option<String>,
        /// 2D only: V = x^3 y^2 Phi((x+y)/(xy)) with Phi given in s.
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        assert_residual: Option<f64>,
    },
    /// Applies (U, V) -> (f(U), V/f'(U)) and re-verifies the representation.
    Gauge {
        #[command(flatten)]
        common: Common,
        /// Gauge function in the variable u.
        #[arg(long)]
        f: String,
        #[arg(long)]
        assert_residual: Option<f64>,
    },
    /// Splits a 3D force into conservative and non-conservative parts.
    Decompose3d {
        #[command(flatten)]
        common: Common,
        /// Candidate V (repeatable); defaults to the problem's v_candidates.
        #[arg(long)]
        v: Vec<String>,
        #[arg(long)]
        assert_curl: Option<f64>,
    },
    /// Drift of V along the characteristics dx/ds = curl F.
    Characteristics {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        x0: Coords,
        #[arg(long, default_value_t = 2.0)]
        s_max: f64,
        #[arg(long)]
        v: Vec<String>,
        #[arg(long)]
        assert_deviation: Option<f64>,
    },
    /// Integrates m x'' = F(x) with work-energy bookkeeping.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        motion: Motion,
        #[arg(long)]
        assert_residual: Option<f64>,
    },
    /// Work along a named path.
    Work {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        path: String,
        #[arg(long)]
        reverse: bool,
        #[arg(long, allow_hyphen_values = true)]
        assert_value: Option<f64>,
    },
    /// Loop work as the flux of curl F through a planar polygon.
    Stokes {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        path: String,
        #[arg(long)]
        reverse: bool,
        #[arg(long, allow_hyphen_values = true)]
        assert_value: Option<f64>,
    },
    /// Motion under the rescaled force (F + grad W)/V and its Hamiltonian.
    Auxiliary {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        motion: Motion,
        #[arg(long)]
        assert_drift: Option<f64>,
    },
    /// Nonlocal momentum and Hamiltonian along the original trajectory.
    NonlocalH {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        motion: Motion,
        #[arg(long, value_enum, default_value_t = AccumulationKind::Gauss)]
        accumulation: AccumulationKind,
        /// Interval subdivision for trapezoid accumulation.
        #[arg(long, default_value_t = 1)]
        refine: usize,
        #[arg(long)]
        assert_drift: Option<f64>,
    },
    /// Traces the zero-work curve through a point (2D).
    Trace2d {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        x0: Coords,
        #[arg(long, default_value_t = 0.5)]
        arclength: f64,
        #[arg(long)]
        assert_work: Option<f64>,
    },
    /// Which targets are reachable from x0 without work (2D).
    Reach2d {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        x0: Coords,
        /// Target point (repeatable).
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        target: Vec<Coords>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        arclength: f64,
    },
    /// Four-leg kernel-flow maneuver and its transverse displacement (3D).
    Maneuver3d {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        x0: Coords,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        assert_work: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Verify { .. } => "verify",
            Command::Vpde { .. } => "vpde",
            Command::Gauge { .. } => "gauge",
            Command::Decompose3d { .. } => "decompose3d",
            Command::Characteristics { .. } => "characteristics",
            Command::Simulate { .. } => "simulate",
            Command::Work { .. } => "work",
            Command::Stokes { .. } => "stokes",
            Command::Auxiliary { .. } => "auxiliary",
            Command::NonlocalH { .. } => "nonlocal-h",
            Command::Trace2d { .. } => "trace2d",
            Command::Reach2d { .. } => "reach2d",
            Command::Maneuver3d { .. } => "maneuver3d",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Classify { common, .. }
            | Command::Verify { common, .. }
            | Command::Vpde { common, .. }
            | Command::Gauge { common, .. }
            | Command::Decompose3d { common, .. }
            | Command::Characteristics { common, .. }
            | Command::Simulate { common, .. }
            | Command::Work { common, .. }
            | Command::Stokes { common, .. }
            | Command::Auxiliary { common, .. }
            | Command::NonlocalH { common, .. }
            | Command::Trace2d { common, .. }
            | Command::Reach2d { common, .. }
            | Command::Maneuver3d { common, .. } => common,
        }
    }
}

/// A point given on the command line as `x,y` or `x,y,z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords(pub Vec<f64>);

fn parse_coords(s: &str) -> Result<Coords, String> {
    let out: Result<Vec<f64>, _> = s.split(',').map(|c| c.trim().parse::<f64>()).collect();
    let out = out.map_err(|e| format!("expected comma-separated numbers: {e}"))?;
    if !(2..=3).contains(&out.len()) || out.iter().any(|v| !v.is_finite()) {
        return Err("expected 2 or 3 finite coordinates".into());
    }
    Ok(Coords(out))
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INPUT
            },
            message: e.to_string(),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

/// CSV file stem, header and rows.
type Series = (&'static str, Vec<String>, Vec<Vec<f64>>);

/// What a command produced.
struct Produced {
    results: Value,
    assertions: Vec<Assertion>,
    series: Vec<Series>,
    /// A numerical failure found after the artifacts were produced (e.g. a
    /// trajectory that left the domain).
    late_failure: Option<Error>,
}

impl Produced {
    fn new(results: Value) -> Self {
        Self {
            results,
            assertions: Vec::new(),
            series: Vec::new(),
            late_failure: None,
        }
    }

    fn assert(mut self, a: Option<Assertion>) -> Self {
        self.assertions.extend(a);
        self
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli, &args) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn digest(problem_bytes: &[u8], args: &[OsString]) -> String {
    let mut h = Sha256::new();
    h.update(problem_bytes);
    let mut skip = false;
    for a in args.iter().skip(1) {
        let s = a.to_string_lossy();
        if skip {
            skip = false;
            continue;
        }
        if s == "--out" {
            skip = true;
            continue;
        }
        if s.starts_with("--out=") {
            continue;
        }
        h.update([0u8]);
        h.update(s.as_bytes());
    }
    format!("{:x}", h.finalize())
}

fn run(cli: &Cli, args: &[OsString]) -> Outcome<i32> {
    let common = cli.command.common();
    let (problem, bytes) = Problem::load(&common.problem).map_err(Failure::input)?;
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure {
            code: EXIT_NUMERICAL,
            message: format!("{}: {e}", dir.display()),
        })?;
    }
    let produced = dispatch(&cli.command, &problem)?;
    let report = RunReport {
        command: cli.command.name().into(),
        inputs_digest: digest(&bytes, args),
        results: produced.results,
        assertions: produced.assertions,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let io_failure = |p: &Path, e: std::io::Error| Failure {
        code: EXIT_NUMERICAL,
        message: format!("{}: {e}", p.display()),
    };
    let report_path = common.out.as_ref().map(|d| d.join("report.json"));
    output::write_report(report_path.as_deref(), &report)
        .map_err(|e| io_failure(report_path.as_deref().unwrap_or(Path::new("<stdout>")), e))?;
    if let Some(dir) = &common.out {
        for (name, header, rows) in &produced.series {
            let p = dir.join(format!("{name}.csv"));
            write_csv(&p, header, rows).map_err(|e| io_failure(&p, e))?;
        }
    }
    if let Some(e) = produced.late_failure {
        return Err(e.into());
    }
    let failed: Vec<&str> = report
        .assertions
        .iter()
        .filter(|a| !a.passed)
        .map(|a| a.name.as_str())
        .collect();
    if !failed.is_empty() {
        eprintln!("assertion failed: {}", failed.join(", "));
        return Ok(EXIT_ASSERTION);
    }
    Ok(EXIT_OK)
}

fn region_for(common: &Common, problem: &Problem) -> Outcome<Region> {
    let mut region = match &common.region {
        Some(name) => problem.regions.get(name).cloned().ok_or_else(|| {
            Failure::input(format!("no region named '{name}' in the problem file"))
        })?,
        None => Region::new(
            problem.domain.clone(),
            SamplePlan::QuasiRandom {
                count: DEFAULT_SAMPLES,
                seed: 0,
            },
        )?,
    };
    if let SamplePlan::QuasiRandom { count, seed } = &mut region.plan {
        if let Some(n) = common.samples {
            *count = n;
        }
        if let Some(s) = common.seed {
            *seed = s;
        }
    }
    Ok(Region::new(region.bounds, region.plan)?)
}

fn require<'a>(field: &'a Option<ScalarFieldDef>, name: &str) -> Outcome<&'a ScalarFieldDef> {
    field
        .as_ref()
        .ok_or_else(|| Failure::input(format!("problem file has no potential {name}")))
}

fn potentials(problem: &Problem) -> Outcome<PotentialSet> {
    Ok(PotentialSet::new(
        require(&problem.u, "U")?.clone(),
        require(&problem.v, "V")?.clone(),
        problem.w.clone(),
    )?)
}

fn coords_point(raw: &Coords, dim: Dim, flag: &str) -> Outcome<Vec3> {
    let raw = &raw.0;
    if raw.len() != dim.n() {
        return Err(Failure::input(format!(
            "--{flag} needs {} coordinates for a {dim} problem",
            dim.n()
        )));
    }
    Ok(point(raw))
}

fn vec_json(v: &Vec3, dim: Dim) -> Value {
    json!(v.iter().take(dim.n()).copied().collect::<Vec<f64>>())
}

fn sim_config(motion: &Motion, mass: f64) -> SimConfig {
    let integrator = match motion.integrator {
        IntegratorKind::Rk4 => Integrator::Rk4Fixed { step: motion.step },
        IntegratorKind::Dopri45 => Integrator::Dopri45 {
            atol: motion.atol,
            rtol: motion.rtol,
            h_init: None,
            h_max: motion.h_max,
        },
    };
    SimConfig::new(mass, motion.t_end).with_integrator(integrator)
}

fn candidates(problem: &Problem, explicit: &[String]) -> Outcome<Vec<(String, ScalarFieldDef)>> {
    if !explicit.is_empty() {
        return explicit
            .iter()
            .map(|s| Ok((s.clone(), problem.scalar(s).map_err(Failure::input)?)))
            .collect();
    }
    if !problem.v_candidates.is_empty() {
        return Ok(problem.v_candidates.clone());
    }
    let v = require(&problem.v, "V")?;
    Ok(vec![(v.expr().to_infix(), v.clone())])
}

fn named_path(problem: &Problem, name: &str, reverse: bool) -> Outcome<ParamPath> {
    let p = problem
        .paths
        .get(name)
        .ok_or_else(|| Failure::input(format!("no path named '{name}' in the problem file")))?;
    Ok(if reverse { p.reverse() } else { p.clone() })
}

fn dispatch(command: &Command, problem: &Problem) -> Outcome<Produced> {
    let dim = problem.dim;
    let common = command.common();
    let tol = common.tol.unwrap_or(1e-6);
    match command {
        Command::Classify {
            conservative_threshold,
            chiral_threshold,
            assert_class,
            ..
        } => {
            let region = region_for(common, problem)?;
            let thresholds = Thresholds {
                conservative: *conservative_threshold,
                chiral: *chiral_threshold,
                ..Thresholds::default()
            };
            let report = classify(&problem.force, &region, &thresholds)?;
            let label = report.class.label();
            Ok(Produced::new(json!(report)).assert(
                assert_class
                    .as_ref()
                    .map(|c| Assertion::equals("class", label, c)),
            ))
        }
        Command::Verify {
            assert_residual, ..
        } => {
            let region = region_for(common, problem)?;
            let report = verify_representation(&problem.force, &potentials(problem)?, &region)?;
            let max = report.max;
            Ok(Produced::new(json!(report))
                .assert(assert_residual.map(|b| Assertion::at_most("residual", max, b))))
        }
        Command::Vpde {
            v,
            phi,
            assert_residual,
            ..
        } => {
            let region = region_for(common, problem)?;
            let (label, field) = match (v, phi) {
                (Some(_), Some(_)) => {
                    return Err(Failure::input("give at most one of --v and --phi"))
                }
                (Some(src), None) => (src.clone(), problem.scalar(src).map_err(Failure::input)?),
                (None, Some(phi)) => {
                    if dim != Dim::Two {
                        return Err(Failure::input("--phi applies to 2D problems"));
                    }
                    let f = builtins::planar_v_family(
                        phi,
                        problem.constants.clone(),
                        problem.domain.clone(),
                    )?;
                    (f.expr().to_infix(), f)
                }
                (None, None) => {
                    let f = require(&problem.v, "V")?;
                    (f.expr().to_infix(), f.clone())
                }
            };
            let report = vpde_residual(&problem.force, &field, &region)?;
            let max = report.max;
            Ok(Produced::new(json!({ "v": label, "residual": report }))
                .assert(assert_residual.map(|b| Assertion::at_most("residual", max, b))))
        }
        Command::Gauge {
            f, assert_residual, ..
        } => {
            let region = region_for(common, problem)?;
            let names = problem.constants.keys().cloned().collect();
            let tree =
                parse_gauge_function(f, &names).map_err(|e| Failure::input(format!("--f: {e}")))?;
            crate::exprlang::check_bound(&tree, &problem.constants)
                .map_err(|e| Failure::input(format!("--f: {e}")))?;
            let pots = potentials(problem)?;
            let new = gauge_transform(&pots, &tree, &region)?;
            let report = verify_representation(&problem.force, &new, &region)?;
            let max = report.max;
            Ok(Produced::new(json!({
                "f": tree.to_infix(),
                "U": new.u.expr().to_infix(),
                "V": new.v.expr().to_infix(),
                "residual": report,
            }))
            .assert(assert_residual.map(|b| Assertion::at_most("residual", max, b))))
        }
        Command::Decompose3d { v, assert_curl, .. } => {
            if dim != Dim::Three {
                return Err(Failure::input("decompose3d needs a 3D problem"));
            }
            let region = region_for(common, problem)?;
            let mut parts = Vec::new();
            let mut entries = Vec::new();
            let mut worst: f64 = 0.0;
            for (label, field) in candidates(problem, v)? {
                let d = decompose3d(&problem.force, &field, &region, &Thresholds::default())?;
                worst = worst.max(d.diagnostics.curl_conservative.max);
                entries.push(json!({ "v": label, "diagnostics": d.diagnostics }));
                parts.push((label, d));
            }
            let mut pairs = Vec::new();
            for i in 0..parts.len() {
                for j in i + 1..parts.len() {
                    let r = equivalence_residual(&parts[i].1, &parts[j].1, &region)?;
                    worst = worst.max(r.max);
                    pairs.push(json!({ "a": parts[i].0, "b": parts[j].0, "residual": r }));
                }
            }
            Ok(
                Produced::new(json!({ "decompositions": entries, "equivalence": pairs }))
                    .assert(assert_curl.map(|b| Assertion::at_most("curl", worst, b))),
            )
        }
        Command::Characteristics {
            x0,
            s_max,
            v,
            assert_deviation,
            ..
        } => {
            if dim != Dim::Three {
                return Err(Failure::input("characteristics needs a 3D problem"));
            }
            let x0 = coords_point(x0, dim, "x0")?;
            let mut entries = Vec::new();
            let mut worst: f64 = 0.0;
            for (label, field) in candidates(problem, v)? {
                let r = characteristic_deviation(
                    &problem.force,
                    &field,
                    &x0,
                    *s_max,
                    &CharacteristicOptions::default(),
                )?;
                worst = worst.max(r.deviation);
                entries.push(json!({ "v": label, "report": r }));
            }
            Ok(Produced::new(
                json!({ "x0": vec_json(&x0, dim), "s_max": s_max, "characteristics": entries }),
            )
            .assert(assert_deviation.map(|b| Assertion::at_most("deviation", worst, b))))
        }
        Command::Simulate {
            motion,
            assert_residual,
            ..
        } => {
            let x0 = coords_point(&motion.x0, dim, "x0")?;
            let v0 = coords_point(&motion.v0, dim, "v0")?;
            let cfg = sim_config(motion, problem.mass);
            let traj = integrate(&problem.force, &x0, &v0, &cfg)?;
            let residual = work_energy_residual(&traj);
            let last = traj.last();
            let mut out = Produced::new(json!({
                "config": cfg,
                "work_energy_residual": residual,
                "samples": traj.len(),
                "stats": traj.stats,
                "final": {
                    "t": last.t,
                    "x": vec_json(&last.x, dim),
                    "v": vec_json(&last.v, dim),
                    "K": last.kinetic,
                    "Wcum": last.work,
                },
                "exit": traj.exit.map(|p| vec_json(&p, dim)),
            }))
            .assert(
                assert_residual.map(|b| Assertion::at_most("work_energy_residual", residual, b)),
            );
            let (h, rows) = output::trajectory_series(&traj);
            out.series.push(("trajectory", h, rows));
            out.late_failure = traj.exit.map(|point| Error::DomainExit { point });
            Ok(out)
        }
        Command::Work {
            path,
            reverse,
            assert_value,
            ..
        } => {
            let p = named_path(problem, path, *reverse)?;
            let r = line_work(&problem.force_wide, &p, &QuadratureConfig::default())?;
            Ok(
                Produced::new(json!({ "path": path, "reversed": reverse, "work": r }))
                    .assert(assert_value.map(|v| Assertion::near("work", r.value, v, tol))),
            )
        }
        Command::Stokes {
            path,
            reverse,
            assert_value,
            ..
        } => {
            let p = named_path(problem, path, *reverse)?;
            let q = QuadratureConfig::default();
            let surface = stokes_work(&problem.force_wide, &p, &q)?;
            let line = line_work(&problem.force_wide, &p, &q)?;
            Ok(Produced::new(json!({
                "path": path,
                "reversed": reverse,
                "surface": surface,
                "line": line,
                "difference": (surface.value - line.value).abs(),
            }))
            .assert(assert_value.map(|v| Assertion::near("work", surface.value, v, tol))))
        }
        Command::Auxiliary {
            motion,
            assert_drift,
            ..
        } => {
            let region = region_for(common, problem)?;
            let prob = AuxiliaryProblem::new(
                problem.force.clone(),
                potentials(problem)?,
                problem.mass,
                &region,
                &AuxiliaryOptions::default(),
            )?;
            let x0 = coords_point(&motion.x0, dim, "x0")?;
            let v0 = coords_point(&motion.v0, dim, "v0")?;
            let run = auxiliary_trajectory(&prob, &x0, &v0, &sim_config(motion, problem.mass))?;
            let last = run.trajectory.last();
            let mut out = Produced::new(json!({
                "v_floor": prob.v_floor,
                "h0": run.hamiltonian[0],
                "drift": run.drift,
                "samples": run.trajectory.len(),
                "stats": run.trajectory.stats,
                "final": { "t": last.t, "x": vec_json(&last.x, dim), "v": vec_json(&last.v, dim) },
                "exit": run.trajectory.exit.map(|p| vec_json(&p, dim)),
            }))
            .assert(assert_drift.map(|b| Assertion::at_most("drift", run.drift, b)));
            let (h, rows) = output::auxiliary_run_series(&run);
            out.series.push(("auxiliary", h, rows));
            out.late_failure = run.trajectory.exit.map(|point| Error::DomainExit { point });
            Ok(out)
        }
        Command::NonlocalH {
            motion,
            accumulation,
            refine,
            assert_drift,
            ..
        } => {
            let region = region_for(common, problem)?;
            let prob = AuxiliaryProblem::new(
                problem.force.clone(),
                potentials(problem)?,
                problem.mass,
                &region,
                &AuxiliaryOptions::default(),
            )?;
            let x0 = coords_point(&motion.x0, dim, "x0")?;
            let v0 = coords_point(&motion.v0, dim, "v0")?;
            let traj = integrate(&problem.force, &x0, &v0, &sim_config(motion, problem.mass))?;
            let acc = match accumulation {
                AccumulationKind::Gauss => Accumulation::Gauss,
                AccumulationKind::Trapezoid => Accumulation::Trapezoid { refine: *refine },
            };
            let series = nonlocal_hamiltonian_series(&traj, &prob, acc)?;
            let mut out = Produced::new(json!({
                "accumulation": acc,
                "h0": series.h.first(),
                "drift": series.drift,
                "truncated": series.truncated,
                "samples": series.t.len(),
                "trajectory_exit": traj.exit.map(|p| vec_json(&p, dim)),
            }))
            .assert(assert_drift.map(|b| Assertion::at_most("drift", series.drift, b)));
            let (h, rows) = output::nonlocal_series(&series);
            out.series.push(("nonlocal", h, rows));
            Ok(out)
        }
        Command::Trace2d {
            x0,
            arclength,
            assert_work,
            ..
        } => {
            if dim != Dim::Two {
                return Err(Failure::input("trace2d needs a 2D problem"));
            }
            let x0 = coords_point(x0, dim, "x0")?;
            let trace =
                zero_work_trace_2d(&problem.force, &x0, *arclength, &TraceOptions::default())?;
            let work = line_work(&problem.force, &trace.path, &QuadratureConfig::default())?;
            let u_variation = match &problem.u {
                Some(u) => {
                    let u0 = u.value(&x0)?;
                    let mut worst: f64 = 0.0;
                    for p in trace.dense_points(8)? {
                        worst = worst.max((u.value(&p)? - u0).abs());
                    }
                    Some(worst)
                }
                None => None,
            };
            let mut out = Produced::new(json!({
                "x0": vec_json(&x0, dim),
                "arclength": arclength,
                "nodes": trace.nodes.len(),
                "work": work,
                "u_variation": u_variation,
            }))
            .assert(assert_work.map(|b| Assertion::at_most("work", work.value.abs(), b)));
            let (h, rows) = output::trace_series(&trace);
            out.series.push(("trace", h, rows));
            Ok(out)
        }
        Command::Reach2d {
            x0,
            target,
            delta,
            arclength,
            ..
        } => {
            if dim != Dim::Two {
                return Err(Failure::input("reach2d needs a 2D problem"));
            }
            let x0 = coords_point(x0, dim, "x0")?;
            let targets = target
                .iter()
                .map(|t| coords_point(t, dim, "target"))
                .collect::<Outcome<Vec<_>>>()?;
            let report = reachability_report_2d(
                &problem.force,
                &x0,
                &targets,
                *delta,
                *arclength,
                &TraceOptions::default(),
            )?;
            Ok(Produced::new(json!(report)))
        }
        Command::Maneuver3d {
            x0,
            epsilon,
            assert_work,
            ..
        } => {
            if dim != Dim::Three {
                return Err(Failure::input("maneuver3d needs a 3D problem"));
            }
            let x0 = coords_point(x0, dim, "x0")?;
            let r = bracket_maneuver_3d(
                &problem.force_wide,
                &x0,
                *epsilon,
                &ManeuverOptions::default(),
            )?;
            let work = r.work;
            let mut out = Produced::new(json!(r))
                .assert(assert_work.map(|b| Assertion::at_most("work", work.abs(), b)));
            let (h, rows) = output::maneuver_series(&r);
            out.series.push(("maneuver", h, rows));
            Ok(out)
        }
    }
}
