//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the PASS/FAIL lines are always shown.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curlforce::accessibility::{
    bracket_maneuver_3d, frame_bracket_check, reachability_report_2d, zero_work_trace_2d,
    ManeuverOptions, TraceOptions,
};
use curlforce::auxiliary::{
    auxiliary_trajectory, nonlocal_hamiltonian_series, physical_energy, Accumulation,
    AuxiliaryOptions, AuxiliaryProblem,
};
use curlforce::darboux::{
    builtins, characteristic_deviation, decompose3d, equivalence_residual, verify_representation,
    vpde_residual, CharacteristicOptions, PotentialSet, Thresholds,
};
use curlforce::dynamics::{integrate, work_energy_residual, Integrator, SimConfig};
use curlforce::exprlang::{self, Bindings, ConstantTable};
use curlforce::fieldkit::{BoxDomain, DiffMode, Region, ScalarFieldDef, VectorFieldDef};
use curlforce::pathwork::{line_work, stokes_work, ParamPath, QuadratureConfig};
use curlforce::{Dim, Vec3};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn unit_constants() -> Arc<ConstantTable> {
    Arc::new(BTreeMap::from([
        ("F0".to_string(), 1.0),
        ("a".to_string(), 1.0),
    ]))
}

fn no_constants() -> Arc<ConstantTable> {
    Arc::new(ConstantTable::new())
}

fn planar_domain() -> BoxDomain {
    BoxDomain::closed(&[(0.05, 5.0), (0.05, 5.0)]).unwrap()
}

fn planar_field(domain: BoxDomain) -> VectorFieldDef {
    VectorFieldDef::parse(
        &["-F0/a^3*x*y^2", "-F0/a^3*x^3"],
        Dim::Two,
        unit_constants(),
        domain,
    )
    .unwrap()
}

fn planar_scalar(src: &str) -> ScalarFieldDef {
    ScalarFieldDef::parse(src, Dim::Two, unit_constants(), planar_domain()).unwrap()
}

fn planar_region() -> Region {
    Region::quasi_random(&[(0.5, 2.0), (0.5, 2.0)], 200, 0).unwrap()
}

fn cube(half: f64) -> BoxDomain {
    BoxDomain::closed(&[(-half, half), (-half, half), (-half, half)]).unwrap()
}

fn field3(components: &[&str]) -> VectorFieldDef {
    VectorFieldDef::parse(components, Dim::Three, no_constants(), cube(10.0)).unwrap()
}

fn scalar3(src: &str) -> ScalarFieldDef {
    ScalarFieldDef::parse(src, Dim::Three, no_constants(), cube(10.0)).unwrap()
}

fn triple_field() -> VectorFieldDef {
    field3(&["-y*z", "-2*x*z", "-x*y"])
}

fn cube_region(count: usize, seed: u64) -> Region {
    Region::quasi_random(&[(0.5, 2.0), (0.5, 2.0), (0.5, 2.0)], count, seed).unwrap()
}

fn dopri(tol: f64) -> Integrator {
    Integrator::Dopri45 {
        atol: tol,
        rtol: tol,
        h_init: None,
        h_max: None,
    }
}

fn representation_2d() -> Check {
    let field = planar_field(planar_domain());
    let pots = PotentialSet::new(
        planar_scalar("-F0*a^2*(1/x + 1/y)"),
        planar_scalar("a^(-5)*x^3*y^2"),
        None,
    )
    .map_err(e)?;
    let region = planar_region();
    let rep = verify_representation(&field, &pots, &region).map_err(e)?;
    ensure!(
        rep.samples == 200,
        "expected 200 samples, got {}",
        rep.samples
    );
    ensure!(rep.max <= 1e-10, "max |F + V grad U| = {:e}", rep.max);

    // Closed form: V grad U = x^3 y^2 (1/x^2, 1/y^2) = (x y^2, x^3).
    let mut oracle: f64 = 0.0;
    for p in region.samples() {
        let f = field.value(&p).map_err(e)?;
        let v_grad_u = Vec3::new(p.x * p.y * p.y, p.x.powi(3), 0.0);
        oracle = oracle.max((f + v_grad_u).norm());
    }
    ensure!(oracle <= 1e-10, "closed-form residual {oracle:e}");

    let v = planar_scalar("x^3*y^2");
    let r1 = vpde_residual(&field, &v, &region).map_err(e)?;
    ensure!(r1.max <= 1e-9, "V-PDE residual for x^3 y^2: {:e}", r1.max);
    let phi = builtins::planar_v_family("s", unit_constants(), planar_domain()).map_err(e)?;
    let r2 = vpde_residual(&field, &phi, &region).map_err(e)?;
    ensure!(
        r2.max <= 1e-9,
        "V-PDE residual for Phi(s) = s: {:e}",
        r2.max
    );
    Ok(format!(
        "representation {:.1e}, V-PDE {:.1e} / {:.1e}",
        rep.max, r1.max, r2.max
    ))
}

fn curl_formula() -> Check {
    let field = planar_field(planar_domain());
    let (mut analytic, mut fd): (f64, f64) = (0.0, 0.0);
    for p in planar_region().samples() {
        let expected = -(3.0 * p.x * p.x - 2.0 * p.x * p.y);
        analytic =
            analytic.max((field.curl_z(&p, DiffMode::Analytic).map_err(e)? - expected).abs());
        fd = fd.max((field.curl_z(&p, DiffMode::FiniteDifference).map_err(e)? - expected).abs());
    }
    ensure!(analytic <= 1e-9, "analytic curl error {analytic:e}");
    ensure!(fd <= 1e-5, "finite-difference curl error {fd:e}");
    Ok(format!("analytic {analytic:.1e}, fd {fd:.1e}"))
}

fn decomposition_3d() -> Check {
    let field = triple_field();
    let region = cube_region(200, 0);
    let mut helicity: f64 = 0.0;
    for p in region.samples() {
        helicity = helicity.max(field.helicity(&p, DiffMode::Analytic).map_err(e)?.abs());
    }
    ensure!(helicity <= 1e-10, "helicity {helicity:e}");

    let th = Thresholds::default();
    let dy = decompose3d(&field, &scalar3("y"), &region, &th).map_err(e)?;
    let dxz = decompose3d(&field, &scalar3("x*z"), &region, &th).map_err(e)?;
    let mut worst_curl: f64 = 0.0;
    for (label, d) in [("y", &dy), ("x*z", &dxz)] {
        let g = &d.diagnostics;
        ensure!(
            g.curl_conservative.max <= 1e-6,
            "V = {label}: curl F_c = {:e}",
            g.curl_conservative.max
        );
        ensure!(
            g.sum.max <= 1e-12,
            "V = {label}: F - F_c - F_nc = {:e}",
            g.sum.max
        );
        ensure!(
            g.gauge.max <= 1e-9,
            "V = {label}: grad V . grad U = {:e}",
            g.gauge.max
        );
        worst_curl = worst_curl.max(g.curl_conservative.max);
    }
    let eq = equivalence_residual(&dy, &dxz, &region).map_err(e)?;
    ensure!(eq.max <= 1e-6, "curl of the F_nc difference {:e}", eq.max);

    // Derived by hand from grad U = (grad V x curl F)/|grad V|^2, F_nc = -V grad U:
    // V = y   gives F_nc = (yz, 0, xy),  F_c = -2(yz, xz, xy);
    // V = x z gives F_nc = (0, -xz, 0),  F_c = -(yz, xz, xy).
    let mut oracle: f64 = 0.0;
    for p in region.samples() {
        let (x, y, z) = (p.x, p.y, p.z);
        let cases = [
            (dy.non_conservative(&p), Vec3::new(y * z, 0.0, x * y)),
            (dy.conservative(&p), -2.0 * Vec3::new(y * z, x * z, x * y)),
            (dxz.non_conservative(&p), Vec3::new(0.0, -x * z, 0.0)),
            (dxz.conservative(&p), -Vec3::new(y * z, x * z, x * y)),
        ];
        for (got, want) in cases {
            oracle = oracle.max((got.map_err(e)? - want).norm());
        }
    }
    ensure!(
        oracle <= 1e-12,
        "parts differ from the closed forms by {oracle:e}"
    );
    Ok(format!(
        "helicity {helicity:.1e}, curl F_c {worst_curl:.1e}, equivalence {:.1e}",
        eq.max
    ))
}

fn characteristics() -> Check {
    let field = triple_field();
    let x0 = Vec3::new(1.0, 1.0, 1.0);
    let opts = CharacteristicOptions::default();
    let mut worst: f64 = 0.0;
    for v in ["x*z", "y"] {
        let r = characteristic_deviation(&field, &scalar3(v), &x0, 2.0, &opts).map_err(e)?;
        ensure!(r.deviation <= 1e-8, "V = {v} deviates by {:e}", r.deviation);
        worst = worst.max(r.deviation);
    }
    let r = characteristic_deviation(&field, &scalar3("x"), &x0, 2.0, &opts).map_err(e)?;
    ensure!(r.deviation >= 0.5, "V = x deviates only {:e}", r.deviation);
    // Along dx/ds = (x, 0, -z), x(s) = e^s.
    let exact = 2f64.exp() - 1.0;
    ensure!(
        (r.deviation - exact).abs() <= 1e-8,
        "V = x deviation {} vs {exact}",
        r.deviation
    );
    Ok(format!(
        "invariants {worst:.1e}, V = x deviates {:.4}",
        r.deviation
    ))
}

fn work_and_stokes() -> Check {
    let field = planar_field(BoxDomain::closed(&[(-5.0, 5.0), (-5.0, 5.0)]).unwrap());
    let q = QuadratureConfig::default();
    let square =
        [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].map(|(x, y)| Vec3::new(x, y, 0.0));
    let loop_path = ParamPath::polyline(Dim::Two, &square, true).map_err(e)?;
    // Green: integral over [0,1]^2 of (-3x^2 + 2xy) = -1 + 1/2.
    let expected = -1.0 + 0.5;
    let line = line_work(&field, &loop_path, &q).map_err(e)?.value;
    let surface = stokes_work(&field, &loop_path, &q).map_err(e)?.value;
    ensure!((line - expected).abs() <= 1e-6, "line work {line}");
    ensure!((surface - expected).abs() <= 1e-6, "surface work {surface}");
    let back = loop_path.reverse();
    let line_r = line_work(&field, &back, &q).map_err(e)?.value;
    let surface_r = stokes_work(&field, &back, &q).map_err(e)?.value;
    ensure!(
        (line_r + expected).abs() <= 1e-6,
        "reversed line work {line_r}"
    );
    ensure!(
        (surface_r + expected).abs() <= 1e-6,
        "reversed surface work {surface_r}"
    );

    let mut worst_net: f64 = 0.0;
    let arc = ParamPath::parametric(
        Dim::Two,
        &["1 + cos(s)", "1 + sin(s)"],
        no_constants(),
        false,
    )
    .map_err(e)?;
    let zigzag =
        [(0.3, 0.2), (1.7, 0.9), (0.4, 1.6), (2.2, 2.4)].map(|(x, y)| Vec3::new(x, y, 0.0));
    let open = ParamPath::polyline(Dim::Two, &zigzag, false).map_err(e)?;
    for gamma in [arc, open] {
        let net = line_work(&field, &gamma, &q).map_err(e)?.value
            + line_work(&field, &gamma.reverse(), &q).map_err(e)?.value;
        worst_net = worst_net.max(net.abs());
    }
    ensure!(worst_net <= 1e-12, "path and its reverse net {worst_net:e}");
    Ok(format!(
        "line {line:.12}, surface {surface:.12}, reversed {line_r:.12}, net {worst_net:.1e}"
    ))
}

fn work_energy() -> Check {
    let planar = planar_field(planar_domain());
    let mut worst: f64 = 0.0;
    let runs = [
        ((1.0, 1.0), (0.1, -0.1), 2.0),
        ((1.0, 1.0), (0.2, 0.1), 1.5),
        ((2.0, 1.5), (-0.3, 0.2), 1.0),
        ((0.8, 1.2), (0.0, 0.0), 1.0),
    ];
    for ((x, y), (vx, vy), t_end) in runs {
        let traj = integrate(
            &planar,
            &Vec3::new(x, y, 0.0),
            &Vec3::new(vx, vy, 0.0),
            &SimConfig::new(1.0, t_end),
        )
        .map_err(e)?;
        worst = worst.max(work_energy_residual(&traj));
    }
    let traj = integrate(
        &triple_field(),
        &Vec3::new(1.0, 0.5, 0.8),
        &Vec3::new(0.1, 0.0, -0.2),
        &SimConfig::new(2.0, 2.0),
    )
    .map_err(e)?;
    worst = worst.max(work_energy_residual(&traj));
    ensure!(worst <= 1e-7, "work-energy residual {worst:e}");

    let rk4 = |h: f64| -> Result<f64, String> {
        let cfg = SimConfig::new(1.0, 2.0).with_integrator(Integrator::Rk4Fixed { step: h });
        let traj = integrate(
            &planar,
            &Vec3::new(1.0, 1.0, 0.0),
            &Vec3::new(0.1, -0.1, 0.0),
            &cfg,
        )
        .map_err(e)?;
        Ok(work_energy_residual(&traj))
    };
    let ratio = rk4(0.02)? / rk4(0.01)?;
    ensure!(
        (16.0 * 0.7..=16.0 * 1.3).contains(&ratio),
        "rk4 halving ratio {ratio}"
    );
    Ok(format!(
        "residual {worst:.1e}, rk4 halving ratio {ratio:.2}"
    ))
}

fn harmonic_problem() -> AuxiliaryProblem {
    let d = BoxDomain::closed(&[(-3.0, 3.0), (-3.0, 3.0)]).unwrap();
    let f = VectorFieldDef::parse(&["-x", "-y"], Dim::Two, no_constants(), d.clone()).unwrap();
    let s = |src: &str| ScalarFieldDef::parse(src, Dim::Two, no_constants(), d.clone()).unwrap();
    let pots = PotentialSet::new(s("0.5*(x^2 + y^2)"), s("1"), None).unwrap();
    let region = Region::grid(&[(-2.0, 2.0), (-2.0, 2.0)], &[8, 8]).unwrap();
    AuxiliaryProblem::new(f, pots, 1.0, &region, &AuxiliaryOptions::default()).unwrap()
}

fn planar_problem() -> Result<AuxiliaryProblem, String> {
    let pots = PotentialSet::new(
        planar_scalar("-(1/x + 1/y)"),
        planar_scalar("x^3*y^2"),
        None,
    )
    .map_err(e)?;
    AuxiliaryProblem::new(
        planar_field(planar_domain()),
        pots,
        1.0,
        &planar_region(),
        &AuxiliaryOptions::default(),
    )
    .map_err(e)
}

fn auxiliary_hamiltonian() -> Check {
    let prob = planar_problem()?;
    for p in planar_region().samples() {
        let want = Vec3::new(-1.0 / (p.x * p.x), -1.0 / (p.y * p.y), 0.0);
        let got = prob.rescaled_force(&p).map_err(e)?;
        ensure!(
            (got - want).norm() <= 1e-12,
            "rescaled force at {p:?}: {got:?}"
        );
    }
    let run = auxiliary_trajectory(
        &prob,
        &Vec3::new(1.0, 1.0, 0.0),
        &Vec3::new(0.2, 0.0, 0.0),
        &SimConfig::new(1.0, 1.0),
    )
    .map_err(e)?;
    ensure!(run.drift <= 1e-6, "auxiliary H drift {:e}", run.drift);

    let cfg = SimConfig::new(1.0, 10.0 * 2.0 * PI).with_integrator(dopri(1e-10));
    let control = auxiliary_trajectory(
        &harmonic_problem(),
        &Vec3::new(1.0, 0.0, 0.0),
        &Vec3::new(0.0, 1.0, 0.0),
        &cfg,
    )
    .map_err(e)?;
    ensure!(control.drift <= 1e-8, "harmonic drift {:e}", control.drift);
    Ok(format!(
        "drift {:.1e}, harmonic control {:.1e}",
        run.drift, control.drift
    ))
}

fn nonlocal_series() -> Check {
    let prob = harmonic_problem();
    let traj = integrate(
        &prob.force,
        &Vec3::new(1.0, 0.5, 0.0),
        &Vec3::new(0.0, 0.8, 0.0),
        &SimConfig::new(1.0, 5.0),
    )
    .map_err(e)?;
    let series = nonlocal_hamiltonian_series(&traj, &prob, Accumulation::Gauss).map_err(e)?;
    let energy = physical_energy(&traj, &prob.potentials.u).map_err(e)?;
    ensure!(
        series.h.len() == energy.len(),
        "series length {} vs {}",
        series.h.len(),
        energy.len()
    );
    let mut gap: f64 = 0.0;
    for (h, en) in series.h.iter().zip(&energy) {
        gap = gap.max((h - en).abs());
    }
    ensure!(
        gap <= 1e-8,
        "series differs from the physical energy by {gap:e}"
    );
    ensure!(
        series.drift <= 1e-7,
        "conservative drift {:e}",
        series.drift
    );

    let planar = planar_problem()?;
    let traj = integrate(
        &planar.force,
        &Vec3::new(1.0, 1.0, 0.0),
        &Vec3::new(0.2, 0.0, 0.0),
        &SimConfig::new(1.0, 1.0),
    )
    .map_err(e)?;
    let curl_series =
        nonlocal_hamiltonian_series(&traj, &planar, Accumulation::Gauss).map_err(e)?;
    ensure!(
        curl_series.drift.is_finite() && curl_series.h.len() == traj.len(),
        "curl-force series not emitted"
    );
    Ok(format!(
        "conservative gap {gap:.1e}, drift {:.1e}; curl-force drift (reported) {:.3e}",
        series.drift, curl_series.drift
    ))
}

fn accessibility() -> Check {
    let field = planar_field(planar_domain());
    let x0 = Vec3::new(1.0, 1.0, 0.0);
    let u = planar_scalar("-(1/x + 1/y)");
    let trace = zero_work_trace_2d(&field, &x0, 0.5, &TraceOptions::default()).map_err(e)?;
    let mut u_dev: f64 = 0.0;
    for p in trace.dense_points(8).map_err(e)? {
        u_dev = u_dev.max((u.value(&p).map_err(e)? + 2.0).abs());
    }
    ensure!(u_dev <= 1e-6, "U leaves its level by {u_dev:e}");
    let work = line_work(&field, &trace.path, &QuadratureConfig::default())
        .map_err(e)?
        .value;
    ensure!(work.abs() <= 1e-8, "trace work {work:e}");

    // Oracle: a target is reachable iff it lies on the level U = -2 through x0.
    let on_level = |x: f64| Vec3::new(x, 1.0 / (2.0 - 1.0 / x), 0.0);
    let targets = [
        on_level(0.8),
        on_level(0.9),
        on_level(1.1),
        on_level(1.2),
        on_level(1.3),
        Vec3::new(0.8, 1.4, 0.0),
        Vec3::new(1.1, 1.1, 0.0),
        Vec3::new(1.3, 0.9, 0.0),
        Vec3::new(0.9, 1.0, 0.0),
        Vec3::new(1.5, 1.5, 0.0),
    ];
    let report = reachability_report_2d(&field, &x0, &targets, None, 1.5, &TraceOptions::default())
        .map_err(e)?;
    for (t, verdict) in targets.iter().zip(&report.targets) {
        let oracle = (u.value(t).map_err(e)? + 2.0).abs() <= 1e-9;
        ensure!(
            verdict.reachable == oracle,
            "target ({}, {}) verdict {} but U-level oracle says {oracle}",
            t.x,
            t.y,
            verdict.reachable
        );
    }

    let helical = field3(&["y", "0", "1"]);
    let opts = ManeuverOptions::default();
    let a = bracket_maneuver_3d(&helical, &Vec3::zeros(), 0.1, &opts).map_err(e)?;
    let b = bracket_maneuver_3d(&helical, &Vec3::zeros(), 0.05, &opts).map_err(e)?;
    ensure!(
        a.work.abs() <= 1e-8 && b.work.abs() <= 1e-8,
        "maneuver work {:e} / {:e}",
        a.work,
        b.work
    );
    let ratio = a.transverse.abs() / b.transverse.abs();
    ensure!((3.6..=4.4).contains(&ratio), "transverse ratio {ratio}");

    let flat = field3(&["1", "1", "1"]);
    let c0 = Vec3::new(0.2, -0.1, 0.3);
    let c = bracket_maneuver_3d(&flat, &c0, 0.1, &opts).map_err(e)?;
    let plane_gap = (c.endpoint.iter().sum::<f64>() - c0.sum()).abs();
    ensure!(
        plane_gap <= 1e-8,
        "conservative control leaves its plane by {plane_gap:e}"
    );

    let mut frame: f64 = 0.0;
    for p in cube_region(100, 3).samples() {
        for f in [&helical, &triple_field()] {
            frame = frame.max(frame_bracket_check(f, &p, 1e-5).map_err(e)?.residual());
        }
    }
    ensure!(frame <= 1e-5, "frame bracket identity residual {frame:e}");
    Ok(format!(
        "U deviation {u_dev:.1e}, trace work {work:.1e}, 10/10 verdicts, ratio {ratio:.3}, plane {plane_gap:.1e}, frame {frame:.1e}"
    ))
}

/// Expression, expected s-expression.
const GOLDEN: [(&str, &str); 20] = [
    ("-F0/a^3*x*y^2", "(* (* (/ (neg F0) (^ a 3)) x) (^ y 2))"),
    ("-F0/a^3*x^3", "(* (/ (neg F0) (^ a 3)) (^ x 3))"),
    ("-y*z", "(* (neg y) z)"),
    ("-2*x*z", "(* (* (neg 2) x) z)"),
    ("-x*y", "(* (neg x) y)"),
    ("-x^2", "(neg (^ x 2))"),
    ("2^3^2", "(^ 2 (^ 3 2))"),
    (
        "-F0*a^2*(1/x + 1/y)",
        "(* (* (neg F0) (^ a 2)) (+ (/ 1 x) (/ 1 y)))",
    ),
    ("a^(-5)*x^3*y^2", "(* (* (^ a (neg 5)) (^ x 3)) (^ y 2))"),
    ("x - y - z", "(- (- x y) z)"),
    ("x / y / z", "(/ (/ x y) z)"),
    ("sin(x)*cos(y) + tan(z)", "(+ (* (sin x) (cos y)) (tan z))"),
    ("exp(-x^2 - y^2)", "(exp (- (neg (^ x 2)) (^ y 2)))"),
    ("log(1 + x^2)", "(log (+ 1 (^ x 2)))"),
    (
        "sqrt(x^2 + y^2 + z^2)",
        "(sqrt (+ (+ (^ x 2) (^ y 2)) (^ z 2)))",
    ),
    ("abs(x - 2*y)", "(abs (- x (* 2 y)))"),
    ("pow(x, 2.5) + y", "(+ (pow x 2.5) y)"),
    ("2*x*y*z", "(* (* (* 2 x) y) z)"),
    ("(x + y)/(x*y)", "(/ (+ x y) (* x y))"),
    (
        "x^3*y^2*((x + y)/(x*y))",
        "(* (* (^ x 3) (^ y 2)) (/ (+ x y) (* x y)))",
    ),
];

fn parser_and_ad() -> Check {
    let table: ConstantTable = BTreeMap::from([("F0".to_string(), 1.3), ("a".to_string(), 0.9)]);
    let names: BTreeSet<String> = table.keys().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_rel: f64 = 0.0;
    for (src, want) in GOLDEN {
        let tree = exprlang::parse(src, Dim::Three, &names).map_err(e)?;
        ensure!(
            tree.to_sexpr() == want,
            "'{src}' parsed as {} (expected {want})",
            tree.to_sexpr()
        );
        for _ in 0..100 {
            // [0.5, 1.5] keeps tan away from its pole.
            let p: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.5..1.5));
            let ad =
                exprlang::evaluate_with_gradient(&tree, &Bindings::new(&p, &table)).map_err(e)?;
            for k in 0..3 {
                let h = p[k].abs().max(1.0) * 6.06e-6;
                let (mut hi, mut lo) = (p, p);
                hi[k] += h;
                lo[k] -= h;
                let f_hi = exprlang::evaluate(&tree, &Bindings::new(&hi, &table)).map_err(e)?;
                let f_lo = exprlang::evaluate(&tree, &Bindings::new(&lo, &table)).map_err(e)?;
                let fd = (f_hi - f_lo) / (2.0 * h);
                let exact = ad.gradient(3)[k];
                let scale = exact.abs().max(fd.abs());
                let rel = if scale == 0.0 {
                    0.0
                } else {
                    (exact - fd).abs() / scale
                };
                ensure!(
                    rel <= 1e-6,
                    "'{src}' d/dx{k} at {p:?}: AD {exact} vs FD {fd}"
                );
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    let at = |src: &str, p: [f64; 3]| -> Result<f64, String> {
        let tree = exprlang::parse(src, Dim::Three, &names).map_err(e)?;
        exprlang::evaluate(&tree, &Bindings::new(&p, &table)).map_err(e)
    };
    let neg_sq = at("-x^2", [2.0, 0.0, 0.0])?;
    ensure!(neg_sq == -4.0, "-x^2 at x = 2 gave {neg_sq}");
    let tower = at("2^3^2", [0.0; 3])?;
    ensure!(tower == 512.0, "2^3^2 gave {tower}");
    Ok(format!(
        "20 golden trees, AD/FD worst relative error {worst_rel:.1e}"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("planar representation and V-PDE", representation_2d),
        ("planar curl formula", curl_formula),
        ("3D helicity and decomposition", decomposition_3d),
        ("characteristic invariance", characteristics),
        ("loop work and Stokes", work_and_stokes),
        ("work-energy balance", work_energy),
        ("auxiliary Hamiltonian", auxiliary_hamiltonian),
        ("nonlocal Hamiltonian series", nonlocal_series),
        ("zero-work accessibility", accessibility),
        ("parser and AD", parser_and_ad),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
