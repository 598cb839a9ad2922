//! Zero-work motion. In 2D the directions orthogonal to `F` form a line
//! field whose integral curves are the only zero-work paths, so most points
//! are unreachable without work. In 3D the kernel of `F·dx` is a plane field;
//! when the helicity is nonzero, alternating flows along two kernel fields
//! move the particle off the plane at second order in the flow time.

use nalgebra::SVector;
use serde::Serialize;

use crate::darboux::ode_error;
use crate::error::{Error, Result};
use crate::fieldkit::{curl_from_jacobian, DiffMode, VectorFieldDef};
use crate::ode::{self, Control, Method, StageError, Step};
use crate::pathwork::{ParamPath, PathNode};
use crate::types::{Dim, Mat3, Vec3};

/// `‖F‖` below this counts as an equilibrium.
pub const FORCE_FLOOR: f64 = 1e-12;

const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// What a trace does when it reaches the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitPolicy {
    #[default]
    Fail,
    /// Stop the trace at the boundary.
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Maximum step as a fraction of the arclength.
    pub max_step_fraction: f64,
    pub on_exit: ExitPolicy,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            max_step_fraction: 1.0 / 200.0,
            on_exit: ExitPolicy::Fail,
        }
    }
}

/// A traced zero-work curve through a base point.
#[derive(Debug, Clone)]
pub struct ZeroWorkTrace {
    pub path: ParamPath,
    /// Arclength `σ` (negative on the backward branch) and position of each
    /// node.
    pub nodes: Vec<(f64, Vec3)>,
    pub backward_length: f64,
    pub forward_length: f64,
}

fn perp(v: &Vec3) -> Vec3 {
    Vec3::new(-v.y, v.x, 0.0)
}

fn equilibrium(point: Vec3, norm: f64) -> Error {
    Error::Equilibrium { point, norm }
}

/// Unit zero-work direction and its derivative along itself.
fn trace_frame(field: &VectorFieldDef, x: &Vec3) -> Result<(Vec3, Vec3)> {
    let f = field.value_unchecked(x)?;
    let g = perp(&f);
    let norm = g.norm();
    if norm < FORCE_FLOOR {
        return Err(equilibrium(*x, norm));
    }
    let t = g / norm;
    let jf = field.jacobian_unchecked(x)?;
    let rot = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let jg = rot * jf;
    let curvature = (Mat3::identity() - t * t.transpose()) * jg * t / norm;
    Ok((t, curvature))
}

fn trace_branch(
    field: &VectorFieldDef,
    x0: &Vec3,
    sign: f64,
    length: f64,
    opts: &TraceOptions,
) -> Result<Vec<(f64, Vec3)>> {
    let domain = field.domain().clone();
    let mut rhs =
        |_s: f64, y: &SVector<f64, 3>| -> std::result::Result<SVector<f64, 3>, StageError<Error>> {
            let f = field.value_unchecked(y).map_err(StageError::Retry)?;
            let g = perp(&f);
            let norm = g.norm();
            if norm < FORCE_FLOOR {
                return Err(StageError::Fatal(equilibrium(*y, norm)));
            }
            Ok(g * (sign / norm))
        };
    let mut nodes = vec![(0.0, *x0)];
    let mut failure = None;
    ode::solve(
        Method::dopri(opts.atol, opts.rtol, length * opts.max_step_fraction),
        &mut rhs,
        0.0,
        *x0,
        length,
        &mut |step: &Step<3>| {
            if domain.contains(&step.y1) {
                nodes.push((step.t1, step.y1));
                return Control::Continue;
            }
            let s = ode::bisect_exit(step, 1e-12, |y| domain.contains(y));
            let at = step.at(s);
            match opts.on_exit {
                ExitPolicy::Fail => failure = Some(Error::DomainExit { point: at }),
                ExitPolicy::Truncate => {
                    if s > nodes.last().map_or(0.0, |n| n.0) {
                        nodes.push((s, at));
                    }
                }
            }
            Control::Stop
        },
    )
    .map_err(ode_error)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(nodes),
    }
}

/// Traces the zero-work curve through `x0` for `arclength` in both
/// directions.
pub fn zero_work_trace_2d(
    field: &VectorFieldDef,
    x0: &Vec3,
    arclength: f64,
    opts: &TraceOptions,
) -> Result<ZeroWorkTrace> {
    if field.dim() != Dim::Two {
        return Err(Error::DimensionMismatch(
            "zero-work curves are traced in 2D".into(),
        ));
    }
    if !(arclength > 0.0) {
        return Err(Error::Invalid("arclength must be positive".into()));
    }
    let x0 = Vec3::new(x0.x, x0.y, 0.0);
    if !field.contains(&x0) {
        return Err(Error::OutOfDomain(x0));
    }
    let f0 = field.value(&x0)?;
    if f0.norm() < FORCE_FLOOR {
        return Err(equilibrium(x0, f0.norm()));
    }
    let forward = trace_branch(field, &x0, 1.0, arclength, opts)?;
    let backward = trace_branch(field, &x0, -1.0, arclength, opts)?;
    let back_len = backward.last().map_or(0.0, |n| n.0);
    let fwd_len = forward.last().map_or(0.0, |n| n.0);
    let total = back_len + fwd_len;
    if total <= 0.0 {
        return Err(Error::Invalid(
            "zero-work trace has no length inside the domain".into(),
        ));
    }
    let nodes: Vec<(f64, Vec3)> = backward
        .iter()
        .rev()
        .map(|(s, x)| (-s, *x))
        .chain(forward.iter().skip(1).copied())
        .collect();
    let mut path_nodes = Vec::with_capacity(nodes.len());
    for (k, (sigma, x)) in nodes.iter().enumerate() {
        let (t, curvature) = trace_frame(field, x)?;
        let s = if k == 0 {
            0.0
        } else if k == nodes.len() - 1 {
            1.0
        } else {
            (sigma + back_len) / total
        };
        path_nodes.push(PathNode {
            s,
            x: *x,
            d1: t * total,
            d2: curvature * (total * total),
        });
    }
    Ok(ZeroWorkTrace {
        path: ParamPath::sampled(Dim::Two, path_nodes, false)?,
        nodes,
        backward_length: back_len,
        forward_length: fwd_len,
    })
}

impl ZeroWorkTrace {
    /// Points along the trace, `per_interval` per node interval.
    pub fn dense_points(&self, per_interval: usize) -> Result<Vec<Vec3>> {
        let per = per_interval.max(1);
        let total = self.backward_length + self.forward_length;
        let mut out = Vec::with_capacity(self.nodes.len() * per);
        out.push(self.nodes[0].1);
        for w in self.nodes.windows(2) {
            let (a, b) = (
                (w[0].0 + self.backward_length) / total,
                (w[1].0 + self.backward_length) / total,
            );
            for k in 1..=per {
                out.push(self.path.point(a + (b - a) * k as f64 / per as f64)?);
            }
        }
        Ok(out)
    }

    /// Distance from `p` to the trace.
    pub fn distance(&self, p: &Vec3) -> Result<f64> {
        let pts = self.dense_points(16)?;
        let mut best = f64::INFINITY;
        for w in pts.windows(2) {
            best = best.min(segment_distance(p, &w[0], &w[1]));
        }
        Ok(best)
    }
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(&ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    };
    (p - (a + ab * t)).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetVerdict {
    pub target: Vec<f64>,
    pub distance: f64,
    pub reachable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachabilityReport {
    pub delta: f64,
    pub arclength: f64,
    pub backward_length: f64,
    pub forward_length: f64,
    pub targets: Vec<TargetVerdict>,
}

/// Relative default for the reachability distance.
pub const DELTA_FACTOR: f64 = 1e-4;

/// Decides which targets lie on the zero-work curve through `x0`, within
/// `delta` (default `1e-4 · diam(domain)`). The trace stops at the domain
/// boundary.
pub fn reachability_report_2d(
    field: &VectorFieldDef,
    x0: &Vec3,
    targets: &[Vec3],
    delta: Option<f64>,
    arclength: f64,
    opts: &TraceOptions,
) -> Result<ReachabilityReport> {
    let delta = delta.unwrap_or(DELTA_FACTOR * field.domain().diameter());
    let mut opts = *opts;
    opts.on_exit = ExitPolicy::Truncate;
    let trace = zero_work_trace_2d(field, x0, arclength, &opts)?;
    let mut verdicts = Vec::with_capacity(targets.len());
    for t in targets {
        let p = Vec3::new(t.x, t.y, 0.0);
        let distance = trace.distance(&p)?;
        verdicts.push(TargetVerdict {
            target: vec![p.x, p.y],
            distance,
            reachable: distance <= delta,
        });
    }
    Ok(ReachabilityReport {
        delta,
        arclength,
        backward_length: trace.backward_length,
        forward_length: trace.forward_length,
        targets: verdicts,
    })
}

/// Orthonormal basis `X`, `Y` of the plane orthogonal to `F` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelFrame {
    pub base: Vec3,
    pub normal: Vec3,
    pub x_axis: Vec3,
    pub y_axis: Vec3,
    /// Index of the coordinate axis used to build `X`.
    pub axis: usize,
}

/// The coordinate axis least aligned with `n`; ties go to the smaller index.
pub fn least_aligned_axis(n: &Vec3) -> usize {
    let mut best = 0;
    for k in 1..3 {
        if n[k].abs() < n[best].abs() {
            best = k;
        }
    }
    best
}

fn frame_from_force(x: &Vec3, f: &Vec3, axis: Option<usize>) -> Result<KernelFrame> {
    let norm = f.norm();
    if norm < FORCE_FLOOR {
        return Err(equilibrium(*x, norm));
    }
    let n = f / norm;
    let axis = axis.unwrap_or_else(|| least_aligned_axis(&n));
    let e = Vec3::ith(axis, 1.0);
    let x_axis = e.cross(&n).normalize();
    let y_axis = n.cross(&x_axis);
    Ok(KernelFrame {
        base: *x,
        normal: n,
        x_axis,
        y_axis,
        axis,
    })
}

/// `X = normalize(e_k × n̂)`, `Y = n̂ × X` with `e_k` the least-aligned axis.
pub fn kernel_frame_3d(field: &VectorFieldDef, x: &Vec3) -> Result<KernelFrame> {
    if field.dim() != Dim::Three {
        return Err(Error::DimensionMismatch(
            "kernel frames are three-dimensional".into(),
        ));
    }
    frame_from_force(x, &field.value(x)?, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManeuverOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Abort once the held axis exceeds the least-aligned one by this much
    /// in `|n̂ · e|`.
    pub axis_margin: f64,
    /// Maximum step as a fraction of `ε`.
    pub max_step_fraction: f64,
}

impl Default for ManeuverOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            axis_margin: 0.25,
            max_step_fraction: 1.0 / 20.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManeuverResult {
    pub start: Vec<f64>,
    pub endpoint: Vec<f64>,
    pub displacement: Vec<f64>,
    /// `(endpoint − x0) · n̂(x0)`
    pub transverse: f64,
    pub work: f64,
    pub epsilon: f64,
    pub axis: usize,
    /// Executed path, for plotting.
    #[serde(skip)]
    pub path: Vec<Vec3>,
}

#[derive(Clone, Copy)]
enum Leg {
    X,
    Y,
}

struct LegOutput {
    end: Vec3,
    work: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_leg(
    field: &VectorFieldDef,
    start: &Vec3,
    leg: Leg,
    sign: f64,
    eps: f64,
    axis: usize,
    opts: &ManeuverOptions,
    path: &mut Vec<Vec3>,
) -> Result<LegOutput> {
    let direction = |x: &Vec3| -> Result<Vec3> {
        let frame = frame_from_force(x, &field.value_unchecked(x)?, Some(axis))?;
        Ok(sign
            * match leg {
                Leg::X => frame.x_axis,
                Leg::Y => frame.y_axis,
            })
    };
    let mut rhs =
        |_t: f64, y: &SVector<f64, 3>| -> std::result::Result<SVector<f64, 3>, StageError<Error>> {
            direction(y).map_err(|e| match e {
                Error::Equilibrium { .. } => StageError::Fatal(e),
                other => StageError::Retry(other),
            })
        };
    let domain = field.domain().clone();
    let mut failure = None;
    let mut work = 0.0;
    let mut end = *start;
    ode::solve(
        Method::dopri(opts.atol, opts.rtol, eps * opts.max_step_fraction),
        &mut rhs,
        0.0,
        *start,
        eps,
        &mut |step: &Step<3>| {
            if !domain.contains(&step.y1) {
                let s = ode::bisect_exit(step, 1e-12, |y| domain.contains(y));
                failure = Some(Error::DomainExit { point: step.at(s) });
                return Control::Stop;
            }
            let check = (|| -> Result<f64> {
                let f = field.value_unchecked(&step.y1)?;
                let n = f / f.norm();
                let held = n[axis].abs();
                let least = n[least_aligned_axis(&n)].abs();
                if held - least > opts.axis_margin {
                    return Err(Error::Precondition(format!(
                        "kernel frame axis {axis} is no longer the least aligned with F; \
                         reduce epsilon (currently {eps})"
                    )));
                }
                let (mid, half) = (0.5 * (step.t0 + step.t1), 0.5 * step.h());
                let mut w = 0.0;
                for (tau, weight) in GL5 {
                    let t = mid + tau * half;
                    w += weight
                        * field
                            .value_unchecked(&step.at(t))?
                            .dot(&step.derivative_at(t));
                }
                Ok(w * half)
            })();
            match check {
                Ok(w) => work += w,
                Err(e) => {
                    failure = Some(e);
                    return Control::Stop;
                }
            }
            for k in 1..4 {
                path.push(step.at(step.t0 + step.h() * k as f64 / 4.0));
            }
            path.push(step.y1);
            end = step.y1;
            Control::Continue
        },
    )
    .map_err(ode_error)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(LegOutput { end, work }),
    }
}

/// Flows for time `ε` along `X`, `Y`, `−X`, `−Y` in turn, holding the frame
/// axis chosen at `x0`.
pub fn bracket_maneuver_3d(
    field: &VectorFieldDef,
    x0: &Vec3,
    eps: f64,
    opts: &ManeuverOptions,
) -> Result<ManeuverResult> {
    if !(eps > 0.0) {
        return Err(Error::Invalid("epsilon must be positive".into()));
    }
    let frame = kernel_frame_3d(field, x0)?;
    if !field.contains(x0) {
        return Err(Error::OutOfDomain(*x0));
    }
    let mut path = vec![*x0];
    let mut x = *x0;
    let mut work = 0.0;
    for (leg, sign) in [(Leg::X, 1.0), (Leg::Y, 1.0), (Leg::X, -1.0), (Leg::Y, -1.0)] {
        let out = run_leg(field, &x, leg, sign, eps, frame.axis, opts, &mut path)?;
        x = out.end;
        work += out.work;
    }
    let d = x - x0;
    Ok(ManeuverResult {
        start: x0.iter().copied().collect(),
        endpoint: x.iter().copied().collect(),
        displacement: d.iter().copied().collect(),
        transverse: d.dot(&frame.normal),
        work,
        epsilon: eps,
        axis: frame.axis,
        path,
    })
}

/// Both sides of `F·[X,Y] = −(curl F)·(X×Y)` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketCheck {
    pub force_dot_bracket: f64,
    pub minus_curl_flux: f64,
}

impl BracketCheck {
    pub fn residual(&self) -> f64 {
        (self.force_dot_bracket - self.minus_curl_flux).abs()
    }
}

/// Evaluates the bracket identity with `[X,Y] = (DY)X − (DX)Y`, the frame
/// Jacobians taken by central differences of step `h`.
pub fn frame_bracket_check(field: &VectorFieldDef, x: &Vec3, h: f64) -> Result<BracketCheck> {
    let frame = kernel_frame_3d(field, x)?;
    let at = |p: &Vec3| frame_from_force(p, &field.value_unchecked(p)?, Some(frame.axis));
    let mut dx = Mat3::zeros();
    let mut dy = Mat3::zeros();
    for j in 0..3 {
        let e = Vec3::ith(j, h);
        let (plus, minus) = (at(&(x + e))?, at(&(x - e))?);
        dx.set_column(j, &((plus.x_axis - minus.x_axis) / (2.0 * h)));
        dy.set_column(j, &((plus.y_axis - minus.y_axis) / (2.0 * h)));
    }
    let bracket = dy * frame.x_axis - dx * frame.y_axis;
    let f = field.value(x)?;
    let curl = curl_from_jacobian(&field.jacobian(x, DiffMode::Analytic)?);
    Ok(BracketCheck {
        force_dot_bracket: f.dot(&bracket),
        minus_curl_flux: -curl.dot(&frame.x_axis.cross(&frame.y_axis)),
    })
}
