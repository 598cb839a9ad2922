//! Work integrals `∫ F·dx` along paths, with a surface-integral cross-check
//! for planar polygonal loops.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprlang::{self, Bindings, ConstantTable, SyntaxTree};
use crate::fieldkit::{curl_from_jacobian, DiffMode, VectorFieldDef};
use crate::ode;
use crate::types::{fmt_point, Dim, Vec3};

/// Tolerance on `c(0) = c(1)` for closed paths.
pub const CLOSURE_TOL: f64 = 1e-12;

/// A node of a sampled path: position and its first two derivatives with
/// respect to the path parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathNode {
    pub s: f64,
    pub x: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
}

#[derive(Debug, Clone)]
pub enum Geometry {
    /// One expression in `s` per coordinate.
    Parametric(Vec<SyntaxTree>),
    /// Vertices at equally spaced parameter values.
    Polyline(Vec<Vec3>),
    /// Piecewise quintic Hermite through nodes with increasing `s`, spanning
    /// `[0, 1]`.
    Sampled(Vec<PathNode>),
}

/// A curve `c: [0, 1] → ℝⁿ`.
#[derive(Debug, Clone)]
pub struct ParamPath {
    dim: Dim,
    geometry: Geometry,
    constants: Arc<ConstantTable>,
    closed: bool,
    reversed: bool,
}

impl ParamPath {
    fn build(
        dim: Dim,
        geometry: Geometry,
        constants: Arc<ConstantTable>,
        closed: bool,
    ) -> Result<Self> {
        let path = Self {
            dim,
            geometry,
            constants,
            closed,
            reversed: false,
        };
        if closed {
            let gap = (path.point(1.0)? - path.point(0.0)?).norm();
            if gap > CLOSURE_TOL {
                return Err(Error::Invalid(format!(
                    "path is marked closed but its endpoints differ by {gap:e}"
                )));
            }
        }
        Ok(path)
    }

    /// A polyline through `vertices`. A closed polyline whose last vertex is
    /// not its first gets the first vertex appended.
    pub fn polyline(dim: Dim, vertices: &[Vec3], closed: bool) -> Result<Self> {
        let mut vs: Vec<Vec3> = vertices.to_vec();
        if vs.len() < 2 {
            return Err(Error::Invalid(
                "a polyline needs at least two vertices".into(),
            ));
        }
        if closed && (vs[0] - vs[vs.len() - 1]).norm() > CLOSURE_TOL {
            vs.push(vs[0]);
        }
        if dim == Dim::Two && vs.iter().any(|v| v.z != 0.0) {
            return Err(Error::DimensionMismatch(
                "2D polyline with a z coordinate".into(),
            ));
        }
        Self::build(
            dim,
            Geometry::Polyline(vs),
            Arc::new(ConstantTable::new()),
            closed,
        )
    }

    /// A parametrized path from coordinate expressions in `s ∈ [0, 1]`.
    pub fn parametric(
        dim: Dim,
        components: &[&str],
        constants: Arc<ConstantTable>,
        closed: bool,
    ) -> Result<Self> {
        if components.len() != dim.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} path needs {} components, found {}",
                dim,
                dim.n(),
                components.len()
            )));
        }
        let names: BTreeSet<String> = constants.keys().cloned().collect();
        let mut trees = Vec::with_capacity(components.len());
        for c in components {
            let tree = exprlang::parse_with_variables(c, &["s"], &names)?;
            exprlang::check_bound(&tree, &constants)?;
            trees.push(tree);
        }
        Self::build(dim, Geometry::Parametric(trees), constants, closed)
    }

    pub fn sampled(dim: Dim, nodes: Vec<PathNode>, closed: bool) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Invalid(
                "a sampled path needs at least two nodes".into(),
            ));
        }
        let ordered = nodes.windows(2).all(|w| w[1].s > w[0].s);
        let spans = nodes[0].s == 0.0 && nodes[nodes.len() - 1].s == 1.0;
        if !ordered || !spans {
            return Err(Error::Invalid(
                "sampled path nodes must increase in s from 0 to 1".into(),
            ));
        }
        Self::build(
            dim,
            Geometry::Sampled(nodes),
            Arc::new(ConstantTable::new()),
            closed,
        )
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// `s ↦ c(1 − s)`; the closed flag is kept.
    pub fn reverse(&self) -> Self {
        let mut out = self.clone();
        out.reversed = !out.reversed;
        out
    }

    /// Vertices of the polyline in traversal order.
    pub fn vertices(&self) -> Option<Vec<Vec3>> {
        match &self.geometry {
            Geometry::Polyline(vs) => {
                let mut vs = vs.clone();
                if self.reversed {
                    vs.reverse();
                }
                Some(vs)
            }
            _ => None,
        }
    }

    /// Parameter values where the path may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let raw: Vec<f64> = match &self.geometry {
            Geometry::Parametric(_) => vec![0.0, 1.0],
            Geometry::Polyline(vs) => {
                let n = vs.len() - 1;
                (0..=n).map(|k| k as f64 / n as f64).collect()
            }
            Geometry::Sampled(nodes) => nodes.iter().map(|n| n.s).collect(),
        };
        if self.reversed {
            raw.iter().rev().map(|s| 1.0 - s).collect()
        } else {
            raw
        }
    }

    fn raw(&self, s: f64) -> Result<(Vec3, Vec3)> {
        match &self.geometry {
            Geometry::Parametric(trees) => {
                let mut x = Vec3::zeros();
                let mut d = Vec3::zeros();
                for (i, t) in trees.iter().enumerate() {
                    let v =
                        exprlang::evaluate_with_gradient(t, &Bindings::new(&[s], &self.constants))?;
                    x[i] = v.value;
                    d[i] = v.partials[0];
                }
                Ok((x, d))
            }
            Geometry::Polyline(vs) => {
                let n = vs.len() - 1;
                let u = (s * n as f64).clamp(0.0, n as f64);
                let k = (u.floor() as usize).min(n - 1);
                let frac = u - k as f64;
                let edge = vs[k + 1] - vs[k];
                let x = if frac == 1.0 {
                    vs[k + 1]
                } else {
                    vs[k] + edge * frac
                };
                Ok((x, edge * n as f64))
            }
            Geometry::Sampled(nodes) => {
                let i = nodes
                    .partition_point(|n| n.s <= s)
                    .clamp(1, nodes.len() - 1);
                let (a, b) = (&nodes[i - 1], &nodes[i]);
                let h = b.s - a.s;
                Ok(ode::quintic_hermite(
                    [&a.x, &a.d1, &a.d2],
                    [&b.x, &b.d1, &b.d2],
                    h,
                    (s - a.s) / h,
                ))
            }
        }
    }

    pub fn point(&self, s: f64) -> Result<Vec3> {
        Ok(self.point_and_tangent(s)?.0)
    }

    /// `dc/ds`
    pub fn tangent(&self, s: f64) -> Result<Vec3> {
        Ok(self.point_and_tangent(s)?.1)
    }

    pub fn point_and_tangent(&self, s: f64) -> Result<(Vec3, Vec3)> {
        if self.reversed {
            let (x, d) = self.raw(1.0 - s)?;
            Ok((x, -d))
        } else {
            self.raw(s)
        }
    }

    /// Evaluates on a piece `[a, b]` with the parameter mirrored exactly for
    /// reversed paths, so that reversal maps quadrature nodes onto each other.
    fn piece_eval(&self, a: f64, b: f64, tau: f64) -> Result<(Vec3, Vec3)> {
        // tau ∈ [-1, 1] is the local coordinate on [a, b].
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        if self.reversed {
            let (ra, rb) = (1.0 - b, 1.0 - a);
            let rmid = 0.5 * (ra + rb);
            let rhalf = 0.5 * (rb - ra);
            let (x, d) = self.raw(rmid - tau * rhalf)?;
            Ok((x, -d))
        } else {
            self.raw(mid + tau * half)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub segments: usize,
    pub atol: f64,
    pub rtol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            segments: 64,
            atol: 1e-10,
            rtol: 1e-9,
            max_refinements: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkResult {
    pub value: f64,
    pub error_estimate: f64,
    pub segments: usize,
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn check_dims(field: &VectorFieldDef, path: &ParamPath) -> Result<()> {
    if field.dim() != path.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} path for a {} field",
            path.dim(),
            field.dim()
        )));
    }
    Ok(())
}

fn work_pass(
    field: &VectorFieldDef,
    path: &ParamPath,
    pieces: &[(f64, f64)],
    per_piece: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for &(a, b) in pieces {
        let h = (b - a) / per_piece as f64;
        for k in 0..per_piece {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let mut seg = 0.0;
            for (tau, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
                let (x, d) = path.piece_eval(lo, hi, *tau)?;
                if !field.contains(&x) {
                    return Err(Error::Invalid(format!(
                        "path leaves the field domain at s = {} ({})",
                        0.5 * (lo + hi) + tau * 0.5 * (hi - lo),
                        fmt_point(&x, path.dim())
                    )));
                }
                seg += w * field.value(&x)?.dot(&d);
            }
            total += seg * 0.5 * (hi - lo);
        }
    }
    Ok(total)
}

/// `∫ F·dc` by composite five-point Gauss–Legendre, doubling the segment
/// count until successive values agree.
pub fn line_work(
    field: &VectorFieldDef,
    path: &ParamPath,
    q: &QuadratureConfig,
) -> Result<WorkResult> {
    check_dims(field, path)?;
    let bps = path.breakpoints();
    let pieces: Vec<(f64, f64)> = bps.windows(2).map(|w| (w[0], w[1])).collect();
    let mut per_piece = q.segments.div_ceil(pieces.len()).max(1);
    let mut value = work_pass(field, path, &pieces, per_piece)?;
    for _ in 0..q.max_refinements {
        per_piece *= 2;
        let next = work_pass(field, path, &pieces, per_piece)?;
        let delta = (next - value).abs();
        value = next;
        if delta <= q.atol.max(q.rtol * value.abs()) {
            return Ok(WorkResult {
                value,
                error_estimate: delta,
                segments: per_piece * pieces.len(),
            });
        }
    }
    Err(Error::NonConvergence(format!(
        "line integral did not settle after {} refinements",
        q.max_refinements
    )))
}

/// Radon's degree-5 rule on a triangle: barycentric points and weights.
fn radon_rule() -> [([f64; 3], f64); 7] {
    let r = 15f64.sqrt();
    let a1 = (6.0 - r) / 21.0;
    let a2 = (6.0 + r) / 21.0;
    let w1 = (155.0 - r) / 1200.0;
    let w2 = (155.0 + r) / 1200.0;
    let b1 = 1.0 - 2.0 * a1;
    let b2 = 1.0 - 2.0 * a2;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

type Triangle = [Vec3; 3];

fn subdivide(t: &Triangle) -> [Triangle; 4] {
    let m01 = 0.5 * (t[0] + t[1]);
    let m12 = 0.5 * (t[1] + t[2]);
    let m20 = 0.5 * (t[2] + t[0]);
    [
        [t[0], m01, m20],
        [m01, t[1], m12],
        [m20, m12, t[2]],
        [m01, m12, m20],
    ]
}

fn flux(field: &VectorFieldDef, tris: &[Triangle], rule: &[([f64; 3], f64); 7]) -> Result<f64> {
    let mut total = 0.0;
    for t in tris {
        let area = 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0]));
        let mut acc = 0.0;
        for (b, w) in rule {
            let p = t[0] * b[0] + t[1] * b[1] + t[2] * b[2];
            let curl = curl_from_jacobian(&field.jacobian(&p, DiffMode::Analytic)?);
            acc += w * curl.dot(&area);
        }
        total += acc;
    }
    Ok(total)
}

fn newell_normal(vs: &[Vec3]) -> Vec3 {
    let mut n = Vec3::zeros();
    for i in 0..vs.len() {
        let (a, b) = (vs[i], vs[(i + 1) % vs.len()]);
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    n
}

fn segments_cross(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let orient = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let on_segment = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Checks that `vs` (without the repeated closing vertex) is a planar simple
/// polygon and returns its Newell normal.
fn check_polygon(vs: &[Vec3]) -> Result<Vec3> {
    if vs.len() < 3 {
        return Err(Error::Invalid(
            "a loop needs at least three distinct vertices".into(),
        ));
    }
    let normal = newell_normal(vs);
    let size = vs
        .iter()
        .flat_map(|a| vs.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    if normal.norm() <= 1e-14 * size * size {
        return Err(Error::Invalid("loop encloses no area".into()));
    }
    let n = normal.normalize();
    let c = vs.iter().sum::<Vec3>() / vs.len() as f64;
    if vs.iter().any(|v| (v - c).dot(&n).abs() > 1e-9 * size) {
        return Err(Error::Invalid("loop is not planar".into()));
    }
    // Project onto the coordinate plane most transverse to the normal.
    let drop = n.iamax();
    let (i, j) = match drop {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let proj: Vec<(f64, f64)> = vs.iter().map(|v| (v[i], v[j])).collect();
    let m = proj.len();
    for a in 0..m {
        for b in a + 1..m {
            let adjacent = b == a + 1 || (a == 0 && b == m - 1);
            if adjacent {
                continue;
            }
            if segments_cross(proj[a], proj[(a + 1) % m], proj[b], proj[(b + 1) % m]) {
                return Err(Error::Invalid(format!(
                    "loop is self-intersecting (edges {a} and {b})"
                )));
            }
        }
    }
    Ok(normal)
}

/// Work around a planar polygonal loop computed as the flux of `curl F`
/// through the enclosed polygon, fan-triangulated from the vertex centroid.
pub fn stokes_work(
    field: &VectorFieldDef,
    path: &ParamPath,
    q: &QuadratureConfig,
) -> Result<WorkResult> {
    check_dims(field, path)?;
    let Some(mut vs) = path.vertices() else {
        return Err(Error::Invalid(
            "surface check needs a polygonal loop".into(),
        ));
    };
    if !path.is_closed() {
        return Err(Error::Invalid("surface check needs a closed loop".into()));
    }
    vs.pop();
    check_polygon(&vs)?;
    let c = vs.iter().sum::<Vec3>() / vs.len() as f64;
    for p in vs.iter().chain(std::iter::once(&c)) {
        if !field.contains(p) {
            return Err(Error::Invalid(format!(
                "enclosed region leaves the field domain at {}",
                fmt_point(p, path.dim())
            )));
        }
    }
    let rule = radon_rule();
    let mut tris: Vec<Triangle> = (0..vs.len())
        .map(|k| [c, vs[k], vs[(k + 1) % vs.len()]])
        .collect();
    let mut value = flux(field, &tris, &rule)?;
    for _ in 0..q.max_refinements.min(6) {
        tris = tris.iter().flat_map(subdivide).collect();
        let next = flux(field, &tris, &rule)?;
        let delta = (next - value).abs();
        value = next;
        if delta <= q.atol.max(q.rtol * value.abs()) {
            return Ok(WorkResult {
                value,
                error_estimate: delta,
                segments: tris.len(),
            });
        }
    }
    Err(Error::NonConvergence(
        "surface integral did not settle after 6 subdivisions".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldkit::BoxDomain;

    fn planar() -> VectorFieldDef {
        VectorFieldDef::parse(
            &["-x*y^2", "-x^3"],
            Dim::Two,
            Arc::new(ConstantTable::new()),
            BoxDomain::closed(&[(-5.0, 5.0), (-5.0, 5.0)]).unwrap(),
        )
        .unwrap()
    }

    fn p2(x: f64, y: f64) -> Vec3 {
        Vec3::new(x, y, 0.0)
    }

    fn square() -> ParamPath {
        ParamPath::polyline(
            Dim::Two,
            &[p2(0.0, 0.0), p2(1.0, 0.0), p2(1.0, 1.0), p2(0.0, 1.0)],
            true,
        )
        .unwrap()
    }

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn straight_segments() {
        let f = planar();
        let a = ParamPath::polyline(Dim::Two, &[p2(0.0, 0.0), p2(1.0, 0.0)], false).unwrap();
        assert_eq!(line_work(&f, &a, &q()).unwrap().value, 0.0);
        let b = ParamPath::polyline(Dim::Two, &[p2(1.0, 0.0), p2(1.0, 1.0)], false).unwrap();
        assert!((line_work(&f, &b, &q()).unwrap().value + 1.0).abs() < 1e-14);
    }

    #[test]
    fn unit_square_loop() {
        let f = planar();
        let line = line_work(&f, &square(), &q()).unwrap();
        assert!((line.value + 0.5).abs() < 1e-12);
        assert!(line.error_estimate >= 0.0);
        let surface = stokes_work(&f, &square(), &q()).unwrap();
        assert!((surface.value + 0.5).abs() < 1e-12);
        let back = line_work(&f, &square().reverse(), &q()).unwrap();
        assert!((back.value - 0.5).abs() < 1e-12);
        assert!((line.value + back.value).abs() <= 1e-12);
    }

    #[test]
    fn triangle_cross_check() {
        let f = planar();
        let tri = ParamPath::polyline(Dim::Two, &[p2(1.0, 1.0), p2(2.0, 1.0), p2(1.0, 2.0)], true)
            .unwrap();
        let a = line_work(&f, &tri, &q()).unwrap().value;
        let b = stokes_work(&f, &tri, &q()).unwrap().value;
        assert!((a - b).abs() <= 1e-6, "{a} {b}");
    }

    #[test]
    fn conservative_loops_do_no_work() {
        let f = VectorFieldDef::parse(
            &["2*x*y", "x^2 + cos(y)"],
            Dim::Two,
            Arc::new(ConstantTable::new()),
            BoxDomain::closed(&[(-5.0, 5.0), (-5.0, 5.0)]).unwrap(),
        )
        .unwrap();
        let circle = ParamPath::parametric(
            Dim::Two,
            &[
                "1 + cos(2*3.141592653589793*s)",
                "sin(2*3.141592653589793*s)",
            ],
            Arc::new(ConstantTable::new()),
            true,
        )
        .unwrap();
        assert!(line_work(&f, &circle, &q()).unwrap().value.abs() <= 1e-8);
        assert!(stokes_work(&f, &square(), &q()).unwrap().value.abs() <= 1e-8);
    }

    #[test]
    fn parametrizations_agree() {
        let f = planar();
        let poly = ParamPath::polyline(Dim::Two, &[p2(0.5, 0.2), p2(1.5, 1.7)], false).unwrap();
        let smooth = ParamPath::parametric(
            Dim::Two,
            &["0.5 + s^2", "0.2 + 1.5*s^2"],
            Arc::new(ConstantTable::new()),
            false,
        )
        .unwrap();
        let a = line_work(&f, &poly, &q()).unwrap().value;
        let b = line_work(&f, &smooth, &q()).unwrap().value;
        assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn reverse_is_an_involution() {
        let p = ParamPath::parametric(
            Dim::Two,
            &["s^2", "sin(s)"],
            Arc::new(ConstantTable::new()),
            false,
        )
        .unwrap();
        let rr = p.reverse().reverse();
        for k in 0..10 {
            let s = k as f64 / 9.0;
            assert_eq!(rr.point(s).unwrap(), p.point(s).unwrap());
            assert_eq!(p.reverse().point(s).unwrap(), p.point(1.0 - s).unwrap());
        }
        assert!(p.reverse().is_closed() == p.is_closed());
    }

    #[test]
    fn three_dimensional_loop() {
        let f = VectorFieldDef::parse(
            &["-y*z", "-2*x*z", "-x*y"],
            Dim::Three,
            Arc::new(ConstantTable::new()),
            BoxDomain::closed(&[(-5.0, 5.0), (-5.0, 5.0), (-5.0, 5.0)]).unwrap(),
        )
        .unwrap();
        let tilted = ParamPath::polyline(
            Dim::Three,
            &[
                Vec3::new(0.0, 0.0, 1.0),
                Vec3::new(1.0, 0.0, 2.0),
                Vec3::new(1.0, 1.0, 3.0),
                Vec3::new(0.0, 1.0, 2.0),
            ],
            true,
        )
        .unwrap();
        let a = line_work(&f, &tilted, &q()).unwrap().value;
        let b = stokes_work(&f, &tilted, &q()).unwrap().value;
        assert!((a - b).abs() <= 1e-9, "{a} {b}");
        assert!(a.abs() > 1e-3);
    }

    #[test]
    fn invalid_loops() {
        let f = planar();
        let bow = ParamPath::polyline(
            Dim::Two,
            &[p2(0.0, 0.0), p2(1.0, 1.0), p2(1.0, 0.0), p2(0.0, 1.0)],
            true,
        )
        .unwrap();
        assert!(matches!(
            stokes_work(&f, &bow, &q()),
            Err(Error::Invalid(_))
        ));
        let f3 = VectorFieldDef::parse(
            &["0", "0", "x"],
            Dim::Three,
            Arc::new(ConstantTable::new()),
            BoxDomain::closed(&[(-5.0, 5.0), (-5.0, 5.0), (-5.0, 5.0)]).unwrap(),
        )
        .unwrap();
        let warped = ParamPath::polyline(
            Dim::Three,
            &[
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 1.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            true,
        )
        .unwrap();
        assert!(stokes_work(&f3, &warped, &q()).is_err());
        let open = ParamPath::polyline(Dim::Two, &[p2(0.0, 0.0), p2(1.0, 0.0)], false).unwrap();
        assert!(stokes_work(&f, &open, &q()).is_err());
        let outside = ParamPath::polyline(Dim::Two, &[p2(0.0, 0.0), p2(9.0, 0.0)], false).unwrap();
        assert!(matches!(
            line_work(&f, &outside, &q()),
            Err(Error::Invalid(_))
        ));
        assert!(
            ParamPath::parametric(Dim::Two, &["s", "0"], Arc::new(ConstantTable::new()), true)
                .is_err()
        );
    }
}
