//! Dimension-tagged scalar and vector fields over axis-aligned boxes.
//!
//! Derivatives come from forward-mode AD ([`DiffMode::Analytic`]) or central
//! differences ([`DiffMode::FiniteDifference`]) with step
//! `h = max(1, |x_i|) * 6.06e-6` per axis. Near the boundary of a closed
//! domain the difference becomes one-sided (second order).

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprlang::{
    self, evaluate_generic, Bindings, ConstantTable, DualValue, Jet2, Scalar, SyntaxTree,
};
use crate::types::{Dim, Mat3, Vec3};

/// Relative finite-difference step (roughly the cube root of machine epsilon).
pub const FD_STEP: f64 = 6.06e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffMode {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_open: true,
            hi_open: true,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_open {
            v > self.lo
        } else {
            v >= self.lo
        };
        let below = if self.hi_open {
            v < self.hi
        } else {
            v <= self.hi
        };
        above && below
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Axis-aligned box, one interval per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    pub axes: Vec<Interval>,
}

impl BoxDomain {
    pub fn new(axes: Vec<Interval>) -> Result<Self> {
        if !(2..=3).contains(&axes.len()) {
            return Err(Error::Invalid(format!(
                "a domain needs 2 or 3 axes, got {}",
                axes.len()
            )));
        }
        for (i, a) in axes.iter().enumerate() {
            if !(a.lo < a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::Invalid(format!(
                    "domain axis {i} is degenerate: [{}, {}]",
                    a.lo, a.hi
                )));
            }
        }
        Ok(Self { axes })
    }

    /// Closed box from `(lo, hi)` pairs.
    pub fn closed(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            bounds
                .iter()
                .map(|&(lo, hi)| Interval::closed(lo, hi))
                .collect(),
        )
    }

    /// The unbounded box in `dim` dimensions.
    pub fn everywhere(dim: Dim) -> Self {
        let axis = Interval::closed(f64::MIN, f64::MAX);
        Self {
            axes: vec![axis; dim.n()],
        }
    }

    pub fn dim(&self) -> Dim {
        if self.axes.len() == 2 {
            Dim::Two
        } else {
            Dim::Three
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.axes.iter().enumerate().all(|(i, a)| a.contains(p[i]))
    }

    /// True when `other` lies inside this box (closures compared).
    pub fn contains_box(&self, other: &BoxDomain) -> bool {
        self.axes.len() == other.axes.len()
            && self
                .axes
                .iter()
                .zip(&other.axes)
                .all(|(a, b)| b.lo >= a.lo && b.hi <= a.hi)
    }

    pub fn diameter(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| a.width().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec3 {
        let mut c = Vec3::zeros();
        for (i, a) in self.axes.iter().enumerate() {
            c[i] = 0.5 * (a.lo + a.hi);
        }
        c
    }

    /// All `2^dim` corners.
    pub fn corners(&self) -> Vec<Vec3> {
        let n = self.axes.len();
        (0..1usize << n)
            .map(|mask| {
                let mut c = Vec3::zeros();
                for (i, a) in self.axes.iter().enumerate() {
                    c[i] = if mask >> i & 1 == 1 { a.hi } else { a.lo };
                }
                c
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplePlan {
    /// Cell-centred regular grid with the given count per axis.
    Grid(Vec<usize>),
    /// Randomly shifted Halton sequence.
    QuasiRandom { count: usize, seed: u64 },
}

/// A box of sample points used by the statistics in `darboux`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub bounds: BoxDomain,
    pub plan: SamplePlan,
}

const HALTON_BASES: [u64; 3] = [2, 3, 5];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

impl Region {
    pub fn new(bounds: BoxDomain, plan: SamplePlan) -> Result<Self> {
        let count = match &plan {
            SamplePlan::Grid(counts) => {
                if counts.len() != bounds.axes.len() {
                    return Err(Error::Invalid(format!(
                        "grid has {} counts for a {}-axis region",
                        counts.len(),
                        bounds.axes.len()
                    )));
                }
                counts.iter().product()
            }
            SamplePlan::QuasiRandom { count, .. } => *count,
        };
        if count == 0 {
            return Err(Error::Invalid("a region needs at least one sample".into()));
        }
        Ok(Self { bounds, plan })
    }

    pub fn grid(bounds: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        Self::new(
            BoxDomain::closed(bounds)?,
            SamplePlan::Grid(counts.to_vec()),
        )
    }

    pub fn quasi_random(bounds: &[(f64, f64)], count: usize, seed: u64) -> Result<Self> {
        Self::new(
            BoxDomain::closed(bounds)?,
            SamplePlan::QuasiRandom { count, seed },
        )
    }

    pub fn dim(&self) -> Dim {
        self.bounds.dim()
    }

    pub fn diameter(&self) -> f64 {
        self.bounds.diameter()
    }

    /// Fails unless the region lies inside `domain`.
    pub fn check_within(&self, domain: &BoxDomain) -> Result<()> {
        if domain.contains_box(&self.bounds) {
            Ok(())
        } else {
            Err(Error::Invalid(
                "sample region is not contained in the field domain".into(),
            ))
        }
    }

    /// Sample points. Grid points sit at cell centres and Halton points in the
    /// open unit cube, so no sample lies on the region boundary.
    pub fn samples(&self) -> Vec<Vec3> {
        let axes = &self.bounds.axes;
        match &self.plan {
            SamplePlan::Grid(counts) => {
                let total: usize = counts.iter().product();
                (0..total)
                    .map(|mut k| {
                        let mut p = Vec3::zeros();
                        for (i, a) in axes.iter().enumerate() {
                            let j = k % counts[i];
                            k /= counts[i];
                            p[i] = a.lo + (j as f64 + 0.5) * a.width() / counts[i] as f64;
                        }
                        p
                    })
                    .collect()
            }
            SamplePlan::QuasiRandom { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let shift: Vec<f64> = axes.iter().map(|_| rng.gen::<f64>()).collect();
                (1..=*count as u64)
                    .map(|k| {
                        let mut p = Vec3::zeros();
                        for (i, a) in axes.iter().enumerate() {
                            let mut u = radical_inverse(k, HALTON_BASES[i]) + shift[i];
                            if u >= 1.0 {
                                u -= 1.0;
                            }
                            let u = u.clamp(1e-12, 1.0 - 1e-12);
                            p[i] = a.lo + u * a.width();
                        }
                        p
                    })
                    .collect()
            }
        }
    }
}

fn fd_step(v: f64) -> f64 {
    v.abs().max(1.0) * FD_STEP
}

/// Partial derivative along `axis` of a vector-valued function by differences
/// that stay inside `domain`.
fn fd_partial<F>(f: &F, p: &Vec3, axis: usize, domain: &BoxDomain) -> Result<Vec3>
where
    F: Fn(&Vec3) -> Result<Vec3>,
{
    let h = fd_step(p[axis]);
    let shifted = |k: f64| {
        let mut q = *p;
        q[axis] += k * h;
        q
    };
    let (plus, minus) = (shifted(1.0), shifted(-1.0));
    match (domain.contains(&plus), domain.contains(&minus)) {
        (true, true) => Ok((f(&plus)? - f(&minus)?) / (2.0 * h)),
        (false, true) if domain.contains(&shifted(-2.0)) => {
            Ok((3.0 * f(p)? - 4.0 * f(&minus)? + f(&shifted(-2.0))?) / (2.0 * h))
        }
        (true, false) if domain.contains(&shifted(2.0)) => {
            Ok((-3.0 * f(p)? + 4.0 * f(&plus)? - f(&shifted(2.0))?) / (2.0 * h))
        }
        _ => Err(Error::Invalid(format!(
            "domain too narrow along axis {axis} for a finite-difference stencil"
        ))),
    }
}

/// Antisymmetric part of a Jacobian (`J[i][j] = ∂F_i/∂x_j`) as a curl vector.
/// In two dimensions only the `z` component is nonzero.
pub fn curl_from_jacobian(j: &Mat3) -> Vec3 {
    Vec3::new(
        j[(2, 1)] - j[(1, 2)],
        j[(0, 2)] - j[(2, 0)],
        j[(1, 0)] - j[(0, 1)],
    )
}

fn validate_tree(tree: &SyntaxTree, dim: Dim, constants: &ConstantTable) -> Result<()> {
    let expected = &exprlang::COORDINATES[..dim.n()];
    if tree.variables.len() != dim.n() || tree.variables.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(Error::DimensionMismatch(format!(
            "expression over {:?} used as a {dim} field",
            tree.variables
        )));
    }
    exprlang::check_bound(tree, constants)?;
    Ok(())
}

/// A scalar field `f(x)` defined by an expression.
#[derive(Debug, Clone)]
pub struct ScalarFieldDef {
    dim: Dim,
    expr: SyntaxTree,
    constants: Arc<ConstantTable>,
    domain: BoxDomain,
}

impl ScalarFieldDef {
    pub fn new(
        dim: Dim,
        expr: SyntaxTree,
        constants: Arc<ConstantTable>,
        domain: BoxDomain,
    ) -> Result<Self> {
        if domain.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{dim} field on a {} domain",
                domain.dim()
            )));
        }
        validate_tree(&expr, dim, &constants)?;
        Ok(Self {
            dim,
            expr,
            constants,
            domain,
        })
    }

    /// Parses `source` and binds it against `constants`.
    pub fn parse(
        source: &str,
        dim: Dim,
        constants: Arc<ConstantTable>,
        domain: BoxDomain,
    ) -> Result<Self> {
        let names: BTreeSet<String> = constants.keys().cloned().collect();
        let expr = exprlang::parse(source, dim, &names)?;
        Self::new(dim, expr, constants, domain)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn expr(&self) -> &SyntaxTree {
        &self.expr
    }

    pub fn constants(&self) -> &Arc<ConstantTable> {
        &self.constants
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn with_domain(&self, domain: BoxDomain) -> Result<Self> {
        Self::new(self.dim, self.expr.clone(), self.constants.clone(), domain)
    }

    fn check(&self, p: &Vec3) -> Result<()> {
        if self.domain.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(*p))
        }
    }

    /// Evaluates without the domain check.
    pub fn eval_unchecked<S: Scalar>(&self, p: &Vec3) -> Result<S> {
        let coords = [p.x, p.y, p.z];
        Ok(evaluate_generic::<S>(
            &self.expr,
            &Bindings::new(&coords[..self.dim.n()], &self.constants),
        )?)
    }

    pub fn value(&self, p: &Vec3) -> Result<f64> {
        self.check(p)?;
        self.eval_unchecked::<f64>(p)
    }

    pub fn dual(&self, p: &Vec3) -> Result<DualValue> {
        self.check(p)?;
        self.eval_unchecked::<DualValue>(p)
    }

    pub fn jet(&self, p: &Vec3) -> Result<Jet2> {
        self.check(p)?;
        self.eval_unchecked::<Jet2>(p)
    }

    pub fn gradient(&self, p: &Vec3, mode: DiffMode) -> Result<Vec3> {
        self.check(p)?;
        match mode {
            DiffMode::Analytic => {
                let d = self.eval_unchecked::<DualValue>(p)?;
                Ok(Vec3::from(d.partials))
            }
            DiffMode::FiniteDifference => {
                let f = |q: &Vec3| Ok(Vec3::new(self.eval_unchecked::<f64>(q)?, 0.0, 0.0));
                let mut g = Vec3::zeros();
                for axis in 0..self.dim.n() {
                    g[axis] = fd_partial(&f, p, axis, &self.domain)?.x;
                }
                Ok(g)
            }
        }
    }

    /// Hessian from second-order AD.
    pub fn hessian(&self, p: &Vec3) -> Result<Mat3> {
        let j = self.jet(p)?;
        Ok(Mat3::from_fn(|r, c| j.hess[r][c]))
    }
}

/// A vector field `F(x)` with one expression per component.
#[derive(Debug, Clone)]
pub struct VectorFieldDef {
    dim: Dim,
    components: Vec<SyntaxTree>,
    constants: Arc<ConstantTable>,
    domain: BoxDomain,
}

impl VectorFieldDef {
    pub fn new(
        dim: Dim,
        components: Vec<SyntaxTree>,
        constants: Arc<ConstantTable>,
        domain: BoxDomain,
    ) -> Result<Self> {
        if components.len() != dim.n() {
            return Err(Error::DimensionMismatch(format!(
                "{dim} vector field needs {} components, got {}",
                dim.n(),
                components.len()
            )));
        }
        if domain.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{dim} field on a {} domain",
                domain.dim()
            )));
        }
        for c in &components {
            validate_tree(c, dim, &constants)?;
        }
        Ok(Self {
            dim,
            components,
            constants,
            domain,
        })
    }

    pub fn parse(
        sources: &[&str],
        dim: Dim,
        constants: Arc<ConstantTable>,
        domain: BoxDomain,
    ) -> Result<Self> {
        let names: BTreeSet<String> = constants.keys().cloned().collect();
        let components = sources
            .iter()
            .map(|s| exprlang::parse(s, dim, &names))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dim, components, constants, domain)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn components(&self) -> &[SyntaxTree] {
        &self.components
    }

    pub fn constants(&self) -> &Arc<ConstantTable> {
        &self.constants
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn with_domain(&self, domain: BoxDomain) -> Result<Self> {
        Self::new(
            self.dim,
            self.components.clone(),
            self.constants.clone(),
            domain,
        )
    }

    /// `c * F`, built as a new expression per component.
    pub fn scaled(&self, c: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|t| {
                let factor = exprlang::Node::number(c, t.root.span);
                SyntaxTree::new(
                    exprlang::Node::binary(exprlang::BinaryOp::Mul, factor, t.root.clone()),
                    t.variables.clone(),
                )
            })
            .collect();
        Self {
            components,
            ..self.clone()
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.domain.contains(p)
    }

    fn check(&self, p: &Vec3) -> Result<()> {
        if self.domain.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(*p))
        }
    }

    /// Per-component evaluation without the domain check; unused components
    /// are zero.
    pub fn eval_unchecked<S: Scalar>(&self, p: &Vec3) -> Result<[S; 3]> {
        let coords = [p.x, p.y, p.z];
        let b = Bindings::new(&coords[..self.dim.n()], &self.constants);
        let mut out = [S::constant(0.0); 3];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = evaluate_generic::<S>(c, &b)?;
        }
        Ok(out)
    }

    pub fn value_unchecked(&self, p: &Vec3) -> Result<Vec3> {
        Ok(Vec3::from(self.eval_unchecked::<f64>(p)?))
    }

    pub fn value(&self, p: &Vec3) -> Result<Vec3> {
        self.check(p)?;
        self.value_unchecked(p)
    }

    /// Second-order jets of each component.
    pub fn jets(&self, p: &Vec3) -> Result<[Jet2; 3]> {
        self.check(p)?;
        self.eval_unchecked::<Jet2>(p)
    }

    pub fn jacobian_unchecked(&self, p: &Vec3) -> Result<Mat3> {
        let d = self.eval_unchecked::<DualValue>(p)?;
        Ok(Mat3::from_fn(|r, c| d[r].partials[c]))
    }

    /// `J[i][j] = ∂F_i/∂x_j`.
    pub fn jacobian(&self, p: &Vec3, mode: DiffMode) -> Result<Mat3> {
        self.check(p)?;
        match mode {
            DiffMode::Analytic => self.jacobian_unchecked(p),
            DiffMode::FiniteDifference => {
                let f = |q: &Vec3| self.value_unchecked(q);
                let mut j = Mat3::zeros();
                for axis in 0..self.dim.n() {
                    j.set_column(axis, &fd_partial(&f, p, axis, &self.domain)?);
                }
                Ok(j)
            }
        }
    }

    /// Curl vector; in two dimensions `(0, 0, ∂xFy − ∂yFx)`.
    pub fn curl(&self, p: &Vec3, mode: DiffMode) -> Result<Vec3> {
        Ok(curl_from_jacobian(&self.jacobian(p, mode)?))
    }

    /// Scalar curl of a 2D field (the `z` component in 3D).
    pub fn curl_z(&self, p: &Vec3, mode: DiffMode) -> Result<f64> {
        Ok(self.curl(p, mode)?.z)
    }

    /// Helicity `F · curl F`; three dimensions only.
    pub fn helicity(&self, p: &Vec3, mode: DiffMode) -> Result<f64> {
        if self.dim != Dim::Three {
            return Err(Error::DimensionMismatch(
                "helicity is defined for 3D fields only".into(),
            ));
        }
        Ok(self.value(p)?.dot(&self.curl(p, mode)?))
    }
}
