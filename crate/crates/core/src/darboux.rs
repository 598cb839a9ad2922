//! Canonical classification of force fields and verification of their
//! generalized-potential representations.
//!
//! A field is *conservative* (`F = -∇U`), *two-potential* (`F = -V∇U`, zero
//! helicity) or *chiral* (`F = -V∇U - ∇W`, nonzero helicity, 3D only). The
//! statistics are normalized by the sampled scale `max ‖J‖∞ · diam(region)`
//! so the verdict does not change when the field is multiplied by a constant.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::SVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprlang::{self, DualValue, Node, NodeKind, SyntaxTree};
use crate::fieldkit::{curl_from_jacobian, DiffMode, Region, ScalarFieldDef, VectorFieldDef};
use crate::ode::{self, Control, Method, OdeError, StageError};
use crate::types::{Dim, Mat3, Vec3};

/// Generalized potentials `U`, `V` and optionally `W` of a force field.
#[derive(Debug, Clone)]
pub struct PotentialSet {
    pub u: ScalarFieldDef,
    pub v: ScalarFieldDef,
    pub w: Option<ScalarFieldDef>,
}

impl PotentialSet {
    pub fn new(u: ScalarFieldDef, v: ScalarFieldDef, w: Option<ScalarFieldDef>) -> Result<Self> {
        let dim = u.dim();
        if v.dim() != dim || w.as_ref().is_some_and(|w| w.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "potentials must share one dimension".into(),
            ));
        }
        Ok(Self { u, v, w })
    }

    pub fn dim(&self) -> Dim {
        self.u.dim()
    }

    fn check_region(&self, region: &Region) -> Result<()> {
        region.check_within(self.u.domain())?;
        region.check_within(self.v.domain())?;
        if let Some(w) = &self.w {
            region.check_within(w.domain())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Upper bound on the normalized curl statistic for a conservative field.
    pub conservative: f64,
    /// Lower bound (exclusive) on the normalized helicity for a chiral field.
    pub chiral: f64,
    pub scale_floor: f64,
    /// Admissibility of `V` in the 3D decomposition, relative to the scale.
    pub characteristic: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            conservative: 1e-8,
            chiral: 1e-8,
            scale_floor: 1e-30,
            characteristic: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CanonicalClass {
    /// `Ω = dψ`
    Conservative,
    /// `Ω = φ dψ`
    TwoPotential,
    /// `Ω = φ dψ + dζ`
    ChiralThreePotential,
}

impl CanonicalClass {
    pub fn label(self) -> &'static str {
        match self {
            CanonicalClass::Conservative => "conservative",
            CanonicalClass::TwoPotential => "two-potential",
            CanonicalClass::ChiralThreePotential => "chiral-three-potential",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub class: CanonicalClass,
    pub curl_statistic: f64,
    /// Absent in two dimensions.
    pub helicity_statistic: Option<f64>,
    pub scale: f64,
    pub samples: usize,
    pub region: Region,
    pub thresholds: Thresholds,
}

/// Norm statistics of a residual over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub residual: String,
    pub max: f64,
    pub rms: f64,
    pub min: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

/// Builds a [`ResidualReport`] one sample at a time.
#[derive(Debug, Clone)]
pub struct ResidualAccumulator {
    residual: String,
    dim: Dim,
    max: f64,
    min: f64,
    sum_sq: f64,
    worst: Vec3,
    n: usize,
}

impl ResidualAccumulator {
    pub fn new(residual: impl Into<String>, dim: Dim) -> Self {
        Self {
            residual: residual.into(),
            dim,
            max: 0.0,
            min: f64::INFINITY,
            sum_sq: 0.0,
            worst: Vec3::zeros(),
            n: 0,
        }
    }

    pub fn push(&mut self, p: &Vec3, magnitude: f64) {
        if self.n == 0 || magnitude > self.max {
            self.max = magnitude;
            self.worst = *p;
        }
        self.min = self.min.min(magnitude);
        self.sum_sq += magnitude * magnitude;
        self.n += 1;
    }

    pub fn finish(self) -> Result<ResidualReport> {
        if self.n == 0 {
            return Err(Error::Invalid("empty sample set".into()));
        }
        Ok(ResidualReport {
            residual: self.residual,
            max: self.max,
            rms: (self.sum_sq / self.n as f64).sqrt(),
            min: self.min,
            worst_point: self.worst.iter().take(self.dim.n()).copied().collect(),
            samples: self.n,
        })
    }
}

fn samples_in(region: &Region, field: &VectorFieldDef) -> Result<Vec<Vec3>> {
    if region.dim() != field.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} region for a {} field",
            region.dim(),
            field.dim()
        )));
    }
    region.check_within(field.domain())?;
    let samples = region.samples();
    if samples.is_empty() {
        return Err(Error::Invalid("empty sample set".into()));
    }
    Ok(samples)
}

fn infinity_norm(j: &Mat3) -> f64 {
    j.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `max ‖J‖∞ · diam(region)`, floored.
pub fn sampled_scale(
    field: &VectorFieldDef,
    samples: &[Vec3],
    diameter: f64,
    floor: f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in samples {
        worst = worst.max(infinity_norm(&field.jacobian(p, DiffMode::Analytic)?));
    }
    Ok((worst * diameter).max(floor))
}

pub fn classify(
    field: &VectorFieldDef,
    region: &Region,
    thresholds: &Thresholds,
) -> Result<ClassificationReport> {
    let samples = samples_in(region, field)?;
    let mut max_jac: f64 = 0.0;
    let mut max_curl: f64 = 0.0;
    let mut max_force: f64 = 0.0;
    let mut max_helicity: f64 = 0.0;
    for p in &samples {
        let j = field.jacobian(p, DiffMode::Analytic)?;
        let f = field.value(p)?;
        let c = curl_from_jacobian(&j);
        max_jac = max_jac.max(infinity_norm(&j));
        max_curl = max_curl.max(c.norm());
        max_force = max_force.max(f.norm());
        max_helicity = max_helicity.max(f.dot(&c).abs());
    }
    let scale = (max_jac * region.diameter()).max(thresholds.scale_floor);
    let curl_statistic = max_curl / scale;
    let helicity_statistic = match field.dim() {
        Dim::Two => None,
        Dim::Three if max_force > 0.0 => Some(max_helicity / (scale * max_force)),
        Dim::Three => Some(0.0),
    };
    let class = if curl_statistic <= thresholds.conservative {
        CanonicalClass::Conservative
    } else if helicity_statistic.is_some_and(|h| h > thresholds.chiral) {
        CanonicalClass::ChiralThreePotential
    } else {
        CanonicalClass::TwoPotential
    };
    Ok(ClassificationReport {
        class,
        curl_statistic,
        helicity_statistic,
        scale,
        samples: samples.len(),
        region: region.clone(),
        thresholds: *thresholds,
    })
}

/// `‖F + V∇U + ∇W‖` over the region.
pub fn verify_representation(
    field: &VectorFieldDef,
    potentials: &PotentialSet,
    region: &Region,
) -> Result<ResidualReport> {
    if potentials.dim() != field.dim() {
        return Err(Error::DimensionMismatch(
            "potentials and force field differ in dimension".into(),
        ));
    }
    let samples = samples_in(region, field)?;
    potentials.check_region(region)?;
    let tag = if potentials.w.is_some() {
        "F + V grad U + grad W"
    } else {
        "F + V grad U"
    };
    let mut acc = ResidualAccumulator::new(tag, field.dim());
    for p in &samples {
        let mut r = field.value(p)?
            + potentials.v.value(p)? * potentials.u.gradient(p, DiffMode::Analytic)?;
        if let Some(w) = &potentials.w {
            r += w.gradient(p, DiffMode::Analytic)?;
        }
        acc.push(p, r.norm());
    }
    acc.finish()
}

/// `∇V × F − V curl F` over the region (a scalar in 2D, a vector in 3D).
pub fn vpde_residual(
    field: &VectorFieldDef,
    v: &ScalarFieldDef,
    region: &Region,
) -> Result<ResidualReport> {
    if v.dim() != field.dim() {
        return Err(Error::DimensionMismatch(
            "V and force field differ in dimension".into(),
        ));
    }
    let samples = samples_in(region, field)?;
    region.check_within(v.domain())?;
    let mut acc = ResidualAccumulator::new("grad V x F - V curl F", field.dim());
    for p in &samples {
        let r = v.gradient(p, DiffMode::Analytic)?.cross(&field.value(p)?)
            - v.value(p)? * field.curl(p, DiffMode::Analytic)?;
        acc.push(p, r.norm());
    }
    acc.finish()
}

/// Parses a one-variable gauge function `f(u)`.
pub fn parse_gauge_function(source: &str, constants: &BTreeSet<String>) -> Result<SyntaxTree> {
    Ok(exprlang::parse_with_variables(source, &["u"], constants)?)
}

/// `(U, V) ↦ (f(U), V / f'(U))`, leaving `W` unchanged.
///
/// `f'` is obtained symbolically so that the new potentials are ordinary
/// expression fields. Fails if `f'(U)` vanishes at any sample of `region`.
pub fn gauge_transform(
    potentials: &PotentialSet,
    f: &SyntaxTree,
    region: &Region,
) -> Result<PotentialSet> {
    if f.variables.len() != 1 {
        return Err(Error::Invalid(
            "gauge function must depend on exactly one variable".into(),
        ));
    }
    let u = &potentials.u;
    let v = &potentials.v;
    let df = f.derivative(0);
    let inner = [u.expr().root.clone()];
    let vars = u.expr().variables.clone();
    let new_u = f.compose(&inner, vars.clone());
    let df_of_u = df.compose(&inner, vars.clone());
    let span = v.expr().root.span;
    let new_v = SyntaxTree::new(
        Node::new(
            NodeKind::Binary {
                op: exprlang::BinaryOp::Div,
                lhs: Box::new(v.expr().root.clone()),
                rhs: Box::new(df_of_u.root.clone()),
            },
            span,
        ),
        vars,
    );
    let new_u = ScalarFieldDef::new(u.dim(), new_u, u.constants().clone(), u.domain().clone())?;
    let new_v = ScalarFieldDef::new(v.dim(), new_v, v.constants().clone(), v.domain().clone())?;
    let derivative =
        ScalarFieldDef::new(u.dim(), df_of_u, u.constants().clone(), u.domain().clone())?;
    region.check_within(u.domain())?;
    for p in region.samples() {
        let slope = derivative.value(&p)?;
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::Precondition(format!(
                "gauge function derivative vanishes at U = {}",
                u.value(&p)?
            )));
        }
    }
    PotentialSet::new(new_u, new_v, potentials.w.clone())
}

/// `|∇V × ∇U|` over the region; zero exactly when `V` is a function of `U`.
pub fn independence_metric(
    u: &ScalarFieldDef,
    v: &ScalarFieldDef,
    region: &Region,
) -> Result<ResidualReport> {
    if u.dim() != v.dim() || region.dim() != u.dim() {
        return Err(Error::DimensionMismatch(
            "U, V and region must share one dimension".into(),
        ));
    }
    region.check_within(u.domain())?;
    region.check_within(v.domain())?;
    let mut acc = ResidualAccumulator::new("|grad V x grad U|", u.dim());
    for p in region.samples() {
        let c = v
            .gradient(&p, DiffMode::Analytic)?
            .cross(&u.gradient(&p, DiffMode::Analytic)?);
        acc.push(&p, c.norm());
    }
    acc.finish()
}

/// Gradient floor below which `V` is rejected by [`decompose3d`].
pub const GRAD_V_FLOOR: f64 = 1e-12;

type Dual3 = [DualValue; 3];

fn cross(a: &Dual3, b: &Dual3) -> Dual3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &Dual3, b: &Dual3) -> DualValue {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn dual_values(d: &Dual3) -> Vec3 {
    Vec3::new(d[0].value, d[1].value, d[2].value)
}

fn dual_jacobian(d: &Dual3) -> Mat3 {
    Mat3::from_fn(|r, c| d[r].partials[c])
}

/// Gauge-fixed split `F = F_c + F_nc` of a 3D field for a given `V`:
/// `∇U = (∇V × curl F)/‖∇V‖²`, `F_nc = −V∇U`, `F_c = F − F_nc`.
///
/// The parts are point samplers. Their Jacobians are exact: second-order
/// jets of `F` and `V` are lifted to first-order numbers before the
/// construction, so `curl F_c` involves no differencing.
#[derive(Debug, Clone)]
pub struct Decomposition3d {
    field: VectorFieldDef,
    v: ScalarFieldDef,
    pub diagnostics: DecompositionDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionDiagnostics {
    /// `‖F − F_c − F_nc‖`
    pub sum: ResidualReport,
    /// `‖curl F_c‖`
    pub curl_conservative: ResidualReport,
    /// `|∇V · ∇U|`
    pub gauge: ResidualReport,
    /// `‖curl F_nc − curl F‖`
    pub curl_agreement: ResidualReport,
    /// `|∇V · curl F|`
    pub admissibility: ResidualReport,
    pub scale: f64,
}

struct Parts {
    f: Dual3,
    grad_u: Dual3,
    f_nc: Dual3,
    f_c: Dual3,
    grad_v: Vec3,
    curl: Vec3,
}

impl Decomposition3d {
    fn parts(&self, p: &Vec3) -> Result<Parts> {
        let jets = self.field.jets(p)?;
        let vj = self.v.jet(p)?;
        let f = jets.map(|j| j.first_order());
        let v = vj.first_order();
        let gv = [vj.partial(0), vj.partial(1), vj.partial(2)];
        let curl = [
            jets[2].partial(1) - jets[1].partial(2),
            jets[0].partial(2) - jets[2].partial(0),
            jets[1].partial(0) - jets[0].partial(1),
        ];
        let norm_sq = dot(&gv, &gv);
        if norm_sq.value.sqrt() < GRAD_V_FLOOR {
            return Err(Error::Precondition(format!(
                "|grad V| = {:e} is below {GRAD_V_FLOOR:e} at ({}, {}, {})",
                norm_sq.value.sqrt(),
                p.x,
                p.y,
                p.z
            )));
        }
        let grad_u = cross(&gv, &curl).map(|c| c / norm_sq);
        let f_nc = grad_u.map(|g| -(v * g));
        let f_c = [f[0] - f_nc[0], f[1] - f_nc[1], f[2] - f_nc[2]];
        Ok(Parts {
            f,
            grad_u,
            f_nc,
            f_c,
            grad_v: dual_values(&gv),
            curl: dual_values(&curl),
        })
    }

    pub fn grad_u(&self, p: &Vec3) -> Result<Vec3> {
        Ok(dual_values(&self.parts(p)?.grad_u))
    }

    pub fn non_conservative(&self, p: &Vec3) -> Result<Vec3> {
        Ok(dual_values(&self.parts(p)?.f_nc))
    }

    pub fn conservative(&self, p: &Vec3) -> Result<Vec3> {
        Ok(dual_values(&self.parts(p)?.f_c))
    }

    pub fn conservative_jacobian(&self, p: &Vec3) -> Result<Mat3> {
        Ok(dual_jacobian(&self.parts(p)?.f_c))
    }

    pub fn curl_conservative(&self, p: &Vec3) -> Result<Vec3> {
        Ok(curl_from_jacobian(&self.conservative_jacobian(p)?))
    }

    pub fn curl_non_conservative(&self, p: &Vec3) -> Result<Vec3> {
        Ok(curl_from_jacobian(&dual_jacobian(&self.parts(p)?.f_nc)))
    }

    pub fn v(&self) -> &ScalarFieldDef {
        &self.v
    }
}

pub fn decompose3d(
    field: &VectorFieldDef,
    v: &ScalarFieldDef,
    region: &Region,
    thresholds: &Thresholds,
) -> Result<Decomposition3d> {
    if field.dim() != Dim::Three || v.dim() != Dim::Three {
        return Err(Error::DimensionMismatch(
            "the conservative/non-conservative split is three-dimensional".into(),
        ));
    }
    let samples = samples_in(region, field)?;
    region.check_within(v.domain())?;
    let scale = sampled_scale(field, &samples, region.diameter(), thresholds.scale_floor)?;
    let mut out = Decomposition3d {
        field: field.clone(),
        v: v.clone(),
        diagnostics: DecompositionDiagnostics {
            sum: empty_report(),
            curl_conservative: empty_report(),
            gauge: empty_report(),
            curl_agreement: empty_report(),
            admissibility: empty_report(),
            scale,
        },
    };
    let mut sum = ResidualAccumulator::new("F - F_c - F_nc", Dim::Three);
    let mut curl_c = ResidualAccumulator::new("curl F_c", Dim::Three);
    let mut gauge = ResidualAccumulator::new("grad V . grad U", Dim::Three);
    let mut agree = ResidualAccumulator::new("curl F_nc - curl F", Dim::Three);
    let mut admiss = ResidualAccumulator::new("grad V . curl F", Dim::Three);
    for p in &samples {
        let parts = out.parts(p)?;
        let along = parts.grad_v.dot(&parts.curl).abs();
        if along > thresholds.characteristic * scale {
            return Err(Error::Precondition(format!(
                "V is not constant along the characteristics of curl F: \
                 |grad V . curl F| = {along:e} at ({}, {}, {})",
                p.x, p.y, p.z
            )));
        }
        admiss.push(p, along);
        let f = dual_values(&parts.f);
        sum.push(
            p,
            (f - dual_values(&parts.f_c) - dual_values(&parts.f_nc)).norm(),
        );
        curl_c.push(p, curl_from_jacobian(&dual_jacobian(&parts.f_c)).norm());
        gauge.push(p, parts.grad_v.dot(&dual_values(&parts.grad_u)).abs());
        agree.push(
            p,
            (curl_from_jacobian(&dual_jacobian(&parts.f_nc)) - parts.curl).norm(),
        );
    }
    out.diagnostics.sum = sum.finish()?;
    out.diagnostics.curl_conservative = curl_c.finish()?;
    out.diagnostics.gauge = gauge.finish()?;
    out.diagnostics.curl_agreement = agree.finish()?;
    out.diagnostics.admissibility = admiss.finish()?;
    Ok(out)
}

fn empty_report() -> ResidualReport {
    ResidualReport {
        residual: String::new(),
        max: 0.0,
        rms: 0.0,
        min: 0.0,
        worst_point: Vec::new(),
        samples: 0,
    }
}

/// `‖curl(F_nc − F̃_nc)‖` for two decompositions of the same field; near zero
/// when they differ by a conservative force.
pub fn equivalence_residual(
    a: &Decomposition3d,
    b: &Decomposition3d,
    region: &Region,
) -> Result<ResidualReport> {
    let mut acc = ResidualAccumulator::new("curl (F_nc - F~_nc)", Dim::Three);
    for p in region.samples() {
        let d = a.curl_non_conservative(&p)? - b.curl_non_conservative(&p)?;
        acc.push(&p, d.norm());
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Extra dense-output points per accepted step at which `V` is checked.
    pub checkpoints: usize,
}

impl Default for CharacteristicOptions {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            rtol: 1e-12,
            checkpoints: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicReport {
    /// `max |V(x(s)) − V(x0)|`
    pub deviation: f64,
    pub end_point: Vec<f64>,
    pub steps: usize,
}

/// Follows `dx/ds = curl F(x)` from `x0` for `s ∈ [0, s_max]` and reports how
/// far `V` drifts from its starting value.
pub fn characteristic_deviation(
    field: &VectorFieldDef,
    v: &ScalarFieldDef,
    x0: &Vec3,
    s_max: f64,
    opts: &CharacteristicOptions,
) -> Result<CharacteristicReport> {
    if field.dim() != Dim::Three || v.dim() != Dim::Three {
        return Err(Error::DimensionMismatch(
            "characteristics of curl F are traced in 3D".into(),
        ));
    }
    if !(s_max > 0.0) {
        return Err(Error::Invalid("s_max must be positive".into()));
    }
    let v0 = v.value(x0)?;
    field.value(x0)?;
    let mut rhs = |_s: f64, y: &SVector<f64, 3>| -> Result<SVector<f64, 3>, StageError<Error>> {
        let j = field.jacobian_unchecked(y).map_err(StageError::Retry)?;
        Ok(curl_from_jacobian(&j))
    };
    let mut deviation: f64 = 0.0;
    let mut failure: Option<Error> = None;
    let mut end = *x0;
    let domain = field.domain().clone();
    let stats = ode::solve(
        Method::dopri(opts.atol, opts.rtol, s_max / 10.0),
        &mut rhs,
        0.0,
        *x0,
        s_max,
        &mut |step| {
            if !domain.contains(&step.y1) {
                let s = ode::bisect_exit(step, 1e-10, |y| domain.contains(y));
                failure = Some(Error::DomainExit { point: step.at(s) });
                return Control::Stop;
            }
            for k in 1..=opts.checkpoints + 1 {
                let s = step.t0 + step.h() * k as f64 / (opts.checkpoints + 1) as f64;
                let x = if k == opts.checkpoints + 1 {
                    step.y1
                } else {
                    step.at(s)
                };
                match v.eval_unchecked::<f64>(&x) {
                    Ok(val) => deviation = deviation.max((val - v0).abs()),
                    Err(e) => {
                        failure = Some(e);
                        return Control::Stop;
                    }
                }
            }
            end = step.y1;
            Control::Continue
        },
    )
    .map_err(ode_error)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(CharacteristicReport {
        deviation,
        end_point: end.iter().copied().collect(),
        steps: stats.steps,
    })
}

pub(crate) fn ode_error(e: OdeError<Error>) -> Error {
    match e {
        OdeError::Rhs(e) => e,
        OdeError::StepUnderflow { t, cause } => Error::StepUnderflow {
            t,
            reason: cause.map_or_else(|| "error control".to_string(), |c| c.to_string()),
        },
        OdeError::TooManySteps { t } => {
            Error::NonConvergence(format!("step limit reached at t = {t}"))
        }
    }
}

/// The worked potential families that ship with the crate.
pub mod builtins {
    use super::*;

    fn names(constants: &exprlang::ConstantTable) -> BTreeSet<String> {
        constants.keys().cloned().collect()
    }

    /// `V = x³y² Φ((x+y)/(xy))` for a user-chosen `Φ(s)`, the general
    /// solution of the V-equation for `F = −(F0/a³)(xy², x³)`.
    pub fn planar_v_family(
        phi: &str,
        constants: Arc<exprlang::ConstantTable>,
        domain: crate::fieldkit::BoxDomain,
    ) -> Result<ScalarFieldDef> {
        let phi = exprlang::parse_with_variables(phi, &["s"], &names(&constants))?;
        let arg = exprlang::parse("(x+y)/(x*y)", Dim::Two, &BTreeSet::new())?;
        let phi_of = phi.compose(&[arg.root], arg.variables.clone());
        let prefix = exprlang::parse("x^3*y^2", Dim::Two, &BTreeSet::new())?;
        let tree = SyntaxTree::new(
            Node::binary(exprlang::BinaryOp::Mul, prefix.root, phi_of.root),
            prefix.variables,
        );
        ScalarFieldDef::new(Dim::Two, tree, constants, domain)
    }

    /// `U = −F0 a² (1/x + 1/y)` and `V = a⁻⁵ x³y²` (constant `Φ = a⁻⁵`). The
    /// constant table must define `F0` and `a`.
    pub fn planar_potentials(
        constants: Arc<exprlang::ConstantTable>,
        domain: crate::fieldkit::BoxDomain,
    ) -> Result<PotentialSet> {
        let u = ScalarFieldDef::parse(
            "-F0*a^2*(1/x + 1/y)",
            Dim::Two,
            constants.clone(),
            domain.clone(),
        )?;
        let v = ScalarFieldDef::parse("a^(-5)*x^3*y^2", Dim::Two, constants, domain)?;
        PotentialSet::new(u, v, None)
    }

    /// `V = f(xz, y)` for `F = −(yz, 2xz, xy)`, with `f` written over the
    /// variables `p` (= xz) and `q` (= y).
    pub fn triple_v_family(
        f: &str,
        constants: Arc<exprlang::ConstantTable>,
        domain: crate::fieldkit::BoxDomain,
    ) -> Result<ScalarFieldDef> {
        let f = exprlang::parse_with_variables(f, &["p", "q"], &names(&constants))?;
        let p = exprlang::parse("x*z", Dim::Three, &BTreeSet::new())?;
        let q = exprlang::parse("y", Dim::Three, &BTreeSet::new())?;
        let tree = f.compose(&[p.root, q.root], p.variables);
        ScalarFieldDef::new(Dim::Three, tree, constants, domain)
    }
}
