//! The conservative auxiliary motion of a curl force `F = −V∇U − ∇W`.
//!
//! Dividing by `V` gives the rescaled force `F̄ = (F + ∇W)/V = −∇U`, whose
//! motion conserves `H = p·p/(2m) + U(x)`. Along the original trajectory the
//! same rescaling defines the nonlocal momentum `p̄(t) = p₀ − ∫ (∇U + ∇W/V)`
//! and position `x̄(t)`; the resulting `H(t)` is reported, not asserted.

use serde::Serialize;

use crate::darboux::{verify_representation, PotentialSet};
use crate::dynamics::{integrate, Force, ParticleState, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::fieldkit::{BoxDomain, DiffMode, Region, ScalarFieldDef, VectorFieldDef};
use crate::types::{Dim, Vec3};

/// Relative default for the floor on `|V|`.
pub const V_FLOOR_FACTOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxiliaryOptions {
    /// Bound on `max ‖F + V∇U + ∇W‖` over the working region.
    pub representation_tol: f64,
    /// Defaults to `1e-9 · max |V|` on the region.
    pub v_floor: Option<f64>,
}

impl Default for AuxiliaryOptions {
    fn default() -> Self {
        Self {
            representation_tol: 1e-8,
            v_floor: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuxiliaryProblem {
    pub force: VectorFieldDef,
    pub potentials: PotentialSet,
    pub mass: f64,
    pub v_floor: f64,
}

impl AuxiliaryProblem {
    /// Checks the representation and the floor on `|V|` over `region`.
    pub fn new(
        force: VectorFieldDef,
        potentials: PotentialSet,
        mass: f64,
        region: &Region,
        opts: &AuxiliaryOptions,
    ) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Invalid(format!("mass must be positive, got {mass}")));
        }
        let report = verify_representation(&force, &potentials, region)?;
        if report.max > opts.representation_tol {
            return Err(Error::Precondition(format!(
                "potentials do not represent the force: residual {:e} exceeds {:e}",
                report.max, opts.representation_tol
            )));
        }
        let samples = region.samples();
        let mut v_max: f64 = 0.0;
        let mut v_min = f64::INFINITY;
        let mut at = Vec3::zeros();
        for p in &samples {
            let v = potentials.v.value(p)?.abs();
            v_max = v_max.max(v);
            if v < v_min {
                v_min = v;
                at = *p;
            }
        }
        let v_floor = opts.v_floor.unwrap_or(V_FLOOR_FACTOR * v_max);
        if v_min < v_floor || v_max == 0.0 {
            return Err(Error::VFloor {
                point: at,
                value: v_min,
                floor: v_floor,
            });
        }
        Ok(Self {
            force,
            potentials,
            mass,
            v_floor,
        })
    }

    pub fn dim(&self) -> Dim {
        self.force.dim()
    }

    fn checked_v(&self, x: &Vec3) -> Result<f64> {
        let v = self.potentials.v.eval_unchecked::<f64>(x)?;
        if v.abs() < self.v_floor {
            return Err(Error::VFloor {
                point: *x,
                value: v,
                floor: self.v_floor,
            });
        }
        Ok(v)
    }

    fn grad_w(&self, x: &Vec3) -> Result<Vec3> {
        match &self.potentials.w {
            Some(w) => Ok(gradient_unchecked(w, x)?),
            None => Ok(Vec3::zeros()),
        }
    }

    /// `F̄(x) = (F(x) + ∇W(x))/V(x)`
    pub fn rescaled_force(&self, x: &Vec3) -> Result<Vec3> {
        let v = self.checked_v(x)?;
        Ok((self.force.value_unchecked(x)? + self.grad_w(x)?) / v)
    }

    /// `∇U(x) + ∇W(x)/V(x)`, the rate of decrease of the nonlocal momentum.
    pub fn momentum_rate(&self, x: &Vec3) -> Result<Vec3> {
        let v = self.checked_v(x)?;
        Ok(gradient_unchecked(&self.potentials.u, x)? + self.grad_w(x)? / v)
    }

    pub fn sampler(&self) -> AuxiliaryForce<'_> {
        AuxiliaryForce { problem: self }
    }
}

fn gradient_unchecked(f: &ScalarFieldDef, x: &Vec3) -> Result<Vec3> {
    let d = f.eval_unchecked::<crate::exprlang::DualValue>(x)?;
    Ok(Vec3::from_column_slice(&d.partials))
}

/// The rescaled force as a [`Force`] for the dynamics integrator.
#[derive(Debug, Clone, Copy)]
pub struct AuxiliaryForce<'a> {
    problem: &'a AuxiliaryProblem,
}

impl Force for AuxiliaryForce<'_> {
    fn dim(&self) -> Dim {
        self.problem.dim()
    }

    fn domain(&self) -> &BoxDomain {
        self.problem.force.domain()
    }

    fn force(&self, x: &Vec3) -> Result<Vec3> {
        self.problem.rescaled_force(x)
    }
}

/// `H = p·p/(2m) + U(x)`
pub fn auxiliary_hamiltonian(x: &Vec3, p: &Vec3, u: &ScalarFieldDef, mass: f64) -> Result<f64> {
    Ok(p.dot(p) / (2.0 * mass) + u.value(x)?)
}

#[derive(Debug, Clone)]
pub struct AuxiliaryRun {
    pub trajectory: Trajectory,
    /// `H` at each trajectory sample.
    pub hamiltonian: Vec<f64>,
    pub drift: f64,
}

/// Integrates `m ẍ = F̄(x)` and reports the drift of `H`.
pub fn auxiliary_trajectory(
    prob: &AuxiliaryProblem,
    x0: &Vec3,
    v0: &Vec3,
    cfg: &SimConfig,
) -> Result<AuxiliaryRun> {
    let mut local = prob.clone();
    if let Some(floor) = cfg.v_floor {
        local.v_floor = floor;
    }
    let mut cfg = *cfg;
    cfg.mass = prob.mass;
    let trajectory = integrate(&local.sampler(), x0, v0, &cfg)?;
    let m = prob.mass;
    let u = &prob.potentials.u;
    let hamiltonian = trajectory
        .states
        .iter()
        .map(|s| Ok(0.5 * m * s.v.dot(&s.v) + u.eval_unchecked::<f64>(&s.x)?))
        .collect::<Result<Vec<f64>>>()?;
    let drift = max_drift(&hamiltonian);
    Ok(AuxiliaryRun {
        trajectory,
        hamiltonian,
        drift,
    })
}

fn max_drift(h: &[f64]) -> f64 {
    h.iter().map(|v| (v - h[0]).abs()).fold(0.0, f64::max)
}

/// How the time integrals of the nonlocal series are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Accumulation {
    #[default]
    /// Five-point Gauss–Legendre per trajectory interval on the quintic
    /// Hermite interpolant of the path.
    Gauss,
    /// Cumulative trapezoid on the trajectory grid, each interval split into
    /// `refine` pieces by interpolation.
    Trapezoid { refine: usize },
}

#[derive(Debug, Clone)]
pub struct AuxiliarySeries {
    pub dim: Dim,
    pub t: Vec<f64>,
    pub pbar: Vec<Vec3>,
    pub xbar: Vec<Vec3>,
    pub h: Vec<f64>,
    pub drift: f64,
    /// Set when `x̄` left the domain of `U`; the series stops there.
    pub truncated: bool,
}

const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Running integrals `G(t) = ∫ g` and `M(t) = ∫ ξ g(ξ) dξ` on the grid.
fn accumulate_gauss(prob: &AuxiliaryProblem, traj: &Trajectory) -> Result<Vec<(Vec3, Vec3)>> {
    let mut out = vec![(Vec3::zeros(), Vec3::zeros())];
    for w in traj.states.windows(2) {
        let (s0, s1): (&ParticleState, &ParticleState) = (&w[0], &w[1]);
        let (mid, half) = (0.5 * (s0.t + s1.t), 0.5 * (s1.t - s0.t));
        let (mut dg, mut dm) = (Vec3::zeros(), Vec3::zeros());
        for (tau, weight) in GL5 {
            let t = mid + tau * half;
            let (x, _) = traj.interpolate_segment(s0, s1, t);
            let g = prob.momentum_rate(&x)?;
            dg += g * weight * half;
            dm += g * (weight * half * t);
        }
        let (g, m) = *out.last().expect("nonempty");
        out.push((g + dg, m + dm));
    }
    Ok(out)
}

/// Cumulative trapezoid for `G` and for `X(t) = ∫ G`, returned as `(G, X)`.
fn accumulate_trapezoid(
    prob: &AuxiliaryProblem,
    traj: &Trajectory,
    refine: usize,
) -> Result<Vec<(Vec3, Vec3)>> {
    let refine = refine.max(1);
    let first = &traj.states[0];
    let mut g_prev = prob.momentum_rate(&first.x)?;
    let (mut big_g, mut big_x) = (Vec3::zeros(), Vec3::zeros());
    let mut out = vec![(big_g, big_x)];
    for w in traj.states.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);
        let h = (s1.t - s0.t) / refine as f64;
        for k in 1..=refine {
            let x = if k == refine {
                s1.x
            } else {
                traj.interpolate_segment(s0, s1, s0.t + k as f64 * h).0
            };
            let g = prob.momentum_rate(&x)?;
            let g_next = big_g + 0.5 * h * (g_prev + g);
            big_x += 0.5 * h * (big_g + g_next);
            big_g = g_next;
            g_prev = g;
        }
        out.push((big_g, big_x));
    }
    Ok(out)
}

/// Nonlocal momentum, position and Hamiltonian along a trajectory computed
/// under the original force.
pub fn nonlocal_hamiltonian_series(
    traj: &Trajectory,
    prob: &AuxiliaryProblem,
    accumulation: Accumulation,
) -> Result<AuxiliarySeries> {
    if traj.dim != prob.dim() {
        return Err(Error::DimensionMismatch(
            "trajectory and problem differ in dimension".into(),
        ));
    }
    let m = prob.mass;
    let first = traj.first();
    let (x0, v0) = (first.x, first.v);
    let p0 = m * v0;
    let u = &prob.potentials.u;
    let integrals = match accumulation {
        Accumulation::Gauss => accumulate_gauss(prob, traj)?,
        Accumulation::Trapezoid { refine } => accumulate_trapezoid(prob, traj, refine)?,
    };
    let mut series = AuxiliarySeries {
        dim: traj.dim,
        t: Vec::with_capacity(traj.len()),
        pbar: Vec::with_capacity(traj.len()),
        xbar: Vec::with_capacity(traj.len()),
        h: Vec::with_capacity(traj.len()),
        drift: 0.0,
        truncated: false,
    };
    for (k, (s, (g, second))) in traj.states.iter().zip(integrals).enumerate() {
        let t = s.t;
        let pbar = if k == 0 { p0 } else { p0 - g };
        let double = match accumulation {
            Accumulation::Gauss => t * g - second,
            Accumulation::Trapezoid { .. } => second,
        };
        let xbar = if k == 0 { x0 } else { x0 + v0 * t - double / m };
        if !u.domain().contains(&xbar) {
            series.truncated = true;
            break;
        }
        let h = auxiliary_hamiltonian(&xbar, &pbar, u, m)?;
        series.t.push(t);
        series.pbar.push(pbar);
        series.xbar.push(xbar);
        series.h.push(h);
    }
    series.drift = max_drift(&series.h);
    Ok(series)
}

/// `K(t) + U(x(t))` along a trajectory.
pub fn physical_energy(traj: &Trajectory, u: &ScalarFieldDef) -> Result<Vec<f64>> {
    traj.states
        .iter()
        .map(|s| Ok(s.kinetic + u.value(&s.x)?))
        .collect()
}

/// `‖F̄ + ∇U‖` at a point.
pub fn rescaling_residual(prob: &AuxiliaryProblem, x: &Vec3) -> Result<f64> {
    Ok((prob.rescaled_force(x)? + prob.potentials.u.gradient(x, DiffMode::Analytic)?).norm())
}
