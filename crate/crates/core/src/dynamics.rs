//! Newtonian motion `m ẍ = F(x)` with kinetic energy and cumulative work
//! recorded along the computed path.

use nalgebra::SVector;
use serde::Serialize;

use crate::darboux::ode_error;
use crate::error::{Error, Result};
use crate::fieldkit::{BoxDomain, VectorFieldDef};
use crate::ode::{self, Control, Method, StageError, Stats, Step};
use crate::types::{Dim, Vec3};

/// A position-dependent force.
pub trait Force {
    fn dim(&self) -> Dim;
    fn domain(&self) -> &BoxDomain;
    /// Force at `x`; not required to check the domain.
    fn force(&self, x: &Vec3) -> Result<Vec3>;
}

impl Force for VectorFieldDef {
    fn dim(&self) -> Dim {
        VectorFieldDef::dim(self)
    }

    fn domain(&self) -> &BoxDomain {
        VectorFieldDef::domain(self)
    }

    fn force(&self, x: &Vec3) -> Result<Vec3> {
        self.value_unchecked(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Integrator {
    Rk4Fixed {
        step: f64,
    },
    Dopri45 {
        atol: f64,
        rtol: f64,
        h_init: Option<f64>,
        /// Defaults to `t_end / 10`.
        h_max: Option<f64>,
    },
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::Dopri45 {
            atol: 1e-9,
            rtol: 1e-9,
            h_init: None,
            h_max: None,
        }
    }
}

/// What happens when the particle leaves the force field's domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainGuard {
    /// Stop at the boundary and return the partial trajectory with an exit
    /// flag.
    #[default]
    Truncate,
    /// Treat the exit as an error.
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub mass: f64,
    pub integrator: Integrator,
    pub t_end: f64,
    pub guard: DomainGuard,
    /// Overrides the default floor on `|V|` for auxiliary runs.
    pub v_floor: Option<f64>,
    /// Simpson panels per accepted step for the work integral.
    pub work_panels: usize,
}

impl SimConfig {
    pub fn new(mass: f64, t_end: f64) -> Self {
        Self {
            mass,
            integrator: Integrator::default(),
            t_end,
            guard: DomainGuard::default(),
            v_floor: None,
            work_panels: 4,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.mass) {
            return Err(Error::Invalid(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !positive(self.t_end) {
            return Err(Error::Invalid(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.work_panels == 0 {
            return Err(Error::Invalid("work_panels must be at least 1".into()));
        }
        match self.integrator {
            Integrator::Rk4Fixed { step } if !positive(step) => Err(Error::Invalid(format!(
                "rk4 step must be positive, got {step}"
            ))),
            Integrator::Dopri45 {
                atol,
                rtol,
                h_init,
                h_max,
            } if !positive(atol)
                || !positive(rtol)
                || h_init.is_some_and(|h| !positive(h))
                || h_max.is_some_and(|h| !positive(h)) =>
            {
                Err(Error::Invalid(
                    "integrator tolerances and step bounds must be positive".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    fn method(&self) -> Method {
        match self.integrator {
            Integrator::Rk4Fixed { step } => Method::Rk4 { step },
            Integrator::Dopri45 {
                atol,
                rtol,
                h_init,
                h_max,
            } => Method::Dopri45 {
                atol,
                rtol,
                h_init,
                h_max: h_max.unwrap_or(self.t_end / 10.0),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
    /// `F(x)/m`
    pub a: Vec3,
    pub kinetic: f64,
    pub work: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dim: Dim,
    pub mass: f64,
    pub states: Vec<ParticleState>,
    pub stats: Stats,
    /// Boundary point where the particle left the domain, if it did.
    pub exit: Option<Vec3>,
}

type State = SVector<f64, 6>;

fn split(y: &State) -> (Vec3, Vec3) {
    (Vec3::new(y[0], y[1], y[2]), Vec3::new(y[3], y[4], y[5]))
}

fn kinetic(mass: f64, v: &Vec3) -> f64 {
    0.5 * mass * v.dot(v)
}

fn stage_error(e: Error) -> StageError<Error> {
    match e {
        Error::VFloor { .. } => StageError::Fatal(e),
        _ => StageError::Retry(e),
    }
}

fn embed(dim: Dim, p: &Vec3) -> Vec3 {
    match dim {
        Dim::Two => Vec3::new(p.x, p.y, 0.0),
        Dim::Three => *p,
    }
}

/// Solves `m ẍ = F(x)` from `(x0, v0)` at `t = 0` to `cfg.t_end`.
pub fn integrate<F: Force + ?Sized>(
    field: &F,
    x0: &Vec3,
    v0: &Vec3,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let dim = field.dim();
    let (x0, v0) = (embed(dim, x0), embed(dim, v0));
    let domain = field.domain();
    if !domain.contains(&x0) {
        return Err(Error::OutOfDomain(x0));
    }
    let m = cfg.mass;
    let a0 = field.force(&x0)? / m;
    let accel = |x: &Vec3| -> Result<Vec3> { Ok(embed(dim, &field.force(x)?) / m) };
    let mut rhs = |_t: f64, y: &State| -> std::result::Result<State, StageError<Error>> {
        let (x, v) = split(y);
        let a = accel(&x).map_err(stage_error)?;
        Ok(State::from_column_slice(&[v.x, v.y, v.z, a.x, a.y, a.z]))
    };
    let mut states = vec![ParticleState {
        t: 0.0,
        x: x0,
        v: v0,
        a: a0,
        kinetic: kinetic(m, &v0),
        work: 0.0,
    }];
    let mut failure: Option<Error> = None;
    let mut exit = None;
    let panels = cfg.work_panels;
    let mut y0 = State::zeros();
    y0.fixed_rows_mut::<3>(0).copy_from(&x0);
    y0.fixed_rows_mut::<3>(3).copy_from(&v0);
    let stats = ode::solve(
        cfg.method(),
        &mut rhs,
        0.0,
        y0,
        cfg.t_end,
        &mut |step: &Step<6>| {
            let (x1, _) = split(&step.y1);
            let mut t1 = step.t1;
            let mut stop = false;
            if !domain.contains(&x1) {
                t1 = ode::bisect_exit(step, 1e-10, |y| domain.contains(&split(y).0));
                stop = true;
            }
            let prev = *states
                .last()
                .expect("trajectory starts with the initial state");
            let power = |t: f64| -> Result<f64> {
                let (x, v) = split(&step.at(t));
                Ok(embed(dim, &field.force(&x)?).dot(&v))
            };
            let work = match simpson(&power, prev.t, t1, panels, prev.a * m, prev.v) {
                Ok(w) => w,
                Err(e) => {
                    failure = Some(e);
                    return Control::Stop;
                }
            };
            let y = if stop { step.at(t1) } else { step.y1 };
            let (x, v) = split(&y);
            let a = match accel(&x) {
                Ok(a) => a,
                Err(e) => {
                    failure = Some(e);
                    return Control::Stop;
                }
            };
            states.push(ParticleState {
                t: t1,
                x,
                v,
                a,
                kinetic: kinetic(m, &v),
                work: prev.work + work,
            });
            if stop {
                exit = Some(x);
                Control::Stop
            } else {
                Control::Continue
            }
        },
    )
    .map_err(ode_error)?;
    if let Some(e) = failure {
        return Err(e);
    }
    if let (Some(point), DomainGuard::Fail) = (exit, cfg.guard) {
        return Err(Error::DomainExit { point });
    }
    Ok(Trajectory {
        dim,
        mass: m,
        states,
        stats,
        exit,
    })
}

/// Composite Simpson rule for `∫ F·v dt` over `[a, b]`; the value at `a` is
/// known from the previous step.
fn simpson(
    power: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    panels: usize,
    force_a: Vec3,
    v_a: Vec3,
) -> Result<f64> {
    let h = (b - a) / (2 * panels) as f64;
    if h == 0.0 {
        return Ok(0.0);
    }
    let mut sum = force_a.dot(&v_a) + power(b)?;
    for k in 1..2 * panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * power(a + k as f64 * h)?;
    }
    Ok(sum * h / 3.0)
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> &ParticleState {
        &self.states[0]
    }

    pub fn last(&self) -> &ParticleState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Position and velocity at `t` by quintic Hermite interpolation between
    /// the neighbouring samples.
    pub fn interpolate(&self, t: f64) -> (Vec3, Vec3) {
        let i = self
            .states
            .partition_point(|s| s.t <= t)
            .clamp(1, self.states.len().max(2) - 1);
        if self.states.len() == 1 {
            let s = &self.states[0];
            return (s.x, s.v);
        }
        let (s0, s1) = (&self.states[i - 1], &self.states[i]);
        self.interpolate_segment(s0, s1, t)
    }

    pub(crate) fn interpolate_segment(
        &self,
        s0: &ParticleState,
        s1: &ParticleState,
        t: f64,
    ) -> (Vec3, Vec3) {
        let h = s1.t - s0.t;
        if h == 0.0 {
            return (s0.x, s0.v);
        }
        ode::quintic_hermite(
            [&s0.x, &s0.v, &s0.a],
            [&s1.x, &s1.v, &s1.a],
            h,
            (t - s0.t) / h,
        )
    }
}

/// `max |K(t) − K(0) − W_cum(t)|` over the samples.
pub fn work_energy_residual(traj: &Trajectory) -> f64 {
    let k0 = traj.first().kinetic;
    traj.states
        .iter()
        .map(|s| (s.kinetic - k0 - s.work).abs())
        .fold(0.0, f64::max)
}

pub fn kinetic_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.states.iter().map(|s| (s.t, s.kinetic)).collect()
}
