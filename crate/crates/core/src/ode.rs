//! Explicit Runge–Kutta integrators shared by the dynamics, characteristic and
//! accessibility computations.
//!
//! [`Method::Dopri45`] is the Dormand–Prince 5(4) pair with the standard
//! fourth-order continuous extension; [`Method::Rk4`] is the classical
//! fixed-step scheme with cubic Hermite interpolation between steps. Each
//! accepted step is handed to an observer as a [`Step`] that can be evaluated
//! anywhere inside the step.

use nalgebra::SVector;

/// How the right-hand side failed at a stage point.
#[derive(Debug, Clone)]
pub enum StageError<E> {
    /// The stage point is unusable (e.g. outside the field's domain); the step
    /// is retried with a smaller size.
    Retry(E),
    /// Abort the integration.
    Fatal(E),
}

#[derive(Debug, Clone)]
pub enum OdeError<E> {
    /// Step size fell below the minimum; carries the last retryable failure.
    StepUnderflow {
        t: f64,
        cause: Option<E>,
    },
    TooManySteps {
        t: f64,
    },
    Rhs(E),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4 {
        step: f64,
    },
    Dopri45 {
        atol: f64,
        rtol: f64,
        h_init: Option<f64>,
        h_max: f64,
    },
}

impl Method {
    pub fn dopri(atol: f64, rtol: f64, h_max: f64) -> Self {
        Method::Dopri45 {
            atol,
            rtol,
            h_init: None,
            h_max,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct Stats {
    pub steps: usize,
    pub rejections: usize,
    pub evaluations: usize,
}

/// Returned by the observer after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
enum Interp<const N: usize> {
    Dopri([SVector<f64, N>; 5]),
    Hermite {
        f0: SVector<f64, N>,
        f1: SVector<f64, N>,
    },
}

/// An accepted step `[t0, t1]` with its interpolant.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: SVector<f64, N>,
    pub y1: SVector<f64, N>,
    interp: Interp<N>,
}

impl<const N: usize> Step<N> {
    pub fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// State at `t` in `[t0, t1]`.
    pub fn at(&self, t: f64) -> SVector<f64, N> {
        let h = self.h();
        let theta = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        match &self.interp {
            Interp::Dopri(r) => {
                let theta1 = 1.0 - theta;
                r[0] + (r[1] + (r[2] + (r[3] + r[4] * theta1) * theta) * theta1) * theta
            }
            Interp::Hermite { f0, f1 } => {
                let t2 = theta * theta;
                let t3 = t2 * theta;
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + theta;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                self.y0 * h00 + f0 * (h10 * h) + self.y1 * h01 + f1 * (h11 * h)
            }
        }
    }
}

impl<const N: usize> Step<N> {
    /// Time derivative of the interpolant at `t` in `[t0, t1]`.
    pub fn derivative_at(&self, t: f64) -> SVector<f64, N> {
        let h = self.h();
        if h == 0.0 {
            return SVector::zeros();
        }
        let theta = (t - self.t0) / h;
        match &self.interp {
            Interp::Dopri(r) => {
                let theta1 = 1.0 - theta;
                let a = r[3] + r[4] * theta1;
                let b = r[2] + a * theta;
                let c = r[1] + b * theta1;
                let da = -r[4];
                let db = a + da * theta;
                let dc = -b + db * theta1;
                (c + dc * theta) / h
            }
            Interp::Hermite { f0, f1 } => {
                let t2 = theta * theta;
                let d00 = 6.0 * t2 - 6.0 * theta;
                let d10 = 3.0 * t2 - 4.0 * theta + 1.0;
                let d11 = 3.0 * t2 - 2.0 * theta;
                (self.y1 - self.y0) * (-d00 / h) + f0 * d10 + f1 * d11
            }
        }
    }
}

const MAX_STEPS: usize = 2_000_000;

// Dormand–Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type Rhs<'a, const N: usize, E> =
    dyn FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, StageError<E>> + 'a;

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `observer` after
/// every accepted step. Stops early when the observer returns
/// [`Control::Stop`].
pub fn solve<const N: usize, E>(
    method: Method,
    rhs: &mut Rhs<'_, N, E>,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    observer: &mut dyn FnMut(&Step<N>) -> Control,
) -> Result<Stats, OdeError<E>> {
    match method {
        Method::Rk4 { step } => rk4(step, rhs, t0, y0, t_end, observer),
        Method::Dopri45 {
            atol,
            rtol,
            h_init,
            h_max,
        } => dopri(atol, rtol, h_init, h_max, rhs, t0, y0, t_end, observer),
    }
}

fn rk4<const N: usize, E>(
    step: f64,
    rhs: &mut Rhs<'_, N, E>,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    observer: &mut dyn FnMut(&Step<N>) -> Control,
) -> Result<Stats, OdeError<E>> {
    let mut stats = Stats::default();
    let mut eval = |t: f64, y: &SVector<f64, N>, stats: &mut Stats| {
        stats.evaluations += 1;
        rhs(t, y).map_err(|e| match e {
            StageError::Retry(e) | StageError::Fatal(e) => OdeError::Rhs(e),
        })
    };
    let (mut t, mut y) = (t0, y0);
    let mut f = eval(t, &y, &mut stats)?;
    let n_steps = ((t_end - t0) / step - 1e-9).ceil().max(1.0) as usize;
    for k in 0..n_steps {
        let t_next = if k + 1 == n_steps {
            t_end
        } else {
            t0 + (k + 1) as f64 * step
        };
        let h = t_next - t;
        let k1 = f;
        let k2 = eval(t + 0.5 * h, &(y + k1 * (0.5 * h)), &mut stats)?;
        let k3 = eval(t + 0.5 * h, &(y + k2 * (0.5 * h)), &mut stats)?;
        let k4 = eval(t + h, &(y + k3 * h), &mut stats)?;
        let y_next = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let f_next = eval(t_next, &y_next, &mut stats)?;
        stats.steps += 1;
        let s = Step {
            t0: t,
            t1: t_next,
            y0: y,
            y1: y_next,
            interp: Interp::Hermite { f0: f, f1: f_next },
        };
        t = t_next;
        y = y_next;
        f = f_next;
        if observer(&s) == Control::Stop {
            break;
        }
    }
    Ok(stats)
}

fn error_norm<const N: usize>(
    err: &SVector<f64, N>,
    y0: &SVector<f64, N>,
    y1: &SVector<f64, N>,
    atol: f64,
    rtol: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..N {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        worst = worst.max((err[i] / sc).abs());
    }
    worst
}

#[allow(clippy::too_many_arguments)]
fn dopri<const N: usize, E>(
    atol: f64,
    rtol: f64,
    h_init: Option<f64>,
    h_max: f64,
    rhs: &mut Rhs<'_, N, E>,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    observer: &mut dyn FnMut(&Step<N>) -> Control,
) -> Result<Stats, OdeError<E>> {
    let span = t_end - t0;
    let h_max = h_max.min(span);
    let h_min = 1e-14 * span.abs().max(t0.abs()).max(1.0);
    let mut stats = Stats::default();
    let mut last_retry: Option<E> = None;

    let (mut t, mut y) = (t0, y0);
    stats.evaluations += 1;
    let mut k1 = rhs(t, &y).map_err(|e| match e {
        StageError::Retry(e) | StageError::Fatal(e) => OdeError::Rhs(e),
    })?;

    let mut h = match h_init {
        Some(h) => h.min(h_max),
        None => {
            // Scale-based first guess: the step that moves y by ~1% of its
            // tolerance-weighted size.
            let mut d0: f64 = 0.0;
            let mut d1: f64 = 0.0;
            for i in 0..N {
                let sc = atol + rtol * y[i].abs();
                d0 = d0.max((y[i] / sc).abs());
                d1 = d1.max((k1[i] / sc).abs());
            }
            let h0 = if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            };
            h0.min(h_max).max(h_min)
        }
    };

    while t < t_end {
        if stats.steps + stats.rejections > MAX_STEPS {
            return Err(OdeError::TooManySteps { t });
        }
        let last = t + h >= t_end || (t_end - t - h) < h_min;
        if last {
            h = t_end - t;
        }
        let stages = (|| -> Result<_, StageError<E>> {
            let k2 = rhs(t + C2 * h, &(y + k1 * (A21 * h)))?;
            let k3 = rhs(t + C3 * h, &(y + (k1 * A31 + k2 * A32) * h))?;
            let k4 = rhs(t + C4 * h, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h))?;
            let k5 = rhs(
                t + C5 * h,
                &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h),
            )?;
            let k6 = rhs(
                t + h,
                &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h),
            )?;
            let y1 = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
            let k7 = rhs(t + h, &y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        stats.evaluations += 6;
        let (_k2, k3, k4, k5, k6, k7, y1) = match stages {
            Ok(s) => s,
            Err(StageError::Fatal(e)) => return Err(OdeError::Rhs(e)),
            Err(StageError::Retry(e)) => {
                last_retry = Some(e);
                stats.rejections += 1;
                h *= 0.25;
                if h < h_min {
                    return Err(OdeError::StepUnderflow {
                        t,
                        cause: last_retry,
                    });
                }
                continue;
            }
        };
        let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        let norm = error_norm(&err, &y, &y1, atol, rtol);
        if norm <= 1.0 {
            let t1 = if last { t_end } else { t + h };
            let ydiff = y1 - y;
            let bspl = k1 * h - ydiff;
            let interp = Interp::Dopri([
                y,
                ydiff,
                bspl,
                ydiff - k7 * h - bspl,
                (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h,
            ]);
            let s = Step {
                t0: t,
                t1,
                y0: y,
                y1,
                interp,
            };
            stats.steps += 1;
            t = t1;
            y = y1;
            k1 = k7;
            if observer(&s) == Control::Stop {
                break;
            }
            let fac = if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * fac).min(h_max);
        } else {
            stats.rejections += 1;
            h *= (0.9 * norm.powf(-0.2)).clamp(0.1, 1.0);
            if h < h_min {
                return Err(OdeError::StepUnderflow {
                    t,
                    cause: last_retry,
                });
            }
        }
    }
    Ok(stats)
}

/// Bisects `[lo, hi]` (times within `step`) for the last time at which `inside`
/// holds, assuming it holds at `lo`. Stops when the bracket is narrower than
/// `tol`.
pub fn bisect_exit<const N: usize>(
    step: &Step<N>,
    tol: f64,
    inside: impl Fn(&SVector<f64, N>) -> bool,
) -> f64 {
    let (mut lo, mut hi) = (step.t0, step.t1);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if inside(&step.at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Quintic Hermite interpolation from value, first and second derivative at
/// both ends of a step of length `h`. Returns value and first derivative at
/// `theta ∈ [0, 1]`.
pub fn quintic_hermite<const N: usize>(
    start: [&SVector<f64, N>; 3],
    end: [&SVector<f64, N>; 3],
    h: f64,
    theta: f64,
) -> (SVector<f64, N>, SVector<f64, N>) {
    let t = theta;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let d3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = -d0;
    let value = start[0] * h0
        + start[1] * (h1 * h)
        + start[2] * (h2 * h * h)
        + end[2] * (h3 * h * h)
        + end[1] * (h4 * h)
        + end[0] * h5;
    let slope = (start[0] * d0 + end[0] * d5) / h
        + start[1] * d1
        + start[2] * (d2 * h)
        + end[2] * (d3 * h)
        + end[1] * d4;
    (value, slope)
}
