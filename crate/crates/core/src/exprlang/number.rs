//! Scalar types the evaluator is generic over.
//!
//! `f64` evaluates values only, [`DualValue`] carries exact first partials and
//! [`Jet2`] carries first and second partials. All three implement [`Scalar`],
//! so a single tree walk produces whichever order of derivative is needed.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Maximum number of coordinates any field in this crate depends on.
pub const MAX_DIM: usize = 3;

/// Arithmetic needed by the expression evaluator.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A value with all partials zero.
    fn constant(value: f64) -> Self;

    /// The independent variable `index`, seeded with unit partial.
    fn variable(value: f64, index: usize) -> Self;

    fn value(&self) -> f64;

    /// Applies a unary function `g` given `g(v)`, `g'(v)` and `g''(v)` at the
    /// current value `v`.
    fn chain(self, g0: f64, g1: f64, g2: f64) -> Self;

    /// True when every partial is exactly zero.
    fn is_constant(&self) -> bool;

    /// True when the value and all partials are finite.
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    fn constant(value: f64) -> Self {
        value
    }

    fn variable(value: f64, _index: usize) -> Self {
        value
    }

    fn value(&self) -> f64 {
        *self
    }

    fn chain(self, g0: f64, _g1: f64, _g2: f64) -> Self {
        g0
    }

    fn is_constant(&self) -> bool {
        true
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// First-order forward-mode number: a value and its partials with respect to
/// up to three coordinates. Unused trailing partials stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualValue {
    pub value: f64,
    pub partials: [f64; MAX_DIM],
}

impl DualValue {
    pub fn new(value: f64, partials: [f64; MAX_DIM]) -> Self {
        Self { value, partials }
    }

    /// The leading `dim` partials.
    pub fn gradient(&self, dim: usize) -> &[f64] {
        &self.partials[..dim]
    }
}

impl Add for DualValue {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut partials = self.partials;
        for (p, q) in partials.iter_mut().zip(rhs.partials) {
            *p += q;
        }
        Self::new(self.value + rhs.value, partials)
    }
}

impl Sub for DualValue {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut partials = self.partials;
        for (p, q) in partials.iter_mut().zip(rhs.partials) {
            *p -= q;
        }
        Self::new(self.value - rhs.value, partials)
    }
}

impl Mul for DualValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut partials = [0.0; MAX_DIM];
        for (i, p) in partials.iter_mut().enumerate() {
            *p = self.value * rhs.partials[i] + rhs.value * self.partials[i];
        }
        Self::new(self.value * rhs.value, partials)
    }
}

impl Div for DualValue {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.value;
        let value = self.value * inv;
        let mut partials = [0.0; MAX_DIM];
        for (i, p) in partials.iter_mut().enumerate() {
            *p = (self.partials[i] - value * rhs.partials[i]) * inv;
        }
        Self::new(value, partials)
    }
}

impl Neg for DualValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, self.partials.map(|p| -p))
    }
}

impl Scalar for DualValue {
    fn constant(value: f64) -> Self {
        Self::new(value, [0.0; MAX_DIM])
    }

    fn variable(value: f64, index: usize) -> Self {
        let mut partials = [0.0; MAX_DIM];
        partials[index] = 1.0;
        Self::new(value, partials)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn chain(self, g0: f64, g1: f64, _g2: f64) -> Self {
        Self::new(g0, self.partials.map(|p| g1 * p))
    }

    fn is_constant(&self) -> bool {
        self.partials.iter().all(|&p| p == 0.0)
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.partials.iter().all(|p| p.is_finite())
    }
}

/// Second-order forward-mode number: value, gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet2 {
    /// Drops the Hessian.
    pub fn first_order(&self) -> DualValue {
        DualValue::new(self.value, self.grad)
    }

    /// The partial `∂/∂x_k` as a first-order number whose own partials are the
    /// `k`-th Hessian row.
    pub fn partial(&self, k: usize) -> DualValue {
        DualValue::new(self.grad[k], self.hess[k])
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        out.value += rhs.value;
        for i in 0..MAX_DIM {
            out.grad[i] += rhs.grad[i];
            for j in 0..MAX_DIM {
                out.hess[i][j] += rhs.hess[i][j];
            }
        }
        out
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self, rhs);
        let mut out = Jet2 {
            value: a.value * b.value,
            ..Default::default()
        };
        for i in 0..MAX_DIM {
            out.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
            for j in 0..MAX_DIM {
                out.hess[i][j] = a.value * b.hess[i][j]
                    + b.value * a.hess[i][j]
                    + a.grad[i] * b.grad[j]
                    + b.grad[i] * a.grad[j];
            }
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let v = rhs.value;
        let recip = rhs.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
        self * recip
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Jet2 {
            value: -self.value,
            grad: self.grad.map(|g| -g),
            hess: self.hess.map(|row| row.map(|h| -h)),
        }
    }
}

impl Scalar for Jet2 {
    fn constant(value: f64) -> Self {
        Jet2 {
            value,
            ..Default::default()
        }
    }

    fn variable(value: f64, index: usize) -> Self {
        let mut out = Self::constant(value);
        out.grad[index] = 1.0;
        out
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn chain(self, g0: f64, g1: f64, g2: f64) -> Self {
        let mut out = Jet2 {
            value: g0,
            ..Default::default()
        };
        for i in 0..MAX_DIM {
            out.grad[i] = g1 * self.grad[i];
            for j in 0..MAX_DIM {
                out.hess[i][j] = g1 * self.hess[i][j] + g2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    fn is_constant(&self) -> bool {
        self.grad.iter().all(|&g| g == 0.0) && self.hess.iter().flatten().all(|&h| h == 0.0)
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().flatten().all(|h| h.is_finite())
    }
}
