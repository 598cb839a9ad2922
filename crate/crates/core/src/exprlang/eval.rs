use super::ast::{BinaryOp, Func, Node, NodeKind, Span};
use super::number::Scalar;
use super::{ConstantTable, ExprError};

fn domain(what: &str, span: Span) -> ExprError {
    ExprError::Domain {
        message: what.to_string(),
        span,
    }
}

fn finite<S: Scalar>(value: S, what: &str, span: Span) -> Result<S, ExprError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ExprError::NumericalFailure {
            message: format!("{what} produced a non-finite result"),
            span,
        })
    }
}

/// Evaluates `node` with the independent variables bound to `vars`.
pub fn eval_node<S: Scalar>(
    node: &Node,
    vars: &[S],
    constants: &ConstantTable,
) -> Result<S, ExprError> {
    let span = node.span;
    match &node.kind {
        NodeKind::Number(v) => Ok(S::constant(*v)),
        NodeKind::Variable(i) => Ok(vars[*i]),
        NodeKind::Constant(name) => {
            constants
                .get(name)
                .map(|&v| S::constant(v))
                .ok_or_else(|| ExprError::UnboundConstant {
                    name: name.clone(),
                    span,
                })
        }
        NodeKind::Neg(a) => Ok(-eval_node(a, vars, constants)?),
        NodeKind::Binary { op, lhs, rhs } => {
            let a = eval_node(lhs, vars, constants)?;
            let b = eval_node(rhs, vars, constants)?;
            match op {
                BinaryOp::Add => finite(a + b, "addition", span),
                BinaryOp::Sub => finite(a - b, "subtraction", span),
                BinaryOp::Mul => finite(a * b, "multiplication", span),
                BinaryOp::Div => {
                    if b.value() == 0.0 {
                        return Err(ExprError::NumericalFailure {
                            message: "division by zero".into(),
                            span,
                        });
                    }
                    finite(a / b, "division", span)
                }
                BinaryOp::Pow => power(a, b, span),
            }
        }
        NodeKind::Call { func, args } => {
            let a = eval_node(&args[0], vars, constants)?;
            if *func == Func::Pow {
                let b = eval_node(&args[1], vars, constants)?;
                return power(a, b, span);
            }
            let v = a.value();
            let out = match func {
                Func::Sin => a.chain(v.sin(), v.cos(), -v.sin()),
                Func::Cos => a.chain(v.cos(), -v.sin(), -v.cos()),
                Func::Tan => {
                    if v.cos() == 0.0 {
                        return Err(domain("tan at an odd multiple of pi/2", span));
                    }
                    let t = v.tan();
                    a.chain(t, 1.0 + t * t, 2.0 * t * (1.0 + t * t))
                }
                Func::Exp => {
                    let e = v.exp();
                    a.chain(e, e, e)
                }
                Func::Log => {
                    if v <= 0.0 {
                        return Err(domain("log of a non-positive argument", span));
                    }
                    a.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(domain("sqrt of a negative argument", span));
                    }
                    let r = v.sqrt();
                    a.chain(r, 0.5 / r, -0.25 / (r * v))
                }
                Func::Abs => a.chain(v.abs(), v.signum() * (v != 0.0) as u8 as f64, 0.0),
                Func::Pow => unreachable!(),
            };
            finite(out, func.name(), span)
        }
    }
}

fn power<S: Scalar>(base: S, exponent: S, span: Span) -> Result<S, ExprError> {
    let a = base.value();
    if exponent.is_constant() {
        let c = exponent.value();
        let out = if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
            let n = c as i32;
            if a == 0.0 && n < 0 {
                return Err(ExprError::NumericalFailure {
                    message: "zero raised to a negative power".into(),
                    span,
                });
            }
            let g1 = if n == 0 { 0.0 } else { c * a.powi(n - 1) };
            let g2 = if n == 0 || n == 1 {
                0.0
            } else {
                c * (c - 1.0) * a.powi(n - 2)
            };
            base.chain(a.powi(n), g1, g2)
        } else {
            if a < 0.0 {
                return Err(domain("negative base raised to a non-integer power", span));
            }
            base.chain(
                a.powf(c),
                c * a.powf(c - 1.0),
                c * (c - 1.0) * a.powf(c - 2.0),
            )
        };
        return finite(out, "power", span);
    }
    if a <= 0.0 {
        return Err(domain("non-positive base raised to a variable power", span));
    }
    // a^b = exp(b ln a)
    let ln_a = base.chain(a.ln(), 1.0 / a, -1.0 / (a * a));
    let prod = exponent * ln_a;
    let p = prod.value();
    let e = p.exp();
    finite(prod.chain(e, e, e), "power", span)
}
