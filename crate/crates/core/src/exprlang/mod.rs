//! Arithmetic expression language over the coordinates `x`, `y`, `z` and named
//! constants, evaluated with exact forward-mode derivatives.

mod ast;
mod eval;
mod number;
mod parser;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use ast::{BinaryOp, Func, Node, NodeKind, Span, SyntaxTree};
pub use number::{DualValue, Jet2, Scalar, MAX_DIM};

use crate::types::Dim;

/// Named constants, e.g. `F0`, `a`, `m`.
pub type ConstantTable = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {span}: {message}")]
    Syntax { message: String, span: Span },
    #[error("unknown identifier '{name}' at {span}")]
    UnknownIdentifier { name: String, span: Span },
    #[error("function '{function}' takes {expected} argument(s), found {found} at {span}")]
    Arity {
        function: String,
        expected: usize,
        found: usize,
        span: Span,
    },
    #[error("constant '{name}' at {span} has no binding")]
    UnboundConstant { name: String, span: Span },
    #[error("domain error at {span}: {message}")]
    Domain { message: String, span: Span },
    #[error("numerical failure at {span}: {message}")]
    NumericalFailure { message: String, span: Span },
}

impl ExprError {
    pub fn span(&self) -> Span {
        match self {
            ExprError::Syntax { span, .. }
            | ExprError::UnknownIdentifier { span, .. }
            | ExprError::Arity { span, .. }
            | ExprError::UnboundConstant { span, .. }
            | ExprError::Domain { span, .. }
            | ExprError::NumericalFailure { span, .. } => *span,
        }
    }

    /// True for failures found while evaluating, as opposed to parsing.
    pub fn is_evaluation(&self) -> bool {
        matches!(
            self,
            ExprError::Domain { .. } | ExprError::NumericalFailure { .. }
        )
    }
}

/// Coordinate values plus the constant table an expression is evaluated with.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub coords: &'a [f64],
    pub constants: &'a ConstantTable,
}

impl<'a> Bindings<'a> {
    pub fn new(coords: &'a [f64], constants: &'a ConstantTable) -> Self {
        Self { coords, constants }
    }
}

pub const COORDINATES: [&str; 3] = ["x", "y", "z"];

/// Parses an expression over the coordinates admissible in `dim`.
pub fn parse(
    source: &str,
    dim: Dim,
    constants: &BTreeSet<String>,
) -> Result<SyntaxTree, ExprError> {
    parser::parse_with_variables(source, &COORDINATES[..dim.n()], constants)
}

/// Parses an expression over an arbitrary list of variable names (e.g. `s`
/// for path parametrizations, `u` for gauge functions).
pub fn parse_with_variables(
    source: &str,
    variables: &[&str],
    constants: &BTreeSet<String>,
) -> Result<SyntaxTree, ExprError> {
    parser::parse_with_variables(source, variables, constants)
}

/// Checks that every constant the tree references is bound.
pub fn check_bound(tree: &SyntaxTree, constants: &ConstantTable) -> Result<(), ExprError> {
    fn walk(node: &Node, constants: &ConstantTable) -> Result<(), ExprError> {
        match &node.kind {
            NodeKind::Constant(name) if !constants.contains_key(name) => {
                Err(ExprError::UnboundConstant {
                    name: name.clone(),
                    span: node.span,
                })
            }
            NodeKind::Neg(a) => walk(a, constants),
            NodeKind::Binary { lhs, rhs, .. } => {
                walk(lhs, constants)?;
                walk(rhs, constants)
            }
            NodeKind::Call { args, .. } => args.iter().try_for_each(|a| walk(a, constants)),
            _ => Ok(()),
        }
    }
    walk(&tree.root, constants)
}

fn seeded<S: Scalar>(tree: &SyntaxTree, coords: &[f64]) -> [S; MAX_DIM] {
    assert!(
        coords.len() >= tree.variables.len(),
        "expression over {} variables bound with {} values",
        tree.variables.len(),
        coords.len()
    );
    let mut vars = [S::constant(0.0); MAX_DIM];
    for (i, v) in vars.iter_mut().enumerate().take(tree.variables.len()) {
        *v = S::variable(coords[i], i);
    }
    vars
}

/// Evaluates with any scalar type.
pub fn evaluate_generic<S: Scalar>(tree: &SyntaxTree, b: &Bindings) -> Result<S, ExprError> {
    let vars = seeded::<S>(tree, b.coords);
    eval::eval_node(&tree.root, &vars, b.constants)
}

pub fn evaluate(tree: &SyntaxTree, b: &Bindings) -> Result<f64, ExprError> {
    evaluate_generic::<f64>(tree, b)
}

/// Value and exact first partials with respect to each variable.
pub fn evaluate_with_gradient(tree: &SyntaxTree, b: &Bindings) -> Result<DualValue, ExprError> {
    evaluate_generic::<DualValue>(tree, b)
}

/// Value, gradient and Hessian.
pub fn evaluate_with_hessian(tree: &SyntaxTree, b: &Bindings) -> Result<Jet2, ExprError> {
    evaluate_generic::<Jet2>(tree, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn consts(list: &[(&str, f64)]) -> ConstantTable {
        list.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn eval_at(src: &str, coords: &[f64], table: &ConstantTable) -> f64 {
        let keys: BTreeSet<String> = table.keys().cloned().collect();
        let tree = parse(src, Dim::Three, &keys).unwrap();
        evaluate(&tree, &Bindings::new(coords, table)).unwrap()
    }

    #[test]
    fn single_variable() {
        let t = parse("x", Dim::Two, &BTreeSet::new()).unwrap();
        assert!(matches!(t.root.kind, NodeKind::Variable(0)));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let t = parse("-x^2", Dim::Two, &BTreeSet::new()).unwrap();
        assert_eq!(t.to_sexpr(), "(neg (^ x 2))");
        let v = evaluate(&t, &Bindings::new(&[2.0, 0.0], &ConstantTable::new())).unwrap();
        assert_eq!(v, -4.0);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval_at("2^3^2", &[0.0; 3], &ConstantTable::new()), 512.0);
    }

    #[test]
    fn direct_arithmetic() {
        let none = ConstantTable::new();
        assert_eq!(eval_at("-(x*y^2)", &[2.0, 3.0, 0.0], &none), -18.0);
        assert_eq!(eval_at("1/x + 1/y", &[2.0, 2.0, 0.0], &none), 1.0);
        let c = consts(&[("F0", 1.0), ("a", 1.0)]);
        assert_eq!(eval_at("-F0/a^3 * x^3", &[1.0, 5.0, 0.0], &c), -1.0);
    }

    #[test]
    fn power_rule_gradient() {
        let t = parse("x^3", Dim::Two, &BTreeSet::new()).unwrap();
        let d =
            evaluate_with_gradient(&t, &Bindings::new(&[2.0, 0.0], &ConstantTable::new())).unwrap();
        assert_eq!(d.value, 8.0);
        assert_eq!(d.partials[0], 12.0);
    }

    #[test]
    fn example_potential_gradient() {
        let c = consts(&[("F0", 1.0), ("a", 1.0)]);
        let t = parse("-F0*a^2*(1/x + 1/y)", Dim::Two, &names(&["F0", "a"])).unwrap();
        let d = evaluate_with_gradient(&t, &Bindings::new(&[1.0, 1.0], &c)).unwrap();
        assert_eq!(d.value, -2.0);
        assert_eq!(d.gradient(2), &[1.0, 1.0]);
    }

    #[test]
    fn z_is_rejected_in_two_dimensions() {
        let err = parse("x + z", Dim::Two, &BTreeSet::new()).unwrap_err();
        assert_eq!(
            err,
            ExprError::UnknownIdentifier {
                name: "z".into(),
                span: Span::new(4, 5)
            }
        );
    }

    #[test]
    fn implicit_multiplication_is_a_syntax_error() {
        let err = parse("2x", Dim::Two, &BTreeSet::new()).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { span, .. } if span == Span::new(1, 2)));
    }

    #[test]
    fn arity_is_checked() {
        let err = parse("pow(x)", Dim::Two, &BTreeSet::new()).unwrap_err();
        assert!(matches!(
            err,
            ExprError::Arity {
                expected: 2,
                found: 1,
                ..
            }
        ));
        assert!(parse("sin(x, y)", Dim::Two, &BTreeSet::new()).is_err());
        assert!(parse("sin", Dim::Two, &BTreeSet::new()).is_err());
    }

    #[test]
    fn malformed_input() {
        for src in ["", "x +", "(x", "x)", "1e", "x $ y", "1.2.3", "x,y"] {
            assert!(parse(src, Dim::Two, &BTreeSet::new()).is_err(), "{src}");
        }
        assert_eq!(eval_at("1e-3 * 2E2", &[0.0; 3], &ConstantTable::new()), 0.2);
    }

    #[test]
    fn log_of_non_positive_reports_span() {
        let t = parse("1 + log(x - 1)", Dim::Two, &BTreeSet::new()).unwrap();
        let err = evaluate(&t, &Bindings::new(&[1.0, 0.0], &ConstantTable::new())).unwrap_err();
        assert!(matches!(err, ExprError::Domain { span, .. } if span == Span::new(4, 14)));
    }

    #[test]
    fn division_by_zero_is_a_failure_not_infinity() {
        let t = parse("1/x", Dim::Two, &BTreeSet::new()).unwrap();
        let err = evaluate(&t, &Bindings::new(&[0.0, 0.0], &ConstantTable::new())).unwrap_err();
        assert!(matches!(err, ExprError::NumericalFailure { .. }));
    }

    #[test]
    fn unbound_constant_is_reported() {
        let t = parse("k*x", Dim::Two, &names(&["k"])).unwrap();
        let err = check_bound(&t, &ConstantTable::new()).unwrap_err();
        assert!(matches!(err, ExprError::UnboundConstant { .. }));
    }

    #[test]
    fn negative_base_integer_power() {
        assert_eq!(eval_at("(-2)^3", &[0.0; 3], &ConstantTable::new()), -8.0);
        let t = parse("x^0.5", Dim::Two, &BTreeSet::new()).unwrap();
        let err = evaluate(&t, &Bindings::new(&[-1.0, 0.0], &ConstantTable::new())).unwrap_err();
        assert!(matches!(err, ExprError::Domain { .. }));
    }

    #[test]
    fn symbolic_derivative_matches_ad() {
        let vars = ["u"];
        let f = parse_with_variables(
            "u + u^3 + sin(u)*exp(u) + log(u) + sqrt(u) + 2^u",
            &vars,
            &BTreeSet::new(),
        )
        .unwrap();
        let df = f.derivative(0);
        let none = ConstantTable::new();
        for &u in &[0.3, 1.0, 2.7] {
            let ad = evaluate_with_gradient(&f, &Bindings::new(&[u], &none)).unwrap();
            let sym = evaluate(&df, &Bindings::new(&[u], &none)).unwrap();
            assert!((ad.partials[0] - sym).abs() <= 1e-12 * sym.abs().max(1.0));
        }
    }

    #[test]
    fn compose_substitutes_variables() {
        let f = parse_with_variables("2*u + 1", &["u"], &BTreeSet::new()).unwrap();
        let g = parse("x*y", Dim::Two, &BTreeSet::new()).unwrap();
        let h = f.compose(std::slice::from_ref(&g.root), g.variables.clone());
        let v = evaluate(&h, &Bindings::new(&[2.0, 3.0], &ConstantTable::new())).unwrap();
        assert_eq!(v, 13.0);
    }
}
