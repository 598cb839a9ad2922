use std::collections::BTreeSet;
use std::fmt;

/// Byte range `[start, end)` in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

/// Builtin functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Pow,
}

impl Func {
    pub fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Number(f64),
    /// Index into the tree's variable list.
    Variable(usize),
    Constant(String),
    Neg(Box<Node>),
    Binary {
        op: BinaryOp,
        lhs: Box<Node>,
        rhs: Box<Node>,
    },
    Call {
        func: Func,
        args: Vec<Node>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

impl Node {
    pub fn new(kind: NodeKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn number(value: f64, span: Span) -> Self {
        Self::new(NodeKind::Number(value), span)
    }

    pub fn binary(op: BinaryOp, lhs: Node, rhs: Node) -> Self {
        let span = lhs.span.join(rhs.span);
        Self::new(
            NodeKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        )
    }

    /// Same shape and literal values, spans ignored.
    pub fn same_structure(&self, other: &Node) -> bool {
        match (&self.kind, &other.kind) {
            (NodeKind::Number(a), NodeKind::Number(b)) => a.to_bits() == b.to_bits(),
            (NodeKind::Variable(a), NodeKind::Variable(b)) => a == b,
            (NodeKind::Constant(a), NodeKind::Constant(b)) => a == b,
            (NodeKind::Neg(a), NodeKind::Neg(b)) => a.same_structure(b),
            (
                NodeKind::Binary { op, lhs, rhs },
                NodeKind::Binary {
                    op: op2,
                    lhs: lhs2,
                    rhs: rhs2,
                },
            ) => op == op2 && lhs.same_structure(lhs2) && rhs.same_structure(rhs2),
            (NodeKind::Call { func, args }, NodeKind::Call { func: f2, args: a2 }) => {
                func == f2
                    && args.len() == a2.len()
                    && args.iter().zip(a2).all(|(a, b)| a.same_structure(b))
            }
            _ => false,
        }
    }

    fn depends_on(&self, var: usize) -> bool {
        match &self.kind {
            NodeKind::Number(_) | NodeKind::Constant(_) => false,
            NodeKind::Variable(i) => *i == var,
            NodeKind::Neg(a) => a.depends_on(var),
            NodeKind::Binary { lhs, rhs, .. } => lhs.depends_on(var) || rhs.depends_on(var),
            NodeKind::Call { args, .. } => args.iter().any(|a| a.depends_on(var)),
        }
    }

    fn is_number(&self, value: f64) -> bool {
        matches!(self.kind, NodeKind::Number(v) if v == value)
    }

    fn collect_constants<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match &self.kind {
            NodeKind::Constant(name) => {
                out.insert(name);
            }
            NodeKind::Neg(a) => a.collect_constants(out),
            NodeKind::Binary { lhs, rhs, .. } => {
                lhs.collect_constants(out);
                rhs.collect_constants(out);
            }
            NodeKind::Call { args, .. } => args.iter().for_each(|a| a.collect_constants(out)),
            NodeKind::Number(_) | NodeKind::Variable(_) => {}
        }
    }
}

/// A parsed expression together with the names of its independent variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxTree {
    pub root: Node,
    pub variables: Vec<String>,
}

impl SyntaxTree {
    pub fn new(root: Node, variables: Vec<String>) -> Self {
        Self { root, variables }
    }

    pub fn same_structure(&self, other: &SyntaxTree) -> bool {
        self.variables == other.variables && self.root.same_structure(&other.root)
    }

    /// Names of all constants referenced by the tree, sorted.
    pub fn constants(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.root.collect_constants(&mut out);
        out
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.root.depends_on(var)
    }

    /// Fully parenthesized infix form that re-parses to the same structure.
    pub fn to_infix(&self) -> String {
        let mut out = String::new();
        self.write_infix(&self.root, &mut out);
        out
    }

    fn write_infix(&self, node: &Node, out: &mut String) {
        match &node.kind {
            NodeKind::Number(v) => out.push_str(&format!("{v}")),
            NodeKind::Variable(i) => out.push_str(&self.variables[*i]),
            NodeKind::Constant(name) => out.push_str(name),
            NodeKind::Neg(a) => {
                out.push_str("(-");
                self.write_infix(a, out);
                out.push(')');
            }
            NodeKind::Binary { op, lhs, rhs } => {
                out.push('(');
                self.write_infix(lhs, out);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                self.write_infix(rhs, out);
                out.push(')');
            }
            NodeKind::Call { func, args } => {
                out.push_str(func.name());
                out.push('(');
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    self.write_infix(a, out);
                }
                out.push(')');
            }
        }
    }

    /// Prefix form, e.g. `(* (neg F0) (^ x 2))`. Used for golden comparisons.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        self.write_sexpr(&self.root, &mut out);
        out
    }

    fn write_sexpr(&self, node: &Node, out: &mut String) {
        match &node.kind {
            NodeKind::Number(v) => out.push_str(&format!("{v}")),
            NodeKind::Variable(i) => out.push_str(&self.variables[*i]),
            NodeKind::Constant(name) => out.push_str(name),
            NodeKind::Neg(a) => {
                out.push_str("(neg ");
                self.write_sexpr(a, out);
                out.push(')');
            }
            NodeKind::Binary { op, lhs, rhs } => {
                out.push('(');
                out.push_str(op.symbol());
                out.push(' ');
                self.write_sexpr(lhs, out);
                out.push(' ');
                self.write_sexpr(rhs, out);
                out.push(')');
            }
            NodeKind::Call { func, args } => {
                out.push('(');
                out.push_str(func.name());
                for a in args {
                    out.push(' ');
                    self.write_sexpr(a, out);
                }
                out.push(')');
            }
        }
    }

    /// Replaces each variable `i` of `self` by `inner[i]`; the result lives over
    /// `variables`.
    pub fn compose(&self, inner: &[Node], variables: Vec<String>) -> SyntaxTree {
        fn subst(node: &Node, inner: &[Node]) -> Node {
            let kind = match &node.kind {
                NodeKind::Variable(i) => return inner[*i].clone(),
                NodeKind::Number(_) | NodeKind::Constant(_) => return node.clone(),
                NodeKind::Neg(a) => NodeKind::Neg(Box::new(subst(a, inner))),
                NodeKind::Binary { op, lhs, rhs } => NodeKind::Binary {
                    op: *op,
                    lhs: Box::new(subst(lhs, inner)),
                    rhs: Box::new(subst(rhs, inner)),
                },
                NodeKind::Call { func, args } => NodeKind::Call {
                    func: *func,
                    args: args.iter().map(|a| subst(a, inner)).collect(),
                },
            };
            Node::new(kind, node.span)
        }
        SyntaxTree::new(subst(&self.root, inner), variables)
    }

    /// Symbolic partial derivative with respect to variable `var`.
    ///
    /// Only trivial identities (`0 + a`, `1 * a`, `0 * a`) are folded.
    pub fn derivative(&self, var: usize) -> SyntaxTree {
        SyntaxTree::new(diff(&self.root, var), self.variables.clone())
    }
}

impl fmt::Display for SyntaxTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix())
    }
}

fn num(v: f64, span: Span) -> Node {
    Node::number(v, span)
}

fn add(a: Node, b: Node) -> Node {
    if a.is_number(0.0) {
        return b;
    }
    if b.is_number(0.0) {
        return a;
    }
    Node::binary(BinaryOp::Add, a, b)
}

fn sub(a: Node, b: Node) -> Node {
    if b.is_number(0.0) {
        return a;
    }
    if a.is_number(0.0) {
        return neg(b);
    }
    Node::binary(BinaryOp::Sub, a, b)
}

fn mul(a: Node, b: Node) -> Node {
    if a.is_number(0.0) || b.is_number(0.0) {
        return num(0.0, a.span.join(b.span));
    }
    if a.is_number(1.0) {
        return b;
    }
    if b.is_number(1.0) {
        return a;
    }
    Node::binary(BinaryOp::Mul, a, b)
}

fn div(a: Node, b: Node) -> Node {
    if a.is_number(0.0) {
        return a;
    }
    if b.is_number(1.0) {
        return a;
    }
    Node::binary(BinaryOp::Div, a, b)
}

fn pow(a: Node, b: Node) -> Node {
    Node::binary(BinaryOp::Pow, a, b)
}

fn neg(a: Node) -> Node {
    if a.is_number(0.0) {
        return a;
    }
    let span = a.span;
    Node::new(NodeKind::Neg(Box::new(a)), span)
}

fn call(func: Func, args: Vec<Node>, span: Span) -> Node {
    Node::new(NodeKind::Call { func, args }, span)
}

fn diff_pow(base: &Node, exponent: &Node, var: usize, span: Span) -> Node {
    let db = diff(base, var);
    if !exponent.depends_on(var) {
        // c * a^(c - 1) * a'
        let lowered = pow(base.clone(), sub(exponent.clone(), num(1.0, exponent.span)));
        return mul(mul(exponent.clone(), lowered), db);
    }
    // a^b * (b' ln a + b a' / a)
    let de = diff(exponent, var);
    let whole = pow(base.clone(), exponent.clone());
    let log_term = mul(de, call(Func::Log, vec![base.clone()], span));
    let base_term = div(mul(exponent.clone(), db), base.clone());
    mul(whole, add(log_term, base_term))
}

fn diff(node: &Node, var: usize) -> Node {
    let span = node.span;
    match &node.kind {
        NodeKind::Number(_) | NodeKind::Constant(_) => num(0.0, span),
        NodeKind::Variable(i) => num(if *i == var { 1.0 } else { 0.0 }, span),
        NodeKind::Neg(a) => neg(diff(a, var)),
        NodeKind::Binary { op, lhs, rhs } => match op {
            BinaryOp::Add => add(diff(lhs, var), diff(rhs, var)),
            BinaryOp::Sub => sub(diff(lhs, var), diff(rhs, var)),
            BinaryOp::Mul => add(
                mul(diff(lhs, var), (**rhs).clone()),
                mul((**lhs).clone(), diff(rhs, var)),
            ),
            BinaryOp::Div => div(
                sub(
                    mul(diff(lhs, var), (**rhs).clone()),
                    mul((**lhs).clone(), diff(rhs, var)),
                ),
                pow((**rhs).clone(), num(2.0, span)),
            ),
            BinaryOp::Pow => diff_pow(lhs, rhs, var, span),
        },
        NodeKind::Call { func, args } => {
            let a = &args[0];
            let da = diff(a, var);
            let outer = match func {
                Func::Sin => call(Func::Cos, vec![a.clone()], span),
                Func::Cos => neg(call(Func::Sin, vec![a.clone()], span)),
                Func::Tan => add(
                    num(1.0, span),
                    pow(call(Func::Tan, vec![a.clone()], span), num(2.0, span)),
                ),
                Func::Exp => node.clone(),
                Func::Log => return div(da, a.clone()),
                Func::Sqrt => {
                    return div(da, mul(num(2.0, span), node.clone()));
                }
                Func::Abs => div(a.clone(), node.clone()),
                Func::Pow => return diff_pow(&args[0], &args[1], var, span),
            };
            mul(outer, da)
        }
    }
}
