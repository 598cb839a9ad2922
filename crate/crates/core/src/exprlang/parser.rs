//! Recursive-descent parser.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2` is
//! `-(x^2)` and `2^3^2` is `2^(3^2)`.

use std::collections::BTreeSet;

use super::ast::{BinaryOp, Func, Node, NodeKind, Span, SyntaxTree};
use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn syntax(message: impl Into<String>, span: Span) -> ExprError {
    ExprError::Syntax {
        message: message.into(),
        span,
    }
}

fn lex(source: &str) -> Result<Vec<(Tok, Span)>, ExprError> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, Span::new(i, i + 1)));
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                } else {
                    return Err(syntax("malformed exponent", Span::new(start, j)));
                }
            }
            let span = Span::new(start, i);
            let text = &source[start..i];
            let value: f64 = text
                .parse()
                .map_err(|_| syntax(format!("malformed number '{text}'"), span))?;
            if !value.is_finite() {
                return Err(syntax(format!("number '{text}' overflows"), span));
            }
            out.push((Tok::Num(value), span));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((
                Tok::Ident(source[start..i].to_string()),
                Span::new(start, i),
            ));
        } else {
            let ch = source[i..].chars().next().unwrap_or('?');
            return Err(syntax(
                format!("unexpected character '{ch}'"),
                Span::new(i, i + ch.len_utf8()),
            ));
        }
    }
    out.push((Tok::End, Span::new(source.len(), source.len())));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    variables: &'a [String],
    constants: &'a BTreeSet<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Span, ExprError> {
        if *self.peek() == want {
            Ok(self.bump().1)
        } else {
            Err(syntax(
                format!(
                    "expected {}, found {}",
                    want.describe(),
                    self.peek().describe()
                ),
                self.span(),
            ))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if *self.peek() == Tok::Minus {
            let (_, span) = self.bump();
            let inner = self.unary()?;
            let span = span.join(inner.span);
            return Ok(Node::new(NodeKind::Neg(Box::new(inner)), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let (tok, span) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Node::number(v, span)),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen)?;
                Ok(Node::new(inner.kind, span.join(close)))
            }
            Tok::Ident(name) => self.identifier(name, span),
            other => Err(syntax(
                format!("expected an operand, found {}", other.describe()),
                span,
            )),
        }
    }

    fn identifier(&mut self, name: String, span: Span) -> Result<Node, ExprError> {
        if let Some(func) = Func::lookup(&name) {
            if *self.peek() != Tok::LParen {
                return Err(syntax(format!("function '{name}' must be called"), span));
            }
            self.bump();
            let mut args = Vec::new();
            if *self.peek() != Tok::RParen {
                args.push(self.expr()?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
            }
            let close = self.expect(Tok::RParen)?;
            let span = span.join(close);
            if args.len() != func.arity() {
                return Err(ExprError::Arity {
                    function: name,
                    expected: func.arity(),
                    found: args.len(),
                    span,
                });
            }
            return Ok(Node::new(NodeKind::Call { func, args }, span));
        }
        if let Some(index) = self.variables.iter().position(|v| *v == name) {
            return Ok(Node::new(NodeKind::Variable(index), span));
        }
        if self.constants.contains(&name) {
            return Ok(Node::new(NodeKind::Constant(name), span));
        }
        Err(ExprError::UnknownIdentifier { name, span })
    }
}

/// Parses `source` over the given independent variables and declared constant
/// names.
pub fn parse_with_variables(
    source: &str,
    variables: &[&str],
    constants: &BTreeSet<String>,
) -> Result<SyntaxTree, ExprError> {
    let variables: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
    let mut parser = Parser {
        toks: lex(source)?,
        pos: 0,
        variables: &variables,
        constants,
    };
    let root = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(syntax(
            format!("unexpected {} after expression", parser.peek().describe()),
            parser.span(),
        ));
    }
    Ok(SyntaxTree::new(root, variables))
}
