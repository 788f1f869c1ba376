//! One-variable arithmetic expressions.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'x' | '(' expr ')'
//! ```
//!
//! `^` only accepts a nonnegative integer literal. Expressions built only from
//! `+ - *`, integer powers and division by constants are recognised as
//! polynomials and evaluated with Horner's scheme.

use std::fmt;

use crate::error::ExprError;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(u32),
}

#[derive(Debug, Clone)]
enum Program {
    /// Coefficients in increasing degree.
    Poly(Vec<f64>),
    Stack(Vec<Op>),
}

/// A parsed expression in the variable `x`, with a compiled evaluator.
#[derive(Debug, Clone)]
pub struct RealExpr {
    ast: Node,
    program: Program,
}

impl PartialEq for RealExpr {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl RealExpr {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let ast = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(Self::from_node(ast))
    }

    pub fn from_node(ast: Node) -> Self {
        let program = match polynomial(&ast) {
            Some(mut coeffs) => {
                while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
                    coeffs.pop();
                }
                Program::Poly(coeffs)
            }
            None => {
                let mut ops = Vec::new();
                compile(&ast, &mut ops);
                Program::Stack(ops)
            }
        };
        Self { ast, program }
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    /// Polynomial coefficients (increasing degree) when the expression is a
    /// polynomial.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.program {
            Program::Poly(c) => Some(c),
            Program::Stack(_) => None,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, ExprError> {
        match &self.program {
            Program::Poly(c) => Ok(horner(c, x)),
            Program::Stack(ops) => run(ops, x, true),
        }
    }

    /// Evaluation without the division-by-zero check; a zero divisor yields
    /// an infinite or NaN value.
    #[inline]
    pub fn eval_fast(&self, x: f64) -> f64 {
        match &self.program {
            Program::Poly(c) => horner(c, x),
            Program::Stack(ops) => run(ops, x, false).unwrap_or(f64::NAN),
        }
    }

    pub fn derivative(&self) -> RealExpr {
        Self::from_node(simplify(differentiate(&self.ast)))
    }
}

impl fmt::Display for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ast)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Node::Const(c) => write!(f, "{c}"),
            Node::Var => f.write_str("x"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, k) => write!(f, "({a})^{k}"),
        }
    }
}

#[inline]
fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn compile(node: &Node, ops: &mut Vec<Op>) {
    match node {
        Node::Const(c) => ops.push(Op::Const(*c)),
        Node::Var => ops.push(Op::Var),
        Node::Neg(a) => {
            compile(a, ops);
            ops.push(Op::Neg);
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            compile(a, ops);
            compile(b, ops);
            ops.push(match node {
                Node::Add(..) => Op::Add,
                Node::Sub(..) => Op::Sub,
                Node::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
        Node::Pow(a, k) => {
            compile(a, ops);
            ops.push(Op::Pow(*k));
        }
    }
}

fn run(ops: &[Op], x: f64, checked: bool) -> Result<f64, ExprError> {
    let mut stack: Vec<f64> = Vec::with_capacity(16);
    for op in ops {
        match *op {
            Op::Const(c) => stack.push(c),
            Op::Var => stack.push(x),
            Op::Neg => {
                let a = stack.pop().expect("stack underflow");
                stack.push(-a);
            }
            Op::Pow(k) => {
                let a = stack.pop().expect("stack underflow");
                stack.push(a.powi(k as i32));
            }
            Op::Add | Op::Sub | Op::Mul | Op::Div => {
                let b = stack.pop().expect("stack underflow");
                let a = stack.pop().expect("stack underflow");
                stack.push(match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    _ => {
                        if checked && b == 0.0 {
                            return Err(ExprError::DivisionByZero { x });
                        }
                        a / b
                    }
                });
            }
        }
    }
    Ok(stack.pop().expect("empty program"))
}

fn poly_add(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + sign * b.get(i).copied().unwrap_or(0.0))
        .collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Expands `node` into coefficients if it is a polynomial (division only by
/// nonzero constants).
fn polynomial(node: &Node) -> Option<Vec<f64>> {
    Some(match node {
        Node::Const(c) => vec![*c],
        Node::Var => vec![0.0, 1.0],
        Node::Neg(a) => polynomial(a)?.into_iter().map(|c| -c).collect(),
        Node::Add(a, b) => poly_add(&polynomial(a)?, &polynomial(b)?, 1.0),
        Node::Sub(a, b) => poly_add(&polynomial(a)?, &polynomial(b)?, -1.0),
        Node::Mul(a, b) => poly_mul(&polynomial(a)?, &polynomial(b)?),
        Node::Div(a, b) => {
            let d = polynomial(b)?;
            if d.iter().skip(1).any(|&c| c != 0.0) || d[0] == 0.0 {
                return None;
            }
            polynomial(a)?.into_iter().map(|c| c / d[0]).collect()
        }
        Node::Pow(a, k) => {
            let base = polynomial(a)?;
            let mut out = vec![1.0];
            for _ in 0..*k {
                out = poly_mul(&out, &base);
            }
            out
        }
    })
}

fn differentiate(node: &Node) -> Node {
    use Node::*;
    match node {
        Const(_) => Const(0.0),
        Var => Const(1.0),
        Neg(a) => Neg(Box::new(differentiate(a))),
        Add(a, b) => Add(Box::new(differentiate(a)), Box::new(differentiate(b))),
        Sub(a, b) => Sub(Box::new(differentiate(a)), Box::new(differentiate(b))),
        Mul(a, b) => Add(
            Box::new(Mul(Box::new(differentiate(a)), b.clone())),
            Box::new(Mul(a.clone(), Box::new(differentiate(b)))),
        ),
        Div(a, b) => Div(
            Box::new(Sub(
                Box::new(Mul(Box::new(differentiate(a)), b.clone())),
                Box::new(Mul(a.clone(), Box::new(differentiate(b)))),
            )),
            Box::new(Pow(b.clone(), 2)),
        ),
        Pow(_, 0) => Const(0.0),
        Pow(a, k) => Mul(
            Box::new(Mul(
                Box::new(Const(f64::from(*k))),
                Box::new(Pow(a.clone(), k - 1)),
            )),
            Box::new(differentiate(a)),
        ),
    }
}

/// Constant folding and removal of trivial identities.
fn simplify(node: Node) -> Node {
    use Node::*;
    match node {
        Neg(a) => match simplify(*a) {
            Const(c) => Const(-c),
            Neg(inner) => *inner,
            other => Neg(Box::new(other)),
        },
        Add(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x + y),
            (Const(z), other) | (other, Const(z)) if z == 0.0 => other,
            (a, b) => Add(Box::new(a), Box::new(b)),
        },
        Sub(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x - y),
            (other, Const(z)) if z == 0.0 => other,
            (Const(z), other) if z == 0.0 => Neg(Box::new(other)),
            (a, b) => Sub(Box::new(a), Box::new(b)),
        },
        Mul(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x * y),
            (Const(z), _) | (_, Const(z)) if z == 0.0 => Const(0.0),
            (Const(o), other) | (other, Const(o)) if o == 1.0 => other,
            (a, b) => Mul(Box::new(a), Box::new(b)),
        },
        Div(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(z), _) if z == 0.0 => Const(0.0),
            (other, Const(o)) if o == 1.0 => other,
            (a, b) => Div(Box::new(a), Box::new(b)),
        },
        Pow(a, k) => match (simplify(*a), k) {
            (_, 0) => Const(1.0),
            (a, 1) => a,
            (Const(c), k) => Const(c.powi(k as i32)),
            (a, k) => Pow(Box::new(a), k),
        },
        leaf => leaf,
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == b'*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("exponent must be a nonnegative integer literal"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
            let k: u32 = digits
                .parse()
                .map_err(|_| self.error("exponent too large"))?;
            if matches!(self.peek(), Some(b'.' | b'^')) {
                return Err(self.error("exponent must be a nonnegative integer literal"));
            }
            return Ok(Node::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(b'x') => {
                self.pos += 1;
                Ok(Node::Var)
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if exp_start == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        text.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| ExprError::Syntax {
                pos: start,
                msg: format!("malformed number '{text}'"),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, x: f64) -> f64 {
        RealExpr::parse(text).unwrap().eval(x).unwrap()
    }

    #[test]
    fn van_der_pol_height() {
        assert!((ev("x^2/2 + x^3/3", 1.0) - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn identity_and_even_power() {
        assert_eq!(ev("x", 0.3), 0.3);
        assert_eq!(ev("x^4", -0.5), 0.0625);
    }

    #[test]
    fn precedence_and_unary_minus() {
        assert_eq!(ev("1 + 2*x^2", 3.0), 19.0);
        assert_eq!(ev("-x^2", 3.0), -9.0);
        assert_eq!(ev("(1 - x)*(1 + x)", 2.0), -3.0);
        assert_eq!(ev("2e-1*x", 10.0), 2.0);
    }

    #[test]
    fn syntax_errors_carry_position() {
        match RealExpr::parse("x + * 2") {
            Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(RealExpr::parse("x^1.5").is_err());
        assert!(RealExpr::parse("x^-1").is_err());
        assert!(RealExpr::parse("(x + 1").is_err());
        assert!(RealExpr::parse("y").is_err());
        assert!(RealExpr::parse("").is_err());
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = RealExpr::parse("1/x").unwrap();
        assert!(e.coefficients().is_none());
        assert_eq!(e.eval(0.0), Err(ExprError::DivisionByZero { x: 0.0 }));
        assert_eq!(e.eval(2.0), Ok(0.5));
    }

    #[test]
    fn polynomial_detection() {
        let e = RealExpr::parse("x^2/2 + x^3/3").unwrap();
        let c = e.coefficients().unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c[2], 0.5);
        assert!((c[3] - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn symbolic_derivative() {
        let d = RealExpr::parse("x^2/2 + x^3/3").unwrap().derivative();
        assert!((d.eval(0.3).unwrap() - 0.39).abs() < 1e-15);
        let q = RealExpr::parse("x/(1 + x^2)").unwrap().derivative();
        // (1 - x^2)/(1 + x^2)^2
        assert!((q.eval(2.0).unwrap() - (-3.0 / 25.0)).abs() < 1e-15);
    }

    #[test]
    fn print_parse_round_trip() {
        for text in [
            "x^2/2 + x^3/3",
            "-x^3 + 0.1*x",
            "x/(1 + 5*x^2)",
            "(x - 1)^3",
        ] {
            let e = RealExpr::parse(text).unwrap();
            let again = RealExpr::parse(&e.to_string()).unwrap();
            for i in 0..=20 {
                let x = -1.0 + 0.1 * f64::from(i);
                assert_eq!(e.eval_fast(x), again.eval_fast(x));
            }
        }
    }
}
