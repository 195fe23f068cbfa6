//! Expression grammar for terminal values and generators.
//!
//! ```text
//! expr    := sum
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := number | variable | call | "(" expr ")" | "(" expr "," expr ")"
//! call    := name "(" expr ("," expr)* ")"
//! ```
//!
//! Values are scalars or pairs. Arithmetic and functions act componentwise
//! and broadcast scalars, so `"0"` evaluates to the pair `(0, 0)`.

use std::fmt;

use gamma_bsde_core::scheme::{NodeCtx, ZMatrix};
use gamma_bsde_core::{Point, Vec2};

/// Divisors smaller than this in magnitude are rejected.
pub const DIVISION_EPSILON: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct EvalError(pub String);

/// Which variables an expression may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// `t`, `w1..wd'`.
    Terminal,
    /// `t`, `y1`, `y2`, `z11..z2d'`, `w1..wd'`.
    Generator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Var {
    T,
    Y(usize),
    W(usize),
    Z(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Abs,
    Min,
    Max,
    Clip,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "exp" => (Func::Exp, 1),
            "tanh" => (Func::Tanh, 1),
            "abs" => (Func::Abs, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "clip" => (Func::Clip, 3),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
    Pair(Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    S(f64),
    P(f64, f64),
}

impl Value {
    fn zip(self, o: Value, f: impl Fn(f64, f64) -> Result<f64, EvalError>) -> Result<Value, EvalError> {
        Ok(match (self, o) {
            (Value::S(a), Value::S(b)) => Value::S(f(a, b)?),
            (Value::S(a), Value::P(b1, b2)) => Value::P(f(a, b1)?, f(a, b2)?),
            (Value::P(a1, a2), Value::S(b)) => Value::P(f(a1, b)?, f(a2, b)?),
            (Value::P(a1, a2), Value::P(b1, b2)) => Value::P(f(a1, b1)?, f(a2, b2)?),
        })
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Value {
        match self {
            Value::S(a) => Value::S(f(a)),
            Value::P(a, b) => Value::P(f(a), f(b)),
        }
    }
}

/// Inputs available during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Env {
    pub t: f64,
    pub y: [f64; 2],
    pub z: ZMatrix,
    pub w: [f64; 2],
}

impl Env {
    pub fn at(ctx: &NodeCtx) -> Self {
        Env { t: ctx.t, w: ctx.w, ..Env::default() }
    }
}

/// A parsed, type-checked expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(src: &str, role: Role, d_prime: usize) -> Result<Expr, ParseError> {
        let mut p = Parser { src, pos: 0, role, d_prime };
        p.skip_ws();
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error_here("unexpected trailing input"));
        }
        p.check_shape(&root)?;
        Ok(Expr { root, source: src.to_string() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn uses_z(&self) -> bool {
        uses(&self.root, &|v| matches!(v, Var::Z(..)))
    }

    pub fn uses_y(&self) -> bool {
        uses(&self.root, &|v| matches!(v, Var::Y(_)))
    }

    /// Evaluates to a 2-vector; scalar results are broadcast.
    pub fn eval(&self, env: &Env) -> Result<Vec2, EvalError> {
        let v = match eval(&self.root, env)? {
            Value::S(a) => Vec2::new(a, a),
            Value::P(a, b) => Vec2::new(a, b),
        };
        if !(v.x.is_finite() && v.y.is_finite()) {
            return Err(EvalError(format!("non-finite result ({}, {}) of `{}`", v.x, v.y, self.source)));
        }
        Ok(v)
    }

    pub fn eval_point(&self, env: &Env) -> Result<Point, EvalError> {
        self.eval(env)
    }
}

fn uses(n: &Node, pred: &dyn Fn(Var) -> bool) -> bool {
    match n {
        Node::Num(_) => false,
        Node::Var(v) => pred(*v),
        Node::Neg(a) => uses(a, pred),
        Node::Bin(_, a, b) | Node::Pair(a, b) => uses(a, pred) || uses(b, pred),
        Node::Call(_, args) => args.iter().any(|a| uses(a, pred)),
    }
}

fn eval(n: &Node, env: &Env) -> Result<Value, EvalError> {
    Ok(match n {
        Node::Num(x) => Value::S(*x),
        Node::Var(v) => Value::S(match *v {
            Var::T => env.t,
            Var::Y(i) => env.y[i],
            Var::W(i) => env.w[i],
            Var::Z(i, j) => env.z[i][j],
        }),
        Node::Neg(a) => eval(a, env)?.map(|x| -x),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, env)?, eval(b, env)?);
            match op {
                Op::Add => a.zip(b, |x, y| Ok(x + y))?,
                Op::Sub => a.zip(b, |x, y| Ok(x - y))?,
                Op::Mul => a.zip(b, |x, y| Ok(x * y))?,
                Op::Div => a.zip(b, |x, y| {
                    if y.abs() < DIVISION_EPSILON {
                        Err(EvalError(format!("division of {x} by {y}")))
                    } else {
                        Ok(x / y)
                    }
                })?,
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], env)?;
            match f {
                Func::Sin => a.map(f64::sin),
                Func::Cos => a.map(f64::cos),
                Func::Exp => a.map(f64::exp),
                Func::Tanh => a.map(f64::tanh),
                Func::Abs => a.map(f64::abs),
                Func::Min => a.zip(eval(&args[1], env)?, |x, y| Ok(x.min(y)))?,
                Func::Max => a.zip(eval(&args[1], env)?, |x, y| Ok(x.max(y)))?,
                Func::Clip => {
                    let (lo, hi) = (eval(&args[1], env)?, eval(&args[2], env)?);
                    let low = a.zip(lo, |x, l| Ok(x.max(l)))?;
                    low.zip(hi, |x, h| Ok(x.min(h)))?
                }
            }
        }
        Node::Pair(a, b) => match (eval(a, env)?, eval(b, env)?) {
            (Value::S(x), Value::S(y)) => Value::P(x, y),
            _ => return Err(EvalError("nested tuple".into())),
        },
    })
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    role: Role,
    d_prime: usize,
}

impl Parser<'_> {
    fn position(&self, at: usize) -> (usize, usize) {
        let before = &self.src[..at];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
        (line, column)
    }

    fn error_at(&self, at: usize, msg: impl Into<String>) -> ParseError {
        let (line, column) = self.position(at);
        ParseError { line, column, message: msg.into() }
    }

    fn error_here(&self, msg: &str) -> ParseError {
        match self.peek() {
            Some(c) => self.error_at(self.pos, format!("{msg} near `{c}`")),
            None => self.error_at(self.pos, format!("{msg} at end of input")),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error_here(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        match self.peek() {
            Some('(') => {
                self.eat('(');
                let a = self.expr()?;
                if self.eat(',') {
                    let b = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Pair(Box::new(a), Box::new(b)));
                }
                self.expect(')')?;
                Ok(a)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident();
                self.skip_ws();
                if self.peek() == Some('(') {
                    let (f, arity) = Func::lookup(&name).ok_or_else(|| self.error_at(start, format!("unknown function `{name}`")))?;
                    self.eat('(');
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != arity {
                        return Err(self.error_at(start, format!("`{name}` takes {arity} argument(s), got {}", args.len())));
                    }
                    return Ok(Node::Call(f, args));
                }
                self.variable(&name).map(Node::Var).ok_or_else(|| self.error_at(start, format!("unknown variable `{name}`")))
            }
            _ => Err(self.error_here("expected a number, variable, call or `(`")),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !(c.is_ascii_alphanumeric() || c == '_') {
                break;
            }
            self.pos += 1;
        }
        self.src[start..self.pos].to_string()
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        let mut p = self.pos;
        digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            digits(&mut p);
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            let exp_start = q;
            digits(&mut q);
            if q > exp_start {
                p = q;
            }
        }
        let text = &self.src[start..p];
        let v: f64 = text.parse().map_err(|_| self.error_at(start, format!("malformed number `{text}`")))?;
        self.pos = p;
        self.skip_ws();
        Ok(Node::Num(v))
    }

    fn variable(&self, name: &str) -> Option<Var> {
        let gen = self.role == Role::Generator;
        let index = |s: &str| s.parse::<usize>().ok().filter(|i| (1..=self.d_prime).contains(i)).map(|i| i - 1);
        match name {
            "t" => Some(Var::T),
            "y1" if gen => Some(Var::Y(0)),
            "y2" if gen => Some(Var::Y(1)),
            _ if name.starts_with('w') => index(&name[1..]).map(Var::W),
            _ if gen && name.len() == 3 && name.starts_with('z') => {
                let row = match &name[1..2] {
                    "1" => 0,
                    "2" => 1,
                    _ => return None,
                };
                index(&name[2..]).map(|c| Var::Z(row, c))
            }
            _ => None,
        }
    }

    /// Rejects tuples with tuple-valued components; returns whether `n` is
    /// pair-valued.
    fn check_shape(&self, n: &Node) -> Result<bool, ParseError> {
        Ok(match n {
            Node::Num(_) | Node::Var(_) => false,
            Node::Neg(a) => self.check_shape(a)?,
            Node::Bin(_, a, b) => self.check_shape(a)? | self.check_shape(b)?,
            Node::Call(_, args) => {
                let mut any = false;
                for a in args {
                    any |= self.check_shape(a)?;
                }
                any
            }
            Node::Pair(a, b) => {
                if self.check_shape(a)? || self.check_shape(b)? {
                    return Err(self.error_at(0, "tuple components must be scalars"));
                }
                true
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(s: &str) -> Expr {
        Expr::parse(s, Role::Generator, 2).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(gen("0").eval(&Env::default()).unwrap(), Vec2::new(0.0, 0.0));
        let env = Env { y: [0.7, 0.2], ..Env::default() };
        let v = gen("(y1 - 0.5, y2 - 0.5)").eval(&env).unwrap();
        assert!((v.x - 0.2).abs() < 1e-15 && (v.y + 0.3).abs() < 1e-15);
        let mut env = Env::default();
        env.z[0][0] = 2.5;
        assert_eq!(gen("(min(z11,1), 0)").eval(&env).unwrap(), Vec2::new(1.0, 0.0));
    }

    #[test]
    fn precedence_and_functions() {
        let env = Env { t: 0.5, w: [1.0, -2.0], ..Env::default() };
        let v = gen("(1 + 2 * 3 - -4 / 2, -2 * w2 - t)").eval(&env).unwrap();
        assert_eq!(v, Vec2::new(9.0, 3.5));
        let v = gen("(clip(w2, -1, 1), abs(w2) * tanh(0) + exp(0) + cos(0) - sin(0))").eval(&env).unwrap();
        assert_eq!(v, Vec2::new(-1.0, 2.0));
        assert_eq!(gen("(w1, w2) * 2 - 1").eval(&env).unwrap(), Vec2::new(1.0, -5.0));
        assert_eq!(gen("1.5e1").eval(&env).unwrap(), Vec2::new(15.0, 15.0));
        assert_eq!(gen(" \n ( t ,\n\t t ) ").eval(&env).unwrap(), Vec2::new(0.5, 0.5));
    }

    #[test]
    fn dependencies() {
        assert!(gen("(min(z11, 1), 0)").uses_z());
        assert!(!gen("(y1, 0)").uses_z());
        assert!(gen("(y1, 0)").uses_y());
    }

    #[test]
    fn parse_errors_have_positions() {
        let e = Expr::parse("(1,\n  2 +)", Role::Generator, 1).unwrap_err();
        assert_eq!((e.line, e.column), (2, 6));
        let e = Expr::parse("y1 + 1", Role::Terminal, 1).unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        assert!(e.message.contains("y1"));
        assert!(Expr::parse("w2", Role::Terminal, 1).is_err());
        assert!(Expr::parse("z13", Role::Generator, 2).is_err());
        assert!(Expr::parse("foo(1)", Role::Generator, 1).is_err());
        assert!(Expr::parse("min(1)", Role::Generator, 1).is_err());
        assert!(Expr::parse("((1, 2), 3)", Role::Generator, 1).is_err());
        assert!(Expr::parse("1 2", Role::Generator, 1).is_err());
        assert!(Expr::parse("", Role::Generator, 1).is_err());
    }

    #[test]
    fn eval_errors() {
        assert!(gen("1 / (t - t)").eval(&Env::default()).is_err());
        assert!(gen("exp(1000)").eval(&Env::default()).is_err());
    }
}
