//! A small expression language in `r` (and optionally `s`).
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' '-'? integer)?
//! atom   := number | 'r' | 's' | ('sqrt' | 'exp') '(' expr ')' | '(' expr ')'
//! ```
//!
//! Exponents are integer literals only; fractional powers go through `sqrt`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::jet::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    R,
    S,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Bin(op, ..) => op.precedence(),
            Node::Neg(_) => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }

    fn uses_s(&self) -> bool {
        match self {
            Node::S => true,
            Node::Num(_) | Node::R => false,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.uses_s(),
            Node::Bin(_, a, b) => a.uses_s() || b.uses_s(),
        }
    }

    fn eval<T: Scalar>(&self, r: &T, s: &T) -> Result<T> {
        Ok(match self {
            Node::Num(v) => r.constant_like(*v),
            Node::R => r.clone(),
            Node::S => s.clone(),
            Node::Neg(a) => a.eval(r, s)?.neg(),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(r, s)?, b.eval(r, s)?);
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.try_div(&b)?,
                }
            }
            Node::Pow(a, n) => a.eval(r, s)?.try_powi(*n)?,
            Node::Call(Func::Sqrt, a) => a.eval(r, s)?.try_sqrt()?,
            Node::Call(Func::Exp, a) => a.eval(r, s)?.exp(),
        })
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::R => write!(f, "r"),
            Node::S => write!(f, "s"),
            Node::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, a.precedence() < 3)
            }
            Node::Bin(op, a, b) => {
                let p = op.precedence();
                wrap(f, a, a.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                // left-associative operators need parentheses on an equal-precedence right side;
                // a negation on the right is parenthesised for readability
                wrap(f, b, b.precedence() <= p || matches!(**b, Node::Neg(_)))
            }
            Node::Pow(a, n) => {
                wrap(f, a, a.precedence() < 5)?;
                write!(f, "^{n}")
            }
            Node::Call(func, a) => {
                let name = match func {
                    Func::Sqrt => "sqrt",
                    Func::Exp => "exp",
                };
                write!(f, "{name}(")?;
                a.write(f)?;
                write!(f, ")")
            }
        }
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, node: &Node, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "(")?;
        node.write(f)?;
        write!(f, ")")
    } else {
        node.write(f)
    }
}

/// A parsed expression in `r` and `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialExpr {
    root: Node,
}

impl RadialExpr {
    pub fn parse(src: &str) -> Result<RadialExpr> {
        Parser::new(src).parse()
    }

    pub fn constant(v: f64) -> RadialExpr {
        RadialExpr { root: Node::Num(v) }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Whether the expression mentions `s`.
    pub fn uses_s(&self) -> bool {
        self.root.uses_s()
    }

    /// Evaluates on reals or jets.
    pub fn eval<T: Scalar>(&self, r: &T, s: &T) -> Result<T> {
        self.root.eval(r, s)
    }

    /// Real-valued evaluation of an expression in `r` alone.
    pub fn eval_r(&self, r: f64) -> Result<f64> {
        self.root.eval(&r, &0.0)
    }
}

impl fmt::Display for RadialExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f)
    }
}

impl FromStr for RadialExpr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RadialExpr::parse(s)
    }
}

impl Serialize for RadialExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RadialExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let src = String::deserialize(deserializer)?;
        RadialExpr::parse(&src).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        }
    }

    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset,
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            self.tok = Tok::End;
            return Ok(());
        };
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let mut k = self.pos + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    self.pos = k;
                }
            }
            let text = &self.src[start..self.pos];
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => self.tok = Tok::Num(v),
                _ => return self.err(start, format!("invalid number `{text}`")),
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
        } else if b"+-*/^()".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Op(c as char);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return self.err(self.pos, format!("unexpected character `{ch}`"));
        }
        Ok(())
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.tok == Tok::Op(op) {
            self.bump()
        } else {
            self.err(self.tok_start, format!("expected `{op}`"))
        }
    }

    fn parse(mut self) -> Result<RadialExpr> {
        self.bump()?;
        if self.tok == Tok::End {
            return self.err(0, "empty expression");
        }
        let root = self.expr()?;
        if self.tok != Tok::End {
            return self.err(self.tok_start, "unexpected trailing input");
        }
        Ok(RadialExpr { root })
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.tok != Tok::Op('^') {
            return Ok(base);
        }
        self.bump()?;
        let negative = if self.tok == Tok::Op('-') {
            self.bump()?;
            true
        } else {
            false
        };
        let at = self.tok_start;
        let Tok::Num(v) = self.tok else {
            return self.err(at, "exponent must be an integer literal");
        };
        if v.fract() != 0.0 || v > i32::MAX as f64 || self.src[at..self.pos].contains(['.', 'e', 'E']) {
            return self.err(at, "exponent must be an integer literal");
        }
        self.bump()?;
        if self.tok == Tok::Op('^') {
            return self.err(self.tok_start, "chained exponents are not supported; use parentheses");
        }
        let n = if negative { -(v as i32) } else { v as i32 };
        Ok(Node::Pow(Box::new(base), n))
    }

    fn atom(&mut self) -> Result<Node> {
        let at = self.tok_start;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Node::Num(v))
            }
            Tok::Ident(name) => {
                self.bump()?;
                match name.as_str() {
                    "r" => Ok(Node::R),
                    "s" => Ok(Node::S),
                    "sqrt" | "exp" => {
                        let func = if name == "sqrt" { Func::Sqrt } else { Func::Exp };
                        self.expect('(')?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        Ok(Node::Call(func, Box::new(arg)))
                    }
                    _ => Err(Error::UnknownIdentifier { name, offset: at }),
                }
            }
            Tok::Op('(') => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Op(c) => self.err(at, format!("unexpected `{c}`")),
            Tok::End => self.err(at, "unexpected end of input"),
        }
    }
}
