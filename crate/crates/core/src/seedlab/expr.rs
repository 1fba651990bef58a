//! Coefficient expressions in the single variable `y`.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | power ;
//! power    = atom [ "^" exponent ] ;
//! exponent = [ "-" ] integer | "(" [ "-" ] integer ")" ;
//! atom     = number | "y" | func "(" expr ")" | "(" expr ")" ;
//! func     = "exp" | "tanh" | "sech" | "sin" | "cos" ;
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-y^2` is `-(y^2)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::dual::{Dual, EvalError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("exponent at offset {offset} is not an integer literal")]
    NonIntegerExponent { offset: usize },
}

impl ParseError {
    /// Byte offset into the source text.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::NonIntegerExponent { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Tanh,
    Sech,
    Sin,
    Cos,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Exp, Func::Tanh, Func::Sech, Func::Sin, Func::Cos];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    fn is_atom(&self) -> bool {
        matches!(self, Expr::Num(_) | Expr::Var | Expr::Call(..))
    }

    pub fn eval(&self, y: Dual) -> Result<Dual, EvalError> {
        let out = match self {
            Expr::Num(v) => Dual::constant(*v),
            Expr::Var => y,
            Expr::Neg(e) => -e.eval(y)?,
            Expr::Binary(op, l, r) => {
                let (l, r) = (l.eval(y)?, r.eval(y)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l.checked_div(r, y.value)?,
                }
            }
            Expr::Pow(base, n) => base.eval(y)?.powi(*n, y.value)?,
            Expr::Call(func, arg) => {
                let a = arg.eval(y)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Tanh => a.tanh(),
                    Func::Sech => a.sech(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
        };
        out.finite_or(y.value)
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if e.is_atom() {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

/// Renders with explicit grouping; the output parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var => f.write_str("y"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_operand(f, e)
            }
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Pow(base, n) => {
                write_operand(f, base)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn eat_digits(&mut self) -> usize {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut digits = self.eat_digits();
            if self.peek() == Some(b'.') {
                self.pos += 1;
                digits += self.eat_digits();
            }
            if digits == 0 {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: "malformed number".into(),
                });
            }
            if matches!(self.peek(), Some(b'e' | b'E')) {
                let mark = self.pos;
                self.pos += 1;
                if matches!(self.peek(), Some(b'+' | b'-')) {
                    self.pos += 1;
                }
                if self.eat_digits() == 0 {
                    return Err(ParseError::Syntax {
                        offset: mark,
                        message: "missing exponent digits".into(),
                    });
                }
            }
            let text = &self.src[start..self.pos];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            if !value.is_finite() {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("number `{text}` is out of range"),
                });
            }
            return Ok((Tok::Num(value), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self
                .peek()
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
            {
                self.pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_owned()), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Op(char::from(c)), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn offset(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_owned(),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let n = self.exponent()?;
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let offset = self.offset();
        let grouped = *self.peek() == Tok::Op('(');
        if grouped {
            self.bump();
        }
        let negative = *self.peek() == Tok::Op('-');
        if negative {
            self.bump();
        }
        let value = match self.bump().0 {
            Tok::Num(v) if v.fract() == 0.0 && v <= f64::from(i32::MAX) => v as i32,
            _ => return Err(ParseError::NonIntegerExponent { offset }),
        };
        if grouped {
            self.expect_op(')')?;
        }
        Ok(if negative { -value } else { value })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Op('(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.offset();
                self.bump();
                if *self.peek() == Tok::Op('(') {
                    let func = Func::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { name, offset })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "y" {
                    Ok(Expr::Var)
                } else if Func::from_name(&name).is_some() {
                    Err(self.unexpected("`(` after function name"))
                } else {
                    Err(ParseError::UnknownIdentifier { name, offset })
                }
            }
            _ => Err(self.unexpected("a number, `y`, a function call or `(`")),
        }
    }
}

/// A parsed coefficient function `a(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffExpr {
    ast: Expr,
}

impl CoeffExpr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let toks = Lexer::tokenize(text)?;
        let mut p = Parser { toks, at: 0 };
        let ast = p.expr()?;
        if *p.peek() != Tok::End {
            return Err(p.unexpected("an operator or end of input"));
        }
        Ok(CoeffExpr { ast })
    }

    pub fn from_ast(ast: Expr) -> Self {
        CoeffExpr { ast }
    }

    /// A constant function; negative values are stored as negated literals.
    pub fn constant(v: f64) -> Self {
        CoeffExpr { ast: literal(v) }
    }

    /// `slope * y + intercept`.
    pub fn linear(slope: f64, intercept: f64) -> Self {
        CoeffExpr {
            ast: Expr::binary(
                BinOp::Add,
                Expr::binary(BinOp::Mul, literal(slope), Expr::Var),
                literal(intercept),
            ),
        }
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    /// Value and first derivative at `y`.
    pub fn eval_dual(&self, y: f64) -> Result<Dual, EvalError> {
        self.ast.eval(Dual::variable(y))
    }

    pub fn eval(&self, y: f64) -> Result<f64, EvalError> {
        Ok(self.eval_dual(y)?.value)
    }

    /// True when the tree is the literal zero (possibly negated).
    pub fn is_literal_zero(&self) -> bool {
        match &self.ast {
            Expr::Num(v) => *v == 0.0,
            Expr::Neg(e) => matches!(**e, Expr::Num(v) if v == 0.0),
            _ => false,
        }
    }
}

fn literal(v: f64) -> Expr {
    if v < 0.0 {
        Expr::Neg(Box::new(Expr::Num(-v)))
    } else {
        Expr::Num(v)
    }
}

impl FromStr for CoeffExpr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CoeffExpr::parse(s)
    }
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}
