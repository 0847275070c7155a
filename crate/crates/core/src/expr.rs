//! Arithmetic expressions over model parameters.
//!
//! The expression language is deliberately small: decimal literals in `[0, 1]`,
//! parameter references, the four arithmetic operators and the complement form
//! `1 - e`. This is enough to express every transition probability used by the
//! built-in benchmarks while keeping parsing and structural comparison trivial.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Binary operators, in increasing precedence order `+ -` then `* /`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// An expression tree over parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamExpr {
    /// A literal constant in `[0, 1]`.
    Lit(f64),
    /// A reference to a declared parameter.
    Param(String),
    /// A binary operation.
    Bin(BinOp, Box<ParamExpr>, Box<ParamExpr>),
    /// The complement `1 - e`.
    Complement(Box<ParamExpr>),
}

/// Errors produced while parsing an expression string.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("literal {value} at byte {pos} is outside [0, 1]")]
    LiteralRange { pos: usize, value: f64 },
}

impl ParamExpr {
    /// Parses an expression in the grammar
    /// `expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)* ;
    /// factor := number | ident | '(' expr ')' | '1' '-' factor`.
    ///
    /// Subtraction binds at expression level, so `1 - p * q` is `1 - (p * q)`.
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let mut p = Parser::new(text);
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.bytes.len() {
            return Err(ExprError::Syntax {
                pos: p.pos,
                msg: format!("unexpected trailing input {:?}", &text[p.pos..]),
            });
        }
        Ok(e)
    }

    /// Evaluates the expression under the given parameter lookup.
    /// Undeclared parameters must be rejected at parse/validation time;
    /// here a missing name is a programming error.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            ParamExpr::Lit(v) => *v,
            ParamExpr::Param(name) => lookup(name),
            ParamExpr::Bin(op, a, b) => {
                let (x, y) = (a.eval(lookup), b.eval(lookup));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                }
            }
            ParamExpr::Complement(e) => 1.0 - e.eval(lookup),
        }
    }

    /// Collects the names of all referenced parameters.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            ParamExpr::Lit(_) => {}
            ParamExpr::Param(name) => {
                out.insert(name.clone());
            }
            ParamExpr::Bin(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            ParamExpr::Complement(e) => e.collect_params(out),
        }
    }

    /// True when the expression references no parameter, i.e. its value is
    /// fixed by the model alone. Such transitions are exactly known to a
    /// learner and become singleton intervals.
    pub fn is_constant(&self) -> bool {
        match self {
            ParamExpr::Lit(_) => true,
            ParamExpr::Param(_) => false,
            ParamExpr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
            ParamExpr::Complement(e) => e.is_constant(),
        }
    }
}

impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamExpr::Lit(v) => write!(f, "{}", v),
            ParamExpr::Param(name) => write!(f, "{}", name),
            ParamExpr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({} {} {})", a, sym, b)
            }
            ParamExpr::Complement(e) => write!(f, "(1 - {})", e),
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { text, bytes: text.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<ParamExpr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = ParamExpr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    // `1 - e` keeps its dedicated node so structural tying can
                    // distinguish it from general subtraction only by shape,
                    // not by printable form.
                    if lhs == ParamExpr::Lit(1.0) {
                        lhs = ParamExpr::Complement(Box::new(rhs));
                    } else {
                        lhs = ParamExpr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                    }
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ParamExpr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = ParamExpr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = ParamExpr::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<ParamExpr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ExprError::Syntax { pos: self.pos, msg: "expected ')'".into() });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(ExprError::Syntax {
                pos: self.pos,
                msg: format!("unexpected character {:?}", c as char),
            }),
            None => Err(ExprError::Syntax { pos: self.pos, msg: "unexpected end of input".into() }),
        }
    }

    fn number(&mut self) -> Result<ParamExpr, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit()
                || self.bytes[self.pos] == b'.'
                || self.bytes[self.pos] == b'e'
                || self.bytes[self.pos] == b'E'
                || (self.pos > start
                    && (self.bytes[self.pos] == b'-' || self.bytes[self.pos] == b'+')
                    && matches!(self.bytes[self.pos - 1], b'e' | b'E')))
        {
            self.pos += 1;
        }
        let lit = &self.text[start..self.pos];
        let value: f64 = lit
            .parse()
            .map_err(|_| ExprError::Syntax { pos: start, msg: format!("bad number {:?}", lit) })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(ExprError::LiteralRange { pos: start, value });
        }
        Ok(ParamExpr::Lit(value))
    }

    fn ident(&mut self) -> Result<ParamExpr, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Ok(ParamExpr::Param(self.text[start..self.pos].to_string()))
    }
}
