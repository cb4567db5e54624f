//! Arithmetic over the six Heun parameters.
//!
//! Grammar (usual precedence, left associative):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | atom
//! atom   := number | symbol | "(" expr ")"
//! symbol := a | q | alpha | beta | gamma | delta
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::params::HeunParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("unknown symbol `{name}` at position {pos}")]
    UnknownSymbol { pos: usize, name: String },

    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    A,
    Q,
    Alpha,
    Beta,
    Gamma,
    Delta,
}

impl Symbol {
    pub const ALL: [Symbol; 6] = [Symbol::A, Symbol::Q, Symbol::Alpha, Symbol::Beta, Symbol::Gamma, Symbol::Delta];

    pub fn name(self) -> &'static str {
        match self {
            Symbol::A => "a",
            Symbol::Q => "q",
            Symbol::Alpha => "alpha",
            Symbol::Beta => "beta",
            Symbol::Gamma => "gamma",
            Symbol::Delta => "delta",
        }
    }

    fn from_name(s: &str) -> Option<Symbol> {
        Symbol::ALL.into_iter().find(|sym| sym.name() == s)
    }

    fn value(self, p: &HeunParams) -> f64 {
        match self {
            Symbol::A => p.a,
            Symbol::Q => p.q,
            Symbol::Alpha => p.alpha,
            Symbol::Beta => p.beta,
            Symbol::Gamma => p.gamma,
            Symbol::Delta => p.delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

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
pub enum ParamExpr {
    Num(f64),
    Sym(Symbol),
    Neg(Box<ParamExpr>),
    Bin(BinOp, Box<ParamExpr>, Box<ParamExpr>),
}

impl ParamExpr {
    pub fn num(v: f64) -> Self {
        ParamExpr::Num(v)
    }

    pub fn eval(&self, p: &HeunParams) -> Result<f64, ExprError> {
        Ok(match self {
            ParamExpr::Num(v) => *v,
            ParamExpr::Sym(s) => s.value(p),
            ParamExpr::Neg(e) => -e.eval(p)?,
            ParamExpr::Bin(op, l, r) => {
                let (l, r) = (l.eval(p)?, r.eval(p)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(ExprError::DivisionByZero);
                        }
                        l / r
                    }
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            ParamExpr::Bin(op, ..) => op.precedence(),
            ParamExpr::Neg(_) => 3,
            ParamExpr::Num(v) if v.is_sign_negative() => 3,
            _ => 4,
        }
    }
}

/// Prints in the grammar above. Right operands of equal precedence and
/// negative literals are parenthesized, so reparsing rebuilds the same tree.
impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamExpr::Num(v) if v.is_sign_negative() => write!(f, "-{:?}", -v),
            ParamExpr::Num(v) => write!(f, "{v:?}"),
            ParamExpr::Sym(s) => f.write_str(s.name()),
            ParamExpr::Neg(e) => {
                if e.precedence() < 3 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            ParamExpr::Bin(op, l, r) => {
                let p = op.precedence();
                if l.precedence() < p {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if r.precedence() <= p {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

impl FromStr for ParamExpr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, ExprError> {
        parse_param_expr(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    Open,
    Close,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' => {
                out.push((i, Tok::Op(c as char)));
                i += 1;
            }
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
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
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ExprError::Syntax {
                    pos: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push((start, Tok::Num(v)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    pos: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<ParamExpr, ExprError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = ParamExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ParamExpr, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = ParamExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ParamExpr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(ParamExpr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<ParamExpr, ExprError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(ParamExpr::Num(v))
            }
            Tok::Ident(name) => match Symbol::from_name(&name) {
                Some(s) => {
                    self.bump();
                    Ok(ParamExpr::Sym(s))
                }
                None => Err(ExprError::UnknownSymbol { pos, name }),
            },
            Tok::Open => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::Close {
                    return self.error("expected `)`");
                }
                self.bump();
                Ok(e)
            }
            Tok::End => self.error("unexpected end of expression"),
            Tok::Close => self.error("unexpected `)`"),
            Tok::Op(c) => self.error(format!("unexpected operator `{c}`")),
        }
    }
}

/// Parses one expression; positions in errors are byte offsets into `text`.
pub fn parse_param_expr(text: &str) -> Result<ParamExpr, ExprError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}
