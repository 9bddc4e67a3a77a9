//! Expression trees over the single variable `x`.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term { ("+" | "-") term }
//! term   := unary { ("*" | "/") unary }
//! unary  := "-" unary | factor
//! factor := atom [ "^" num ]
//! atom   := "x" | num | "ln(" expr ")" | "exp(" expr ")" | "(" expr ")"
//! ```
//!
//! Exponents must be constants. A parenthesised exponent is accepted when it
//! folds to a constant, and a leading minus sign is allowed (`x^-2`).

use std::fmt;

use crate::error::{EvalError, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    X,
    Const(f64),
    Add(Box<ExprNode>, Box<ExprNode>),
    Sub(Box<ExprNode>, Box<ExprNode>),
    Mul(Box<ExprNode>, Box<ExprNode>),
    Div(Box<ExprNode>, Box<ExprNode>),
    Pow(Box<ExprNode>, f64),
    Ln(Box<ExprNode>),
    Exp(Box<ExprNode>),
    Neg(Box<ExprNode>),
}

use ExprNode::*;

impl ExprNode {
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            X => x,
            Const(c) => *c,
            Add(a, b) => a.eval(x)? + b.eval(x)?,
            Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Div(a, b) => {
                let d = b.eval(x)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                a.eval(x)? / d
            }
            Pow(a, p) => {
                let base = a.eval(x)?;
                if base < 0.0 && p.fract() != 0.0 {
                    return Err(EvalError::NonRealPower { x });
                }
                if base == 0.0 && *p < 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                base.powf(*p)
            }
            Ln(a) => {
                let v = a.eval(x)?;
                if v <= 0.0 {
                    return Err(EvalError::LogDomain { x });
                }
                v.ln()
            }
            Exp(a) => a.eval(x)?.exp(),
            Neg(a) => -a.eval(x)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Overflow { x })
        }
    }

    /// Symbolic derivative with respect to `x`, constant-folded.
    pub fn derivative(&self) -> ExprNode {
        let d = match self {
            X => Const(1.0),
            Const(_) => Const(0.0),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Div(a, b) => Div(
                Box::new(sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                )),
                Box::new(Pow(b.clone(), 2.0)),
            ),
            Pow(a, p) => mul(
                mul(Const(*p), Pow(a.clone(), p - 1.0)),
                a.derivative(),
            ),
            Ln(a) => Div(Box::new(a.derivative()), a.clone()),
            Exp(a) => mul(self.clone(), a.derivative()),
            Neg(a) => Neg(Box::new(a.derivative())),
        };
        d.folded()
    }

    /// Constant folding plus the neutral-element identities (`1*e`, `e+0`,
    /// `e^1`, double negation). Folds that would produce a non-finite
    /// constant are left alone.
    pub fn folded(&self) -> ExprNode {
        match self {
            X | Const(_) => self.clone(),
            Add(a, b) => match (a.folded(), b.folded()) {
                (Const(x), Const(y)) => finite_or(x + y, || add(Const(x), Const(y))),
                (Const(z), e) | (e, Const(z)) if z == 0.0 => e,
                (a, b) => add(a, b),
            },
            Sub(a, b) => match (a.folded(), b.folded()) {
                (Const(x), Const(y)) => finite_or(x - y, || sub(Const(x), Const(y))),
                (e, Const(z)) if z == 0.0 => e,
                (a, b) => sub(a, b),
            },
            Mul(a, b) => match (a.folded(), b.folded()) {
                (Const(x), Const(y)) => finite_or(x * y, || mul(Const(x), Const(y))),
                (Const(o), e) | (e, Const(o)) if o == 1.0 => e,
                (a, b) => mul(a, b),
            },
            Div(a, b) => match (a.folded(), b.folded()) {
                (Const(x), Const(y)) if y != 0.0 => {
                    finite_or(x / y, || Div(Box::new(Const(x)), Box::new(Const(y))))
                }
                (e, Const(o)) if o == 1.0 => e,
                (a, b) => Div(Box::new(a), Box::new(b)),
            },
            Pow(a, p) => match a.folded() {
                _ if *p == 0.0 => Const(1.0),
                e if *p == 1.0 => e,
                Const(c) if !(c < 0.0 && p.fract() != 0.0) => {
                    finite_or(c.powf(*p), || Pow(Box::new(Const(c)), *p))
                }
                e => Pow(Box::new(e), *p),
            },
            Ln(a) => match a.folded() {
                Const(c) if c > 0.0 => Const(c.ln()),
                e => Ln(Box::new(e)),
            },
            Exp(a) => match a.folded() {
                Const(c) => finite_or(c.exp(), || Exp(Box::new(Const(c)))),
                e => Exp(Box::new(e)),
            },
            Neg(a) => match a.folded() {
                Const(c) => Const(-c),
                Neg(inner) => *inner,
                e => Neg(Box::new(e)),
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            X => false,
            Const(_) => true,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.is_constant() && b.is_constant(),
            Pow(a, _) | Ln(a) | Exp(a) | Neg(a) => a.is_constant(),
        }
    }

    fn level(&self) -> u8 {
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) => 3,
            Const(c) if c.is_sign_negative() => 3,
            Pow(..) => 4,
            X | Const(_) | Ln(_) | Exp(_) => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        if self.level() < min_level {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            X => f.write_str("x"),
            Const(c) => write_num(f, *c),
            Add(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" + ")?;
                b.fmt_at(f, 2)
            }
            Sub(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" - ")?;
                b.fmt_at(f, 2)
            }
            Mul(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str(" * ")?;
                b.fmt_at(f, 3)
            }
            Div(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str(" / ")?;
                b.fmt_at(f, 3)
            }
            Pow(a, p) => {
                a.fmt_at(f, 5)?;
                f.write_str("^")?;
                write_num(f, *p)
            }
            Ln(a) => {
                f.write_str("ln(")?;
                a.fmt_at(f, 0)?;
                f.write_str(")")
            }
            Exp(a) => {
                f.write_str("exp(")?;
                a.fmt_at(f, 0)?;
                f.write_str(")")
            }
            Neg(a) => {
                f.write_str("-")?;
                a.fmt_at(f, 3)
            }
        }
    }
}

impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Shortest round-trip decimal; scientific form outside `[1e-4, 1e16)`.
pub(crate) fn write_num(f: &mut impl fmt::Write, c: f64) -> fmt::Result {
    let a = c.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        write!(f, "{c:e}")
    } else {
        write!(f, "{c}")
    }
}

fn finite_or(v: f64, otherwise: impl FnOnce() -> ExprNode) -> ExprNode {
    if v.is_finite() {
        Const(v)
    } else {
        otherwise()
    }
}

fn add(a: ExprNode, b: ExprNode) -> ExprNode {
    Add(Box::new(a), Box::new(b))
}

fn sub(a: ExprNode, b: ExprNode) -> ExprNode {
    Sub(Box::new(a), Box::new(b))
}

fn mul(a: ExprNode, b: ExprNode) -> ExprNode {
    Mul(Box::new(a), Box::new(b))
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    /// 1-based column of the first character.
    pub column: usize,
}

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, column });
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part only when followed by digits, so `2e` stays an error
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let value = lit.parse::<f64>().map_err(|_| ParseError {
                kind: ParseErrorKind::Syntax { expected: "a decimal literal".into() },
                column,
            })?;
            out.push(Token { tok: Tok::Num(value), column });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let ident: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(ident), column });
        } else {
            return Err(ParseError {
                kind: ParseErrorKind::Syntax { expected: format!("a token, found `{c}`") },
                column,
            });
        }
    }
    out.push(Token { tok: Tok::Eof, column: chars.len() + 1 });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    pub(crate) fn column(&self) -> usize {
        self.tokens[self.pos].column
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Syntax { expected: expected.to_string() },
            column: self.column(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(what))
        }
    }

    pub(crate) fn finish(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => Err(self.error("end of input")),
        }
    }

    pub(crate) fn expr(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = mul(lhs, self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ExprNode, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<ExprNode, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let column = self.column();
        let exponent = match self.peek() {
            Tok::Minus | Tok::Num(_) => self.signed_num()?,
            Tok::LParen => {
                let e = self.atom()?;
                match e.folded() {
                    Const(c) => c,
                    _ => {
                        return Err(ParseError {
                            kind: ParseErrorKind::NonConstantExponent,
                            column,
                        })
                    }
                }
            }
            Tok::Ident(_) => {
                return Err(ParseError { kind: ParseErrorKind::NonConstantExponent, column })
            }
            _ => return Err(self.error("a numeric exponent")),
        };
        Ok(Pow(Box::new(base), exponent))
    }

    pub(crate) fn signed_num(&mut self) -> Result<f64, ParseError> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek() {
            Tok::Num(v) => {
                let v = *v;
                self.bump();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.error("a number")),
        }
    }

    fn atom(&mut self) -> Result<ExprNode, ParseError> {
        let column = self.column();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => {
                    self.bump();
                    Ok(X)
                }
                "ln" | "exp" => {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let inner = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(if name == "ln" { Ln(Box::new(inner)) } else { Exp(Box::new(inner)) })
                }
                _ => Err(ParseError { kind: ParseErrorKind::UnknownIdentifier(name), column }),
            },
            _ => Err(self.error("an operand")),
        }
    }
}

/// Parse a bare expression (no builtin call syntax), constant-folded.
pub fn parse_expr(text: &str) -> Result<ExprNode, ParseError> {
    let mut p = Parser::new(lex(text)?);
    let e = p.expr()?;
    p.finish()?;
    Ok(e.folded())
}
