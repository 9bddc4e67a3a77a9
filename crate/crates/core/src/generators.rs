//! Generator specifications, the DSL front end, and built generators with
//! their analytic derivative data.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{BuildError, EvalError, ParseError, ParseErrorKind};
use crate::expr::{lex, write_num, ExprNode, Parser, Tok};
use crate::sampling;
use crate::semidiff::Side;
use crate::window::Window;

pub const MONOTONE_GRID: usize = 513;
const MONOTONE_PAIRS: u64 = 10_000;
const MONOTONE_SEED: u64 = 0x6d6f_6e6f_746f_6e65;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// `x^p`, `p != 0`.
    Power(f64),
    Log,
    /// `e^{cx}`, `c != 0`.
    Exp(f64),
    /// `x^2` up to `alpha`, then the tangent line `2 alpha x - alpha^2`.
    QuadLin(f64),
}

/// One piece of a continuous piecewise quadratic: on `[start, next start)`
/// the function is `v + slope*(x - start) + curvature*(x - start)^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub slope: f64,
    pub curvature: f64,
}

/// Continuous piecewise quadratic; the slope may jump at a piece boundary,
/// which is how kinks of `f'` are modelled.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise {
    pieces: Vec<Piece>,
    values: Vec<f64>,
}

impl Piecewise {
    pub fn new(value0: f64, pieces: Vec<Piece>) -> Result<Self, ParseError> {
        let invalid = |msg: &str| ParseError {
            kind: ParseErrorKind::InvalidArgument(msg.to_string()),
            column: 1,
        };
        if pieces.is_empty() {
            return Err(invalid("piecewise generator needs at least one piece"));
        }
        if pieces.windows(2).any(|w| !(w[0].start < w[1].start)) {
            return Err(invalid("piece starts must increase strictly"));
        }
        if !value0.is_finite()
            || pieces.iter().any(|p| !(p.start.is_finite() && p.slope.is_finite() && p.curvature.is_finite()))
        {
            return Err(invalid("piece data must be finite"));
        }
        let mut values = vec![value0];
        for w in pieces.windows(2) {
            let len = w[1].start - w[0].start;
            let prev = *values.last().unwrap();
            values.push(prev + w[0].slope * len + 0.5 * w[0].curvature * len * len);
        }
        Ok(Piecewise { pieces, values })
    }

    /// C¹ spline from a starting slope and `(start, curvature)` segments.
    pub fn c1(value0: f64, slope0: f64, segments: &[(f64, f64)]) -> Result<Self, ParseError> {
        let mut pieces = Vec::with_capacity(segments.len());
        let mut slope = slope0;
        for (i, &(start, curvature)) in segments.iter().enumerate() {
            if i > 0 {
                let (s0, c0) = segments[i - 1];
                slope += c0 * (start - s0);
            }
            pieces.push(Piece { start, slope, curvature });
        }
        Piecewise::new(value0, pieces)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn value0(&self) -> f64 {
        self.values[0]
    }

    fn index(&self, x: f64, side: Side) -> usize {
        let n = match side {
            Side::Right => self.pieces.partition_point(|p| p.start <= x),
            Side::Left => self.pieces.partition_point(|p| p.start < x),
        };
        n.saturating_sub(1)
    }

    fn value(&self, x: f64) -> f64 {
        let i = self.index(x, Side::Right);
        let p = &self.pieces[i];
        let t = x - p.start;
        self.values[i] + p.slope * t + 0.5 * p.curvature * t * t
    }

    fn d1(&self, x: f64, side: Side) -> f64 {
        let p = &self.pieces[self.index(x, side)];
        p.slope + p.curvature * (x - p.start)
    }

    fn d2(&self, x: f64, side: Side) -> f64 {
        self.pieces[self.index(x, side)].curvature
    }

    fn kinks(&self, order: u8) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.pieces.windows(2) {
            let end_slope = w[0].slope + w[0].curvature * (w[1].start - w[0].start);
            let slope_jump = (end_slope - w[1].slope).abs() > 1e-12 * (1.0 + end_slope.abs());
            let curv_jump = w[0].curvature != w[1].curvature;
            if slope_jump || (order == 2 && curv_jump) {
                out.push(w[1].start);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Builtin(Builtin),
    Expr(ExprNode),
    Affine { a: f64, b: f64, inner: Box<GeneratorSpec> },
    Piecewise(Piecewise),
}

impl GeneratorSpec {
    pub fn power(p: f64) -> Self {
        GeneratorSpec::Builtin(Builtin::Power(p))
    }

    pub fn log() -> Self {
        GeneratorSpec::Builtin(Builtin::Log)
    }

    pub fn exp(c: f64) -> Self {
        GeneratorSpec::Builtin(Builtin::Exp(c))
    }

    pub fn quadlin(alpha: f64) -> Self {
        GeneratorSpec::Builtin(Builtin::QuadLin(alpha))
    }

    /// `a*f + b`, with nested affine maps composed and the identity dropped.
    pub fn affine(self, a: f64, b: f64) -> Self {
        let (a, b, inner) = match self {
            GeneratorSpec::Affine { a: a2, b: b2, inner } => (a * a2, a * b2 + b, *inner),
            other => (a, b, other),
        };
        if a == 1.0 && b == 0.0 {
            inner
        } else {
            GeneratorSpec::Affine { a, b, inner: Box::new(inner) }
        }
    }

    /// Replace expression trees that spell a builtin by that builtin.
    pub fn normalized(&self) -> Self {
        match self {
            GeneratorSpec::Expr(e) => match recognize(e) {
                Some(b) => GeneratorSpec::Builtin(b),
                None => self.clone(),
            },
            GeneratorSpec::Affine { a, b, inner } => inner.normalized().affine(*a, *b),
            _ => self.clone(),
        }
    }
}

fn recognize(e: &ExprNode) -> Option<Builtin> {
    use ExprNode::*;
    match e {
        X => Some(Builtin::Power(1.0)),
        Pow(inner, p) if **inner == X => Some(Builtin::Power(*p)),
        Ln(inner) if **inner == X => Some(Builtin::Log),
        Exp(inner) => match &**inner {
            X => Some(Builtin::Exp(1.0)),
            Mul(a, b) => match (&**a, &**b) {
                (Const(c), X) | (X, Const(c)) if *c != 0.0 => Some(Builtin::Exp(*c)),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::Builtin(Builtin::Power(p)) => {
                f.write_str("power(")?;
                write_num(f, *p)?;
                f.write_str(")")
            }
            GeneratorSpec::Builtin(Builtin::Log) => f.write_str("log"),
            GeneratorSpec::Builtin(Builtin::Exp(c)) => {
                f.write_str("exp(")?;
                write_num(f, *c)?;
                f.write_str(")")
            }
            GeneratorSpec::Builtin(Builtin::QuadLin(a)) => {
                f.write_str("quadlin(")?;
                write_num(f, *a)?;
                f.write_str(")")
            }
            GeneratorSpec::Expr(e) => write!(f, "{e}"),
            GeneratorSpec::Affine { a, b, inner } => {
                f.write_str("affine(")?;
                write_num(f, *a)?;
                f.write_str(", ")?;
                write_num(f, *b)?;
                write!(f, ", {inner})")
            }
            GeneratorSpec::Piecewise(pw) => {
                f.write_str("piecewise(")?;
                write_num(f, pw.value0())?;
                for p in &pw.pieces {
                    f.write_str("; ")?;
                    write_num(f, p.start)?;
                    f.write_str(" ")?;
                    write_num(f, p.slope)?;
                    f.write_str(" ")?;
                    write_num(f, p.curvature)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parse builtin call syntax or a DSL expression.
pub fn parse_generator(text: &str) -> Result<GeneratorSpec, ParseError> {
    let tokens = lex(text)?;
    if let Some(spec) = parse_builtin(&tokens)? {
        return Ok(spec);
    }
    let mut p = Parser::new(tokens);
    let e = p.expr()?;
    p.finish()?;
    Ok(GeneratorSpec::Expr(e.folded()))
}

/// `Some` when the whole input is a builtin call; `exp(...)` whose argument
/// is not a bare number falls through to the expression grammar.
fn parse_builtin(tokens: &[crate::expr::Token]) -> Result<Option<GeneratorSpec>, ParseError> {
    let name = match &tokens[0].tok {
        Tok::Ident(name) => name.as_str(),
        _ => return Ok(None),
    };
    if name == "log" {
        if tokens.len() == 2 {
            return Ok(Some(GeneratorSpec::log()));
        }
        return Err(ParseError {
            kind: ParseErrorKind::Syntax { expected: "end of input after `log`".into() },
            column: tokens[1].column,
        });
    }
    if !matches!(name, "power" | "exp" | "quadlin") {
        return Ok(None);
    }
    let is_call = matches!(tokens.get(1).map(|t| &t.tok), Some(Tok::LParen));
    let numeric_arg = match (tokens.get(2).map(|t| &t.tok), tokens.get(3).map(|t| &t.tok)) {
        (Some(Tok::Num(_)), Some(Tok::RParen)) => true,
        (Some(Tok::Minus), Some(Tok::Num(_))) => matches!(tokens.get(4).map(|t| &t.tok), Some(Tok::RParen)),
        _ => false,
    };
    if name == "exp" && !(is_call && numeric_arg) {
        return Ok(None);
    }
    let mut p = Parser::new(tokens.to_vec());
    p.bump();
    if *p.peek() != Tok::LParen {
        return Err(ParseError { kind: ParseErrorKind::Syntax { expected: "`(`".into() }, column: p.column() });
    }
    p.bump();
    let arg_column = p.column();
    let value = p.signed_num()?;
    if *p.peek() != Tok::RParen {
        return Err(ParseError { kind: ParseErrorKind::Syntax { expected: "`)`".into() }, column: p.column() });
    }
    p.bump();
    p.finish()?;
    let bad = |msg: &str| ParseError { kind: ParseErrorKind::InvalidArgument(msg.into()), column: arg_column };
    let spec = match name {
        "power" if value == 0.0 => return Err(bad("power(0) is not a generator; use log")),
        "power" => GeneratorSpec::power(value),
        "exp" if value == 0.0 => return Err(bad("exp(0) is constant")),
        "exp" => GeneratorSpec::exp(value),
        _ if !(value > 0.0) => return Err(bad("quadlin threshold must be positive")),
        _ => GeneratorSpec::quadlin(value),
    };
    Ok(Some(spec))
}

// ---------------------------------------------------------------------------
// Compiled form

#[derive(Debug, Clone)]
enum Form {
    Power(f64),
    Log,
    Exp(f64),
    QuadLin(f64),
    Expr { f: ExprNode, d1: ExprNode, d2: ExprNode },
    Affine { a: f64, b: f64, inner: Box<Form> },
    Piecewise(Piecewise),
}

impl Form {
    fn compile(spec: &GeneratorSpec) -> Form {
        match spec {
            GeneratorSpec::Builtin(Builtin::Power(p)) => Form::Power(*p),
            GeneratorSpec::Builtin(Builtin::Log) => Form::Log,
            GeneratorSpec::Builtin(Builtin::Exp(c)) => Form::Exp(*c),
            GeneratorSpec::Builtin(Builtin::QuadLin(a)) => Form::QuadLin(*a),
            GeneratorSpec::Expr(e) => {
                let d1 = e.derivative();
                let d2 = d1.derivative();
                Form::Expr { f: e.clone(), d1, d2 }
            }
            GeneratorSpec::Affine { a, b, inner } => Form::Affine { a: *a, b: *b, inner: Box::new(Form::compile(inner)) },
            GeneratorSpec::Piecewise(pw) => Form::Piecewise(pw.clone()),
        }
    }

    fn value(&self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            Form::Power(p) => x.powf(*p),
            Form::Log => x.ln(),
            Form::Exp(c) => (c * x).exp(),
            Form::QuadLin(a) => {
                if x <= *a {
                    x * x
                } else {
                    a * (2.0 * x - a)
                }
            }
            Form::Expr { f, .. } => return f.eval(x),
            Form::Affine { a, b, inner } => a * inner.value(x)? + b,
            Form::Piecewise(pw) => pw.value(x),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Overflow { x })
        }
    }

    fn d1(&self, x: f64, side: Side) -> Option<f64> {
        let v = match self {
            Form::Power(p) => p * x.powf(p - 1.0),
            Form::Log => 1.0 / x,
            Form::Exp(c) => c * (c * x).exp(),
            Form::QuadLin(a) => 2.0 * x.min(*a),
            Form::Expr { d1, .. } => d1.eval(x).ok()?,
            Form::Affine { a, inner, .. } => a * inner.d1(x, side)?,
            Form::Piecewise(pw) => pw.d1(x, side),
        };
        v.is_finite().then_some(v)
    }

    fn d2(&self, x: f64, side: Side) -> Option<f64> {
        let v = match self {
            Form::Power(p) => p * (p - 1.0) * x.powf(p - 2.0),
            Form::Log => -1.0 / (x * x),
            Form::Exp(c) => c * c * (c * x).exp(),
            Form::QuadLin(a) => match side {
                Side::Left if x <= *a => 2.0,
                Side::Right if x < *a => 2.0,
                _ => 0.0,
            },
            Form::Expr { d2, .. } => d2.eval(x).ok()?,
            Form::Affine { a, inner, .. } => a * inner.d2(x, side)?,
            Form::Piecewise(pw) => pw.d2(x, side),
        };
        v.is_finite().then_some(v)
    }

    fn kinks(&self, order: u8) -> Vec<f64> {
        match self {
            Form::QuadLin(a) if order == 2 => vec![*a],
            Form::Affine { inner, .. } => inner.kinks(order),
            Form::Piecewise(pw) => pw.kinks(order),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "inc")]
    Increasing,
    #[serde(rename = "dec")]
    Decreasing,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

/// A generator restricted to a window, certified monotone by sampling.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct Generator {
    spec: GeneratorSpec,
    window: Window,
    direction: Direction,
    form: Form,
    analytic: bool,
    kinks1: Vec<f64>,
    kinks2: Vec<f64>,
}

impl Generator {
    fn assemble(spec: GeneratorSpec, window: Window, direction: Direction) -> Self {
        let form = Form::compile(&spec);
        let kinks1 = form.kinks(1);
        let kinks2 = form.kinks(2);
        Generator { spec, window, direction, form, analytic: true, kinks1, kinks2 }
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn has_analytic(&self) -> bool {
        self.analytic
    }

    /// Same generator with the closed-form derivatives withheld, so every
    /// derivative goes through the difference engine.
    pub fn numeric_only(&self) -> Self {
        Generator { analytic: false, ..self.clone() }
    }

    /// Rebuild on a different window, rechecking monotonicity.
    pub fn with_window(&self, window: Window) -> Result<Self, BuildError> {
        let mut g = build(self.spec.clone(), window)?;
        g.analytic = self.analytic;
        Ok(g)
    }

    /// `f(x)` for `x` in the window.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        if !(x > 0.0) {
            return Err(EvalError::NonPositive { x });
        }
        if !self.window.contains(x) {
            return Err(EvalError::OutsideWindow { x, lo: self.window.lo(), hi: self.window.hi() });
        }
        self.form.value(x)
    }

    /// `f(x)` without the window check; difference stencils reach slightly
    /// past the window ends.
    pub(crate) fn value(&self, x: f64) -> Result<f64, EvalError> {
        if !(x > 0.0) {
            return Err(EvalError::NonPositive { x });
        }
        self.form.value(x)
    }

    /// Analytic kink list of `f'` (order 1) or of the one-sided `f''` (order 2).
    pub fn analytic_kinks(&self, order: u8) -> &[f64] {
        if order == 1 {
            &self.kinks1
        } else {
            &self.kinks2
        }
    }

    pub(crate) fn is_listed_kink(&self, x: f64, order: u8) -> bool {
        self.analytic_kinks(order).iter().any(|&k| (x - k).abs() <= 1e-14 * k.abs())
    }

    /// Closed-form one-sided `f'`, if present and `x` is not a listed kink.
    pub fn analytic_d1(&self, x: f64, side: Side) -> Option<f64> {
        if !self.analytic || self.is_listed_kink(x, 1) {
            return None;
        }
        self.form.d1(x, side)
    }

    /// Closed-form one-sided `f''`, if present and `x` is not a listed kink.
    pub fn analytic_d2(&self, x: f64, side: Side) -> Option<f64> {
        if !self.analytic || self.is_listed_kink(x, 2) {
            return None;
        }
        self.form.d2(x, side)
    }
}

/// Build a generator on `window`, certifying strict monotonicity on a
/// log-uniform grid plus seeded random pairs.
pub fn build(spec: GeneratorSpec, window: Window) -> Result<Generator, BuildError> {
    build_with_grid(spec, window, MONOTONE_GRID)
}

pub fn build_with_grid(spec: GeneratorSpec, window: Window, grid: usize) -> Result<Generator, BuildError> {
    let form = Form::compile(&spec);
    let xs = window.log_grid(grid.max(3));
    let fs = xs.iter().map(|&x| form.value(x)).collect::<Result<Vec<_>, _>>()?;
    let direction = if fs[1] > fs[0] {
        Direction::Increasing
    } else {
        Direction::Decreasing
    };
    let s = direction.sign();
    for i in 0..xs.len() - 1 {
        if !(s * (fs[i + 1] - fs[i]) > 0.0) {
            return Err(BuildError::Monotonicity { x1: xs[i], x2: xs[i + 1], f1: fs[i], f2: fs[i + 1] });
        }
    }
    let mut rng = sampling::stream(MONOTONE_SEED, 0, 0);
    for _ in 0..MONOTONE_PAIRS {
        let a = sampling::log_uniform(&mut rng, window.lo(), window.hi());
        let b = sampling::log_uniform(&mut rng, window.lo(), window.hi());
        let (x1, x2) = if a < b { (a, b) } else if b < a { (b, a) } else { continue };
        let (f1, f2) = (form.value(x1)?, form.value(x2)?);
        if !(s * (f2 - f1) > 0.0) {
            return Err(BuildError::Monotonicity { x1, x2, f1, f2 });
        }
    }
    Ok(Generator::assemble(spec, window, direction))
}

/// Like [`build`], but first shrinks the window to the longest run of grid
/// points where `f` stays well inside double precision, so generators such
/// as `exp(1)` can be analysed on the default window. Domain errors are not
/// trimmed away.
pub fn build_fitted(spec: GeneratorSpec, window: Window) -> Result<Generator, BuildError> {
    let fitted = fit_window(&spec, window)?;
    build(spec, fitted)
}

const VALUE_CEILING: f64 = 1e300;
const MIN_INCREMENT: f64 = 1e-290;

pub fn fit_window(spec: &GeneratorSpec, window: Window) -> Result<Window, BuildError> {
    let form = Form::compile(spec);
    let xs = window.log_grid(MONOTONE_GRID);
    let mut fs = Vec::with_capacity(xs.len());
    for &x in &xs {
        match form.value(x) {
            Ok(v) if v.abs() <= VALUE_CEILING => fs.push(Some(v)),
            Ok(_) => fs.push(None),
            Err(e) if e.is_overflow() => fs.push(None),
            Err(e) => return Err(e.into()),
        }
    }
    // longest run of usable points joined by resolvable increments
    let (mut best, mut start) = ((0usize, 0usize), None::<usize>);
    for i in 0..xs.len() {
        let ok_here = fs[i].is_some();
        let joined = i > 0
            && ok_here
            && fs[i - 1].is_some()
            && (fs[i].unwrap() - fs[i - 1].unwrap()).abs() >= MIN_INCREMENT;
        start = match (ok_here, joined, start) {
            (false, _, _) => None,
            (true, true, Some(s)) => Some(s),
            (true, _, _) => Some(i),
        };
        if let Some(s) = start {
            if i - s > best.1 - best.0 {
                best = (s, i);
            }
        }
    }
    if best.1 - best.0 < 2 {
        return Err(BuildError::NoFiniteRange { lo: window.lo(), hi: window.hi() });
    }
    if best == (0, xs.len() - 1) {
        return Ok(window);
    }
    Window::new(xs[best.0], xs[best.1])
}

/// `f(x)` with the window precondition checked.
pub fn eval(g: &Generator, x: f64) -> Result<f64, EvalError> {
    g.eval(x)
}

/// Normalise recognised builtins and turn a decreasing generator into the
/// increasing `-f`, which induces the same mean.
pub fn canonicalize(g: &Generator) -> Generator {
    let mut spec = g.spec.normalized();
    if g.direction == Direction::Decreasing {
        spec = spec.affine(-1.0, 0.0);
    }
    let mut out = Generator::assemble(spec, g.window, Direction::Increasing);
    out.analytic = g.analytic;
    out
}
