use thiserror::Error;

/// Failure while evaluating a generator or one of its derivatives at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("logarithm of a non-positive value at x = {x}")]
    LogDomain { x: f64 },
    #[error("non-real power at x = {x}")]
    NonRealPower { x: f64 },
    #[error("value overflows double precision at x = {x}")]
    Overflow { x: f64 },
    #[error("x = {x} lies outside the analysis window [{lo}, {hi}]")]
    OutsideWindow { x: f64, lo: f64, hi: f64 },
    #[error("x = {x} is not a positive real")]
    NonPositive { x: f64 },
}

impl EvalError {
    /// Overflow is the only failure that narrowing the window can cure.
    pub fn is_overflow(&self) -> bool {
        matches!(self, EvalError::Overflow { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax { expected: String },
    UnknownIdentifier(String),
    NonConstantExponent,
    InvalidArgument(String),
}

/// Parse failure; `column` is 1-based and points one past the end for a
/// truncated input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} at column {column}", describe(kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub column: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Syntax { expected } => format!("syntax error: expected {expected}"),
        ParseErrorKind::UnknownIdentifier(name) => format!("unknown identifier `{name}`"),
        ParseErrorKind::NonConstantExponent => "exponent must be a constant".to_string(),
        ParseErrorKind::InvalidArgument(msg) => format!("invalid argument: {msg}"),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("invalid window [{lo}, {hi}]: need 0 < lo < hi < inf")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("generator is not strictly monotone: f({x1}) = {f1}, f({x2}) = {f2}")]
    Monotonicity { x1: f64, x2: f64, f1: f64, f2: f64 },
    #[error("evaluation failed inside the window: {0}")]
    Eval(#[from] EvalError),
    #[error("no sub-window of [{lo}, {hi}] keeps the generator inside double precision")]
    NoFiniteRange { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DerivError {
    #[error("difference step underflows at x = {x}")]
    StepUnderflow { x: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeanError {
    #[error("target {y} lies outside the generator range [{lo_value}, {hi_value}]")]
    Range { y: f64, lo_value: f64, hi_value: f64 },
    #[error("sample vector is empty")]
    Empty,
    #[error("sample entry {x} is not a positive finite real")]
    InvalidEntry { x: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}
