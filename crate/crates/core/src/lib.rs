//! Numerical decision procedure for subadditivity of quasi-arithmetic means.
//!
//! A generator `f` is parsed ([`parse_generator`]), built on a finite window
//! ([`build`]), and handed to [`run_battery`], which evaluates the equivalent
//! characterisations independently and reports whether they agree.

pub mod checkers;
pub mod error;
pub mod expr;
pub mod generators;
pub mod means;
pub mod sampling;
pub mod semidiff;
pub mod window;

pub use checkers::{
    compare_means, resolve, run_battery, run_checker, shrink, BatteryReport, CheckConfig, CheckerId, Counterexample,
    Resolution, Status, Verdict,
};
pub use error::{BuildError, DerivError, EvalError, MeanError, ParseError, ParseErrorKind};
pub use expr::ExprNode;
pub use generators::{
    build, build_fitted, canonicalize, eval, parse_generator, Builtin, Direction, Generator, GeneratorSpec, Piece,
    Piecewise,
};
pub use means::{invert, power_mean, qa_mean, MeanResult};
pub use semidiff::{
    d1_side, d2_side, detect_kinks, find_alpha, Alpha, AlphaReport, Kink, KinkReport, SemiDerivEstimate, Side,
};
pub use window::Window;
