//! Report and error payloads, in JSON and as text.

use std::fmt::Write as _;

use meanscope::{
    AlphaReport, BuildError, CheckConfig, CheckerId, Direction, Generator, GeneratorSpec, Kink, MeanResult, ParseError,
    Resolution, Status, Verdict, Window,
};
use serde::Serialize;

use crate::{Opts, EXIT_BUILD, EXIT_USAGE};

/// The fully resolved invocation; re-running it reproduces the report.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checker: Option<CheckerId>,
    pub generators: Vec<String>,
    pub window: Window,
    pub samples: u64,
    pub arity: usize,
    pub seed: u64,
    pub tol_rel: f64,
    pub scan_grid: usize,
    pub monotone_grid: usize,
    pub output: &'static str,
}

impl RunConfig {
    pub fn new(command: &'static str, checker: Option<CheckerId>, opts: &Opts, cfg: &CheckConfig) -> Self {
        RunConfig {
            command,
            checker,
            generators: opts.generators.clone(),
            window: opts.window,
            samples: cfg.samples,
            arity: cfg.arity,
            seed: cfg.seed,
            tol_rel: cfg.tol_rel,
            scan_grid: cfg.scan_grid,
            monotone_grid: opts.monotone_grid,
            output: if opts.json { "json" } else { "text" },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GeneratorInfo {
    pub input: String,
    pub spec: String,
    pub direction: Direction,
    /// Whether the checkers work with `-f` in place of a decreasing `f`.
    pub canonicalized: bool,
    pub window: Window,
    /// The requested window was narrowed to keep `f` finite.
    pub window_trimmed: bool,
}

impl GeneratorInfo {
    pub fn new(input: &str, spec: &GeneratorSpec, g: &Generator, requested: Window) -> Self {
        GeneratorInfo {
            input: input.to_string(),
            spec: spec.to_string(),
            direction: g.direction(),
            canonicalized: g.direction() == Direction::Decreasing,
            window: g.window(),
            window_trimmed: g.window() != requested,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<GeneratorInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<MeanResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kinks: Option<Vec<Kink>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkers: Option<Vec<Verdict>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<String>,
}

impl Report {
    pub fn new(config: RunConfig, generators: Vec<GeneratorInfo>) -> Self {
        let mut it = generators.into_iter();
        Report {
            config,
            generator: it.next(),
            reference: it.next(),
            mean: None,
            alpha: None,
            kinks: None,
            checkers: None,
            resolution: None,
            details: None,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (label, g) in [("generator", &self.generator), ("reference", &self.reference)] {
            if let Some(g) = g {
                let dir = match g.direction {
                    Direction::Increasing => "increasing",
                    Direction::Decreasing => "decreasing, analysed as -f",
                };
                let trimmed = if g.window_trimmed { ", trimmed" } else { "" };
                let _ = writeln!(
                    out,
                    "{label:<11}{} ({dir}; window [{}, {}]{trimmed})",
                    g.spec,
                    num(g.window.lo()),
                    num(g.window.hi())
                );
            }
        }
        if let Some(m) = &self.mean {
            let _ = writeln!(out, "{:<11}{}", "mean", num(m.value));
        }
        if let Some(a) = &self.alpha {
            let value = serde_json::to_value(&a.alpha).map(|v| v.to_string()).unwrap_or_default();
            let pattern = if a.pattern_ok { "pattern ok" } else { "pattern broken" };
            let _ = writeln!(out, "{:<11}{} ({pattern})", "alpha", value.trim_matches('"'));
            if !a.violations.is_empty() {
                let _ = writeln!(out, "{:<11}{}", "broken at", nums(&a.violations));
            }
        }
        if let Some(k) = &self.kinks {
            if k.is_empty() {
                let _ = writeln!(out, "{:<11}none", "kinks");
            }
            for kink in k {
                let _ = writeln!(
                    out,
                    "{:<11}x = {} (f{} jumps {} -> {})",
                    "kink",
                    num(kink.x),
                    if kink.order == 1 { "'" } else { "''" },
                    num(kink.left_value),
                    num(kink.right_value)
                );
            }
        }
        for v in self.checkers.iter().flatten() {
            let status = match v.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Inconclusive => "inconclusive",
            };
            let margin = v.min_margin.map(|m| format!("  min margin {m:.3e}")).unwrap_or_default();
            let _ = writeln!(out, "{:<20}{status:<13}{} samples{margin}", v.id.as_str(), v.samples_run);
            if let Some(ce) = &v.counterexample {
                let _ = writeln!(
                    out,
                    "    {}: witness {}, lhs {} > rhs {} by {:.6e}",
                    ce.kind,
                    nums(&ce.witness),
                    num(ce.lhs),
                    num(ce.rhs),
                    ce.violation
                );
            }
            if let Some(note) = &v.note {
                let _ = writeln!(out, "    note: {note}");
            }
        }
        if let Some(r) = self.resolution {
            let name = serde_json::to_value(r).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default();
            let _ = writeln!(out, "{:<11}{name}", "resolution");
        }
        if let Some(d) = &self.details {
            let _ = writeln!(out, "{:<11}{d}", "details");
        }
        out
    }
}

/// Plain decimal in a readable range, scientific notation outside it.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e9).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn nums(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| num(x)).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: "usage", message: message.into(), input: None, column: None }
    }

    pub fn parse(input: &str, e: ParseError) -> Self {
        CliError { kind: "parse", message: e.to_string(), input: Some(input.to_string()), column: Some(e.column) }
    }

    pub fn build(input: &str, e: BuildError) -> Self {
        CliError { kind: "generator", message: e.to_string(), input: Some(input.to_string()), column: None }
    }

    pub fn code(&self) -> u8 {
        if self.kind == "generator" {
            EXIT_BUILD
        } else {
            EXIT_USAGE
        }
    }

    pub fn emit(&self, json: bool) {
        if json {
            #[derive(Serialize)]
            struct Wrapped<'a> {
                error: &'a CliError,
            }
            eprintln!("{}", serde_json::to_string(&Wrapped { error: self }).expect("error serialises"));
            return;
        }
        eprintln!("error: {}", self.message);
        if let (Some(input), Some(col)) = (&self.input, self.column) {
            eprintln!("  {input}");
            eprintln!("  {}^", " ".repeat(col.saturating_sub(1)));
        }
    }
}
