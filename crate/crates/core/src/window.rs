use serde::{Deserialize, Serialize};

use crate::error::BuildError;

/// Finite analysis scope `[lo, hi]` inside the positive half-line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lo: f64,
    hi: f64,
}

impl Window {
    pub const DEFAULT: Window = Window { lo: 1e-3, hi: 1e3 };

    pub fn new(lo: f64, hi: f64) -> Result<Self, BuildError> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(BuildError::InvalidWindow { lo, hi });
        }
        Ok(Window { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Geometric midpoint, the centre of the log-uniform sampling measure.
    pub fn midpoint(&self) -> f64 {
        (self.lo * self.hi).sqrt()
    }

    /// `n` log-uniformly spaced points including both ends.
    pub fn log_grid(&self, n: usize) -> Vec<f64> {
        log_grid(self.lo, self.hi, n)
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::DEFAULT
    }
}

pub(crate) fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
    // pin the ends exactly, exp(ln(x)) can drift by an ulp
    grid[0] = lo;
    grid[n - 1] = hi;
    grid
}
