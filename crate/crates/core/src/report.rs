//! Residual records produced by the numerical checkers.

use nalgebra::{Dim, Matrix, RawStorage};
use serde::{Deserialize, Serialize};

/// `max(a, b)` that returns NaN when either argument is NaN.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Largest absolute entry, NaN if any entry is NaN. `amax` skips NaN.
pub trait MaxAbs {
    fn max_abs(&self) -> f64;
}

impl<R: Dim, C: Dim, S: RawStorage<f64, R, C>> MaxAbs for Matrix<f64, R, C, S> {
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, x| nan_max(m, x.abs()))
    }
}

/// Outcome of one named check. `passed` holds exactly when
/// `max_residual ≤ threshold`; a NaN residual never passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, samples: usize, max_residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            samples,
            max_residual,
            threshold,
            passed: max_residual <= threshold,
        }
    }

    /// Running maximum that propagates NaN instead of ignoring it.
    pub fn merge_residual(current: f64, next: f64) -> f64 {
        nan_max(current, next)
    }
}

/// Accumulates a NaN-propagating maximum over samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MaxResidual {
    value: f64,
    count: usize,
}

impl MaxResidual {
    pub fn push(&mut self, r: f64) {
        self.value = CheckResult::merge_residual(self.value, r);
        self.count += 1;
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self, name: impl Into<String>, threshold: f64) -> CheckResult {
        CheckResult::new(name, self.count, self.value, threshold)
    }
}
