//! Residual bookkeeping shared by every verification pass.

use serde::Serialize;

use crate::error::Index;

/// Cap on the number of failing locations kept in a report.
pub const MAX_LISTED: usize = 32;

/// Outcome of one verification pass: the worst residual, where it occurred,
/// and whether the normalized residual stayed within `tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub samples: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    pub worst: Option<[i64; 2]>,
    pub tolerance: f64,
    pub passed: bool,
    pub failing: Vec<[i64; 2]>,
    pub failing_count: usize,
}

impl Certificate {
    /// Certificate for an empty stencil set.
    pub fn vacuous(name: &str, tolerance: f64) -> Self {
        Tracker::new(name).finish(tolerance)
    }
}

/// Accumulates per-stencil residuals.
///
/// Each sample carries its absolute residual and a normalized one; the pass
/// decision is made on the normalized value.
#[derive(Clone, Debug)]
pub struct Tracker {
    name: String,
    samples: Vec<(Index, f64, f64)>,
}

impl Tracker {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            samples: Vec::new(),
        }
    }

    pub fn record(&mut self, at: Index, abs: f64, rel: f64) {
        self.samples.push((at, abs, rel));
    }

    /// Records with `rel = abs / scale` (and `rel = abs` when `scale` is zero).
    pub fn record_scaled(&mut self, at: Index, abs: f64, scale: f64) {
        self.record(at, abs, relative(abs, scale));
    }

    pub fn finish(self, tolerance: f64) -> Certificate {
        let mut max_abs = 0.0_f64;
        let mut max_rel = 0.0_f64;
        let mut worst = None;
        let mut failing = Vec::new();
        let mut failing_count = 0;
        for &(at, abs, rel) in &self.samples {
            // NaN is the worst possible residual.
            let rel = if rel.is_nan() { f64::INFINITY } else { rel };
            max_abs = if abs.is_nan() {
                f64::INFINITY
            } else {
                max_abs.max(abs)
            };
            if worst.is_none() || rel > max_rel {
                max_rel = rel;
                worst = Some([at.0, at.1]);
            }
            if rel > tolerance {
                failing_count += 1;
                let loc = [at.0, at.1];
                if failing.len() < MAX_LISTED && !failing.contains(&loc) {
                    failing.push(loc);
                }
            }
        }
        Certificate {
            name: self.name,
            samples: self.samples.len(),
            max_abs,
            max_rel,
            worst,
            tolerance,
            passed: failing_count == 0,
            failing,
            failing_count,
        }
    }
}

/// `abs / scale`, with a zero scale leaving `abs` unchanged.
pub fn relative(abs: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        abs / scale
    } else {
        abs
    }
}
