//! Residual and comparison reports shared by the checks.

use std::collections::BTreeMap;

use serde::Serialize;

/// Per-point residuals of an identity reduced to aggregate numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub identity_id: String,
    pub grid_size: usize,
    pub sup_residual: f64,
    pub mean_residual: f64,
    pub convergence_order: Option<f64>,
    pub masked_fraction: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Derivatives taken by finite differences somewhere in the check.
    pub finite_differences: bool,
    /// Residuals of the hypotheses an identity is conditioned on.
    pub hypotheses: BTreeMap<String, f64>,
    /// Additional named diagnostics.
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

impl ResidualReport {
    /// Aggregate residual samples; `None` marks a masked point.
    pub fn from_samples(identity_id: &str, samples: &[Option<f64>], tolerance: f64) -> Self {
        let kept: Vec<f64> = samples.iter().flatten().copied().collect();
        let grid_size = samples.len();
        let masked_fraction = if grid_size == 0 {
            0.0
        } else {
            (grid_size - kept.len()) as f64 / grid_size as f64
        };
        let sup = if kept.iter().any(|r| r.is_nan()) {
            f64::NAN
        } else {
            kept.iter().fold(0.0f64, |m, &r| m.max(r))
        };
        let mean = if kept.is_empty() {
            0.0
        } else {
            kept.iter().sum::<f64>() / kept.len() as f64
        };
        Self {
            identity_id: identity_id.to_string(),
            grid_size,
            sup_residual: sup,
            mean_residual: mean.min(sup),
            convergence_order: None,
            masked_fraction,
            tolerance,
            pass: !kept.is_empty() && sup < tolerance,
            finite_differences: false,
            hypotheses: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
            error: None,
        }
    }

    /// A report for a check that could not be evaluated at all.
    pub fn failed(identity_id: &str, tolerance: f64, reason: String) -> Self {
        let mut r = Self::from_samples(identity_id, &[], tolerance);
        r.sup_residual = f64::NAN;
        r.mean_residual = f64::NAN;
        r.pass = false;
        r.error = Some(reason);
        r
    }

    pub fn with_hypothesis(mut self, name: &str, residual: f64) -> Self {
        self.hypotheses.insert(name.to_string(), residual);
        self
    }

    pub fn with_diagnostic(mut self, name: &str, value: f64) -> Self {
        self.diagnostics.insert(name.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Measured convergence order `log₂(e_coarse / e_fine)` for a halved step.
/// `None` when both residuals sit at rounding level.
pub fn convergence_order(coarse: f64, fine: f64) -> Option<f64> {
    if !(coarse.is_finite() && fine.is_finite()) || coarse <= 1e-13 || fine <= 0.0 {
        return None;
    }
    Some((coarse / fine).log2())
}

/// Two integrals that should agree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSidedReport {
    pub identity_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// `|lhs − rhs| / max(1, |rhs|)`.
    pub relative_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl TwoSidedReport {
    pub fn new(identity_id: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let gap = (lhs - rhs).abs();
        let relative_gap = gap / rhs.abs().max(1.0);
        Self {
            identity_id: identity_id.to_string(),
            lhs,
            rhs,
            gap,
            relative_gap,
            tolerance,
            pass: relative_gap < tolerance,
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_diagnostic(mut self, name: &str, value: f64) -> Self {
        self.diagnostics.insert(name.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_points_are_excluded() {
        let r = ResidualReport::from_samples("x", &[Some(1e-9), None, Some(3e-9), None], 1e-8);
        assert_eq!(r.masked_fraction, 0.5);
        assert_eq!(r.sup_residual, 3e-9);
        assert!((r.mean_residual - 2e-9).abs() < 1e-24);
        assert!(r.pass);
    }

    #[test]
    fn all_masked_does_not_pass() {
        let r = ResidualReport::from_samples("x", &[None, None], 1.0);
        assert!(!r.pass);
        assert_eq!(r.masked_fraction, 1.0);
    }

    #[test]
    fn nan_residual_fails() {
        let r = ResidualReport::from_samples("x", &[Some(f64::NAN), Some(0.0)], 1.0);
        assert!(!r.pass);
    }

    #[test]
    fn order_of_halving() {
        assert!((convergence_order(4e-6, 1e-6).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(convergence_order(1e-15, 1e-16), None);
    }
}
