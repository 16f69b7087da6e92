//! Residual bookkeeping and the JSON report schema.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Scale below which an identity is judged on its absolute residual.
pub const ABSOLUTE_FLOOR: f64 = 1e-14;

/// Residual of an identity relative to the largest term entering it.
pub fn relative_residual(diff: f64, scale: f64) -> f64 {
    if scale.abs() < ABSOLUTE_FLOOR {
        diff.abs()
    } else {
        diff.abs() / scale.abs()
    }
}

/// Max-norm residual of a vector difference, relative to the max magnitude of the compared vectors.
pub fn relative_residual_vec(lhs: &[f64], rhs: &[f64]) -> f64 {
    let diff = lhs.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = lhs.iter().chain(rhs).map(|v| v.abs()).fold(0.0, f64::max);
    relative_residual(diff, scale)
}

/// Outcome of checking one identity over a set of sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub identity: String,
    pub alpha: f64,
    pub n_points: usize,
    /// Points skipped because they were singular for the identity.
    pub n_excluded: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tol: f64,
    pub pass: bool,
    /// Coordinates of the point attaining `max_residual`.
    pub worst_point: Option<Vec<f64>>,
}

/// The exported subset of a [`VerificationReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub identity: String,
    pub alpha: f64,
    pub n_points: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl From<&VerificationReport> for ReportRecord {
    fn from(r: &VerificationReport) -> Self {
        Self {
            identity: r.identity.clone(),
            alpha: r.alpha,
            n_points: r.n_points,
            max_residual: r.max_residual,
            mean_residual: r.mean_residual,
            tol: r.tol,
            pass: r.pass,
        }
    }
}

impl VerificationReport {
    pub fn record(&self) -> ReportRecord {
        ReportRecord::from(self)
    }
}

impl std::fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:<40} alpha={:<5} n={:<4} max={:.3e} mean={:.3e} tol={:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.identity,
            self.alpha,
            self.n_points,
            self.max_residual,
            self.mean_residual,
            self.tol
        )?;
        if self.n_excluded > 0 {
            write!(f, " excluded={}", self.n_excluded)?;
        }
        Ok(())
    }
}

/// Streaming accumulator for per-point residuals.
#[derive(Clone, Debug)]
pub struct ResidualStats {
    identity: String,
    alpha: f64,
    tol: f64,
    count: usize,
    excluded: usize,
    sum: f64,
    max: f64,
    worst: Option<Vec<f64>>,
    nonfinite: bool,
}

impl ResidualStats {
    pub fn new(identity: impl Into<String>, alpha: f64, tol: f64) -> Self {
        Self {
            identity: identity.into(),
            alpha,
            tol,
            count: 0,
            excluded: 0,
            sum: 0.0,
            max: 0.0,
            worst: None,
            nonfinite: false,
        }
    }

    pub fn push(&mut self, residual: f64, point: &[f64]) {
        self.count += 1;
        if !residual.is_finite() {
            self.nonfinite = true;
            self.worst = Some(point.to_vec());
            return;
        }
        self.sum += residual;
        if residual > self.max || self.worst.is_none() {
            self.max = self.max.max(residual);
            self.worst = Some(point.to_vec());
        }
    }

    pub fn exclude(&mut self) {
        self.excluded += 1;
    }

    pub fn finish(self) -> VerificationReport {
        let max = if self.nonfinite { f64::INFINITY } else { self.max };
        let mean = if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        };
        VerificationReport {
            pass: self.count > 0 && !self.nonfinite && max < self.tol,
            identity: self.identity,
            alpha: self.alpha,
            n_points: self.count,
            n_excluded: self.excluded,
            max_residual: max,
            mean_residual: mean,
            tol: self.tol,
            worst_point: self.worst,
        }
    }
}

/// Builds a report from an ordered list of per-point residuals.
pub fn report_from(
    identity: impl Into<String>,
    alpha: f64,
    tol: f64,
    residuals: impl IntoIterator<Item = (f64, Vec<f64>)>,
) -> VerificationReport {
    let mut stats = ResidualStats::new(identity, alpha, tol);
    for (r, p) in residuals {
        stats.push(r, &p);
    }
    stats.finish()
}

/// A named group of reports, passing iff every member passes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Suite {
    pub name: String,
    pub reports: Vec<VerificationReport>,
}

impl Suite {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            reports: Vec::new(),
        }
    }

    pub fn push(&mut self, r: VerificationReport) {
        self.reports.push(r);
    }

    pub fn extend(&mut self, other: Suite) {
        self.reports.extend(other.reports);
    }

    pub fn passed(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(|r| r.pass)
    }

    pub fn get(&self, identity: &str) -> Option<&VerificationReport> {
        self.reports.iter().find(|r| r.identity == identity)
    }

    pub fn max_residual(&self) -> f64 {
        self.reports.iter().map(|r| r.max_residual).fold(0.0, f64::max)
    }

    pub fn records(&self) -> Vec<ReportRecord> {
        self.reports.iter().map(ReportRecord::from).collect()
    }
}

/// Writes the report array as pretty JSON.
pub fn write_reports_json<W: Write>(w: W, reports: &[VerificationReport]) -> Result<()> {
    let records: Vec<ReportRecord> = reports.iter().map(ReportRecord::from).collect();
    serde_json::to_writer_pretty(w, &records)?;
    Ok(())
}
