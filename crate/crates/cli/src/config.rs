//! Run configuration, read from a JSON file.
//!
//! Physical parameters (`alpha`, `m`, `k`, `initial_state`, `t_end`) and
//! `mode` are required. The remaining fields default to
//! [`DEFAULT_REL_TOL`], [`DEFAULT_DRIFT_TOL`], [`DEFAULT_N_POINTS`] and seed 0.

use std::path::Path;

use conformable_kepler::equatorial::EquatorialPoint;
use conformable_kepler::kepler::KeplerParams;
use conformable_kepler::{Alpha, PhasePoint};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-12;
pub const DEFAULT_DRIFT_TOL: f64 = 1e-8;
pub const DEFAULT_N_POINTS: usize = 200;

/// Every tolerance in a config must lie in this closed interval.
pub const TOL_RANGE: (f64, f64) = (1e-13, 1e-3);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Cartesian,
    Equatorial,
    ActionAngle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub m: f64,
    pub k: f64,
    /// `(q, p)` in Cartesian mode, `(r, p_r, φ, p_φ)` in equatorial mode;
    /// action-angle mode accepts either and maps the matching trajectory.
    pub initial_state: Vec<f64>,
    pub t_end: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Tolerance of conservation and action-drift reports.
    #[serde(default = "default_drift_tol")]
    pub drift_tol: f64,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default)]
    pub seed: u64,
    pub mode: Mode,
}

fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

fn default_drift_tol() -> f64 {
    DEFAULT_DRIFT_TOL
}

fn default_n_points() -> usize {
    DEFAULT_N_POINTS
}

/// Initial state resolved against the mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source {
    Cartesian(PhasePoint),
    Equatorial(EquatorialPoint),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks every field. `alpha < 1` is rejected in all modes.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(CliError::Config(format!(
                "alpha = {} must be finite and positive",
                self.alpha
            )));
        }
        if self.alpha < 1.0 {
            return Err(CliError::Config(format!(
                "alpha = {} < 1: the weights |x|^(alpha-1) are singular on the coordinate hyperplanes",
                self.alpha
            )));
        }
        KeplerParams::new(self.m, self.k)?;
        for (name, tol) in [("rel_tol", self.rel_tol), ("drift_tol", self.drift_tol)] {
            if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
                return Err(CliError::Config(format!(
                    "{name} = {tol:e} outside [{:e}, {:e}]",
                    TOL_RANGE.0, TOL_RANGE.1
                )));
            }
        }
        if self.n_points == 0 {
            return Err(CliError::Config("n_points must be >= 1".into()));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(CliError::Config(format!(
                "t_end = {} must be finite and >= 0",
                self.t_end
            )));
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("initial_state has a non-finite entry".into()));
        }
        self.source().map(|_| ())
    }

    pub fn alpha(&self) -> Result<Alpha> {
        Ok(Alpha::new(self.alpha)?)
    }

    pub fn params(&self) -> Result<KeplerParams> {
        Ok(KeplerParams::new(self.m, self.k)?)
    }

    pub fn source(&self) -> Result<Source> {
        let x = &self.initial_state;
        match (self.mode, x.len()) {
            (Mode::Cartesian | Mode::ActionAngle, 6) => Ok(Source::Cartesian(PhasePoint::from_array([
                x[0], x[1], x[2], x[3], x[4], x[5],
            ]))),
            (Mode::Equatorial | Mode::ActionAngle, 4) => Ok(Source::Equatorial(EquatorialPoint::from_array([
                x[0], x[1], x[2], x[3],
            ]))),
            (mode, n) => Err(CliError::Config(format!(
                "initial_state has {n} entries, mode {mode:?} expects {}",
                match mode {
                    Mode::Cartesian => "6",
                    Mode::Equatorial => "4",
                    Mode::ActionAngle => "4 or 6",
                }
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig::from_json(
            r#"{"alpha": 1.0, "m": 1.0, "k": 1.0, "initial_state": [1, 0, 0, 0, 1, 0],
                "t_end": 1.0, "mode": "cartesian"}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_non_physical_fields() {
        let c = base();
        assert_eq!(c.rel_tol, DEFAULT_REL_TOL);
        assert_eq!(c.n_points, DEFAULT_N_POINTS);
        assert_eq!(c.seed, 0);
        c.validate().unwrap();
    }

    #[test]
    fn physical_fields_are_required() {
        let err =
            RunConfig::from_json(r#"{"alpha": 1.0, "k": 1.0, "initial_state": [], "t_end": 1, "mode": "cartesian"}"#);
        assert!(matches!(err, Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value = serde_json::to_value(base()).unwrap();
        v["bogus"] = 1.into();
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn invariants() {
        let bad = [
            RunConfig { alpha: 0.5, ..base() },
            RunConfig {
                rel_tol: 1e-14,
                ..base()
            },
            RunConfig {
                drift_tol: 1e-2,
                ..base()
            },
            RunConfig { n_points: 0, ..base() },
            RunConfig { m: -1.0, ..base() },
            RunConfig { t_end: -1.0, ..base() },
            RunConfig {
                initial_state: vec![1.0; 4],
                ..base()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn action_angle_mode_accepts_both_sources() {
        let c = RunConfig {
            mode: Mode::ActionAngle,
            ..base()
        };
        assert!(matches!(c.source(), Ok(Source::Cartesian(_))));
        let c = RunConfig {
            initial_state: vec![1.0, 0.0, 1.0, 0.5],
            ..c
        };
        assert!(matches!(c.source(), Ok(Source::Equatorial(_))));
    }

    #[test]
    fn mode_names_are_kebab_case() {
        assert_eq!(serde_json::to_string(&Mode::ActionAngle).unwrap(), "\"action-angle\"");
    }
}
