//! The `verify`, `simulate` and `actions` commands.
//!
//! Each command computes everything in memory and writes its files only at
//! the end, so a failed run leaves no partial artifacts.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use conformable_kepler::action_angle::{
    aa_identity_suite, aa_states, action_drift_report, map_cartesian, map_equatorial, write_actions_csv, AaTolerances,
};
use conformable_kepler::equatorial::{
    eq_conservation_report, eq_hamiltonian, eq_identity_suite, eq_points, integrate_equatorial, write_equatorial_csv,
    EqTolerances,
};
use conformable_kepler::integrator::Event;
use conformable_kepler::kepler::{
    conservation_report, integrate_orbit, kepler_hamiltonian, write_trajectory_csv, KeplerHamiltonian,
};
use conformable_kepler::poisson::{canonical_table_report, cartesian_axiom_report, form_bivector_inverse_report};
use conformable_kepler::report::{write_reports_json, ReportRecord};
use conformable_kepler::sampling::cartesian_points;
use conformable_kepler::symmetry::{
    casimir_report, first_integral_report, gamma_sign_flip_margin, so3_report, so4_so13_report, AngularMomentum,
    Branch, BranchSampler, Lrl,
};
use conformable_kepler::{Alpha, Suite, VerificationReport};
use serde::Serialize;

use crate::config::{Mode, RunConfig, Source};
use crate::error::{CliError, Result, EXIT_FAIL, EXIT_PASS};

pub const AXIOM_TOL: f64 = 1e-8;
pub const CANONICAL_TOL: f64 = 1e-12;
pub const INVERSE_TOL: f64 = 1e-12;
pub const FIRST_INTEGRAL_TOL: f64 = 1e-9;
pub const ALGEBRA_TOL: f64 = 1e-7;
pub const CASIMIR_TOL: f64 = 1e-12;
/// Branch samples keep `|H_α|` at least this far from zero.
pub const ENERGY_MARGIN: f64 = 1e-2;

pub const REPORT_FILE: &str = "report.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const CONSERVATION_FILE: &str = "conservation.json";
pub const EVENTS_FILE: &str = "events.json";
pub const ACTIONS_FILE: &str = "actions.csv";
pub const DRIFT_FILE: &str = "drift.json";

/// Reports of one command; passes iff every report passes.
#[derive(Clone, Debug)]
pub struct CampaignResult {
    pub reports: Vec<VerificationReport>,
    pub pass: bool,
    pub duration: Duration,
}

impl CampaignResult {
    fn new(reports: Vec<VerificationReport>, started: Instant) -> Self {
        let pass = !reports.is_empty() && reports.iter().all(|r| r.pass);
        Self {
            reports,
            pass,
            duration: started.elapsed(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    /// Machine-readable summary for `--json`.
    pub fn summary_json(&self, command: &str) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            command: &'a str,
            pass: bool,
            duration_s: f64,
            reports: Vec<ReportRecord>,
        }
        let s = Summary {
            command,
            pass: self.pass,
            duration_s: self.duration.as_secs_f64(),
            reports: self.reports.iter().map(ReportRecord::from).collect(),
        };
        serde_json::to_string_pretty(&s).expect("summary serializes")
    }
}

/// Output files collected in memory, written in order by [`Outputs::flush`].
struct Outputs {
    dir: PathBuf,
    files: Vec<(&'static str, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &'static str, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    fn add_reports(&mut self, name: &'static str, reports: &[VerificationReport]) -> Result<()> {
        let mut buf = Vec::new();
        write_reports_json(&mut buf, reports)?;
        buf.push(b'\n');
        self.add(name, buf);
        Ok(())
    }

    fn add_events(&mut self, events: &[Event]) {
        let mut buf = serde_json::to_vec_pretty(events).expect("events serialize");
        buf.push(b'\n');
        self.add(EVENTS_FILE, buf);
    }

    fn flush(self) -> Result<()> {
        let wrap = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Write { path, source }
        };
        std::fs::create_dir_all(&self.dir).map_err(wrap(&self.dir))?;
        for (name, bytes) in self.files {
            let path = self.dir.join(name);
            std::fs::write(&path, bytes).map_err(wrap(&path))?;
        }
        Ok(())
    }
}

/// Runs the identity suites of `config.mode` and writes `report.json`.
pub fn cmd_verify(config: &RunConfig, out: &Path) -> Result<CampaignResult> {
    config.validate()?;
    let started = Instant::now();
    let reports = match config.mode {
        Mode::Cartesian => cartesian_campaign(config)?,
        Mode::Equatorial => {
            let points = eq_points(config.seed, config.n_points);
            eq_identity_suite(&points, config.params()?, config.alpha, EqTolerances::default()).reports
        }
        Mode::ActionAngle => {
            let states = aa_states(config.seed, config.n_points, config.params()?)?;
            aa_identity_suite(&states, config.alpha, AaTolerances::default()).reports
        }
    };
    let mut outputs = Outputs::new(out);
    outputs.add_reports(REPORT_FILE, &reports)?;
    outputs.flush()?;
    Ok(CampaignResult::new(reports, started))
}

/// Bracket axioms, the canonical table and the form/bivector inverse on
/// the uniform box; first integrals, algebras and the Casimir on each
/// energy branch.
fn cartesian_campaign(config: &RunConfig) -> Result<Vec<VerificationReport>> {
    let alpha = config.alpha()?;
    let params = config.params()?;
    let n = config.n_points;
    let points = cartesian_points(config.seed, n);

    let mut suite = Suite::new("cartesian");
    let h = KeplerHamiltonian::new(params, alpha);
    let l = AngularMomentum { alpha, i: 2 };
    let a = Lrl { params, alpha, i: 0 };
    suite.extend(cartesian_axiom_report((&h, &l, &a), &points, alpha, AXIOM_TOL));
    suite.push(canonical_table_report(&points, alpha, CANONICAL_TOL));
    suite.push(form_bivector_inverse_report(&points, alpha, INVERSE_TOL));
    suite.push(so3_report(&points, alpha, ALGEBRA_TOL));

    for (offset, branch) in [(1, Branch::Minus), (2, Branch::Plus)] {
        let sampler = BranchSampler::for_branch(branch);
        let bp = sampler.sample(config.seed.wrapping_add(offset), n, alpha, ENERGY_MARGIN)?;
        suite.extend(branch_suite(&bp, sampler, alpha));
    }
    Ok(suite.reports)
}

fn branch_suite(points: &[conformable_kepler::PhasePoint], sampler: BranchSampler, alpha: Alpha) -> Suite {
    let (tag, algebra) = match sampler.branch {
        Branch::Minus => ("bound", "so4/"),
        Branch::Plus => ("scattering", "so13/"),
    };
    let params = sampler.params;
    let mut suite = Suite::new(tag);
    let mut add = |mut r: VerificationReport| {
        r.identity = format!("{}@{tag}", r.identity);
        suite.push(r);
    };
    first_integral_report(points, params, alpha, FIRST_INTEGRAL_TOL)
        .reports
        .into_iter()
        .for_each(&mut add);
    so4_so13_report(points, params, alpha, ALGEBRA_TOL)
        .reports
        .into_iter()
        .filter(|r| r.identity.starts_with(algebra))
        .for_each(&mut add);
    add(casimir_report(points, params, alpha, CASIMIR_TOL));
    add(sign_flip_report(points, sampler, alpha, algebra));
    suite
}

/// The `Γ̂-Γ̂` relation with the other branch's sign must fail. The residual
/// is the reciprocal of the smallest relative mismatch, so the report passes
/// when the wrong sign misses by more than 100% everywhere.
fn sign_flip_report(
    points: &[conformable_kepler::PhasePoint],
    sampler: BranchSampler,
    alpha: Alpha,
    algebra: &str,
) -> VerificationReport {
    let margin = gamma_sign_flip_margin(points, sampler.params, alpha);
    let residual = 1.0 / margin;
    VerificationReport {
        identity: format!("{algebra}Gamma-sign-flip"),
        alpha: alpha.value(),
        n_points: points.len(),
        n_excluded: 0,
        max_residual: residual,
        mean_residual: residual,
        tol: 1.0,
        pass: !points.is_empty() && residual < 1.0,
        worst_point: None,
    }
}

/// Integrates the configured source, writing the trajectory CSV, a
/// conservation report and the event record. Events are data, not failures.
pub fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<CampaignResult> {
    config.validate()?;
    let started = Instant::now();
    let alpha = config.alpha()?;
    let params = config.params()?;
    let mut outputs = Outputs::new(out);
    let mut csv = Vec::new();
    let (suite, events) = match config.source()? {
        Source::Cartesian(x0) => {
            let traj = integrate_orbit(&x0, params, alpha, config.t_end, config.rel_tol)?;
            write_trajectory_csv(&mut csv, &traj, params, alpha)?;
            (
                conservation_report(&traj, params, alpha, config.drift_tol)?,
                traj.events,
            )
        }
        Source::Equatorial(e0) => {
            let sol = integrate_equatorial(&e0, params, config.t_end, config.rel_tol)?;
            write_equatorial_csv(&mut csv, &sol, params)?;
            (
                eq_conservation_report(&sol, params, config.alpha, config.drift_tol)?,
                sol.events,
            )
        }
    };
    outputs.add(TRAJECTORY_FILE, csv);
    outputs.add_reports(CONSERVATION_FILE, &suite.reports)?;
    outputs.add_events(&events);
    outputs.flush()?;
    Ok(CampaignResult::new(suite.reports, started))
}

/// Maps a bound trajectory to `(t, J₁, J₂, I₁, I₂)` and reports their drift.
/// Cartesian sources need `alpha = 1`; unbound states are domain errors.
pub fn cmd_actions(config: &RunConfig, out: &Path) -> Result<CampaignResult> {
    config.validate()?;
    let started = Instant::now();
    let params = config.params()?;
    let unbound = |e: f64| CliError::Config(format!("unbound initial state: E = {e} >= 0, actions need E < 0"));
    let rows = match config.source()? {
        Source::Cartesian(x0) => {
            if config.alpha != 1.0 {
                return Err(CliError::Config(format!(
                    "Cartesian action mapping needs alpha = 1, got {}",
                    config.alpha
                )));
            }
            let e = kepler_hamiltonian(&x0, params, Alpha::ONE)?;
            if e >= 0.0 {
                return Err(unbound(e));
            }
            map_cartesian(
                &integrate_orbit(&x0, params, Alpha::ONE, config.t_end, config.rel_tol)?,
                params,
            )?
        }
        Source::Equatorial(e0) => {
            let e = eq_hamiltonian(&e0, params)?;
            if e >= 0.0 {
                return Err(unbound(e));
            }
            map_equatorial(
                &integrate_equatorial(&e0, params, config.t_end, config.rel_tol)?,
                params,
            )?
        }
    };
    let suite = action_drift_report(&rows, config.alpha, config.drift_tol)?;
    let mut outputs = Outputs::new(out);
    let mut csv = Vec::new();
    write_actions_csv(&mut csv, &rows)?;
    outputs.add(ACTIONS_FILE, csv);
    outputs.add_reports(DRIFT_FILE, &suite.reports)?;
    outputs.flush()?;
    Ok(CampaignResult::new(suite.reports, started))
}
