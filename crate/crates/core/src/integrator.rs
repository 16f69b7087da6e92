//! Adaptive Dormand–Prince 5(4) integration of autonomous systems.
//!
//! Steps are controlled by a PI controller on the mixed error norm
//! `sqrt(mean((e_i / (atol + rtol·max(|x_i|, |x̃_i|)))²))`; the last step is
//! shortened to land exactly on `t_end`. Integration stops early, recording an
//! [`Event`], when a user stop predicate fires or the controller fails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Why an integration ended before `t_end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// A coordinate came within the guard band of a singular hyperplane.
    HyperplaneApproach,
    /// The step size underflowed, the step budget ran out, or the field
    /// could not be evaluated.
    StepFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    /// Coordinate responsible, when one is identifiable.
    pub index: Option<usize>,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Smallest step relative to `max(|t|, 1)`.
    pub min_step: f64,
}

impl Options {
    /// `rel_tol` must lie in `[1e-13, 1e-3]`; `abs_tol` defaults to `rel_tol`.
    pub fn new(rel_tol: f64) -> Result<Self> {
        if !(1e-13..=1e-3).contains(&rel_tol) {
            return Err(Error::InvalidArgument(format!(
                "rel_tol {rel_tol:e} outside [1e-13, 1e-3]"
            )));
        }
        Ok(Self {
            rel_tol,
            abs_tol: rel_tol,
            max_steps: 2_000_000,
            min_step: 1e-14,
        })
    }
}

/// Accepted samples of an integration, starting with the initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub events: Vec<Event>,
}

impl<const N: usize> Solution<N> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> (f64, [f64; N]) {
        (
            *self.times.last().expect("solution holds the initial state"),
            *self.states.last().expect("solution holds the initial state"),
        )
    }

    /// True when integration stopped at an event instead of `t_end`.
    pub fn halted(&self) -> bool {
        !self.events.is_empty()
    }
}

// Dormand–Prince coefficients
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// error weights b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_RATIO: f64 = 0.2;
const MAX_RATIO: f64 = 5.0;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

fn axpy<const N: usize>(x: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| x[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn error_norm<const N: usize>(e: &[f64; N], x: &[f64; N], y: &[f64; N], o: &Options) -> f64 {
    let s: f64 = (0..N)
        .map(|i| {
            let sc = o.abs_tol + o.rel_tol * x[i].abs().max(y[i].abs());
            (e[i] / sc).powi(2)
        })
        .sum();
    (s / N as f64).sqrt()
}

fn initial_step<const N: usize>(
    f: &mut impl FnMut(&[f64; N]) -> Result<[f64; N]>,
    x: &[f64; N],
    k1: &[f64; N],
    o: &Options,
) -> Result<f64> {
    let sc: [f64; N] = std::array::from_fn(|i| o.abs_tol + o.rel_tol * x[i].abs());
    let rms = |v: &[f64; N]| ((0..N).map(|i| (v[i] / sc[i]).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(x);
    let d1 = rms(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let x1 = axpy(x, h0, &[(1.0, k1)]);
    let k2 = f(&x1)?;
    let diff: [f64; N] = std::array::from_fn(|i| k2[i] - k1[i]);
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}

/// Integrates `ẋ = f(x)` from `x0` over `[0, t_end]`.
///
/// `stop` is checked after every accepted step; returning `Some(i)` records a
/// [`EventKind::HyperplaneApproach`] on coordinate `i` and ends the run.
pub fn integrate<const N: usize>(
    mut f: impl FnMut(&[f64; N]) -> Result<[f64; N]>,
    x0: [f64; N],
    t_end: f64,
    opts: &Options,
    stop: impl Fn(&[f64; N]) -> Option<usize>,
) -> Result<Solution<N>> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_end {t_end} must be finite and >= 0")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }
    let mut sol = Solution {
        times: vec![0.0],
        states: vec![x0],
        events: Vec::new(),
    };
    if t_end == 0.0 {
        return Ok(sol);
    }
    let mut t = 0.0;
    let mut x = x0;
    let mut k1 = f(&x)?;
    let mut h = initial_step(&mut f, &x, &k1, opts)?.min(t_end);
    let mut err_old: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;

    let fail = |sol: &mut Solution<N>, t: f64| {
        sol.events.push(Event {
            t,
            index: None,
            kind: EventKind::StepFailure,
        });
    };

    while t < t_end {
        if steps >= opts.max_steps || h < opts.min_step * t.abs().max(1.0) {
            fail(&mut sol, t);
            return Ok(sol);
        }
        steps += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let stages = (|| -> Result<([f64; N], [f64; N], [f64; N])> {
            let k2 = f(&axpy(&x, h, &[(A21, &k1)]))?;
            let k3 = f(&axpy(&x, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(&axpy(&x, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = f(&axpy(&x, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let k6 = f(&axpy(
                &x,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ))?;
            let y = axpy(&x, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(&y)?;
            let e: [f64; N] = std::array::from_fn(|i| {
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            });
            Ok((y, k7, e))
        })();
        let (y, k7, e) = match stages {
            Ok(v) if v.0.iter().all(|c| c.is_finite()) && v.1.iter().all(|c| c.is_finite()) => v,
            _ => {
                // unevaluable stage: treat as a rejected step
                h *= MIN_RATIO;
                rejected = true;
                continue;
            }
        };
        let err = error_norm(&e, &x, &y, opts);
        if !err.is_finite() {
            h *= MIN_RATIO;
            rejected = true;
            continue;
        }
        if err <= 1.0 {
            let fac =
                (err.max(1e-10).powf(EXPO) / (err_old.powf(BETA) * SAFETY)).clamp(1.0 / MAX_RATIO, 1.0 / MIN_RATIO);
            let mut h_new = h / fac;
            if rejected {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);
            t = if last { t_end } else { t + h };
            x = y;
            k1 = k7;
            sol.times.push(t);
            sol.states.push(x);
            rejected = false;
            if let Some(index) = stop(&x) {
                sol.events.push(Event {
                    t,
                    index: Some(index),
                    kind: EventKind::HyperplaneApproach,
                });
                return Ok(sol);
            }
            h = h_new;
        } else {
            let fac = (err.powf(EXPO) / SAFETY).min(1.0 / MIN_RATIO);
            h /= fac;
            rejected = true;
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_accurate() {
        let o = Options::new(1e-10).unwrap();
        let s = integrate(|x: &[f64; 1]| Ok([-x[0]]), [1.0], 3.0, &o, |_| None).unwrap();
        let (t, x) = s.last();
        assert_eq!(t, 3.0);
        assert!((x[0] - (-3.0f64).exp()).abs() < 1e-9);
        assert!(s.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn harmonic_oscillator_period() {
        let o = Options::new(1e-12).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let s = integrate(|x: &[f64; 2]| Ok([x[1], -x[0]]), [1.0, 0.0], tau, &o, |_| None).unwrap();
        let (_, x) = s.last();
        assert!((x[0] - 1.0).abs() < 1e-9 && x[1].abs() < 1e-9);
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let o = Options::new(1e-8).unwrap();
        let s = integrate(|x: &[f64; 1]| Ok([x[0]]), [2.0], 0.0, &o, |_| None).unwrap();
        assert_eq!(s.len(), 1);
        assert!(!s.halted());
    }

    #[test]
    fn stop_predicate_records_event() {
        let o = Options::new(1e-8).unwrap();
        let s = integrate(|_: &[f64; 1]| Ok([-1.0]), [1.0], 5.0, &o, |x| (x[0] < 0.5).then_some(0)).unwrap();
        assert_eq!(s.events.len(), 1);
        assert_eq!(s.events[0].kind, EventKind::HyperplaneApproach);
        assert!(s.last().0 < 5.0);
    }

    #[test]
    fn blow_up_becomes_step_failure() {
        // ẋ = x², x(0) = 1 blows up at t = 1
        let o = Options::new(1e-8).unwrap();
        let s = integrate(|x: &[f64; 1]| Ok([x[0] * x[0]]), [1.0], 2.0, &o, |_| None).unwrap();
        assert_eq!(s.events.last().unwrap().kind, EventKind::StepFailure);
        assert!(s.last().0 < 1.0 + 1e-6);
    }

    #[test]
    fn tolerance_range_enforced() {
        assert!(Options::new(1e-14).is_err());
        assert!(Options::new(1e-2).is_err());
        assert!(Options::new(1e-13).is_ok());
    }
}
