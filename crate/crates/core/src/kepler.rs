//! The conformable Kepler system on `T*ℝ³`.
//!
//! Writing `Q = spow(q, α)` and `P = spow(p, α)`, the Hamiltonian is
//! `H_α = α² |P|² / (2m) − k / r_α` with `r_α = α |Q|`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::conformable::Alpha;
use crate::error::{Error, Result};
use crate::integrator::{integrate, Options, Solution};
use crate::jet::{Scalar, ZERO_GUARD};
use crate::observable::{Observable, VectorField};
use crate::phase::PhasePoint;
use crate::poisson::{hamiltonian_field, ConformableStructure};
use crate::report::{relative_residual, ResidualStats, Suite};
use crate::symmetry::{angular_momentum, lrl_vector};

/// Mass and coupling, both strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeplerParams {
    pub m: f64,
    pub k: f64,
}

impl KeplerParams {
    pub fn new(m: f64, k: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0 && k.is_finite() && k > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need m > 0 and k > 0, got m = {m}, k = {k}"
            )));
        }
        Ok(Self { m, k })
    }

    pub const UNIT: KeplerParams = KeplerParams { m: 1.0, k: 1.0 };
}

/// Hyperplane guard: integration halts once `|x_i| < HYPERPLANE_FRACTION · |x_i(0)|`.
pub const HYPERPLANE_FRACTION: f64 = 1e-6;

pub(crate) fn r_alpha_generic<S: Scalar>(q: &[S], alpha: f64) -> S {
    let mut s = S::cst(0.0);
    for qi in q {
        s = s + qi.spow(alpha).square();
    }
    s.sqrt() * alpha
}

/// `r_α = α (Σ |q^i|^{2α})^{1/2}`.
pub fn r_alpha(q: &[f64; 3], alpha: Alpha) -> Result<f64> {
    if q.iter().all(|v| v.abs() < ZERO_GUARD) {
        return Err(Error::Domain("r_alpha of the zero position vector".into()));
    }
    Ok(r_alpha_generic(q, alpha.value()))
}

/// `H_α` as an observable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeplerHamiltonian {
    pub params: KeplerParams,
    pub alpha: Alpha,
}

impl KeplerHamiltonian {
    pub fn new(params: KeplerParams, alpha: Alpha) -> Self {
        Self { params, alpha }
    }
}

impl Observable<6> for KeplerHamiltonian {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        let a = self.alpha.value();
        let mut kinetic = S::cst(0.0);
        for p in &x[3..] {
            kinetic = kinetic + (p.spow(a) * a).square();
        }
        kinetic / (2.0 * self.params.m) - r_alpha_generic(&x[..3], a).recip() * self.params.k
    }
}

pub fn kepler_hamiltonian(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<f64> {
    r_alpha(&x.q, alpha)?;
    Ok(KeplerHamiltonian::new(params, alpha).value(&x.to_array()))
}

/// Hamilton's equations written out explicitly:
/// `q̇^i = (α/m) P_i |q^i|^{1−α}`, `ṗ_i = −(αk/r_α³) Q^i |p_i|^{1−α}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeplerField {
    pub params: KeplerParams,
    pub alpha: Alpha,
}

impl VectorField<6> for KeplerField {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> [S; 6] {
        let a = self.alpha.value();
        let KeplerParams { m, k } = self.params;
        let r = r_alpha_generic(&x[..3], a);
        let pull = r.powi(3).recip() * (a * k);
        std::array::from_fn(|j| {
            if j < 3 {
                x[3 + j].spow(a) * x[j].abs_pow(1.0 - a) * (a / m)
            } else {
                -(pull * x[j - 3].spow(a) * x[j].abs_pow(1.0 - a))
            }
        })
    }
}

pub fn hamilton_rhs(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<[f64; 6]> {
    x.check_interior(alpha)?;
    r_alpha(&x.q, alpha)?;
    let v = KeplerField { params, alpha }.at(&x.to_array());
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("hamilton rhs"));
    }
    Ok(v)
}

/// `q̈` along the flow: `D(q̇)·ẋ`, with an exact Jacobian of the field.
pub fn flow_acceleration(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<[f64; 3]> {
    let xdot = hamilton_rhs(x, params, alpha)?;
    let jac = KeplerField { params, alpha }.jacobian(&x.to_array());
    Ok(std::array::from_fn(|i| (0..6).map(|j| jac[i][j] * xdot[j]).sum()))
}

/// Right-hand side of the conformable Newton law, consistent with the
/// chain rule applied to Hamilton's equations:
/// `−(α³k/(m r_α³)) q^i + (α²/m²)(1−α) |p_i|^{2α} |q^i|^{1−2α} sign(q^i)`.
pub fn newton_law(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<[f64; 3]> {
    x.check_interior(alpha)?;
    let a = alpha.value();
    let KeplerParams { m, k } = params;
    let r = r_alpha(&x.q, alpha)?;
    Ok(std::array::from_fn(|i| {
        let (q, p) = (x.q[i], x.p[i]);
        -(a.powi(3) * k / (m * r.powi(3))) * q
            + (a * a / (m * m)) * (1.0 - a) * p.abs().powf(2.0 * a) * q.signum() * q.abs().powf(1.0 - 2.0 * a)
    }))
}

/// The correction term in its literal printed shape,
/// `(α²/m²)(1−α) q p (|p|/|q|)^{2(α−1)}`, kept for comparison with
/// [`newton_law`]; the two agree when `α = 1` or `|q^i| = |p_i| = 1`.
pub fn newton_law_printed(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<[f64; 3]> {
    x.check_interior(alpha)?;
    let a = alpha.value();
    let KeplerParams { m, k } = params;
    let r = r_alpha(&x.q, alpha)?;
    Ok(std::array::from_fn(|i| {
        let (q, p) = (x.q[i], x.p[i]);
        -(a.powi(3) * k / (m * r.powi(3))) * q
            + (a * a / (m * m)) * (1.0 - a) * q * p * (p.abs() / q.abs()).powf(2.0 * (a - 1.0))
    }))
}

/// `q̈^{flow} − newton_law` per component.
pub fn newton_residual(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<[f64; 3]> {
    let acc = flow_acceleration(x, params, alpha)?;
    let law = newton_law(x, params, alpha)?;
    Ok(std::array::from_fn(|i| acc[i] - law[i]))
}

/// Componentwise agreement of [`hamilton_rhs`] with the bracket-derived `X_H`.
pub fn field_consistency(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<f64> {
    let explicit = hamilton_rhs(x, params, alpha)?;
    let bracket = hamiltonian_field(
        &ConformableStructure::new(alpha),
        &KeplerHamiltonian::new(params, alpha),
        &x.to_array(),
    )?;
    Ok(crate::report::relative_residual_vec(&explicit, &bracket))
}

pub type Trajectory = Solution<6>;

/// Dormand–Prince integration of Hamilton's equations from `x0`.
///
/// For `α ≠ 1` the run halts at the first accepted state with
/// `|x_i| < 1e-6 · |x0_i|` for some `i`.
pub fn integrate_orbit(
    x0: &PhasePoint,
    params: KeplerParams,
    alpha: Alpha,
    t_end: f64,
    rel_tol: f64,
) -> Result<Trajectory> {
    alpha.require_at_least_one()?;
    x0.check_interior(alpha)?;
    r_alpha(&x0.q, alpha)?;
    let opts = Options::new(rel_tol)?;
    let field = KeplerField { params, alpha };
    let start = x0.to_array();
    let guard: [f64; 6] = start.map(|v| HYPERPLANE_FRACTION * v.abs());
    let classical = alpha.is_classical();
    integrate(
        |x| {
            let v = field.at(x);
            if v.iter().all(|c| c.is_finite()) {
                Ok(v)
            } else {
                Err(Error::NonFinite("hamilton rhs"))
            }
        },
        start,
        t_end,
        &opts,
        |x| {
            if classical {
                return None;
            }
            (0..6).find(|&i| x[i].abs() < guard[i])
        },
    )
}

/// Drift of `H_α`, `L^α` and `A^α` over a trajectory.
///
/// Drifts are measured against the initial value; `H` relative to `|H(0)|`,
/// `L` relative to `|L(0)|`, and `A` relative to `max(|A(0)|, mk)` (the
/// natural LRL scale, so near-circular orbits are not judged on noise).
pub fn conservation_report(traj: &Trajectory, params: KeplerParams, alpha: Alpha, tol: f64) -> Result<Suite> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let a = alpha.value();
    let x0 = PhasePoint::from_array(traj.states[0]);
    let h0 = kepler_hamiltonian(&x0, params, alpha)?;
    let l0 = angular_momentum(&x0, alpha);
    let a0 = lrl_vector(&x0, params, alpha)?;
    let l_scale = norm3(&l0);
    let a_scale = norm3(&a0).max(params.m * params.k);
    let mut sh = ResidualStats::new("conservation/H", a, tol);
    let mut sl = ResidualStats::new("conservation/L", a, tol);
    let mut sa = ResidualStats::new("conservation/A", a, tol);
    for s in &traj.states {
        let x = PhasePoint::from_array(*s);
        let h = kepler_hamiltonian(&x, params, alpha)?;
        let l = angular_momentum(&x, alpha);
        let av = lrl_vector(&x, params, alpha)?;
        sh.push(relative_residual(h - h0, h0), s);
        sl.push(relative_residual(max_diff(&l, &l0), l_scale), s);
        sa.push(relative_residual(max_diff(&av, &a0), a_scale), s);
    }
    let mut suite = Suite::new("conservation");
    suite.push(sh.finish());
    suite.push(sl.finish());
    suite.push(sa.finish());
    Ok(suite)
}

fn norm3(v: &[f64; 3]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn max_diff(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

/// `|v² − (k/m)(2/r − 1/a)| / v²` for a classical bound state, with
/// `v = |p|/m` and `a = −k/(2E)`.
pub fn vis_viva_residual(x: &PhasePoint, params: KeplerParams) -> Result<f64> {
    let e = kepler_hamiltonian(x, params, Alpha::ONE)?;
    if e >= 0.0 {
        return Err(Error::Domain("vis-viva needs a bound state (E < 0)".into()));
    }
    let KeplerParams { m, k } = params;
    let v2 = x.p.iter().map(|p| p * p).sum::<f64>() / (m * m);
    let r = norm3(&x.q);
    let semi = -k / (2.0 * e);
    Ok(relative_residual(v2 - (k / m) * (2.0 / r - 1.0 / semi), v2))
}

pub const CSV_HEADER: [&str; 14] = [
    "t", "q1", "q2", "q3", "p1", "p2", "p3", "H", "L1", "L2", "L3", "A1", "A2", "A3",
];

pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per accepted step, 17 significant digits.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory, params: KeplerParams, alpha: Alpha) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let x = PhasePoint::from_array(*s);
        let h = kepler_hamiltonian(&x, params, alpha)?;
        let l = angular_momentum(&x, alpha);
        let av = lrl_vector(&x, params, alpha)?;
        let row: Vec<String> = std::iter::once(*t)
            .chain(s.iter().copied())
            .chain(std::iter::once(h))
            .chain(l)
            .chain(av)
            .map(fmt17)
            .collect();
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn r_alpha_examples() {
        assert!((r_alpha(&[3.0, 4.0, 0.0], Alpha::ONE).unwrap() - 5.0).abs() < 1e-15);
        assert!((r_alpha(&[3.0, 4.0, 0.0], a(2.0)).unwrap() - 2.0 * 337f64.sqrt()).abs() < 1e-12);
        assert!((r_alpha(&[1.0, 1.0, 1.0], a(1.5)).unwrap() - 1.5 * 3f64.sqrt()).abs() < 1e-14);
        assert!(r_alpha(&[0.0; 3], a(1.5)).is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        let x = PhasePoint::new([1.0; 3], [1.0; 3]);
        let h1 = kepler_hamiltonian(&x, KeplerParams::UNIT, Alpha::ONE).unwrap();
        assert!((h1 - (1.5 - 1.0 / 3f64.sqrt())).abs() < 1e-14);
        let h2 = kepler_hamiltonian(&x, KeplerParams::UNIT, a(2.0)).unwrap();
        assert!((h2 - (6.0 - 1.0 / (2.0 * 3f64.sqrt()))).abs() < 1e-14);
    }

    #[test]
    fn rhs_examples() {
        let x = PhasePoint::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let v = hamilton_rhs(&x, KeplerParams::UNIT, Alpha::ONE).unwrap();
        assert_eq!(v, [0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
        let u = PhasePoint::new([1.0; 3], [1.0; 3]);
        let v = hamilton_rhs(&u, KeplerParams::UNIT, a(1.5)).unwrap();
        let r = 1.5 * 3f64.sqrt();
        for i in 0..3 {
            assert!((v[i] - 1.5).abs() < 1e-14);
            assert!((v[3 + i] + 1.5 / r.powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn printed_and_corrected_newton_terms() {
        let u = PhasePoint::new([1.0; 3], [1.0; 3]);
        let c = newton_law(&u, KeplerParams::UNIT, a(1.5)).unwrap();
        let p = newton_law_printed(&u, KeplerParams::UNIT, a(1.5)).unwrap();
        for i in 0..3 {
            assert!((c[i] - p[i]).abs() < 1e-14);
        }
        let g = PhasePoint::new([0.8, 1.7, 1.1], [1.4, 0.6, 1.9]);
        let c = newton_law(&g, KeplerParams::UNIT, a(2.0)).unwrap();
        let p = newton_law_printed(&g, KeplerParams::UNIT, a(2.0)).unwrap();
        assert!((c[0] - p[0]).abs() > 1e-3);
    }

    #[test]
    fn params_validation() {
        assert!(KeplerParams::new(0.0, 1.0).is_err());
        assert!(KeplerParams::new(1.0, -1.0).is_err());
    }
}
