//! Bound motion in action-angle coordinates `(J₁, J₂, φ¹, φ²)` (indices
//! 0..3), with `S = J₁ + 2J₂` and `E = −mk²/(2S²)`.
//!
//! Two Poisson structures live here. `P = Σ ∂_{J_h}∧∂_{φ^h}` and
//! `P₁ = Σ (R⁻¹)_{hk} ∂_{J_k}∧∂_{φ^h}` with `R = [[J₁, J₂], [4J₂, J₁]]`.
//! `P₁` is the inverse of `ω₁ = Σ R_{kh} dJ_k∧dφ^h = L_Δ ω`.

use std::io::Write;

use nalgebra::{Matrix2, Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformable::Alpha;
use crate::equatorial::{eq_hamiltonian, theta, EquatorialPoint};
use crate::error::{Error, Result};
use crate::geometry::{
    lie_derivative_2form, max_torsion_on_coordinate_fields, partial_matrix, schouten_bracket, trivector_max,
};
use crate::integrator::Solution;
use crate::jet::Scalar;
use crate::kepler::{fmt17, kepler_hamiltonian, KeplerParams};
use crate::observable::{commutator, Observable, VectorField};
use crate::phase::PhasePoint;
use crate::poisson::{add_wedge, bracket_with_scale, interior, HamiltonianField, PoissonStructure};
use crate::report::{relative_residual, ResidualStats, Suite, VerificationReport};
use crate::sampling::{rng, sample_where};
use crate::symmetry::angular_momentum;

pub const J1: usize = 0;
pub const J2: usize = 1;
pub const PHI1: usize = 2;
pub const PHI2: usize = 3;

/// Arcsine arguments within this of `±1` are clamped; beyond it they are
/// a domain error.
pub const ARCSIN_SLACK: f64 = 1e-12;

/// `J₁` values down to `−J1_SLACK · S` are read as the circular orbit `J₁ = 0`.
pub const J1_SLACK: f64 = 1e-10;

/// `|det R| / S²` below this is treated as singular.
pub const SINGULAR_R: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionAngleState {
    pub j1: f64,
    pub j2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub params: KeplerParams,
}

impl ActionAngleState {
    pub fn new(j1: f64, j2: f64, phi1: f64, phi2: f64, params: KeplerParams) -> Result<Self> {
        let s = Self {
            j1,
            j2,
            phi1,
            phi2,
            params,
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        let x = self.to_array();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("action-angle state"));
        }
        if self.s() <= 0.0 {
            return Err(Error::Domain(format!("J1 + 2 J2 = {} must be > 0", self.s())));
        }
        Ok(())
    }

    /// `S = J₁ + 2J₂`.
    pub fn s(&self) -> f64 {
        self.j1 + 2.0 * self.j2
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.j1, self.j2, self.phi1, self.phi2]
    }

    pub fn from_array(x: [f64; 4], params: KeplerParams) -> Self {
        Self {
            j1: x[J1],
            j2: x[J2],
            phi1: x[PHI1],
            phi2: x[PHI2],
            params,
        }
    }
}

// ---------------------------------------------------------------------------
// Actions, energy, angles
// ---------------------------------------------------------------------------

/// `J₁ = −D + mk/√(−2mE)`, `J₂ = D/2`.
pub fn actions_from_state(e: f64, d: f64, params: KeplerParams) -> Result<(f64, f64)> {
    if !(e.is_finite() && d.is_finite()) {
        return Err(Error::NonFinite("energy or separation constant"));
    }
    if e >= 0.0 {
        return Err(Error::Domain(format!("actions need a bound state, got E = {e}")));
    }
    if d <= 0.0 {
        return Err(Error::Domain(format!("separation constant D = {d} must be > 0")));
    }
    let KeplerParams { m, k } = params;
    let outer = m * k / (-2.0 * m * e).sqrt();
    let j1 = outer - d;
    if j1 < -J1_SLACK * outer {
        return Err(Error::Domain(format!("D = {d} exceeds mk/sqrt(-2mE) = {outer}")));
    }
    Ok((j1.max(0.0), d / 2.0))
}

/// `E = −mk²/(2S²)`.
pub fn energy_from_actions(s: &ActionAngleState) -> Result<f64> {
    s.check()?;
    let KeplerParams { m, k } = s.params;
    Ok(-m * k * k / (2.0 * s.s().powi(2)))
}

fn checked_asin(v: f64, what: &'static str) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite(what));
    }
    if v.abs() > 1.0 + ARCSIN_SLACK {
        return Err(Error::Domain(format!("{what} argument {v} outside [-1, 1]")));
    }
    Ok(v.clamp(-1.0, 1.0).asin())
}

/// `G̃ = −m²k²r² + 2mkS²r − (2J₂)²S²`.
pub fn radicand(r: f64, s: &ActionAngleState) -> f64 {
    let KeplerParams { m, k } = s.params;
    let sv = s.s();
    let d = 2.0 * s.j2;
    -(m * k * r).powi(2) + 2.0 * m * k * sv * sv * r - (d * sv).powi(2)
}

/// Turning radii `(r_min, r_max)` where `G̃ = 0`.
pub fn turning_radii(s: &ActionAngleState) -> Result<(f64, f64)> {
    s.check()?;
    let KeplerParams { m, k } = s.params;
    let sv = s.s();
    let d = 2.0 * s.j2;
    let mk = m * k;
    let disc = sv * sv * (sv * sv - d * d);
    if disc < 0.0 {
        return Err(Error::Domain("no libration interval (2 J2 > J1 + 2 J2)".into()));
    }
    let root = disc.sqrt();
    Ok(((sv * sv - root) / mk, (sv * sv + root) / mk))
}

/// The angle pair `(φ¹, φ²)` at radius `r` and polar angle `phi`:
///
/// `φ¹ = −√G̃/S² + arcsin[(mkr − S²)/Q̃]`,
/// `φ² = 2φ¹ − 2 arcsin[(1 − (2J₂)²/(mkr)) S/√(S² − (2J₂)²)] + φ − ½ sin 2φ`,
/// `Q̃ = S√(S² − (2J₂)²)`.
pub fn angle_coords(r: f64, phi: f64, s: &ActionAngleState) -> Result<(f64, f64)> {
    s.check()?;
    if !(r.is_finite() && r > 0.0 && phi.is_finite()) {
        return Err(Error::Domain(format!("angle coordinates need r > 0, got r = {r}")));
    }
    let KeplerParams { m, k } = s.params;
    let sv = s.s();
    let d = 2.0 * s.j2;
    let mk = m * k;
    let g = radicand(r, s);
    let g_scale = (mk * r).powi(2).max((d * sv).powi(2));
    if g < -ARCSIN_SLACK * g_scale {
        return Err(Error::Domain(format!("r = {r} lies outside the libration interval")));
    }
    let width = (sv * sv - d * d).sqrt();
    let q = sv * width;
    let phi1 = -g.max(0.0).sqrt() / (sv * sv) + checked_asin((mk * r - sv * sv) / q, "phi1 arcsine")?;
    let inner = checked_asin((1.0 - d * d / (mk * r)) * sv / width, "phi2 arcsine")?;
    let phi2 = 2.0 * phi1 - 2.0 * inner + phi - 0.5 * (2.0 * phi).sin();
    Ok((phi1, phi2))
}

// ---------------------------------------------------------------------------
// Structures and hierarchy
// ---------------------------------------------------------------------------

/// `P = Σ ∂_{J_h}∧∂_{φ^h}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CanonicalAa;

impl PoissonStructure<4> for CanonicalAa {
    fn bivector<S: Scalar>(&self, _x: &[S; 4]) -> [[S; 4]; 4] {
        let mut p = [[S::cst(0.0); 4]; 4];
        for h in 0..2 {
            p[h][2 + h] = S::cst(1.0);
            p[2 + h][h] = S::cst(-1.0);
        }
        p
    }
}

/// `P₁^{J_k φ^h} = (R⁻¹)_{hk}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RecursionAa;

fn rinv_generic<S: Scalar>(x: &[S; 4]) -> [[S; 2]; 2] {
    let (a, b) = (x[J1], x[J2]);
    let det = a * a - b * b * 4.0;
    [[a / det, -b / det], [-(b * 4.0) / det, a / det]]
}

impl PoissonStructure<4> for RecursionAa {
    fn bivector<S: Scalar>(&self, x: &[S; 4]) -> [[S; 4]; 4] {
        let ri = rinv_generic(x);
        let mut p = [[S::cst(0.0); 4]; 4];
        for k in 0..2 {
            for h in 0..2 {
                p[k][2 + h] = ri[h][k];
                p[2 + h][k] = -ri[h][k];
            }
        }
        p
    }

    fn check_domain(&self, x: &[f64; 4]) -> Result<()> {
        singular_check(x[J1], x[J2])
    }
}

fn singular_check(j1: f64, j2: f64) -> Result<()> {
    let det = j1 * j1 - 4.0 * j2 * j2;
    let scale = (j1.abs() + 2.0 * j2.abs()).powi(2);
    if det.is_nan() || det.abs() <= SINGULAR_R * scale {
        return Err(Error::Domain(format!("R is singular at J = ({j1}, {j2})")));
    }
    Ok(())
}

/// `H_i` for `i = 0..3`: `(−mk²/(2S²), −mk²/S, mk² ln S, mk² S)`.
#[derive(Clone, Copy, Debug)]
pub struct HierarchyHamiltonian {
    pub params: KeplerParams,
    pub level: usize,
}

impl Observable<4> for HierarchyHamiltonian {
    fn eval<S: Scalar>(&self, x: &[S; 4]) -> S {
        let KeplerParams { m, k } = self.params;
        let mk2 = m * k * k;
        let s = x[J1] + x[J2] * 2.0;
        match self.level {
            0 => s.square().recip() * (-mk2 / 2.0),
            1 => s.recip() * -mk2,
            2 => s.ln() * mk2,
            _ => s * mk2,
        }
    }
}

/// `X_i = mk²/S^{3−i} (∂_{φ¹} + 2∂_{φ²})`.
#[derive(Clone, Copy, Debug)]
pub struct HierarchyField {
    pub params: KeplerParams,
    pub level: usize,
}

impl VectorField<4> for HierarchyField {
    fn eval<S: Scalar>(&self, x: &[S; 4]) -> [S; 4] {
        let KeplerParams { m, k } = self.params;
        let s = x[J1] + x[J2] * 2.0;
        let c = s.powi(3 - self.level as i32).recip() * (m * k * k);
        [S::cst(0.0), S::cst(0.0), c, c * 2.0]
    }
}

/// `Δ_j = 2/(4 − j) Σ λ_h ∂_{J_h}` with `λ₁ = ½(J₁² + 4J₂²)`, `λ₂ = J₁J₂`;
/// `j = 0` gives the unscaled `Δ`.
#[derive(Clone, Copy, Debug)]
pub struct MasterSymmetry {
    pub j: usize,
}

impl MasterSymmetry {
    pub fn factor(&self) -> f64 {
        if self.j == 0 {
            1.0
        } else {
            2.0 / (4.0 - self.j as f64)
        }
    }
}

impl VectorField<4> for MasterSymmetry {
    fn eval<S: Scalar>(&self, x: &[S; 4]) -> [S; 4] {
        let f = self.factor();
        let l1 = (x[J1].square() + x[J2].square() * 4.0) * 0.5;
        let l2 = x[J1] * x[J2];
        [l1 * f, l2 * f, S::cst(0.0), S::cst(0.0)]
    }
}

/// Hamiltonians `H_0..H_3` and field coefficients `mk²/S^{3−i}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyBundle {
    pub h: [f64; 4],
    pub x: [f64; 4],
}

pub fn hierarchy(s: &ActionAngleState) -> Result<HierarchyBundle> {
    s.check()?;
    let x = s.to_array();
    let h = std::array::from_fn(|i| {
        HierarchyHamiltonian {
            params: s.params,
            level: i,
        }
        .value(&x)
    });
    let coeff = std::array::from_fn(|i| {
        HierarchyField {
            params: s.params,
            level: i,
        }
        .at(&x)[PHI1]
    });
    Ok(HierarchyBundle { h, x: coeff })
}

/// `(λ₁, λ₂)` and the scaling `2/(4 − j)` of `Δ_j`.
pub fn master_symmetry(s: &ActionAngleState, j: usize) -> Result<([f64; 2], f64)> {
    s.check()?;
    if !(1..=3).contains(&j) {
        return Err(Error::InvalidArgument(format!(
            "master symmetry index {j} not in 1..=3"
        )));
    }
    let l1 = 0.5 * (s.j1 * s.j1 + 4.0 * s.j2 * s.j2);
    Ok(([l1, s.j1 * s.j2], MasterSymmetry { j }.factor()))
}

/// `R` and its true inverse.
pub fn r_matrices(s: &ActionAngleState) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    s.check()?;
    singular_check(s.j1, s.j2)?;
    let r = Matrix2::new(s.j1, s.j2, 4.0 * s.j2, s.j1);
    let ri = rinv_generic(&s.to_array());
    Ok((r, Matrix2::new(ri[0][0], ri[0][1], ri[1][0], ri[1][1])))
}

fn omega_aa() -> Matrix4<f64> {
    let mut w = Matrix4::zeros();
    add_wedge(&mut w, 1.0, J1, PHI1);
    add_wedge(&mut w, 1.0, J2, PHI2);
    w
}

/// `ω₁ = Σ R_{kh} dJ_k∧dφ^h`.
fn omega1_aa(j1: f64, j2: f64) -> Matrix4<f64> {
    let r = Matrix2::new(j1, j2, 4.0 * j2, j1);
    let mut w = Matrix4::zeros();
    for k in 0..2 {
        for h in 0..2 {
            add_wedge(&mut w, r[(k, h)], k, 2 + h);
        }
    }
    w
}

/// `T = P₁∘P⁻¹ = diag(R⁻ᵀ, R⁻¹)`: `T^{J_h}_{J_k} = (R⁻¹)_{kh}` and
/// `T^{φ^h}_{φ^k} = (R⁻¹)_{hk}`.
pub fn recursion_aa(s: &ActionAngleState) -> Result<Matrix4<f64>> {
    let (_, ri) = r_matrices(s)?;
    let mut t = Matrix4::zeros();
    t.fixed_view_mut::<2, 2>(0, 0).copy_from(&ri.transpose());
    t.fixed_view_mut::<2, 2>(2, 2).copy_from(&ri);
    Ok(t)
}

/// Eigenvalues of `R` in ascending order, `(J₁ − 2|J₂|, J₁ + 2|J₂|)`, from
/// trace `2J₁` and determinant `J₁² − 4J₂²`.
pub fn eigen_invariants(s: &ActionAngleState) -> Result<(f64, f64)> {
    s.check()?;
    let (tr, det) = (2.0 * s.j1, s.j1 * s.j1 - 4.0 * s.j2 * s.j2);
    let half = tr / 2.0;
    let root = (half * half - det).max(0.0).sqrt();
    Ok((half - root, half + root))
}

/// Eigenvalues of `R⁻¹`, the reciprocals of [`eigen_invariants`].
pub fn inverse_eigen_invariants(s: &ActionAngleState) -> Result<(f64, f64)> {
    singular_check(s.j1, s.j2)?;
    let (a, b) = eigen_invariants(s)?;
    Ok((1.0 / a, 1.0 / b))
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Sampling ranges for `(J₁, J₂)`; angles are uniform in `[0, 2π)`.
pub const AA_BOX: ([f64; 4], [f64; 4]) = (
    [0.2, 0.05, 0.0, 0.0],
    [2.0, 1.0, std::f64::consts::TAU, std::f64::consts::TAU],
);

/// Minimum `|J₁ − 2J₂| / S` for sampled states, away from singular `R`.
pub const AA_SEPARATION: f64 = 0.05;

/// `n` seeded bound states with invertible `R`.
pub fn aa_states(seed: u64, n: usize, params: KeplerParams) -> Result<Vec<ActionAngleState>> {
    let (lo, hi) = AA_BOX;
    let raw = sample_where(&mut rng(seed), &lo, &hi, n, 100 * n + 100, |x| {
        (x[J1] - 2.0 * x[J2]).abs() > AA_SEPARATION * (x[J1] + 2.0 * x[J2])
    })?;
    Ok(raw
        .into_iter()
        .map(|x| ActionAngleState::from_array(x, params))
        .collect())
}

fn point_report(
    identity: &str,
    alpha: f64,
    tol: f64,
    states: &[ActionAngleState],
    f: impl Fn(&ActionAngleState) -> Result<f64> + Sync,
) -> VerificationReport {
    let per: Vec<f64> = states.par_iter().map(|s| f(s).unwrap_or(f64::NAN)).collect();
    let mut stats = ResidualStats::new(identity, alpha, tol);
    for (s, r) in states.iter().zip(per) {
        stats.push(r, &s.to_array());
    }
    stats.finish()
}

fn vec_residual(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let diff = (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|v| v.abs()).fold(0.0, f64::max);
    relative_residual(diff, scale)
}

/// `X_i = {H_i, ·} = {H_{i+1}, ·}₁`, `ι_{X_i}ω = −dH_i`, `ι_{X_i}ω₁ = −dH_{i+1}`
/// for `i = 0, 1, 2`; worst relative residual.
pub fn pairing_residual(s: &ActionAngleState) -> Result<f64> {
    s.check()?;
    singular_check(s.j1, s.j2)?;
    let x = s.to_array();
    let h = |level| HierarchyHamiltonian {
        params: s.params,
        level,
    };
    let w = omega_aa();
    let w1 = omega1_aa(s.j1, s.j2);
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let xi = HierarchyField {
            params: s.params,
            level: i,
        }
        .at(&x);
        let under_p = HamiltonianField::new(&CanonicalAa, h(i)).at(&x);
        let under_p1 = HamiltonianField::new(&RecursionAa, h(i + 1)).at(&x);
        let minus_dh = h(i).grad(&x).map(|v| -v);
        let minus_dh1 = h(i + 1).grad(&x).map(|v| -v);
        let iw: [f64; 4] = interior(&Vector4::from(xi), &w).into();
        let iw1: [f64; 4] = interior(&Vector4::from(xi), &w1).into();
        worst = worst
            .max(vec_residual(&xi, &under_p))
            .max(vec_residual(&xi, &under_p1))
            .max(vec_residual(&iw, &minus_dh))
            .max(vec_residual(&iw1, &minus_dh1));
    }
    Ok(worst)
}

/// `[X_i, Δ_{i+1}] = X_{i+1}` for `i = 0, 1, 2`, exact Jacobians.
pub fn master_residual(s: &ActionAngleState) -> Result<f64> {
    s.check()?;
    let x = s.to_array();
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let c = commutator(
            &HierarchyField {
                params: s.params,
                level: i,
            },
            &MasterSymmetry { j: i + 1 },
            &x,
        );
        let next = HierarchyField {
            params: s.params,
            level: i + 1,
        }
        .at(&x);
        worst = worst.max(vec_residual(&c, &next));
    }
    Ok(worst)
}

/// Largest `|[X_h, X_k]|` component over `h, k = 0..3`.
pub fn involution_residual(s: &ActionAngleState) -> Result<f64> {
    s.check()?;
    let x = s.to_array();
    let mut worst: f64 = 0.0;
    for h in 0..4 {
        for k in 0..4 {
            let c = commutator(
                &HierarchyField {
                    params: s.params,
                    level: h,
                },
                &HierarchyField {
                    params: s.params,
                    level: k,
                },
                &x,
            );
            worst = c.iter().fold(worst, |m, v| m.max(v.abs()));
        }
    }
    Ok(worst)
}

/// `L_Δ ω = ω₁` (finite differences) and `Δ(H) = mk²/(2S)`.
pub fn lie_delta_residual(s: &ActionAngleState) -> Result<f64> {
    s.check()?;
    let x = s.to_array();
    let delta = MasterSymmetry { j: 0 };
    let lie = lie_derivative_2form(
        &|y: &[f64; 4]| Ok(Vector4::from(delta.at(y))),
        &|_: &[f64; 4]| Ok(omega_aa()),
        &x,
    )?;
    let w1 = omega1_aa(s.j1, s.j2);
    let form = relative_residual((lie - w1).amax(), lie.amax().max(w1.amax()));
    let h = HierarchyHamiltonian {
        params: s.params,
        level: 0,
    };
    let dh = h.grad(&x);
    let dv = delta.at(&x);
    let along: f64 = (0..4).map(|i| dv[i] * dh[i]).sum();
    let KeplerParams { m, k } = s.params;
    let tilde = m * k * k / (2.0 * s.s());
    Ok(form.max(relative_residual(along - tilde, tilde)))
}

/// `{I₁, I₂} = 0` under `P`, with `I = J₁ ∓ 2J₂`.
pub fn involution_of_invariants(s: &ActionAngleState) -> Result<f64> {
    use crate::observable::{Coordinate, Scaled, Sum};
    let i1 = Sum(Coordinate(J1), Scaled(-2.0, Coordinate(J2)));
    let i2 = Sum(Coordinate(J1), Scaled(2.0, Coordinate(J2)));
    let (v, _) = bracket_with_scale(&CanonicalAa, &i1, &i2, &s.to_array())?;
    Ok(v.abs())
}

/// `max |∂_k M|` over coordinates, by the same stencil the checks use.
fn derivative_scale(f: &impl Fn(&[f64; 4]) -> Result<Matrix4<f64>>, x: &[f64; 4]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        worst = worst.max(partial_matrix(f, x, k)?.amax());
    }
    Ok(worst)
}

/// `[P, P₁]` largest component, relative to `max |P| · max |∂P₁|`.
pub fn schouten_residual(s: &ActionAngleState) -> Result<f64> {
    singular_check(s.j1, s.j2)?;
    let x = s.to_array();
    let p = |y: &[f64; 4]| Ok(CanonicalAa.bivector_matrix(y));
    let p1 = |y: &[f64; 4]| {
        RecursionAa.check_domain(y)?;
        Ok(RecursionAa.bivector_matrix(y))
    };
    let value = trivector_max(&schouten_bracket(&p, &p1, &x)?);
    Ok(relative_residual(value, derivative_scale(&p1, &x)?))
}

/// Largest Nijenhuis torsion component of `T` on coordinate fields,
/// relative to `max |T| · max |∂T|`.
pub fn torsion_residual(s: &ActionAngleState) -> Result<f64> {
    let x = s.to_array();
    let t = |y: &[f64; 4]| recursion_aa(&ActionAngleState::from_array(*y, s.params));
    let value = max_torsion_on_coordinate_fields(&t, &x)?;
    Ok(relative_residual(value, t(&x)?.amax() * derivative_scale(&t, &x)?))
}

/// Schouten compatibility `[P, P₁]` and torsion of `T` over `states`.
pub fn compatibility_and_torsion(states: &[ActionAngleState], alpha: f64, tol: f64) -> Suite {
    let mut suite = Suite::new("aa-compatibility");
    suite.push(point_report("aa/schouten", alpha, tol, states, schouten_residual));
    suite.push(point_report("aa/torsion", alpha, tol, states, torsion_residual));
    suite
}

/// Master-symmetry chain, involution of the hierarchy, `L_Δ ω = ω₁` and
/// `Δ(H) = H̃`.
pub fn commutator_checks(states: &[ActionAngleState], alpha: f64, tol: f64) -> Suite {
    let mut suite = Suite::new("aa-commutators");
    suite.push(point_report("aa/master-symmetry", alpha, tol, states, master_residual));
    // exact zero: the fields are J-dependent multiples of a fixed angle direction
    let inv = point_report("aa/hierarchy-involution", alpha, 0.0, states, involution_residual);
    suite.push(VerificationReport {
        pass: inv.n_points > 0 && inv.max_residual == 0.0,
        ..inv
    });
    suite.push(point_report("aa/lie-delta", alpha, tol, states, lie_delta_residual));
    suite
}

/// Tolerances of the action-angle identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AaTolerances {
    pub round_trip: f64,
    pub pairing: f64,
    pub master: f64,
    pub compatibility: f64,
    pub eigen: f64,
}

impl Default for AaTolerances {
    fn default() -> Self {
        Self {
            round_trip: 1e-12,
            pairing: 1e-10,
            master: 1e-9,
            compatibility: 1e-8,
            eigen: 1e-12,
        }
    }
}

/// `E → J → E` over states drawn from `(E, D)` pairs.
pub fn round_trip_residual(s: &ActionAngleState) -> Result<f64> {
    let e = energy_from_actions(s)?;
    let (j1, j2) = actions_from_state(e, 2.0 * s.j2, s.params)?;
    let back = energy_from_actions(&ActionAngleState { j1, j2, ..*s })?;
    Ok(relative_residual(back - e, e).max(relative_residual(j1 - s.j1, s.s())))
}

/// Eigenvalues of `R` against `(J₁ − 2J₂, J₁ + 2J₂)` and `R R⁻¹ = 1`.
pub fn eigen_residual(s: &ActionAngleState) -> Result<f64> {
    let (a, b) = eigen_invariants(s)?;
    let (r, ri) = r_matrices(s)?;
    let scale = s.s();
    let eig = relative_residual((a - (s.j1 - 2.0 * s.j2)).abs().max((b - s.s()).abs()), scale);
    let inv = (r * ri - Matrix2::identity()).amax();
    Ok(eig.max(inv))
}

/// Every pointwise action-angle identity. `alpha` only labels the reports.
pub fn aa_identity_suite(states: &[ActionAngleState], alpha: f64, tol: AaTolerances) -> Suite {
    let mut suite = Suite::new("action-angle");
    suite.push(point_report(
        "aa/round-trip",
        alpha,
        tol.round_trip,
        states,
        round_trip_residual,
    ));
    suite.push(point_report("aa/pairing", alpha, tol.pairing, states, pairing_residual));
    suite.extend(commutator_checks(states, alpha, tol.master));
    suite.push(point_report("aa/eigen", alpha, tol.eigen, states, eigen_residual));
    suite.push(point_report(
        "aa/invariant-involution",
        alpha,
        tol.eigen,
        states,
        involution_of_invariants,
    ));
    suite.extend(compatibility_and_torsion(states, alpha, tol.compatibility));
    suite
}

// ---------------------------------------------------------------------------
// Mapped trajectories
// ---------------------------------------------------------------------------

/// One row of a trajectory mapped to actions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionRow {
    pub t: f64,
    pub j1: f64,
    pub j2: f64,
    pub i1: f64,
    pub i2: f64,
}

fn row(t: f64, e: f64, d: f64, params: KeplerParams) -> Result<ActionRow> {
    let (j1, j2) = actions_from_state(e, d, params)?;
    let (i1, i2) = eigen_invariants(&ActionAngleState::new(j1, j2, 0.0, 0.0, params)?)?;
    Ok(ActionRow { t, j1, j2, i1, i2 })
}

/// Maps an equatorial trajectory through `(E, D = |Θ|)`.
pub fn map_equatorial(sol: &Solution<4>, params: KeplerParams) -> Result<Vec<ActionRow>> {
    sol.times
        .iter()
        .zip(&sol.states)
        .map(|(t, x)| {
            let e = EquatorialPoint::from_array(*x);
            row(*t, eq_hamiltonian(&e, params)?, theta(&e)?.abs(), params)
        })
        .collect()
}

/// Maps a classical Cartesian trajectory through `(E, D = |L|)`.
pub fn map_cartesian(sol: &Solution<6>, params: KeplerParams) -> Result<Vec<ActionRow>> {
    sol.times
        .iter()
        .zip(&sol.states)
        .map(|(t, x)| {
            let p = PhasePoint::from_array(*x);
            let l = angular_momentum(&p, Alpha::ONE);
            let d = l.iter().map(|c| c * c).sum::<f64>().sqrt();
            row(*t, kepler_hamiltonian(&p, params, Alpha::ONE)?, d, params)
        })
        .collect()
}

/// Drift of `J₁, J₂, I₁, I₂` against the first row, each relative to the
/// initial `S = J₁ + 2J₂` so the circular limit `J₁ → 0` stays scale-free.
pub fn action_drift_report(rows: &[ActionRow], alpha: f64, tol: f64) -> Result<Suite> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    let scale = first.j1 + 2.0 * first.j2;
    let get = |r: &ActionRow| [r.j1, r.j2, r.i1, r.i2];
    let v0 = get(first);
    let names = ["aa-drift/J1", "aa-drift/J2", "aa-drift/I1", "aa-drift/I2"];
    let mut stats: Vec<ResidualStats> = names.iter().map(|n| ResidualStats::new(*n, alpha, tol)).collect();
    for r in rows {
        let v = get(r);
        for i in 0..4 {
            stats[i].push(relative_residual(v[i] - v0[i], scale), &[r.t]);
        }
    }
    let mut suite = Suite::new("aa-drift");
    for s in stats {
        suite.push(s.finish());
    }
    Ok(suite)
}

pub const AA_CSV_HEADER: [&str; 5] = ["t", "J1", "J2", "I1", "I2"];

pub fn write_actions_csv<W: Write>(w: W, rows: &[ActionRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(AA_CSV_HEADER)?;
    for r in rows {
        out.write_record([r.t, r.j1, r.j2, r.i1, r.i2].map(fmt17))?;
    }
    out.flush()?;
    Ok(())
}
