//! The reduced equatorial system in conformable polar coordinates
//! `(r, p_r, φ, p_φ)` (indices 0..3).
//!
//! The bracket is canonical in `(r, p_r)` and weighted by `sin²φ` in
//! `(φ, p_φ)`:
//!
//! `{f, g} = ∂_{p_r}f ∂_r g − ∂_r f ∂_{p_r}g + sin²φ (∂_{p_φ}f ∂_φ g − ∂_φ f ∂_{p_φ}g)`,
//!
//! and `H = p_r²/(2m) + p_φ²/(2m r² sin⁴φ) − k/r`. Complex quantities are
//! carried as `[re, im]` pairs.

use std::io::Write;

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lie_derivative_2form, lie_derivative_tensor, max_torsion_on_coordinate_fields};
use crate::integrator::{integrate, Options, Solution};
use crate::jet::Scalar;
use crate::kepler::{fmt17, KeplerParams};
use crate::observable::{commutator, Observable, VectorField};
use crate::poisson::{
    add_wedge, bracket_with_scale, compose_form, interior, wedge, HamiltonianField, PoissonStructure,
};
use crate::report::{relative_residual, ResidualStats, Suite, VerificationReport};
use crate::sampling::{rng, sample_box};

pub const R: usize = 0;
pub const PR: usize = 1;
pub const PHI: usize = 2;
pub const PPHI: usize = 3;

/// Points with `|sin φ|` below this are outside the domain.
pub const SIN_GUARD: f64 = 1e-12;

/// Integration stops once `|sin φ|` falls below this.
pub const SIN_STOP: f64 = 1e-3;

/// Pinned generic point `(r, p_r, φ, p_φ)` for nonvanishing-norm checks.
pub const PINNED: [f64; 4] = [1.3, 0.2, 1.1, 0.8];

fn check_domain_array(x: &[f64; 4]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("equatorial point"));
    }
    if x[R] <= 0.0 {
        return Err(Error::Domain(format!("r = {} must be > 0", x[R])));
    }
    if x[PHI].sin().abs() < SIN_GUARD {
        return Err(Error::Domain(format!("sin(phi) vanishes at phi = {}", x[PHI])));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquatorialPoint {
    pub r: f64,
    pub pr: f64,
    pub phi: f64,
    pub pphi: f64,
}

impl EquatorialPoint {
    pub fn new(r: f64, pr: f64, phi: f64, pphi: f64) -> Result<Self> {
        let e = Self { r, pr, phi, pphi };
        e.check()?;
        Ok(e)
    }

    /// Unchecked; call [`EquatorialPoint::check`] before evaluating.
    pub fn from_array(x: [f64; 4]) -> Self {
        Self {
            r: x[R],
            pr: x[PR],
            phi: x[PHI],
            pphi: x[PPHI],
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.r, self.pr, self.phi, self.pphi]
    }

    pub fn check(&self) -> Result<()> {
        check_domain_array(&self.to_array())
    }
}

/// The reduced Poisson structure.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EquatorialStructure;

impl PoissonStructure<4> for EquatorialStructure {
    fn bivector<S: Scalar>(&self, x: &[S; 4]) -> [[S; 4]; 4] {
        let zero = S::cst(0.0);
        let s2 = x[PHI].sin().square();
        let mut p = [[zero; 4]; 4];
        p[PR][R] = S::cst(1.0);
        p[R][PR] = S::cst(-1.0);
        p[PPHI][PHI] = s2;
        p[PHI][PPHI] = -s2;
        p
    }

    fn check_domain(&self, x: &[f64; 4]) -> Result<()> {
        check_domain_array(x)
    }
}

/// Scalar functions of the reduced system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduced {
    H,
    Theta,
    Gamma,
    M1,
    M2,
    N1,
    N2,
    /// `B_ς = Re(M N*)`.
    BSigma,
    /// `B_β = Im(M N*)`.
    BBeta,
}

#[derive(Clone, Copy, Debug)]
pub struct EqObservable {
    pub params: KeplerParams,
    pub which: Reduced,
}

impl EqObservable {
    pub fn new(params: KeplerParams, which: Reduced) -> Self {
        Self { params, which }
    }
}

impl Observable<4> for EqObservable {
    fn eval<S: Scalar>(&self, x: &[S; 4]) -> S {
        let KeplerParams { m, k } = self.params;
        let (r, pr, pphi) = (x[R], x[PR], x[PPHI]);
        let s = x[PHI].sin();
        let c = x[PHI].cos();
        let s2 = s.square();
        let m1 = || pr * pphi / (s2 * m);
        let m2 = || S::cst(k) - pphi.square() / (r * s2.square() * m);
        match self.which {
            Reduced::H => {
                pr.square() / (2.0 * m) + pphi.square() / (r.square() * s2.square() * (2.0 * m)) - S::cst(k) / r
            }
            Reduced::Theta => pphi / s2,
            Reduced::Gamma => pphi / (r.square() * s2 * m),
            Reduced::M1 => m1(),
            Reduced::M2 => m2(),
            Reduced::N1 => c,
            Reduced::N2 => s,
            Reduced::BSigma => m1() * c + m2() * s,
            Reduced::BBeta => m2() * c - m1() * s,
        }
    }
}

fn value(e: &EquatorialPoint, params: KeplerParams, which: Reduced) -> Result<f64> {
    e.check()?;
    let v = EqObservable::new(params, which).value(&e.to_array());
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("reduced observable"))
    }
}

pub fn eq_hamiltonian(e: &EquatorialPoint, params: KeplerParams) -> Result<f64> {
    value(e, params, Reduced::H)
}

/// `Θ = p_φ / sin²φ`.
pub fn theta(e: &EquatorialPoint) -> Result<f64> {
    value(e, KeplerParams::UNIT, Reduced::Theta)
}

/// `γ = p_φ / (m r² sin²φ)`.
pub fn gamma(e: &EquatorialPoint, params: KeplerParams) -> Result<f64> {
    value(e, params, Reduced::Gamma)
}

pub fn eq_bracket(f: &impl Observable<4>, g: &impl Observable<4>, e: &EquatorialPoint) -> Result<f64> {
    bracket_with_scale(&EquatorialStructure, f, g, &e.to_array()).map(|(v, _)| v)
}

/// Explicit `X_H = (ṙ, ṗ_r, φ̇, ṗ_φ)`.
pub fn eq_field(e: &EquatorialPoint, params: KeplerParams) -> Result<[f64; 4]> {
    e.check()?;
    let KeplerParams { m, k } = params;
    let EquatorialPoint { r, pr, phi, pphi } = *e;
    let (s, c) = phi.sin_cos();
    let v = [
        pr / m,
        pphi * pphi / (m * r.powi(3) * s.powi(4)) - k / (r * r),
        pphi / (m * r * r * s * s),
        2.0 * pphi * pphi * c / (m * r * r * s.powi(3)),
    ];
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite("equatorial field"))
    }
}

fn field_vector(x: &[f64; 4], params: KeplerParams) -> Result<Vector4<f64>> {
    eq_field(&EquatorialPoint::from_array(*x), params).map(Vector4::from)
}

/// `M = M₁ + iM₂` and `N = cos φ + i sin φ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPair {
    pub m: [f64; 2],
    pub n: [f64; 2],
}

impl ComplexPair {
    /// `B = M N*` as `[B_ς, B_β]`.
    pub fn b(&self) -> [f64; 2] {
        let [m1, m2] = self.m;
        let [n1, n2] = self.n;
        [m1 * n1 + m2 * n2, m2 * n1 - m1 * n2]
    }
}

pub fn mn_complex(e: &EquatorialPoint, params: KeplerParams) -> Result<ComplexPair> {
    Ok(ComplexPair {
        m: [value(e, params, Reduced::M1)?, value(e, params, Reduced::M2)?],
        n: [e.phi.cos(), e.phi.sin()],
    })
}

/// `(B_ς, B_β)`.
pub fn b_invariants(e: &EquatorialPoint, params: KeplerParams) -> Result<(f64, f64)> {
    Ok((value(e, params, Reduced::BSigma)?, value(e, params, Reduced::BBeta)?))
}

/// `(B_ς, B_β)` from their expanded component formulas.
pub fn b_expanded(e: &EquatorialPoint, params: KeplerParams) -> Result<(f64, f64)> {
    e.check()?;
    let KeplerParams { m, k } = params;
    let EquatorialPoint { r, pr, phi, pphi } = *e;
    let (s, c) = phi.sin_cos();
    let bs = k * s - pphi * pphi / (m * r * s.powi(3)) + pr * pphi * c / (m * s * s);
    let bb = k * c - pphi * pphi * c / (m * r * s.powi(4)) - pr * pphi / (m * s);
    Ok((bs, bb))
}

// ---------------------------------------------------------------------------
// 2-forms and recursion operators
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormLabel {
    Omega,
    Omega1,
    Omega2,
}

/// An antisymmetric 4×4 form matrix in the basis `(dr, dp_r, dφ, dp_φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedForm {
    pub matrix: Matrix4<f64>,
    pub label: FormLabel,
}

/// `ω = dp_r∧dr + sin⁻²φ dp_φ∧dφ`, the inverse of the reduced bivector.
pub fn omega(e: &EquatorialPoint) -> Result<ReducedForm> {
    e.check()?;
    Ok(ReducedForm {
        matrix: omega_matrix(e.phi),
        label: FormLabel::Omega,
    })
}

fn omega_matrix(phi: f64) -> Matrix4<f64> {
    let mut w = Matrix4::zeros();
    add_wedge(&mut w, 1.0, PR, R);
    add_wedge(&mut w, phi.sin().powi(-2), PPHI, PHI);
    w
}

/// `(Ω₁, Ω₂)` from their closed-form coefficients.
pub fn omega_forms(e: &EquatorialPoint, params: KeplerParams) -> Result<(ReducedForm, ReducedForm)> {
    e.check()?;
    let m = params.m;
    let EquatorialPoint { r, pr, phi, pphi } = *e;
    let (s, c) = phi.sin_cos();
    let mut o1 = Matrix4::zeros();
    add_wedge(&mut o1, -(pr + 2.0 * pphi * c / (r * s.powi(3))) / (m * s), PPHI, PHI);
    add_wedge(&mut o1, -pphi / (m * s), PR, PHI);
    add_wedge(&mut o1, pphi * pphi * c / (m * r * r * s.powi(4)), R, PHI);
    let mut o2 = Matrix4::zeros();
    add_wedge(&mut o2, (-pr * c + 2.0 * pphi / (r * s)) / (m * s * s), PPHI, PHI);
    add_wedge(&mut o2, -pphi * c / (m * s * s), PR, PHI);
    add_wedge(&mut o2, -pphi * pphi / (m * r * r * s.powi(3)), R, PHI);
    Ok((
        ReducedForm {
            matrix: o1,
            label: FormLabel::Omega1,
        },
        ReducedForm {
            matrix: o2,
            label: FormLabel::Omega2,
        },
    ))
}

/// `dM∧dN*` split into `(Re, Im)`, assembled from exact differentials.
pub fn omega_from_differentials(e: &EquatorialPoint, params: KeplerParams) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
    e.check()?;
    let x = e.to_array();
    let d = |w| EqObservable::new(params, w).grad(&x);
    let (dm1, dm2, dn1, dn2) = (d(Reduced::M1), d(Reduced::M2), d(Reduced::N1), d(Reduced::N2));
    // (dM₁ + i dM₂)∧(dN₁ − i dN₂)
    let re = wedge(&dm1, &dn1) + wedge(&dm2, &dn2);
    let im = wedge(&dm2, &dn1) - wedge(&dm1, &dn2);
    Ok((re, im))
}

fn form_matrix(x: &[f64; 4], params: KeplerParams, which: u8) -> Result<Matrix4<f64>> {
    let (o1, o2) = omega_forms(&EquatorialPoint::from_array(*x), params)?;
    match which {
        1 => Ok(o1.matrix),
        2 => Ok(o2.matrix),
        _ => Err(Error::InvalidArgument(format!("form index {which} not in {{1, 2}}"))),
    }
}

/// `T_i = ω⁻¹∘Ω_i`, stored as `T[(i, j)]` for `∂_i ⊗ dx^j`.
pub fn recursion_matrix(e: &EquatorialPoint, params: KeplerParams, which: u8) -> Result<Matrix4<f64>> {
    let x = e.to_array();
    Ok(EquatorialStructure.bivector_matrix(&x) * form_matrix(&x, params, which)?)
}

/// Frobenius norm of `L_{X_H} T_i`.
pub fn recursion_lie_norm(e: &EquatorialPoint, params: KeplerParams, which: u8) -> Result<f64> {
    let lie = lie_derivative_tensor(
        &|y: &[f64; 4]| field_vector(y, params),
        &|y: &[f64; 4]| recursion_matrix(&EquatorialPoint::from_array(*y), params, which),
        &e.to_array(),
    )?;
    Ok(lie.norm())
}

/// Largest Nijenhuis torsion component of `T_i` on coordinate fields.
pub fn recursion_torsion(e: &EquatorialPoint, params: KeplerParams, which: u8) -> Result<f64> {
    e.check()?;
    max_torsion_on_coordinate_fields(
        &|y: &[f64; 4]| recursion_matrix(&EquatorialPoint::from_array(*y), params, which),
        &e.to_array(),
    )
}

// ---------------------------------------------------------------------------
// Symmetry fields
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

/// `X̃₁ = N* X_M` (`which = 1`) or `X̃₂ = M X_{N*}` (`which = 2`), one real part.
#[derive(Clone, Copy, Debug)]
pub struct XTilde {
    pub params: KeplerParams,
    pub which: u8,
    pub part: Part,
}

impl VectorField<4> for XTilde {
    fn eval<S: Scalar>(&self, x: &[S; 4]) -> [S; 4] {
        let obs = |w| EqObservable::new(self.params, w);
        let field = |w| HamiltonianField::new(&EquatorialStructure, obs(w)).eval(x);
        let (xm1, xm2, xn1, xn2) = (
            field(Reduced::M1),
            field(Reduced::M2),
            field(Reduced::N1),
            field(Reduced::N2),
        );
        let (m1, m2, n1, n2) = (
            obs(Reduced::M1).eval(x),
            obs(Reduced::M2).eval(x),
            obs(Reduced::N1).eval(x),
            obs(Reduced::N2).eval(x),
        );
        std::array::from_fn(|i| match (self.which, self.part) {
            (1, Part::Re) => n1 * xm1[i] + n2 * xm2[i],
            (1, Part::Im) => n1 * xm2[i] - n2 * xm1[i],
            (_, Part::Re) => m1 * xn1[i] + m2 * xn2[i],
            (_, Part::Im) => m2 * xn1[i] - m1 * xn2[i],
        })
    }
}

fn max_abs(m: &Matrix4<f64>) -> f64 {
    m.amax()
}

fn matrix_residual(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    relative_residual((a - b).amax(), max_abs(a).max(max_abs(b)))
}

fn vector_residual(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let diff = (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|v| v.abs()).fold(0.0, f64::max);
    relative_residual(diff, scale)
}

/// Residuals of the Noether pair for `X_Θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoetherResiduals {
    /// `max |L_{X_Θ} ω|` relative to `max |ω| · max |DX_Θ|`.
    pub lie_omega: f64,
    /// `|X_Θ(H)|` relative to its largest term.
    pub theta_h: f64,
    /// `max |[X_H, X_Θ]|` relative to the field magnitudes.
    pub commutator: f64,
}

pub fn noether_residuals(e: &EquatorialPoint, params: KeplerParams) -> Result<NoetherResiduals> {
    e.check()?;
    let x = e.to_array();
    let s = EquatorialStructure;
    let theta_obs = EqObservable::new(params, Reduced::Theta);
    let h_obs = EqObservable::new(params, Reduced::H);
    let x_theta = HamiltonianField::new(&s, theta_obs);
    let x_h = HamiltonianField::new(&s, h_obs);
    let lie = lie_derivative_2form(
        &|y: &[f64; 4]| Ok(Vector4::from(x_theta.at(y))),
        &|y: &[f64; 4]| Ok(omega_matrix(y[PHI])),
        &x,
    )?;
    let (th, scale) = bracket_with_scale(&s, &theta_obs, &h_obs, &x)?;
    let c = commutator(&x_h, &x_theta, &x);
    let dx_scale = x_theta
        .jacobian(&x)
        .iter()
        .flatten()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    let lie_scale = omega_matrix(x[PHI]).amax() * dx_scale;
    let field_scale = x_h
        .at(&x)
        .iter()
        .chain(&x_theta.at(&x))
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    Ok(NoetherResiduals {
        lie_omega: relative_residual(lie.amax(), lie_scale),
        theta_h: relative_residual(th, scale),
        commutator: relative_residual(c.iter().map(|v| v.abs()).fold(0.0, f64::max), field_scale),
    })
}

/// Worst relative residual of `L_{X̃₁}ω = Ω` and `L_{X̃₂}ω = −Ω`, real parts
/// checked separately.
pub fn xtilde_lie_residual(e: &EquatorialPoint, params: KeplerParams) -> Result<f64> {
    let x = e.to_array();
    let (o1, o2) = omega_forms(e, params)?;
    let mut worst: f64 = 0.0;
    for (which, sign) in [(1u8, 1.0), (2u8, -1.0)] {
        for (part, target) in [(Part::Re, o1.matrix), (Part::Im, o2.matrix)] {
            let field = XTilde { params, which, part };
            let lie = lie_derivative_2form(
                &|y: &[f64; 4]| Ok(Vector4::from(field.at(y))),
                &|y: &[f64; 4]| Ok(omega_matrix(y[PHI])),
                &x,
            )?;
            worst = worst.max(matrix_residual(&lie, &(target * sign)));
        }
    }
    Ok(worst)
}

/// Worst relative residual of `[X_H, X̃₁] = iB X_γ` and `[X_H, X̃₂] = −iB X_γ`.
pub fn xtilde_commutator_residual(e: &EquatorialPoint, params: KeplerParams) -> Result<f64> {
    e.check()?;
    let x = e.to_array();
    let s = EquatorialStructure;
    let x_h = HamiltonianField::new(&s, EqObservable::new(params, Reduced::H));
    let x_gamma = HamiltonianField::new(&s, EqObservable::new(params, Reduced::Gamma)).at(&x);
    let (bs, bb) = b_invariants(e, params)?;
    let mut worst: f64 = 0.0;
    for (which, sign) in [(1u8, 1.0), (2u8, -1.0)] {
        // iB = −B_β + i B_ς
        for (part, coeff) in [(Part::Re, -bb), (Part::Im, bs)] {
            let c = commutator(&x_h, &XTilde { params, which, part }, &x);
            let expected = x_gamma.map(|v| sign * coeff * v);
            worst = worst.max(vector_residual(&c, &expected));
        }
    }
    Ok(worst)
}

/// Worst relative residual of `ι_{X_H}Ω₁ + γ dB_β` and `ι_{X_H}Ω₂ − γ dB_ς`.
pub fn quasi_residual(e: &EquatorialPoint, params: KeplerParams) -> Result<f64> {
    let x = e.to_array();
    let xh = Vector4::from(eq_field(e, params)?);
    let (o1, o2) = omega_forms(e, params)?;
    let g = gamma(e, params)?;
    let dbs = EqObservable::new(params, Reduced::BSigma).grad(&x);
    let dbb = EqObservable::new(params, Reduced::BBeta).grad(&x);
    let lhs1: [f64; 4] = interior(&xh, &o1.matrix).into();
    let lhs2: [f64; 4] = interior(&xh, &o2.matrix).into();
    Ok(vector_residual(&lhs1, &dbb.map(|v| -g * v)).max(vector_residual(&lhs2, &dbs.map(|v| g * v))))
}

// ---------------------------------------------------------------------------
// Sampling and reports
// ---------------------------------------------------------------------------

/// Sampling box for `(r, p_r, φ, p_φ)`, away from `sin φ = 0`.
pub const EQ_BOX: ([f64; 4], [f64; 4]) = ([0.5, -1.0, 0.3, -1.5], [2.0, 1.0, 2.8, 1.5]);

/// `n` seeded points in [`EQ_BOX`].
pub fn eq_points(seed: u64, n: usize) -> Vec<EquatorialPoint> {
    let (lo, hi) = EQ_BOX;
    sample_box(&mut rng(seed), &lo, &hi, n)
        .into_iter()
        .map(EquatorialPoint::from_array)
        .collect()
}

/// Residual per point, evaluated in parallel and merged in input order.
/// A failed evaluation counts as a non-finite residual.
fn point_report(
    identity: &str,
    alpha: f64,
    tol: f64,
    points: &[EquatorialPoint],
    f: impl Fn(&EquatorialPoint) -> Result<f64> + Sync,
) -> VerificationReport {
    let per: Vec<f64> = points.par_iter().map(|e| f(e).unwrap_or(f64::NAN)).collect();
    let mut stats = ResidualStats::new(identity, alpha, tol);
    for (e, r) in points.iter().zip(per) {
        stats.push(r, &e.to_array());
    }
    stats.finish()
}

fn first_integral(e: &EquatorialPoint, params: KeplerParams, which: Reduced) -> Result<f64> {
    let (v, scale) = bracket_with_scale(
        &EquatorialStructure,
        &EqObservable::new(params, Reduced::H),
        &EqObservable::new(params, which),
        &e.to_array(),
    )?;
    Ok(relative_residual(v, scale))
}

/// `{H, M₁} = −γM₂`, `{H, M₂} = γM₁`, `{H, N₁} = −γN₂`, `{H, N₂} = γN₁`.
pub fn rotation_residual(e: &EquatorialPoint, params: KeplerParams) -> Result<f64> {
    let x = e.to_array();
    let g = gamma(e, params)?;
    let h = EqObservable::new(params, Reduced::H);
    let val = |w| EqObservable::new(params, w).value(&x);
    let mut worst: f64 = 0.0;
    for (lhs, coeff, rhs) in [
        (Reduced::M1, -1.0, Reduced::M2),
        (Reduced::M2, 1.0, Reduced::M1),
        (Reduced::N1, -1.0, Reduced::N2),
        (Reduced::N2, 1.0, Reduced::N1),
    ] {
        let (v, scale) = bracket_with_scale(&EquatorialStructure, &h, &EqObservable::new(params, lhs), &x)?;
        let expected = coeff * g * val(rhs);
        worst = worst.max(relative_residual(v - expected, scale.max(expected.abs())));
    }
    Ok(worst)
}

/// Explicit field against `{H, ·}`, and `ι_{X_H}ω = −dH`.
pub fn field_residual(e: &EquatorialPoint, params: KeplerParams) -> Result<f64> {
    let x = e.to_array();
    let explicit = eq_field(e, params)?;
    let h = EqObservable::new(params, Reduced::H);
    let derived = HamiltonianField::new(&EquatorialStructure, h).at(&x);
    let contracted: [f64; 4] = interior(&Vector4::from(explicit), &omega(e)?.matrix).into();
    let minus_dh = h.grad(&x).map(|v| -v);
    Ok(vector_residual(&explicit, &derived).max(vector_residual(&contracted, &minus_dh)))
}

/// `ι_{X_H}Ω₁ + γ dB_β = 0` and `ι_{X_H}Ω₂ − γ dB_ς = 0` over `points`.
pub fn quasi_check(points: &[EquatorialPoint], params: KeplerParams, alpha: f64, tol: f64) -> VerificationReport {
    point_report("eq/quasi-bi-hamiltonian", alpha, tol, points, |e| {
        quasi_residual(e, params)
    })
}

/// Tolerances of the reduced-system identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EqTolerances {
    pub first_integral: f64,
    pub rotation: f64,
    pub field: f64,
    pub quasi: f64,
    pub reconstruction: f64,
    pub composition: f64,
    pub noether: f64,
    pub xtilde: f64,
}

impl Default for EqTolerances {
    fn default() -> Self {
        Self {
            first_integral: 1e-9,
            rotation: 1e-9,
            field: 1e-10,
            quasi: 1e-8,
            reconstruction: 1e-10,
            composition: 1e-10,
            noether: 1e-7,
            xtilde: 1e-7,
        }
    }
}

/// Every pointwise identity of the reduced system. `alpha` only labels
/// the reports.
pub fn eq_identity_suite(points: &[EquatorialPoint], params: KeplerParams, alpha: f64, tol: EqTolerances) -> Suite {
    let mut suite = Suite::new("equatorial");
    for (name, w) in [
        ("eq/H-Theta", Reduced::Theta),
        ("eq/H-Bsigma", Reduced::BSigma),
        ("eq/H-Bbeta", Reduced::BBeta),
    ] {
        suite.push(point_report(name, alpha, tol.first_integral, points, |e| {
            first_integral(e, params, w)
        }));
    }
    suite.push(point_report("eq/rotation", alpha, tol.rotation, points, |e| {
        rotation_residual(e, params)
    }));
    suite.push(point_report("eq/field", alpha, tol.field, points, |e| {
        field_residual(e, params)
    }));
    suite.push(quasi_check(points, params, alpha, tol.quasi));
    suite.push(point_report("eq/dM-dN", alpha, tol.reconstruction, points, |e| {
        let (o1, o2) = omega_forms(e, params)?;
        let (re, im) = omega_from_differentials(e, params)?;
        Ok(matrix_residual(&o1.matrix, &re).max(matrix_residual(&o2.matrix, &im)))
    }));
    suite.push(point_report("eq/omega-T", alpha, tol.composition, points, |e| {
        let w = omega(e)?.matrix;
        let (o1, o2) = omega_forms(e, params)?;
        let r1 = matrix_residual(&compose_form(&w, &recursion_matrix(e, params, 1)?), &o1.matrix);
        let r2 = matrix_residual(&compose_form(&w, &recursion_matrix(e, params, 2)?), &o2.matrix);
        Ok(r1.max(r2))
    }));
    suite.push(point_report("eq/noether-theta", alpha, tol.noether, points, |e| {
        let n = noether_residuals(e, params)?;
        Ok(n.lie_omega.max(n.theta_h).max(n.commutator))
    }));
    suite.push(point_report("eq/lie-xtilde", alpha, tol.xtilde, points, |e| {
        xtilde_lie_residual(e, params)
    }));
    suite.push(point_report("eq/xtilde-commutator", alpha, tol.xtilde, points, |e| {
        xtilde_commutator_residual(e, params)
    }));
    suite
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// Integrates the reduced field. The run halts with a hyperplane event on
/// index [`PHI`] once `|sin φ| < SIN_STOP`.
pub fn integrate_equatorial(
    e0: &EquatorialPoint,
    params: KeplerParams,
    t_end: f64,
    rel_tol: f64,
) -> Result<Solution<4>> {
    e0.check()?;
    let mut opts = Options::new(rel_tol)?;
    // p_φ scales as sin²φ near the stop band
    opts.abs_tol = rel_tol * 1e-3;
    integrate(
        |x| eq_field(&EquatorialPoint::from_array(*x), params),
        e0.to_array(),
        t_end,
        &opts,
        |x| (x[PHI].sin().abs() < SIN_STOP).then_some(PHI),
    )
}

/// Drift of `H`, `Θ`, `B_ς`, `B_β` against their initial values. `H` and `Θ`
/// are relative to their own magnitude, `B` relative to `max(|B(0)|, k)`.
pub fn eq_conservation_report(sol: &Solution<4>, params: KeplerParams, alpha: f64, tol: f64) -> Result<Suite> {
    if sol.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let invariants = |x: &[f64; 4]| -> Result<[f64; 4]> {
        let e = EquatorialPoint::from_array(*x);
        let (bs, bb) = b_invariants(&e, params)?;
        Ok([eq_hamiltonian(&e, params)?, theta(&e)?, bs, bb])
    };
    let v0 = invariants(&sol.states[0])?;
    let b_scale = v0[2].hypot(v0[3]).max(params.k);
    let scales = [v0[0].abs(), v0[1].abs(), b_scale, b_scale];
    let names = [
        "eq-conservation/H",
        "eq-conservation/Theta",
        "eq-conservation/Bs",
        "eq-conservation/Bb",
    ];
    let mut stats: Vec<ResidualStats> = names.iter().map(|n| ResidualStats::new(*n, alpha, tol)).collect();
    for x in &sol.states {
        let v = invariants(x)?;
        for i in 0..4 {
            stats[i].push(relative_residual(v[i] - v0[i], scales[i]), x);
        }
    }
    let mut suite = Suite::new("eq-conservation");
    for s in stats {
        suite.push(s.finish());
    }
    Ok(suite)
}

pub const EQ_CSV_HEADER: [&str; 9] = ["t", "r", "pr", "phi", "pphi", "H", "Theta", "Bs", "Bb"];

pub fn write_equatorial_csv<W: Write>(w: W, sol: &Solution<4>, params: KeplerParams) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EQ_CSV_HEADER)?;
    for (t, x) in sol.times.iter().zip(&sol.states) {
        let e = EquatorialPoint::from_array(*x);
        let (bs, bb) = b_invariants(&e, params)?;
        let row: Vec<String> = std::iter::once(*t)
            .chain(x.iter().copied())
            .chain([eq_hamiltonian(&e, params)?, theta(&e)?, bs, bb])
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
    use crate::observable::Coordinate;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    const UNIT: KeplerParams = KeplerParams::UNIT;

    fn pt(r: f64, pr: f64, phi: f64, pphi: f64) -> EquatorialPoint {
        EquatorialPoint::new(r, pr, phi, pphi).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn domain_is_enforced() {
        assert!(EquatorialPoint::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(EquatorialPoint::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(EquatorialPoint::new(1.0, 0.0, PI, 1.0).is_err());
        assert!(EquatorialPoint::new(1.0, 0.0, 4.0, 1.0).is_ok());
    }

    #[test]
    fn hamiltonian_examples() {
        close(
            eq_hamiltonian(&pt(1.0, 0.0, FRAC_PI_2, 1.0), UNIT).unwrap(),
            -0.5,
            1e-15,
        );
        // 0.01/2 + 1/(2·4) − 1/2
        close(
            eq_hamiltonian(&pt(2.0, 0.1, FRAC_PI_2, 1.0), UNIT).unwrap(),
            -0.37,
            1e-14,
        );
    }

    #[test]
    fn bracket_examples() {
        let e = pt(1.3, 0.2, FRAC_PI_3, 0.8);
        close(eq_bracket(&Coordinate(PR), &Coordinate(R), &e).unwrap(), 1.0, 1e-15);
        close(
            eq_bracket(&Coordinate(PPHI), &Coordinate(PHI), &e).unwrap(),
            0.75,
            1e-15,
        );
    }

    #[test]
    fn circular_field() {
        let v = eq_field(&pt(1.0, 0.0, FRAC_PI_2, 1.0), UNIT).unwrap();
        let expected = [0.0, 0.0, 1.0, 0.0];
        for i in 0..4 {
            close(v[i], expected[i], 1e-15);
        }
    }

    #[test]
    fn theta_and_complex_examples() {
        close(theta(&pt(1.0, 0.0, FRAC_PI_2, 1.0)).unwrap(), 1.0, 1e-15);
        let c = mn_complex(&pt(1.0, 0.0, FRAC_PI_2, 1.0), UNIT).unwrap();
        assert!(c.m.iter().chain(&c.b()).all(|v| v.abs() < 1e-15));
        let e = pt(2.0, 0.1, FRAC_PI_2, 1.0);
        let c = mn_complex(&e, UNIT).unwrap();
        close(c.m[0], 0.1, 1e-15);
        close(c.m[1], 0.5, 1e-15);
        close(c.n[0], 0.0, 1e-15);
        close(c.n[1], 1.0, 1e-15);
        let (bs, bb) = b_invariants(&e, UNIT).unwrap();
        close(bs, 0.5, 1e-15);
        close(bb, -0.1, 1e-15);
        let (xs, xb) = b_expanded(&e, UNIT).unwrap();
        close(xs, 0.5, 1e-15);
        close(xb, -0.1, 1e-15);
    }

    #[test]
    fn b_product_matches_expansion() {
        let params = KeplerParams::new(3.0, 0.7).unwrap();
        for e in eq_points(5, 50) {
            let (a, b) = b_invariants(&e, params).unwrap();
            let (c, d) = b_expanded(&e, params).unwrap();
            close(a, c, 1e-12 * a.abs().max(1.0));
            close(b, d, 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn omega_form_examples() {
        let e = pt(2.0, 0.1, FRAC_PI_2, 1.0);
        let (o1, o2) = omega_forms(&e, UNIT).unwrap();
        let mut expected = Matrix4::zeros();
        add_wedge(&mut expected, -1.0, PR, PHI);
        add_wedge(&mut expected, -0.1, PPHI, PHI);
        assert!((o1.matrix - expected).amax() < 1e-15);
        close(o2.matrix[(PPHI, PHI)], 1.0, 1e-15);
        close(o2.matrix[(R, PHI)], -0.25, 1e-15);
    }

    #[test]
    fn recursion_coefficients() {
        let e = pt(2.0, 0.1, FRAC_PI_2, 1.0);
        let t = recursion_matrix(&e, UNIT, 1).unwrap();
        close(t[(PR, PHI)], 0.0, 1e-15);
        // p_φ/(m sin φ) sits on ∂r⊗dφ, the slot that makes ω∘T = Ω₁
        close(t[(R, PHI)], 1.0, 1e-15);
        close(t[(R, PR)], 0.0, 1e-15);
        let e = pt(1.3, 0.2, 1.1, 0.8);
        let t = recursion_matrix(&e, UNIT, 1).unwrap();
        let (s, c) = 1.1f64.sin_cos();
        close(t[(PR, PHI)], 0.64 * c / (1.69 * s.powi(4)), 1e-14);
        assert!(recursion_matrix(&e, UNIT, 3).is_err());
    }

    #[test]
    fn pinned_point_norms_are_nonzero() {
        let e = EquatorialPoint::from_array(PINNED);
        assert!(recursion_lie_norm(&e, UNIT, 1).unwrap() > 1e-3);
        assert!(recursion_torsion(&e, UNIT, 1).unwrap() > 1e-3);
    }

    #[test]
    fn pinned_noether_commutator() {
        let n = noether_residuals(&EquatorialPoint::from_array(PINNED), UNIT).unwrap();
        assert!(n.commutator < 1e-7, "{n:?}");
        assert!(n.lie_omega < 1e-8, "{n:?}");
    }

    #[test]
    fn xtilde_commutator_sign() {
        let e = EquatorialPoint::from_array(PINNED);
        assert!(xtilde_commutator_residual(&e, UNIT).unwrap() < 1e-10);
        // the opposite sign fails by an O(1) margin
        let s = EquatorialStructure;
        let x_h = HamiltonianField::new(&s, EqObservable::new(UNIT, Reduced::H));
        let x_g = HamiltonianField::new(&s, EqObservable::new(UNIT, Reduced::Gamma)).at(&PINNED);
        let (_, bb) = b_invariants(&e, UNIT).unwrap();
        let c = commutator(
            &x_h,
            &XTilde {
                params: UNIT,
                which: 1,
                part: Part::Re,
            },
            &PINNED,
        );
        assert!(vector_residual(&c, &x_g.map(|v| bb * v)) > 0.5);
    }

    #[test]
    fn quasi_at_circular_point() {
        let e = pt(1.0, 0.0, FRAC_PI_2, 1.0);
        assert!(quasi_residual(&e, UNIT).unwrap() < 1e-10);
    }

    #[test]
    fn identity_suite_passes() {
        let pts = eq_points(42, 40);
        let suite = eq_identity_suite(&pts, UNIT, 1.0, EqTolerances::default());
        for r in &suite.reports {
            assert!(r.pass, "{r}");
        }
        let heavy = KeplerParams::new(3.0, 0.7).unwrap();
        assert!(quasi_check(&pts, heavy, 1.0, 1e-8).pass);
    }

    #[test]
    fn integrated_arc_conserves() {
        let e0 = pt(1.2, 0.1, 1.2, 0.9);
        let sol = integrate_equatorial(&e0, UNIT, 3.0, 1e-12).unwrap();
        let suite = eq_conservation_report(&sol, UNIT, 1.0, 1e-7).unwrap();
        for r in &suite.reports {
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let e0 = pt(1.0, 0.0, FRAC_PI_2, 1.0);
        let sol = integrate_equatorial(&e0, UNIT, 0.0, 1e-10).unwrap();
        let mut buf = Vec::new();
        write_equatorial_csv(&mut buf, &sol, UNIT).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,r,pr,phi,pphi,H,Theta,Bs,Bb");
        assert_eq!(lines.len(), 2);
    }
}
