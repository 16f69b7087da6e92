//! Angular momentum, the Laplace–Runge–Lenz vector and its scaled form, and
//! the so(3), so(4), so(1,3) structure-constant checks.
//!
//! Algebra relations are stated for the primed momentum `L' = −L`.

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformable::Alpha;
use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::kepler::{kepler_hamiltonian, r_alpha, r_alpha_generic, KeplerHamiltonian, KeplerParams};
use crate::observable::Observable;
use crate::phase::PhasePoint;
use crate::poisson::{bracket_with_scale, ConformableStructure};
use crate::report::{relative_residual, ResidualStats, Suite, VerificationReport};
use crate::sampling::{rng, sample_where};

/// `|H_α|` below this is treated as the zero-energy boundary.
pub const ZERO_ENERGY_BAND: f64 = 1e-12;

/// Sampling setup for one energy branch: the box `[q_lo, q_hi]³ × [p_lo, p_hi]³`
/// and the couplings used there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchSampler {
    pub branch: Branch,
    pub q: (f64, f64),
    pub p: (f64, f64),
    pub params: KeplerParams,
}

impl BranchSampler {
    /// `H < 0`: slow momenta `[0.25, 1]³` with `k = 4`, positions `[0.5, 2]³`.
    pub const BOUND: Self = Self {
        branch: Branch::Minus,
        q: (0.5, 2.0),
        p: (0.25, 1.0),
        params: KeplerParams { m: 1.0, k: 4.0 },
    };

    /// `H > 0`: the default box `[0.5, 2]⁶` with `m = k = 1`.
    pub const SCATTERING: Self = Self {
        branch: Branch::Plus,
        q: (0.5, 2.0),
        p: (0.5, 2.0),
        params: KeplerParams { m: 1.0, k: 1.0 },
    };

    pub fn for_branch(branch: Branch) -> Self {
        match branch {
            Branch::Minus => Self::BOUND,
            Branch::Plus => Self::SCATTERING,
        }
    }

    /// `n` seeded points with `H_α` on this branch and `|H_α| ≥ margin`.
    pub fn sample(&self, seed: u64, n: usize, alpha: Alpha, margin: f64) -> Result<Vec<PhasePoint>> {
        let lo = [self.q.0, self.q.0, self.q.0, self.p.0, self.p.0, self.p.0];
        let hi = [self.q.1, self.q.1, self.q.1, self.p.1, self.p.1, self.p.1];
        let want = self.branch;
        let params = self.params;
        let raw = sample_where(&mut rng(seed), &lo, &hi, n, 1000 * n + 1000, |x| {
            kepler_hamiltonian(&PhasePoint::from_array(*x), params, alpha)
                .map(|h| h.abs() >= margin && Branch::of_energy(h) == Ok(want))
                .unwrap_or(false)
        })?;
        Ok(raw.into_iter().map(PhasePoint::from_array).collect())
    }
}

/// Levi-Civita symbol on `{0, 1, 2}`.
pub fn levi_civita(i: usize, j: usize, h: usize) -> f64 {
    match (i, j, h) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Energy hypersurface family of a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `H_α < 0`.
    Minus,
    /// `H_α > 0`.
    Plus,
}

impl Branch {
    pub fn of_energy(h: f64) -> Result<Self> {
        if h.abs() < ZERO_ENERGY_BAND {
            Err(Error::ZeroEnergy(h))
        } else if h < 0.0 {
            Ok(Branch::Minus)
        } else {
            Ok(Branch::Plus)
        }
    }

    /// `∓1`, the sign making `∓2mH` positive on this branch.
    fn radicand_sign(self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }
}

fn images<S: Scalar>(x: &[S; 6], a: f64) -> ([S; 3], [S; 3]) {
    (
        std::array::from_fn(|i| x[i].spow(a)),
        std::array::from_fn(|i| x[3 + i].spow(a)),
    )
}

fn cross<S: Scalar>(u: &[S; 3], v: &[S; 3]) -> [S; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn angular_generic<S: Scalar>(x: &[S; 6], a: f64) -> [S; 3] {
    let (q, p) = images(x, a);
    cross(&q, &p).map(|c| c * (a * a))
}

fn lrl_generic<S: Scalar>(x: &[S; 6], params: KeplerParams, a: f64) -> [S; 3] {
    let (q, p) = images(x, a);
    let l = angular_generic(x, a);
    let pl = cross(&p, &l);
    let pull = r_alpha_generic(&x[..3], a).recip() * (a * params.m * params.k);
    std::array::from_fn(|i| pl[i] * a - pull * q[i])
}

/// `L^α = α² Q × P`.
pub fn angular_momentum(x: &PhasePoint, alpha: Alpha) -> [f64; 3] {
    angular_generic(&x.to_array(), alpha.value())
}

/// `A^α = α P × L^α − (α m k / r_α) Q`.
pub fn lrl_vector(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<[f64; 3]> {
    r_alpha(&x.q, alpha)?;
    Ok(lrl_generic(&x.to_array(), params, alpha.value()))
}

/// Component `i` of `L^α`.
#[derive(Clone, Copy, Debug)]
pub struct AngularMomentum {
    pub alpha: Alpha,
    pub i: usize,
}

impl Observable<6> for AngularMomentum {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        angular_generic(x, self.alpha.value())[self.i]
    }
}

/// Component `i` of `L' = −L^α`.
#[derive(Clone, Copy, Debug)]
pub struct PrimedAngularMomentum {
    pub alpha: Alpha,
    pub i: usize,
}

impl Observable<6> for PrimedAngularMomentum {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        -angular_generic(x, self.alpha.value())[self.i]
    }
}

/// Component `i` of `A^α`.
#[derive(Clone, Copy, Debug)]
pub struct Lrl {
    pub params: KeplerParams,
    pub alpha: Alpha,
    pub i: usize,
}

impl Observable<6> for Lrl {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        lrl_generic(x, self.params, self.alpha.value())[self.i]
    }
}

/// Component `i` of `Γ̂ = −A^α / (∓2mH_α)^{1/2}` on a fixed branch.
#[derive(Clone, Copy, Debug)]
pub struct ScaledRlp {
    pub params: KeplerParams,
    pub alpha: Alpha,
    pub branch: Branch,
    pub i: usize,
}

impl Observable<6> for ScaledRlp {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        let h = KeplerHamiltonian::new(self.params, self.alpha).eval(x);
        let radicand = h * (2.0 * self.params.m * self.branch.radicand_sign());
        -lrl_generic(x, self.params, self.alpha.value())[self.i] / radicand.sqrt()
    }
}

/// `Γ̂` and the branch of the point.
pub fn scaled_rlp(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<([f64; 3], Branch)> {
    let h = kepler_hamiltonian(x, params, alpha)?;
    let branch = Branch::of_energy(h)?;
    let arr = x.to_array();
    let g = std::array::from_fn(|i| {
        ScaledRlp {
            params,
            alpha,
            branch,
            i,
        }
        .value(&arr)
    });
    Ok((g, branch))
}

/// `L^α`, `A^α`, `Γ̂` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryVectors {
    pub l: [f64; 3],
    pub a: [f64; 3],
    pub gamma: [f64; 3],
    pub branch: Branch,
}

pub fn symmetry_vectors(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<SymmetryVectors> {
    let (gamma, branch) = scaled_rlp(x, params, alpha)?;
    Ok(SymmetryVectors {
        l: angular_momentum(x, alpha),
        a: lrl_vector(x, params, alpha)?,
        gamma,
        branch,
    })
}

/// Which algebra a generator matrix realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algebra {
    So4,
    So13,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorMatrix {
    pub m: Matrix4<f64>,
    pub algebra: Algebra,
}

/// `Φ` on `H < 0`, `Ψ` on `H > 0`. The spatial block is
/// `α² ε_{hji} L'_i`; the fourth row and column carry `±α² Γ̂`.
pub fn generator_matrix(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<GeneratorMatrix> {
    let a2 = alpha.value().powi(2);
    let (gamma, branch) = scaled_rlp(x, params, alpha)?;
    let lp = angular_momentum(x, alpha).map(|v| -v);
    let mut m = Matrix4::<f64>::zeros();
    for h in 0..3 {
        for j in 0..3 {
            m[(h, j)] = (0..3).map(|i| levi_civita(h, j, i) * a2 * lp[i]).sum();
        }
    }
    let algebra = match branch {
        Branch::Minus => {
            for h in 0..3 {
                m[(h, 3)] = a2 * gamma[h];
                m[(3, h)] = -a2 * gamma[h];
            }
            Algebra::So4
        }
        Branch::Plus => {
            for h in 0..3 {
                m[(h, 3)] = -a2 * gamma[h];
                m[(3, h)] = -a2 * gamma[h];
            }
            Algebra::So13
        }
    };
    Ok(GeneratorMatrix { m, algebra })
}

/// First Casimir in both forms: `(Σ M_{νμ}², 2α⁴ Σ (L'_i² + Γ̂_i²))`.
pub fn casimir1(x: &PhasePoint, params: KeplerParams, alpha: Alpha) -> Result<(f64, f64)> {
    let g = generator_matrix(x, params, alpha)?;
    let from_matrix = g.m.iter().map(|v| v * v).sum();
    let (gamma, _) = scaled_rlp(x, params, alpha)?;
    let l = angular_momentum(x, alpha);
    let closed = 2.0 * alpha.value().powi(4) * (0..3).map(|i| l[i] * l[i] + gamma[i] * gamma[i]).sum::<f64>();
    Ok((from_matrix, closed))
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

type PerPoint = Option<Vec<f64>>;

fn collect(
    identity: &str,
    alpha: f64,
    tol: f64,
    points: &[PhasePoint],
    per_point: &[PerPoint],
    slot: usize,
) -> VerificationReport {
    let mut s = ResidualStats::new(identity, alpha, tol);
    for (x, r) in points.iter().zip(per_point) {
        match r {
            Some(v) => s.push(v[slot], &x.to_array()),
            None => s.exclude(),
        }
    }
    s.finish()
}

/// `{f_i, g_j} − c Σ_h ε_{ijh} r_h` over all `(i, j)`, maximum relative residual.
fn structure_residual<F, G, R>(
    s: &ConformableStructure,
    f: impl Fn(usize) -> F,
    g: impl Fn(usize) -> G,
    rhs: impl Fn(usize) -> R,
    c: f64,
    x: &[f64; 6],
) -> Result<f64>
where
    F: Observable<6>,
    G: Observable<6>,
    R: Observable<6>,
{
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let (v, scale) = bracket_with_scale(s, &f(i), &g(j), x)?;
            let expected: f64 = (0..3).map(|h| c * levi_civita(i, j, h) * rhs(h).value(x)).sum();
            worst = worst.max(relative_residual(v - expected, scale.max(expected.abs())));
        }
    }
    Ok(worst)
}

/// `{L'_i, L'_j}_α = ε_{ijh} α² L'_h`.
pub fn so3_report(points: &[PhasePoint], alpha: Alpha, tol: f64) -> VerificationReport {
    let s = ConformableStructure::new(alpha);
    let a2 = alpha.value().powi(2);
    let lp = |i| PrimedAngularMomentum { alpha, i };
    let per: Vec<PerPoint> = points
        .par_iter()
        .map(|x| Some(vec![structure_residual(&s, lp, lp, lp, a2, &x.to_array()).ok()?]))
        .collect();
    collect("so3/L-L", alpha.value(), tol, points, &per, 0)
}

/// First-integral residuals `{H, L_i}`, `{H, A_i}`, `{H, Γ̂_i}`.
///
/// Points on the zero-energy band are excluded from the `Γ̂` report only.
pub fn first_integral_report(points: &[PhasePoint], params: KeplerParams, alpha: Alpha, tol: f64) -> Suite {
    let s = ConformableStructure::new(alpha);
    let h = KeplerHamiltonian::new(params, alpha);
    let per: Vec<[Option<f64>; 3]> = points
        .par_iter()
        .map(|x| {
            let arr = x.to_array();
            let worst = |obs: &dyn Fn(usize) -> Result<(f64, f64)>| -> Option<f64> {
                let mut w: f64 = 0.0;
                for i in 0..3 {
                    let (v, scale) = obs(i).ok()?;
                    w = w.max(relative_residual(v, scale));
                }
                Some(w)
            };
            let rl = worst(&|i| bracket_with_scale(&s, &h, &AngularMomentum { alpha, i }, &arr));
            let ra = worst(&|i| bracket_with_scale(&s, &h, &Lrl { params, alpha, i }, &arr));
            let rg = kepler_hamiltonian(x, params, alpha)
                .and_then(Branch::of_energy)
                .ok()
                .and_then(|branch| {
                    worst(&|i| {
                        bracket_with_scale(
                            &s,
                            &h,
                            &ScaledRlp {
                                params,
                                alpha,
                                branch,
                                i,
                            },
                            &arr,
                        )
                    })
                });
            [rl, ra, rg]
        })
        .collect();
    let names = ["first-integral/H-L", "first-integral/H-A", "first-integral/H-Gamma"];
    let mut suite = Suite::new("first integrals");
    for (slot, name) in names.iter().enumerate() {
        let mut st = ResidualStats::new(*name, alpha.value(), tol);
        for (x, r) in points.iter().zip(&per) {
            match r[slot] {
                Some(v) => st.push(v, &x.to_array()),
                None => st.exclude(),
            }
        }
        suite.push(st.finish());
    }
    suite
}

/// so(4) on `H < 0` points, so(1,3) on `H > 0` points.
///
/// Each point contributes to the relations of its own branch: the `Γ̂-Γ̂`
/// sign is `+` on `Π_−` and `−` on `Π_+`. Zero-energy points are excluded.
pub fn so4_so13_report(points: &[PhasePoint], params: KeplerParams, alpha: Alpha, tol: f64) -> Suite {
    let s = ConformableStructure::new(alpha);
    let a2 = alpha.value().powi(2);
    let lp = |i| PrimedAngularMomentum { alpha, i };
    let per: Vec<Option<(Branch, [f64; 3])>> = points
        .par_iter()
        .map(|x| {
            let arr = x.to_array();
            let branch = kepler_hamiltonian(x, params, alpha).and_then(Branch::of_energy).ok()?;
            let g = |i| ScaledRlp {
                params,
                alpha,
                branch,
                i,
            };
            let sign = match branch {
                Branch::Minus => 1.0,
                Branch::Plus => -1.0,
            };
            let ll = structure_residual(&s, lp, lp, lp, a2, &arr).ok()?;
            let gg = structure_residual(&s, g, g, lp, sign * a2, &arr).ok()?;
            let lg = structure_residual(&s, lp, g, g, a2, &arr).ok()?;
            Some((branch, [ll, gg, lg]))
        })
        .collect();
    let a = alpha.value();
    let mut suite = Suite::new("so4/so13");
    for (branch, tag) in [(Branch::Minus, "so4"), (Branch::Plus, "so13")] {
        let mut st: Vec<ResidualStats> = ["L-L", "Gamma-Gamma", "L-Gamma"]
            .iter()
            .map(|n| ResidualStats::new(format!("{tag}/{n}"), a, tol))
            .collect();
        for (x, r) in points.iter().zip(&per) {
            match r {
                Some((b, vals)) if *b == branch => {
                    for (s, v) in st.iter_mut().zip(vals) {
                        s.push(*v, &x.to_array());
                    }
                }
                Some(_) => {}
                None => st.iter_mut().for_each(ResidualStats::exclude),
            }
        }
        for s in st {
            suite.push(s.finish());
        }
    }
    suite
}

/// Mismatch of `{Γ̂_i, Γ̂_j}` against the wrong-sign right-hand side, relative
/// to that right-hand side alone. A correct bracket gives `2` wherever `L' ≠ 0`.
fn wrong_sign_residual(
    s: &ConformableStructure,
    g: impl Fn(usize) -> ScaledRlp,
    lp: impl Fn(usize) -> PrimedAngularMomentum,
    c: f64,
    x: &[f64; 6],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let (v, _) = bracket_with_scale(s, &g(i), &g(j), x)?;
            let expected: f64 = (0..3).map(|h| c * levi_civita(i, j, h) * lp(h).value(x)).sum();
            worst = worst.max(relative_residual(v - expected, expected.abs()));
        }
    }
    Ok(worst)
}

/// The wrong-sign `Γ̂-Γ̂` relation on each branch must fail. Returns the
/// smallest per-point mismatch (see [`wrong_sign_residual`]), so a correct
/// sign shows as a value near `2`.
pub fn gamma_sign_flip_margin(points: &[PhasePoint], params: KeplerParams, alpha: Alpha) -> f64 {
    let s = ConformableStructure::new(alpha);
    let a2 = alpha.value().powi(2);
    let lp = |i| PrimedAngularMomentum { alpha, i };
    points
        .par_iter()
        .filter_map(|x| {
            let branch = kepler_hamiltonian(x, params, alpha).and_then(Branch::of_energy).ok()?;
            let g = |i| ScaledRlp {
                params,
                alpha,
                branch,
                i,
            };
            let wrong = match branch {
                Branch::Minus => -1.0,
                Branch::Plus => 1.0,
            };
            wrong_sign_residual(&s, g, lp, wrong * a2, &x.to_array()).ok()
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Pointwise agreement of the two Casimir expressions.
pub fn casimir_report(points: &[PhasePoint], params: KeplerParams, alpha: Alpha, tol: f64) -> VerificationReport {
    let per: Vec<PerPoint> = points
        .par_iter()
        .map(|x| {
            let (m, c) = casimir1(x, params, alpha).ok()?;
            Some(vec![relative_residual(m - c, m.abs().max(c.abs()))])
        })
        .collect();
    collect("casimir/two-forms", alpha.value(), tol, points, &per, 0)
}
