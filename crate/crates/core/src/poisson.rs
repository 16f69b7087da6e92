//! Poisson brackets, Hamiltonian vector fields and interior products.
//!
//! A [`PoissonStructure`] supplies the bivector matrix `P^{μν}` at a point;
//! the bracket is `{f, g} = Σ P^{μν} ∂_μ f ∂_ν g` with jet-exact partials and
//! the Hamiltonian field is `X_f = {f, ·}`, i.e. `X_f^ν = Σ_μ P^{μν} ∂_μ f`.
//!
//! 2-forms are stored as antisymmetric matrices with `ω(X, Y) = Xᵀ Ω Y`, so
//! `(ι_X Ω)_ν = Σ_μ X^μ Ω_{μν}`. Composition of a form with a bivector or a
//! (1,1)-tensor contracts the form's first index with the tensor's upper
//! index: `(ω ∘ B) = Ωᵀ B`. With these conventions `ω_α ∘ P_α = 1` and
//! `ι_{X_f} ω_α = −df` hold simultaneously.

use nalgebra::{DMatrix, SMatrix, SVector};
use rayon::prelude::*;

use crate::conformable::Alpha;
use crate::error::{Error, Result};
use crate::jet::{gradient, seed, Scalar};
use crate::observable::{Coordinate, Observable, Product, VectorField};
use crate::phase::PhasePoint;
use crate::report::{relative_residual, ResidualStats, Suite, VerificationReport};

/// Antisymmetric bivector on an `N`-dimensional phase space.
pub trait PoissonStructure<const N: usize>: Sync {
    /// Bivector components `P^{μν}`.
    fn bivector<S: Scalar>(&self, x: &[S; N]) -> [[S; N]; N];

    /// Rejects points where the structure is singular.
    fn check_domain(&self, _x: &[f64; N]) -> Result<()> {
        Ok(())
    }

    fn bivector_matrix(&self, x: &[f64; N]) -> SMatrix<f64, N, N> {
        let p = self.bivector(x);
        SMatrix::from_fn(|i, j| p[i][j])
    }
}

impl<const N: usize, T: PoissonStructure<N>> PoissonStructure<N> for &T {
    fn bivector<S: Scalar>(&self, x: &[S; N]) -> [[S; N]; N] {
        (**self).bivector(x)
    }
    fn check_domain(&self, x: &[f64; N]) -> Result<()> {
        (**self).check_domain(x)
    }
}

/// Bracket evaluated in any scalar type (no domain check).
pub fn bracket_eval<const N: usize, S, P, F, G>(structure: &P, f: &F, g: &G, x: &[S; N]) -> S
where
    S: Scalar,
    P: PoissonStructure<N>,
    F: Observable<N>,
    G: Observable<N>,
{
    let jets = seed(x);
    let df: [S; N] = gradient(&f.eval(&jets));
    let dg: [S; N] = gradient(&g.eval(&jets));
    let p = structure.bivector(x);
    let mut acc = S::cst(0.0);
    // upper triangle of the antisymmetric P, so swapping f and g negates
    // every term exactly
    for mu in 0..N {
        for nu in (mu + 1)..N {
            if p[mu][nu].re() != 0.0 {
                acc = acc + p[mu][nu] * (df[mu] * dg[nu] - df[nu] * dg[mu]);
            }
        }
    }
    acc
}

/// `{f, g}` together with the largest individual term `|P^{μν} ∂_μ f ∂_ν g|`.
/// Only the upper triangle of `P` is read; `P` must be antisymmetric.
pub fn bracket_with_scale<const N: usize, P, F, G>(structure: &P, f: &F, g: &G, x: &[f64; N]) -> Result<(f64, f64)>
where
    P: PoissonStructure<N>,
    F: Observable<N>,
    G: Observable<N>,
{
    structure.check_domain(x)?;
    let df = f.grad(x);
    let dg = g.grad(x);
    let p = structure.bivector(x);
    let mut acc = 0.0;
    let mut scale: f64 = 0.0;
    for mu in 0..N {
        for nu in (mu + 1)..N {
            if p[mu][nu] != 0.0 {
                let (a, b) = (df[mu] * dg[nu], df[nu] * dg[mu]);
                acc += p[mu][nu] * (a - b);
                scale = scale.max((p[mu][nu] * a).abs()).max((p[mu][nu] * b).abs());
            }
        }
    }
    if !acc.is_finite() {
        return Err(Error::NonFinite("poisson bracket"));
    }
    Ok((acc, scale))
}

/// `{f, g}` at a point.
pub fn bracket<const N: usize, P, F, G>(structure: &P, f: &F, g: &G, x: &[f64; N]) -> Result<f64>
where
    P: PoissonStructure<N>,
    F: Observable<N>,
    G: Observable<N>,
{
    bracket_with_scale(structure, f, g, x).map(|(v, _)| v)
}

/// The bracket `{f, g}` as an observable in its own right, so nested
/// brackets are differentiated exactly.
#[derive(Clone, Copy, Debug)]
pub struct Bracket<'a, P, F, G> {
    pub structure: &'a P,
    pub f: F,
    pub g: G,
}

impl<'a, P, F, G> Bracket<'a, P, F, G> {
    pub fn new(structure: &'a P, f: F, g: G) -> Self {
        Self { structure, f, g }
    }
}

impl<const N: usize, P, F, G> Observable<N> for Bracket<'_, P, F, G>
where
    P: PoissonStructure<N>,
    F: Observable<N>,
    G: Observable<N>,
{
    fn eval<S: Scalar>(&self, x: &[S; N]) -> S {
        bracket_eval(self.structure, &self.f, &self.g, x)
    }
}

/// Hamiltonian vector field `X_f = {f, ·}` as a [`VectorField`].
#[derive(Clone, Copy, Debug)]
pub struct HamiltonianField<'a, P, F> {
    pub structure: &'a P,
    pub f: F,
}

impl<'a, P, F> HamiltonianField<'a, P, F> {
    pub fn new(structure: &'a P, f: F) -> Self {
        Self { structure, f }
    }
}

impl<const N: usize, P, F> VectorField<N> for HamiltonianField<'_, P, F>
where
    P: PoissonStructure<N>,
    F: Observable<N>,
{
    fn eval<S: Scalar>(&self, x: &[S; N]) -> [S; N] {
        let df: [S; N] = gradient(&self.f.eval(&seed(x)));
        let p = self.structure.bivector(x);
        std::array::from_fn(|nu| {
            let mut acc = S::cst(0.0);
            for mu in 0..N {
                if p[mu][nu].re() != 0.0 {
                    acc = acc + p[mu][nu] * df[mu];
                }
            }
            acc
        })
    }
}

/// `X_f` at a point, with domain and finiteness checks.
pub fn hamiltonian_field<const N: usize, P, F>(structure: &P, f: &F, x: &[f64; N]) -> Result<[f64; N]>
where
    P: PoissonStructure<N>,
    F: Observable<N>,
{
    structure.check_domain(x)?;
    let v = HamiltonianField::new(structure, f).at(x);
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("hamiltonian field"));
    }
    Ok(v)
}

/// `(ι_X Ω)_ν = Σ_μ X^μ Ω_{μν}`.
pub fn interior<const N: usize>(x: &SVector<f64, N>, omega: &SMatrix<f64, N, N>) -> SVector<f64, N> {
    omega.transpose() * x
}

/// Dimension-checked interior product for dynamically sized data.
pub fn interior_product(x: &[f64], omega: &DMatrix<f64>) -> Result<Vec<f64>> {
    if omega.nrows() != x.len() || omega.ncols() != x.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: omega.nrows().max(omega.ncols()),
        });
    }
    Ok((0..x.len())
        .map(|nu| (0..x.len()).map(|mu| x[mu] * omega[(mu, nu)]).sum())
        .collect())
}

/// `ω ∘ B = Ωᵀ B`: contracts the form's first index with `B`'s upper index.
pub fn compose_form<const N: usize>(omega: &SMatrix<f64, N, N>, b: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    omega.transpose() * b
}

/// Matrix of the 2-form `a dx^i ∧ dx^j` accumulated into `m`.
pub fn add_wedge<const N: usize>(m: &mut SMatrix<f64, N, N>, coeff: f64, i: usize, j: usize) {
    m[(i, j)] += coeff;
    m[(j, i)] -= coeff;
}

/// Matrix of the wedge `α ∧ β` of two 1-forms.
pub fn wedge<const N: usize>(a: &[f64; N], b: &[f64; N]) -> SMatrix<f64, N, N> {
    SMatrix::from_fn(|i, j| a[i] * b[j] - a[j] * b[i])
}

// ---------------------------------------------------------------------------
// Cartesian conformable structure
// ---------------------------------------------------------------------------

/// The conformable Poisson structure on `T*ℝ³` with bracket weights
/// `w_i = α^{−2} |p_i|^{1−α} |q^i|^{1−α}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConformableStructure {
    pub alpha: Alpha,
}

impl ConformableStructure {
    pub fn new(alpha: Alpha) -> Self {
        Self { alpha }
    }

    fn weight<S: Scalar>(&self, q: S, p: S) -> S {
        let a = self.alpha.value();
        if a == 1.0 {
            return S::cst(1.0);
        }
        p.abs_pow(1.0 - a) * q.abs_pow(1.0 - a) * (1.0 / (a * a))
    }
}

impl PoissonStructure<6> for ConformableStructure {
    fn bivector<S: Scalar>(&self, x: &[S; 6]) -> [[S; 6]; 6] {
        let mut p = [[S::cst(0.0); 6]; 6];
        for i in 0..3 {
            let w = self.weight(x[i], x[3 + i]);
            p[3 + i][i] = w;
            p[i][3 + i] = -w;
        }
        p
    }

    fn check_domain(&self, x: &[f64; 6]) -> Result<()> {
        PhasePoint::from_array(*x).check_interior(self.alpha)
    }
}

/// `w_i = α^{−2}|p_i|^{1−α}|q^i|^{1−α}` for `i = 1, 2, 3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketWeights {
    pub w: [f64; 3],
}

pub fn bracket_weights(x: &PhasePoint, alpha: Alpha) -> Result<BracketWeights> {
    x.check_interior(alpha)?;
    let s = ConformableStructure::new(alpha);
    Ok(BracketWeights {
        w: std::array::from_fn(|i| s.weight(x.q[i], x.p[i])),
    })
}

/// `{f, g}_α` on the Cartesian phase space.
pub fn poisson_bracket(f: &impl Observable<6>, g: &impl Observable<6>, x: &PhasePoint, alpha: Alpha) -> Result<f64> {
    bracket(&ConformableStructure::new(alpha), f, g, &x.to_array())
}

/// `X_f` for the conformable structure, ordered `(q̇, ṗ)`.
pub fn conformable_hamiltonian_field(f: &impl Observable<6>, x: &PhasePoint, alpha: Alpha) -> Result<[f64; 6]> {
    hamiltonian_field(&ConformableStructure::new(alpha), f, &x.to_array())
}

/// `ω_α = Σ α²|p_i|^{α−1}|q^i|^{α−1} dp_i ∧ dq^i`.
pub fn symplectic_form(x: &PhasePoint, alpha: Alpha) -> Result<SMatrix<f64, 6, 6>> {
    let w = bracket_weights(x, alpha)?;
    let mut m = SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        add_wedge(&mut m, 1.0 / w.w[i], 3 + i, i);
    }
    Ok(m)
}

/// `P_α = Σ α^{−2}|p_i|^{1−α}|q^i|^{1−α} ∂_{p_i} ∧ ∂_{q^i}`.
pub fn bivector_matrix(x: &PhasePoint, alpha: Alpha) -> Result<SMatrix<f64, 6, 6>> {
    x.check_interior(alpha)?;
    Ok(ConformableStructure::new(alpha).bivector_matrix(&x.to_array()))
}

// ---------------------------------------------------------------------------
// Verification reports
// ---------------------------------------------------------------------------

/// Antisymmetry, Leibniz and Jacobi residuals of a structure over sample points.
///
/// Singular points are excluded and counted.
pub fn bracket_axiom_report<const N: usize, P, F, G, H>(
    structure: &P,
    fields: (&F, &G, &H),
    points: &[[f64; N]],
    alpha: f64,
    tol: f64,
) -> Suite
where
    P: PoissonStructure<N>,
    F: Observable<N> + Sync,
    G: Observable<N> + Sync,
    H: Observable<N> + Sync,
{
    let (f, g, h) = fields;
    let per_point: Vec<Option<[f64; 3]>> = points
        .par_iter()
        .map(|x| {
            structure.check_domain(x).ok()?;
            // antisymmetry
            let (fg, s1) = bracket_with_scale(structure, f, g, x).ok()?;
            let (gf, s2) = bracket_with_scale(structure, g, f, x).ok()?;
            let anti = relative_residual(fg + gf, s1.max(s2));
            // Leibniz {f, gh} = g{f,h} + h{f,g}
            let gv = g.value(x);
            let hv = h.value(x);
            let (f_gh, s3) = bracket_with_scale(structure, f, &Product(g, h), x).ok()?;
            let fh = bracket(structure, f, h, x).ok()?;
            let t1 = gv * fh;
            let t2 = hv * fg;
            let leib = relative_residual(f_gh - t1 - t2, s3.max(t1.abs()).max(t2.abs()));
            // Jacobi
            let (a, sa) = bracket_with_scale(structure, f, &Bracket::new(structure, g, h), x).ok()?;
            let (b, sb) = bracket_with_scale(structure, g, &Bracket::new(structure, h, f), x).ok()?;
            let (c, sc) = bracket_with_scale(structure, h, &Bracket::new(structure, f, g), x).ok()?;
            let jac = relative_residual(a + b + c, sa.max(sb).max(sc));
            Some([anti, leib, jac])
        })
        .collect();

    let names = ["antisymmetry", "leibniz", "jacobi"];
    let mut stats: Vec<ResidualStats> = names
        .iter()
        .map(|n| ResidualStats::new(format!("bracket/{n}"), alpha, tol))
        .collect();
    for (x, r) in points.iter().zip(&per_point) {
        match r {
            Some(vals) => {
                for (s, v) in stats.iter_mut().zip(vals) {
                    s.push(*v, x);
                }
            }
            None => stats.iter_mut().for_each(|s| s.exclude()),
        }
    }
    let mut suite = Suite::new("bracket axioms");
    for s in stats {
        suite.push(s.finish());
    }
    suite
}

/// Cartesian axioms for a triple of observables.
pub fn cartesian_axiom_report<F, G, H>(fields: (&F, &G, &H), points: &[PhasePoint], alpha: Alpha, tol: f64) -> Suite
where
    F: Observable<6> + Sync,
    G: Observable<6> + Sync,
    H: Observable<6> + Sync,
{
    let pts: Vec<[f64; 6]> = points.iter().map(|p| p.to_array()).collect();
    bracket_axiom_report(&ConformableStructure::new(alpha), fields, &pts, alpha.value(), tol)
}

/// Canonical table `{p_i, q^j}_α = α^{−2}|p_i|^{1−α}|q^j|^{1−α} δ_ij`,
/// `{q^i, q^j}_α = {p_i, p_j}_α = 0`.
pub fn canonical_table_report(points: &[PhasePoint], alpha: Alpha, tol: f64) -> VerificationReport {
    let a = alpha.value();
    let residuals: Vec<Option<f64>> = points
        .par_iter()
        .map(|x| {
            let arr = x.to_array();
            let mut worst: f64 = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    let v = poisson_bracket(&Coordinate(i), &Coordinate(j), x, alpha).ok()?;
                    let expected = if i >= 3 && j == i - 3 {
                        (arr[i].abs().powf(1.0 - a) * arr[j].abs().powf(1.0 - a)) / (a * a)
                    } else if j >= 3 && i == j - 3 {
                        -(arr[j].abs().powf(1.0 - a) * arr[i].abs().powf(1.0 - a)) / (a * a)
                    } else {
                        0.0
                    };
                    worst = worst.max(relative_residual(v - expected, expected.abs()));
                }
            }
            Some(worst)
        })
        .collect();
    let mut stats = ResidualStats::new("bracket/canonical-table", a, tol);
    for (x, r) in points.iter().zip(residuals) {
        match r {
            Some(v) => stats.push(v, &x.to_array()),
            None => stats.exclude(),
        }
    }
    stats.finish()
}

/// `ω_α ∘ P_α = 1` residual (max-abs deviation from the identity) at each point.
pub fn form_bivector_inverse_report(points: &[PhasePoint], alpha: Alpha, tol: f64) -> VerificationReport {
    let mut stats = ResidualStats::new("omega-compose-P/identity", alpha.value(), tol);
    for x in points {
        match (symplectic_form(x, alpha), bivector_matrix(x, alpha)) {
            (Ok(w), Ok(p)) => {
                let d = compose_form(&w, &p) - SMatrix::<f64, 6, 6>::identity();
                stats.push(d.abs().max(), &x.to_array());
            }
            _ => stats.exclude(),
        }
    }
    stats.finish()
}
