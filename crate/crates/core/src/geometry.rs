//! Finite-difference geometry: Lie derivatives, Nijenhuis torsion and
//! Schouten brackets of point-valued tensor maps.
//!
//! Every map is sampled on a central stencil with step
//! `h = 1e-5 · max(|x_k|, 1)` per coordinate. A stencil point outside the
//! map's domain surfaces as the map's own error.

use nalgebra::{SMatrix, SVector};

use crate::error::Result;

/// Relative step of the central-difference stencil.
pub const FD_STEP: f64 = 1e-5;

pub type Matrix<const N: usize> = SMatrix<f64, N, N>;
pub type Vector<const N: usize> = SVector<f64, N>;

/// Antisymmetric 3-index array, `[i][j][k]`.
pub type Trivector<const N: usize> = [[[f64; N]; N]; N];

pub fn fd_step(xk: f64) -> f64 {
    FD_STEP * xk.abs().max(1.0)
}

fn shifted<const N: usize>(x: &[f64; N], k: usize, dx: f64) -> [f64; N] {
    let mut y = *x;
    y[k] += dx;
    y
}

/// Five-point central difference of a matrix-valued map along coordinate
/// `k` (truncation error `O(h⁴)`).
pub fn partial_matrix<const N: usize, const R: usize, const C: usize>(
    f: &impl Fn(&[f64; N]) -> Result<SMatrix<f64, R, C>>,
    x: &[f64; N],
    k: usize,
) -> Result<SMatrix<f64, R, C>> {
    let h = fd_step(x[k]);
    let p1 = f(&shifted(x, k, h))?;
    let m1 = f(&shifted(x, k, -h))?;
    let p2 = f(&shifted(x, k, 2.0 * h))?;
    let m2 = f(&shifted(x, k, -2.0 * h))?;
    Ok(((p1 - m1) * 8.0 - (p2 - m2)) / (12.0 * h))
}

/// `J[(i, k)] = ∂_k X^i` by central differences.
pub fn fd_jacobian<const N: usize>(field: &impl Fn(&[f64; N]) -> Result<Vector<N>>, x: &[f64; N]) -> Result<Matrix<N>> {
    let mut j = Matrix::<N>::zeros();
    for k in 0..N {
        j.set_column(k, &partial_matrix(field, x, k)?);
    }
    Ok(j)
}

/// `[X, Y] = DY·X − DX·Y` with finite-difference Jacobians.
pub fn fd_commutator<const N: usize>(
    x_field: &impl Fn(&[f64; N]) -> Result<Vector<N>>,
    y_field: &impl Fn(&[f64; N]) -> Result<Vector<N>>,
    x: &[f64; N],
) -> Result<Vector<N>> {
    let xv = x_field(x)?;
    let yv = y_field(x)?;
    Ok(fd_jacobian(y_field, x)? * xv - fd_jacobian(x_field, x)? * yv)
}

/// `L_X Ω = d(ι_X Ω) + ι_X dΩ` for a 2-form map `Ω` (matrix convention
/// `ω(U, V) = Uᵀ Ω V`).
pub fn lie_derivative_2form<const N: usize>(
    x_field: &impl Fn(&[f64; N]) -> Result<Vector<N>>,
    omega: &impl Fn(&[f64; N]) -> Result<Matrix<N>>,
    x: &[f64; N],
) -> Result<Matrix<N>> {
    // ι_X Ω as a column of covector components
    let contracted = |y: &[f64; N]| -> Result<Vector<N>> { Ok(omega(y)?.transpose() * x_field(y)?) };
    let da = fd_jacobian(&contracted, x)?; // da[(j, i)] = ∂_i α_j
    let mut dom = Vec::with_capacity(N);
    for k in 0..N {
        dom.push(partial_matrix(omega, x, k)?);
    }
    let xv = x_field(x)?;
    Ok(Matrix::<N>::from_fn(|i, j| {
        let exterior = da[(j, i)] - da[(i, j)];
        let closed: f64 = (0..N)
            .map(|k| xv[k] * (dom[k][(i, j)] + dom[i][(j, k)] + dom[j][(k, i)]))
            .sum();
        exterior + closed
    }))
}

/// `(L_X T)^i_j = X^k ∂_k T^i_j − T^k_j ∂_k X^i + T^i_k ∂_j X^k` for a
/// (1,1)-tensor stored as `T[(i, j)]`.
pub fn lie_derivative_tensor<const N: usize>(
    x_field: &impl Fn(&[f64; N]) -> Result<Vector<N>>,
    tensor: &impl Fn(&[f64; N]) -> Result<Matrix<N>>,
    x: &[f64; N],
) -> Result<Matrix<N>> {
    let xv = x_field(x)?;
    let t = tensor(x)?;
    let dx = fd_jacobian(x_field, x)?;
    let mut transport = Matrix::<N>::zeros();
    for k in 0..N {
        transport += partial_matrix(tensor, x, k)? * xv[k];
    }
    Ok(transport - dx * t + t * dx)
}

/// `N_T(X, Y) = T²[X,Y] + [TX,TY] − T[TX,Y] − T[X,TY]`.
///
/// The torsion is tensorial, so `X` and `Y` are extended as constant
/// fields around `x`; then `[X, Y] = 0` and every remaining commutator
/// reduces to directional derivatives of `T`.
pub fn nijenhuis_torsion<const N: usize>(
    tensor: &impl Fn(&[f64; N]) -> Result<Matrix<N>>,
    x: &[f64; N],
    xv: &Vector<N>,
    yv: &Vector<N>,
) -> Result<Vector<N>> {
    let t = tensor(x)?;
    let mut dt = Vec::with_capacity(N);
    for k in 0..N {
        dt.push(partial_matrix(tensor, x, k)?);
    }
    // D(TV)·U = Σ_k (∂_k T · V) U^k
    let d_along = |v: &Vector<N>, u: &Vector<N>| -> Vector<N> {
        let mut acc = Vector::<N>::zeros();
        for k in 0..N {
            acc += (dt[k] * v) * u[k];
        }
        acc
    };
    let tx = t * xv;
    let ty = t * yv;
    let bracket_tx_ty = d_along(yv, &tx) - d_along(xv, &ty);
    let bracket_tx_y = -d_along(xv, yv);
    let bracket_x_ty = d_along(yv, xv);
    Ok(bracket_tx_ty - t * bracket_tx_y - t * bracket_x_ty)
}

/// Largest torsion component over all coordinate-field pairs `(∂_a, ∂_b)`.
pub fn max_torsion_on_coordinate_fields<const N: usize>(
    tensor: &impl Fn(&[f64; N]) -> Result<Matrix<N>>,
    x: &[f64; N],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in 0..N {
        for b in (a + 1)..N {
            let n = nijenhuis_torsion(
                tensor,
                x,
                &Vector::<N>::from_fn(|i, _| f64::from(u8::from(i == a))),
                &Vector::<N>::from_fn(|i, _| f64::from(u8::from(i == b))),
            )?;
            worst = worst.max(n.amax());
        }
    }
    Ok(worst)
}

/// `[P, Q]^{ijk} = Σ_l (P^{li}∂_l Q^{jk} + Q^{li}∂_l P^{jk}) + cyclic(i, j, k)`.
pub fn schouten_bracket<const N: usize>(
    p: &impl Fn(&[f64; N]) -> Result<Matrix<N>>,
    q: &impl Fn(&[f64; N]) -> Result<Matrix<N>>,
    x: &[f64; N],
) -> Result<Trivector<N>> {
    let p0 = p(x)?;
    let q0 = q(x)?;
    let mut dp = Vec::with_capacity(N);
    let mut dq = Vec::with_capacity(N);
    for l in 0..N {
        dp.push(partial_matrix(p, x, l)?);
        dq.push(partial_matrix(q, x, l)?);
    }
    let term = |i: usize, j: usize, k: usize| -> f64 {
        (0..N)
            .map(|l| p0[(l, i)] * dq[l][(j, k)] + q0[(l, i)] * dp[l][(j, k)])
            .sum()
    };
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| std::array::from_fn(|k| term(i, j, k) + term(j, k, i) + term(k, i, j)))
    }))
}

pub fn trivector_max<const N: usize>(t: &Trivector<N>) -> f64 {
    t.iter().flatten().flatten().fold(0.0, |m: f64, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> Matrix<4> {
        let mut m = Matrix::<4>::zeros();
        m[(1, 0)] = 1.0;
        m[(0, 1)] = -1.0;
        m[(3, 2)] = 1.0;
        m[(2, 3)] = -1.0;
        m
    }

    #[test]
    fn constant_inputs_have_zero_lie_derivative() {
        let x = [0.3, 1.1, -0.4, 2.0];
        let l = lie_derivative_2form(&|_| Ok(Vector::<4>::new(1.0, 2.0, 3.0, 4.0)), &|_| Ok(canonical()), &x).unwrap();
        assert_eq!(l, Matrix::<4>::zeros());
    }

    #[test]
    fn cartan_matches_component_formula() {
        // non-closed form and a nonlinear field in 3-D
        let omega = |y: &[f64; 3]| -> Result<Matrix<3>> {
            let mut m = Matrix::<3>::zeros();
            m[(0, 1)] = y[2] * y[0];
            m[(1, 0)] = -y[2] * y[0];
            m[(1, 2)] = y[1].sin();
            m[(2, 1)] = -y[1].sin();
            m[(0, 2)] = y[0] * y[1];
            m[(2, 0)] = -y[0] * y[1];
            Ok(m)
        };
        let field = |y: &[f64; 3]| -> Result<Vector<3>> { Ok(Vector::<3>::new(y[1] * y[1], y[0].cos(), y[0] * y[2])) };
        let x = [0.7, -0.3, 1.2];
        let cartan = lie_derivative_2form(&field, &omega, &x).unwrap();
        // oracle: X^k ∂_k Ω_ij + Ω_kj ∂_i X^k + Ω_ik ∂_j X^k
        let o = omega(&x).unwrap();
        let xv = field(&x).unwrap();
        let dx = fd_jacobian(&field, &x).unwrap();
        let oracle = Matrix::<3>::from_fn(|i, j| {
            (0..3)
                .map(|k| {
                    xv[k] * partial_matrix(&omega, &x, k).unwrap()[(i, j)]
                        + o[(k, j)] * dx[(k, i)]
                        + o[(i, k)] * dx[(k, j)]
                })
                .sum()
        });
        assert!((cartan - oracle).amax() < 1e-9);
    }

    #[test]
    fn identity_has_no_torsion() {
        let x = [0.1, 0.2, 0.3, 0.4];
        let n = max_torsion_on_coordinate_fields(&|_| Ok(Matrix::<4>::identity()), &x).unwrap();
        assert_eq!(n, 0.0);
    }

    #[test]
    fn torsion_matches_commutator_oracle() {
        let t = |y: &[f64; 2]| -> Result<Matrix<2>> { Ok(Matrix::<2>::new(y[0], y[1] * y[1], 0.5, y[0] * y[1])) };
        let x = [0.8, 1.3];
        let xv = Vector::<2>::new(1.0, 0.0);
        let yv = Vector::<2>::new(0.0, 1.0);
        let fast = nijenhuis_torsion(&t, &x, &xv, &yv).unwrap();
        // oracle from generic finite-difference commutators of the fields TX, TY
        let tx = |y: &[f64; 2]| -> Result<Vector<2>> { Ok(t(y)? * xv) };
        let ty = |y: &[f64; 2]| -> Result<Vector<2>> { Ok(t(y)? * yv) };
        let cx = |_: &[f64; 2]| -> Result<Vector<2>> { Ok(xv) };
        let cy = |_: &[f64; 2]| -> Result<Vector<2>> { Ok(yv) };
        let t0 = t(&x).unwrap();
        let oracle = fd_commutator(&tx, &ty, &x).unwrap()
            - t0 * fd_commutator(&tx, &cy, &x).unwrap()
            - t0 * fd_commutator(&cx, &ty, &x).unwrap();
        assert!((fast - oracle).amax() < 1e-8);
        assert!(fast.amax() > 1e-2);
    }

    #[test]
    fn constant_bivector_schouten_vanishes() {
        let s = schouten_bracket(&|_| Ok(canonical()), &|_| Ok(canonical()), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(trivector_max(&s), 0.0);
    }

    #[test]
    fn non_poisson_bivector_detected() {
        // P^{ij} = ε^{ijk} v_k with v = (−y, x, 1); Jacobi fails since v·curl v = 2
        let p = |y: &[f64; 3]| -> Result<Matrix<3>> {
            let mut m = Matrix::<3>::zeros();
            crate::poisson::add_wedge(&mut m, -y[1], 1, 2);
            crate::poisson::add_wedge(&mut m, y[0], 2, 0);
            crate::poisson::add_wedge(&mut m, 1.0, 0, 1);
            Ok(m)
        };
        let s = schouten_bracket(&p, &p, &[0.5, 0.5, 0.5]).unwrap();
        assert!(trivector_max(&s) > 0.5);
    }

    #[test]
    fn lie_derivative_of_tensor_along_translation() {
        let t = |y: &[f64; 2]| -> Result<Matrix<2>> { Ok(Matrix::<2>::new(y[0], 0.0, 0.0, 1.0)) };
        let l = lie_derivative_tensor(&|_| Ok(Vector::<2>::new(1.0, 0.0)), &t, &[0.3, 0.4]).unwrap();
        assert!((l - Matrix::<2>::new(1.0, 0.0, 0.0, 0.0)).amax() < 1e-9);
    }
}
