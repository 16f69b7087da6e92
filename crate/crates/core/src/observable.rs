//! Scalar and vector fields on an `N`-dimensional phase space, written once
//! against [`Scalar`] so they can be evaluated on plain floats, jets, or
//! jets of jets.

use crate::jet::{gradient, seed, Jet, Scalar};

/// A smooth function of `N` phase-space coordinates.
pub trait Observable<const N: usize> {
    fn eval<S: Scalar>(&self, x: &[S; N]) -> S;

    fn value(&self, x: &[f64; N]) -> f64 {
        self.eval(x)
    }

    /// Value and exact gradient.
    fn jet(&self, x: &[f64; N]) -> Jet<f64> {
        self.eval(&seed(x))
    }

    fn grad(&self, x: &[f64; N]) -> [f64; N] {
        gradient(&self.jet(x))
    }
}

impl<const N: usize, T: Observable<N> + ?Sized> Observable<N> for &T {
    fn eval<S: Scalar>(&self, x: &[S; N]) -> S {
        (**self).eval(x)
    }
}

/// A vector field whose components are smooth functions of the point.
pub trait VectorField<const N: usize> {
    fn eval<S: Scalar>(&self, x: &[S; N]) -> [S; N];

    fn at(&self, x: &[f64; N]) -> [f64; N] {
        self.eval(x)
    }

    /// Jacobian `J[i][j] = d X^i / d x^j`, exact.
    fn jacobian(&self, x: &[f64; N]) -> [[f64; N]; N] {
        let v = self.eval(&seed(x));
        std::array::from_fn(|i| gradient(&v[i]))
    }
}

impl<const N: usize, T: VectorField<N> + ?Sized> VectorField<N> for &T {
    fn eval<S: Scalar>(&self, x: &[S; N]) -> [S; N] {
        (**self).eval(x)
    }
}

/// The coordinate function `x ↦ x[index]`.
#[derive(Clone, Copy, Debug)]
pub struct Coordinate(pub usize);

impl<const N: usize> Observable<N> for Coordinate {
    fn eval<S: Scalar>(&self, x: &[S; N]) -> S {
        x[self.0]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Constant(pub f64);

impl<const N: usize> Observable<N> for Constant {
    fn eval<S: Scalar>(&self, _x: &[S; N]) -> S {
        S::cst(self.0)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sum<F, G>(pub F, pub G);

impl<const N: usize, F: Observable<N>, G: Observable<N>> Observable<N> for Sum<F, G> {
    fn eval<S: Scalar>(&self, x: &[S; N]) -> S {
        self.0.eval(x) + self.1.eval(x)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Product<F, G>(pub F, pub G);

impl<const N: usize, F: Observable<N>, G: Observable<N>> Observable<N> for Product<F, G> {
    fn eval<S: Scalar>(&self, x: &[S; N]) -> S {
        self.0.eval(x) * self.1.eval(x)
    }
}

/// `c · f`.
#[derive(Clone, Copy, Debug)]
pub struct Scaled<F>(pub f64, pub F);

impl<const N: usize, F: Observable<N>> Observable<N> for Scaled<F> {
    fn eval<S: Scalar>(&self, x: &[S; N]) -> S {
        self.1.eval(x) * self.0
    }
}

/// A constant vector field.
#[derive(Clone, Copy, Debug)]
pub struct ConstantField<const N: usize>(pub [f64; N]);

impl<const N: usize> VectorField<N> for ConstantField<N> {
    fn eval<S: Scalar>(&self, _x: &[S; N]) -> [S; N] {
        self.0.map(S::cst)
    }
}

/// Vector-field commutator `[X, Y] = DY·X − DX·Y` with exact Jacobians.
pub fn commutator<const N: usize>(
    x_field: &impl VectorField<N>,
    y_field: &impl VectorField<N>,
    at: &[f64; N],
) -> [f64; N] {
    let xv = x_field.at(at);
    let yv = y_field.at(at);
    let dx = x_field.jacobian(at);
    let dy = y_field.jacobian(at);
    std::array::from_fn(|i| (0..N).map(|j| dy[i][j] * xv[j] - dx[i][j] * yv[j]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation;
    impl VectorField<2> for Rotation {
        fn eval<S: Scalar>(&self, x: &[S; 2]) -> [S; 2] {
            [-x[1], x[0]]
        }
    }
    struct Radial;
    impl VectorField<2> for Radial {
        fn eval<S: Scalar>(&self, x: &[S; 2]) -> [S; 2] {
            [x[0], x[1]]
        }
    }
    struct Shear;
    impl VectorField<2> for Shear {
        fn eval<S: Scalar>(&self, x: &[S; 2]) -> [S; 2] {
            [x[1] * x[1], S::cst(0.0)]
        }
    }

    #[test]
    fn rotation_and_dilation_commute() {
        let c = commutator(&Rotation, &Radial, &[0.3, -1.2]);
        assert!(c.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn commutator_of_shear_with_rotation() {
        // [R, S] = DS·R − DR·S; DS = [[0, 2y],[0,0]], DR = [[0,-1],[1,0]]
        let (x, y) = (0.4, 0.9);
        let c = commutator(&Rotation, &Shear, &[x, y]);
        let expected = [2.0 * y * x, -(y * y)];
        assert!((c[0] - expected[0]).abs() < 1e-15);
        assert!((c[1] - expected[1]).abs() < 1e-15);
    }

    #[test]
    fn combinators_evaluate() {
        let f = Sum(Product(Coordinate(0), Coordinate(1)), Scaled(3.0, Constant(2.0)));
        let g = f.grad(&[2.0, 5.0]);
        assert_eq!(Observable::<2>::value(&f, &[2.0, 5.0]), 16.0);
        assert_eq!(g, [5.0, 2.0]);
    }
}
