//! α-arithmetic and the conformable differential.
//!
//! Everything here is built on the signed power `sign(x)|x|^β`: the g-map
//! `z ↦ |z|^{α−1} z` is `spow(z, α)`, its inverse is `spow(Z, 1/α)`, and
//! `⊕_α`, `⊖_α` are ordinary `+`, `−` conjugated by the g-map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{abs_pow_f64, spow_f64, ZERO_GUARD};
use crate::observable::Observable;
use crate::phase::PhasePoint;

/// Deformation order α > 0. `α = 1` recovers ordinary calculus.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const ONE: Alpha = Alpha(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Alpha(value))
        } else {
            Err(Error::Alpha {
                alpha: value,
                reason: "must be finite and positive",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }

    /// Integration and the equatorial reduction are only defined for α ≥ 1.
    pub fn require_at_least_one(self) -> Result<Self> {
        if self.0 >= 1.0 {
            Ok(self)
        } else {
            Err(Error::Alpha {
                alpha: self.0,
                reason: "this operation requires alpha >= 1",
            })
        }
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// Signed power `sign(x)|x|^β`.
///
/// `spow(0, β)` is 0 for `β > 0`; for `β ≤ 0` it is a singular weight and
/// reported as an error rather than an infinity.
pub fn spow(x: f64, beta: f64) -> Result<f64> {
    if !beta.is_finite() {
        return Err(Error::Domain(format!("non-finite exponent {beta}")));
    }
    if x.abs() < ZERO_GUARD && beta <= 0.0 {
        return Err(Error::SingularWeight { x, beta });
    }
    Ok(spow_f64(x, beta))
}

/// `|x|^β` with the same zero handling as [`spow`] (`|0|^0 = 1`).
pub fn abs_pow(x: f64, beta: f64) -> Result<f64> {
    if x.abs() < ZERO_GUARD && beta < 0.0 {
        return Err(Error::SingularWeight { x, beta });
    }
    Ok(abs_pow_f64(x, beta))
}

/// `g(z) = |z|^{α−1} z`.
pub fn g_map(z: f64, alpha: Alpha) -> f64 {
    spow_f64(z, alpha.value())
}

/// `g⁻¹(Z) = |Z|^{1/α−1} Z`.
pub fn g_inv(z: f64, alpha: Alpha) -> f64 {
    spow_f64(z, 1.0 / alpha.value())
}

/// `a ⊕_α b = g⁻¹(g(a) + g(b))`.
pub fn alpha_add(a: f64, b: f64, alpha: Alpha) -> f64 {
    g_inv(g_map(a, alpha) + g_map(b, alpha), alpha)
}

/// `a ⊖_α b = g⁻¹(g(a) − g(b))`.
pub fn alpha_sub(a: f64, b: f64, alpha: Alpha) -> f64 {
    g_inv(g_map(a, alpha) - g_map(b, alpha), alpha)
}

/// Componentwise `⊕_α` on points of ℝ^{2n}_α.
pub fn alpha_add_vec<const N: usize>(a: &[f64; N], b: &[f64; N], alpha: Alpha) -> [f64; N] {
    std::array::from_fn(|i| alpha_add(a[i], b[i], alpha))
}

/// Coefficients of `d_α f` in the coordinate cobasis `(dq¹, dq², dq³, dp₁, dp₂, dp₃)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covector6 {
    pub components: [f64; 6],
}

impl Covector6 {
    pub fn zero() -> Self {
        Self { components: [0.0; 6] }
    }
}

/// `d_α f = Σ_μ α |x_μ|^{α−1} ∂f/∂x_μ dx_μ`, partials from a jet.
pub fn conformable_differential(f: &impl Observable<6>, x: &PhasePoint, alpha: Alpha) -> Result<Covector6> {
    let a = alpha.value();
    let coords = x.to_array();
    let grad = f.grad(&coords);
    let mut components = [0.0; 6];
    for (mu, c) in components.iter_mut().enumerate() {
        let weight = a * abs_pow(coords[mu], a - 1.0)?;
        *c = weight * grad[mu];
    }
    if components.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("conformable differential"));
    }
    Ok(Covector6 { components })
}

/// Length `(Σ dx_μ²)^{1/2}` of a conformable displacement.
pub fn alpha_distance(dx: &[f64; 6]) -> f64 {
    dx.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Scalar;
    use crate::observable::{Constant, Coordinate};

    fn a(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn spow_examples() {
        assert_eq!(spow(2.0, 1.0).unwrap(), 2.0);
        assert!((spow(-2.0, 3.0).unwrap() + 8.0).abs() < 1e-14);
        assert!((spow(-4.0, 0.5).unwrap() + 2.0).abs() < 1e-14);
        assert_eq!(spow(0.0, 0.3).unwrap(), 0.0);
        assert!(matches!(spow(0.0, 0.0), Err(Error::SingularWeight { .. })));
        assert!(matches!(spow(0.0, -1.0), Err(Error::SingularWeight { .. })));
    }

    #[test]
    fn g_map_examples() {
        assert_eq!(g_map(3.0, Alpha::ONE), 3.0);
        assert!((g_map(-2.0, a(2.0)) + 4.0).abs() < 1e-14);
        assert!((g_inv(-4.0, a(2.0)) + 2.0).abs() < 1e-14);
        assert_eq!(g_map(0.0, a(1.7)), 0.0);
        assert!((g_map(1.0, a(1.7)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_arithmetic_examples() {
        assert!((alpha_add(1.0, 2.0, Alpha::ONE) - 3.0).abs() < 1e-15);
        assert!((alpha_add(1.0, 1.0, a(2.0)) - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(alpha_sub(3.0, 3.0, a(2.0)), 0.0);
    }

    #[test]
    fn alpha_validation() {
        assert!(Alpha::new(0.0).is_err());
        assert!(Alpha::new(f64::NAN).is_err());
        assert!(a(0.5).require_at_least_one().is_err());
        assert!(a(1.0).require_at_least_one().is_ok());
    }

    #[test]
    fn differential_of_coordinate() {
        let x = PhasePoint::new([2.0, 1.0, 1.0], [1.0, 1.0, 1.0]);
        let d = conformable_differential(&Coordinate(0), &x, a(2.0)).unwrap();
        assert_eq!(d.components, [4.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn differential_of_constant_vanishes() {
        let x = PhasePoint::new([0.3, -1.0, 2.0], [1.5, 0.2, -0.7]);
        for al in [0.7, 1.0, 1.5] {
            let d = conformable_differential(&Constant(7.0), &x, a(al)).unwrap();
            assert_eq!(d, Covector6::zero());
        }
    }

    struct Cube;
    impl Observable<6> for Cube {
        fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
            x[0] * x[0] * x[0]
        }
    }

    #[test]
    fn power_rule_for_cube() {
        // d_α(q³) = 3 q² d_α q ; with q = 2, α = 1.5: 12 · 1.5 · √2
        let x = PhasePoint::new([2.0, 1.0, 1.0], [1.0, 1.0, 1.0]);
        let al = a(1.5);
        let direct = conformable_differential(&Cube, &x, al).unwrap();
        let dq = conformable_differential(&Coordinate(0), &x, al).unwrap();
        let via_rule = 3.0 * 4.0 * dq.components[0];
        assert!((direct.components[0] - via_rule).abs() < 1e-12);
        assert!((direct.components[0] - 25.45584412271571).abs() < 1e-12);
    }

    #[test]
    fn singular_weight_below_one() {
        let x = PhasePoint::new([0.0, 1.0, 1.0], [1.0, 1.0, 1.0]);
        let r = conformable_differential(&Coordinate(1), &x, a(0.5));
        assert!(matches!(r, Err(Error::SingularWeight { .. })));
        // α > 1: weight vanishes on the hyperplane, no error
        assert!(conformable_differential(&Coordinate(1), &x, a(1.5)).is_ok());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(alpha_distance(&[3.0, 4.0, 0.0, 0.0, 0.0, 0.0]), 5.0);
        assert_eq!(alpha_distance(&[0.0; 6]), 0.0);
        assert_eq!(alpha_distance(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]), 1.0);
    }
}
