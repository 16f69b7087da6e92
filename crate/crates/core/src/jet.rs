//! Forward-mode differentiation carrier.
//!
//! A [`Jet`] bundles a value with its six first partial derivatives. The
//! component type is itself generic over [`Scalar`], so `Jet<Jet<f64>>`
//! carries exact second derivatives; nested brackets such as the Jacobi
//! identity are evaluated that way without any finite differencing.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of derivative slots carried by every [`Jet`].
pub const SLOTS: usize = 6;

/// Below this magnitude a base is treated as exactly zero by the power kernels.
pub const ZERO_GUARD: f64 = 1e-300;

/// Real-like number type the observables are written against.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    /// Underlying real value (drops every derivative).
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn asin(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// `|x|^beta`.
    fn abs_pow(self, beta: f64) -> Self;
    /// `sign(x) |x|^beta`.
    fn spow(self, beta: f64) -> Self;

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
    fn square(self) -> Self {
        self * self
    }
}

/// `|x|^beta` as `exp(beta ln|x|)`, with `|x| < ZERO_GUARD` mapped to the
/// limit value (0 for `beta > 0`, 1 for `beta = 0`, +inf otherwise).
pub(crate) fn abs_pow_f64(x: f64, beta: f64) -> f64 {
    let a = x.abs();
    if a < ZERO_GUARD {
        if beta > 0.0 {
            0.0
        } else if beta == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else if beta == 1.0 {
        a
    } else {
        (beta * a.ln()).exp()
    }
}

pub(crate) fn spow_f64(x: f64, beta: f64) -> f64 {
    if x.abs() < ZERO_GUARD && beta > 0.0 {
        return 0.0;
    }
    if beta == 1.0 {
        return x;
    }
    x.signum() * abs_pow_f64(x, beta)
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn asin(self) -> Self {
        f64::asin(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn abs_pow(self, beta: f64) -> Self {
        abs_pow_f64(self, beta)
    }
    fn spow(self, beta: f64) -> Self {
        spow_f64(self, beta)
    }
}

/// Value plus six exact first partials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<S> {
    pub value: S,
    pub partials: [S; SLOTS],
}

impl<S: Scalar> Jet<S> {
    pub fn constant(value: S) -> Self {
        Self {
            value,
            partials: [S::cst(0.0); SLOTS],
        }
    }

    /// Independent variable seeded in derivative slot `slot`.
    pub fn variable(value: S, slot: usize) -> Self {
        let mut j = Self::constant(value);
        j.partials[slot] = S::cst(1.0);
        j
    }

    /// Applies a scalar function with value `f` and derivative `df` at `self.value`.
    #[inline]
    fn chain(self, f: S, df: S) -> Self {
        let mut partials = self.partials;
        for d in partials.iter_mut() {
            *d = *d * df;
        }
        Self { value: f, partials }
    }
}

/// Seeds an `N`-point into jets occupying the first `N` derivative slots.
pub fn seed<S: Scalar, const N: usize>(x: &[S; N]) -> [Jet<S>; N] {
    assert!(N <= SLOTS, "at most {SLOTS} active slots");
    std::array::from_fn(|i| Jet::variable(x[i], i))
}

/// Gradient of a jet restricted to the first `N` slots.
pub fn gradient<S: Scalar, const N: usize>(j: &Jet<S>) -> [S; N] {
    std::array::from_fn(|i| j.partials[i])
}

impl<S: Scalar> Add for Jet<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            partials: std::array::from_fn(|i| self.partials[i] + o.partials[i]),
        }
    }
}

impl<S: Scalar> Sub for Jet<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            value: self.value - o.value,
            partials: std::array::from_fn(|i| self.partials[i] - o.partials[i]),
        }
    }
}

impl<S: Scalar> Mul for Jet<S> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, o: Self) -> Self {
        Self {
            value: self.value * o.value,
            partials: std::array::from_fn(|i| self.partials[i] * o.value + self.value * o.partials[i]),
        }
    }
}

impl<S: Scalar> Div for Jet<S> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        let inv = o.value.recip();
        let q = self.value * inv;
        Self {
            value: q,
            partials: std::array::from_fn(|i| (self.partials[i] - q * o.partials[i]) * inv),
        }
    }
}

impl<S: Scalar> Neg for Jet<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            partials: std::array::from_fn(|i| -self.partials[i]),
        }
    }
}

impl<S: Scalar> Add<f64> for Jet<S> {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.value = self.value + c;
        self
    }
}

impl<S: Scalar> Sub<f64> for Jet<S> {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.value = self.value - c;
        self
    }
}

impl<S: Scalar> Mul<f64> for Jet<S> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            partials: std::array::from_fn(|i| self.partials[i] * c),
        }
    }
}

impl<S: Scalar> Div<f64> for Jet<S> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        self * (1.0 / c)
    }
}

impl<S: Scalar> Scalar for Jet<S> {
    fn cst(v: f64) -> Self {
        Self::constant(S::cst(v))
    }
    fn re(&self) -> f64 {
        self.value.re()
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, (s * 2.0).recip())
    }
    fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn ln(self) -> Self {
        self.chain(self.value.ln(), self.value.recip())
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    fn asin(self) -> Self {
        let d = (S::cst(1.0) - self.value * self.value).sqrt().recip();
        self.chain(self.value.asin(), d)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::cst(1.0);
        }
        self.chain(self.value.powi(n), self.value.powi(n - 1) * n as f64)
    }
    fn abs_pow(self, beta: f64) -> Self {
        // d|x|^b/dx = b sign(x)|x|^(b-1)
        self.chain(self.value.abs_pow(beta), self.value.spow(beta - 1.0) * beta)
    }
    fn spow(self, beta: f64) -> Self {
        // d(sign(x)|x|^b)/dx = b |x|^(b-1)
        self.chain(self.value.spow(beta), self.value.abs_pow(beta - 1.0) * beta)
    }
}
