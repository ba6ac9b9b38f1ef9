//! Number types that expressions can be evaluated over: plain `f64`, and
//! truncated multivariate Taylor series ([`super::jet::Jet`]).

/// Arithmetic needed by the evaluator.
///
/// `compose` applies a univariate function given its scaled Taylor
/// coefficients `f^{(l)}(v)/l!` at `v = self.value()`, for
/// `l = 0..=self.order()`.
pub trait Scalar: Clone + Send + Sync {
    fn value(&self) -> f64;
    fn constant_like(&self, c: f64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn compose(&self, taylor: &[f64]) -> Self;
    fn order(&self) -> usize;
    /// Exactly zero, including every derivative.
    fn is_zero(&self) -> bool;

    /// Caller guarantees `other.value() != 0`.
    fn div(&self, other: &Self) -> Self {
        let v = other.value();
        let mut taylor = Vec::with_capacity(other.order() + 1);
        let mut c = 1.0 / v;
        for _ in 0..=other.order() {
            taylor.push(c);
            c *= -1.0 / v;
        }
        self.mul(&other.compose(&taylor))
    }

    fn powi(&self, exponent: u32) -> Self {
        let mut result = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Caller guarantees `self.value() > 0`.
    fn sqrt(&self) -> Self {
        let v = self.value();
        let mut taylor = Vec::with_capacity(self.order() + 1);
        // binom(1/2, l) v^{1/2 - l}
        let mut c = v.sqrt();
        for l in 0..=self.order() {
            taylor.push(c);
            c *= (0.5 - l as f64) / ((l + 1) as f64 * v);
        }
        self.compose(&taylor)
    }

    fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut c = e;
        for l in 0..=self.order() {
            taylor.push(c);
            c /= (l + 1) as f64;
        }
        self.compose(&taylor)
    }

    fn sin(&self) -> Self {
        self.compose(&trig_taylor(self.value(), self.order(), 0))
    }

    fn cos(&self) -> Self {
        self.compose(&trig_taylor(self.value(), self.order(), 1))
    }
}

/// Taylor coefficients of sin (phase 0) or cos (phase 1) at `v`.
fn trig_taylor(v: f64, order: usize, phase: usize) -> Vec<f64> {
    let (s, c) = v.sin_cos();
    let cycle = [s, c, -s, -c];
    let mut fact = 1.0;
    (0..=order)
        .map(|l| {
            if l > 0 {
                fact *= l as f64;
            }
            cycle[(l + phase) % 4] / fact
        })
        .collect()
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn compose(&self, taylor: &[f64]) -> Self {
        taylor[0]
    }
    fn order(&self) -> usize {
        0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn powi(&self, exponent: u32) -> Self {
        f64::powi(*self, exponent as i32)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
}
