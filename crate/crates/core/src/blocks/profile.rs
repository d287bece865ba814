//! Smooth transition functions and the coordinatewise retraction `R`.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// `S(u) = e^{−1/u} / (e^{−1/u} + e^{−1/(1−u)})`, equal to 0 for `u ≤ 0` and 1 for `u ≥ 1`.
pub fn smoothstep<T: Real>(u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    if u >= T::one() {
        return T::one();
    }
    let e = (T::one() / u - T::one() / (T::one() - u)).exp();
    T::one() / (T::one() + e)
}

/// Derivative of [`smoothstep`]: `S(1−S)(1/u² + 1/(1−u)²)`.
pub fn smoothstep_derivative<T: Real>(u: T) -> T {
    if u <= T::zero() || u >= T::one() {
        return T::zero();
    }
    let s = smoothstep(u);
    let v = T::one() - u;
    s * (T::one() - s) * (T::one() / (u * u) + T::one() / (v * v))
}

/// Upper bound on the slope of [`smoothstep`], attained at `u = ½`.
pub const SMOOTHSTEP_MAX_SLOPE: f64 = 2.0;

/// The odd, non-decreasing function `λ_s`: identity when `||t|−½| > 2s`, equal to
/// `½·sign(t)` when `||t|−½| < s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TransitionProfile<T> {
    pub s: T,
}

impl<T: Real> TransitionProfile<T> {
    pub fn new(s: T) -> Self {
        Self { s }
    }

    pub fn plateau(&self) -> T {
        T::lit(0.5)
    }

    pub fn eval(&self, t: T) -> T {
        let a = t.abs();
        let v = self.eval_nonnegative(a);
        if t < T::zero() {
            -v
        } else {
            v
        }
    }

    fn eval_nonnegative(&self, t: T) -> T {
        let half = T::lit(0.5);
        let s = self.s;
        let two_s = s + s;
        if t <= half - two_s || t >= half + two_s {
            t
        } else if t < half - s {
            let u = (t - (half - two_s)) / s;
            t + smoothstep(u) * (half - t)
        } else if t <= half + s {
            half
        } else {
            let u = (t - half - s) / s;
            half + smoothstep(u) * (t - half)
        }
    }
}

/// `λ_s` applied to a scalar.
pub fn lambda_s<T: Real>(t: T, profile: &TransitionProfile<T>) -> T {
    profile.eval(t)
}

/// `R(x) = (λ_s(x_1), …, λ_s(x_{m+1}))`.
pub fn retract_r<T: Real>(x: &[T], profile: &TransitionProfile<T>) -> Vec<T> {
    x.iter().map(|&v| profile.eval(v)).collect()
}
