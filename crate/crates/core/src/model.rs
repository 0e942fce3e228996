//! Coefficients, states and right-hand sides of the classical and the
//! constant-sum systems.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A face of the nonnegative quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    /// `B = 0`, equivalently `x = 1` or `y -> inf`.
    B,
    /// `R = 0`, equivalently `x = 0` or `y = 0`.
    R,
}

impl Face {
    pub fn label(self) -> &'static str {
        match self {
            Face::B => "FaceB",
            Face::R => "FaceR",
        }
    }
}

fn finite<T: Scalar>(v: T, name: &'static str) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name))
    }
}

/// Interaction coefficients `(alpha, beta)`. Any finite pair is admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    alpha: T,
    beta: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        Ok(Self {
            alpha: finite(alpha, "alpha")?,
            beta: finite(beta, "beta")?,
        })
    }

    #[inline]
    pub fn alpha(&self) -> T {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> T {
        self.beta
    }

    /// `sqrt(|alpha * beta|)`.
    pub fn kappa(&self) -> T {
        (self.alpha * self.beta).abs().sqrt()
    }

    /// `sqrt(|beta / alpha|)`, undefined when `alpha == 0`.
    pub fn rho(&self) -> Option<T> {
        if self.alpha == T::zero() {
            None
        } else {
            Some((self.beta / self.alpha).abs().sqrt())
        }
    }

    /// `mu = alpha x + beta (1 - x)` without range checks.
    #[inline]
    pub fn mixing_field(&self, x: T) -> T {
        self.alpha * x + self.beta * (T::one() - x)
    }

    /// `(alpha - beta) x^2 + 2 beta x - beta` for any real `x`, evaluated as
    /// `alpha x^2 - beta (1 - x)^2` so both face values are exact.
    #[inline]
    pub fn share_field(&self, x: T) -> T {
        let w = T::one() - x;
        self.alpha * x * x - self.beta * w * w
    }

    /// `alpha y^2 - beta` for any real `y`.
    #[inline]
    pub fn ratio_field(&self, y: T) -> T {
        self.alpha * y * y - self.beta
    }

    /// Constant-sum field `(-beta B + mu R, -alpha R + mu B)` for `R + B != 0`.
    #[inline]
    pub fn constant_sum_field(&self, r: T, b: T) -> (T, T) {
        let mu = (self.alpha * r + self.beta * b) / (r + b);
        (-self.beta * b + mu * r, -self.alpha * r + mu * b)
    }

    /// Classical field `(-beta B, -alpha R)`.
    #[inline]
    pub fn classical_field(&self, r: T, b: T) -> (T, T) {
        (-self.beta * b, -self.alpha * r)
    }
}

/// Absolute populations `(R, B)`, both nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsoluteState<T> {
    r: T,
    b: T,
}

impl<T: Scalar> AbsoluteState<T> {
    pub fn new(r: T, b: T) -> Result<Self> {
        let r = finite(r, "R")?;
        let b = finite(b, "B")?;
        if r < T::zero() || b < T::zero() {
            return Err(Error::NegativePopulation {
                r: r.as_f64(),
                b: b.as_f64(),
            });
        }
        Ok(Self { r, b })
    }

    #[inline]
    pub fn r(&self) -> T {
        self.r
    }

    #[inline]
    pub fn b(&self) -> T {
        self.b
    }

    pub fn total(&self) -> T {
        self.r + self.b
    }

    pub fn share(&self) -> Result<ShareState<T>> {
        let n = self.total();
        if n <= T::zero() {
            return Err(Error::ZeroTotalPopulation);
        }
        ShareState::new((self.r / n).min(T::one()))
    }

    pub fn ratio(&self) -> Result<RatioState<T>> {
        if self.total() <= T::zero() {
            return Err(Error::ZeroTotalPopulation);
        }
        if self.b == T::zero() {
            return Err(Error::RatioUndefined);
        }
        RatioState::new(self.r / self.b)
    }
}

/// Share `x = R / N` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ShareState<T>(T);

impl<T: Scalar> ShareState<T> {
    pub fn new(x: T) -> Result<Self> {
        if x.is_finite() && x >= T::zero() && x <= T::one() {
            Ok(Self(x))
        } else {
            Err(Error::ShareOutOfRange(x.as_f64()))
        }
    }

    #[inline]
    pub fn value(&self) -> T {
        self.0
    }

    pub fn to_ratio(self) -> Result<RatioState<T>> {
        share_to_ratio(self)
    }
}

/// Ratio `y = R / B`, finite and nonnegative. Blow-up is an event, never a value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RatioState<T>(T);

impl<T: Scalar> RatioState<T> {
    pub fn new(y: T) -> Result<Self> {
        if y.is_finite() && y >= T::zero() {
            Ok(Self(y))
        } else {
            Err(Error::InvalidRatio(y.as_f64()))
        }
    }

    #[inline]
    pub fn value(&self) -> T {
        self.0
    }

    pub fn to_share(self) -> ShareState<T> {
        ratio_to_share(self)
    }
}

pub fn mixing_rate<T: Scalar>(params: &ModelParams<T>, x: ShareState<T>) -> T {
    params.mixing_field(x.value())
}

pub fn share_rhs<T: Scalar>(params: &ModelParams<T>, x: ShareState<T>) -> T {
    params.share_field(x.value())
}

pub fn ratio_rhs<T: Scalar>(params: &ModelParams<T>, y: RatioState<T>) -> T {
    params.ratio_field(y.value())
}

pub fn constant_sum_rhs<T: Scalar>(params: &ModelParams<T>, state: &AbsoluteState<T>) -> Result<(T, T)> {
    if state.total() <= T::zero() {
        return Err(Error::ZeroTotalPopulation);
    }
    Ok(params.constant_sum_field(state.r(), state.b()))
}

pub fn classical_rhs<T: Scalar>(params: &ModelParams<T>, state: &AbsoluteState<T>) -> (T, T) {
    params.classical_field(state.r(), state.b())
}

pub fn share_to_ratio<T: Scalar>(x: ShareState<T>) -> Result<RatioState<T>> {
    let x = x.value();
    if x >= T::one() {
        return Err(Error::RatioUndefined);
    }
    RatioState::new(x / (T::one() - x))
}

pub fn ratio_to_share<T: Scalar>(y: RatioState<T>) -> ShareState<T> {
    let y = y.value();
    // y / (1 + y) <= 1 for every finite y >= 0.
    ShareState(y / (T::one() + y))
}
