//! Unconstrained linear system `z' = S z` with `S = [[0, -beta], [-alpha, 0]]`.
//!
//! `S^2 = alpha beta I`, so the exponential series splits into even and odd
//! parts: `cosh(kt) I + sinh(kt)/k S` for `alpha beta = k^2 > 0`, `I + tS` when
//! `alpha beta = 0` and `cos(kt) I + sin(kt)/k S` for `alpha beta = -k^2 < 0`.
//! The last case is the same series continued to negative discriminant.
//!
//! Growth rates are read from `ln |z(t)|` (Euclidean norm). For `alpha beta > 0`
//! the log-norm is evaluated through the spectral projectors so that the
//! decaying mode does not cancel catastrophically at long horizons.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

impl<T: Scalar> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Self([[a11, a12], [a21, a22]])
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.0[i][j]
    }

    pub fn scale(&self, c: T) -> Self {
        let m = &self.0;
        Self::new(c * m[0][0], c * m[0][1], c * m[1][0], c * m[1][1])
    }

    pub fn apply(&self, z: [T; 2]) -> [T; 2] {
        let m = &self.0;
        [m[0][0] * z[0] + m[0][1] * z[1], m[1][0] * z[0] + m[1][1] * z[1]]
    }

    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1]
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-T::one())
    }
}

/// The generator `S` of the classical system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorMatrix<T> {
    params: ModelParams<T>,
    s: Mat2<T>,
}

impl<T: Scalar> GeneratorMatrix<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        Self {
            params: *params,
            s: Mat2::new(T::zero(), -params.beta(), -params.alpha(), T::zero()),
        }
    }

    pub fn matrix(&self) -> Mat2<T> {
        self.s
    }

    /// `alpha beta`, the scale in `S^2 = alpha beta I`.
    pub fn discriminant(&self) -> T {
        self.params.alpha() * self.params.beta()
    }

    pub fn square(&self) -> Mat2<T> {
        self.s * self.s
    }
}

pub fn matrix_exp<T: Scalar>(params: &ModelParams<T>, t: T) -> Mat2<T> {
    let g = GeneratorMatrix::new(params);
    let d = g.discriminant();
    let s = g.matrix();
    let id = Mat2::identity();
    if d > T::zero() {
        let k = d.sqrt();
        id.scale((k * t).cosh()) + s.scale((k * t).sinh() / k)
    } else if d < T::zero() {
        let k = (-d).sqrt();
        id.scale((k * t).cos()) + s.scale((k * t).sin() / k)
    } else {
        id + s.scale(t)
    }
}

pub fn propagate<T: Scalar>(params: &ModelParams<T>, z0: [T; 2], t: T) -> [T; 2] {
    matrix_exp(params, t).apply(z0)
}

fn norm<T: Scalar>(z: [T; 2]) -> T {
    z[0].hypot(z[1])
}

/// Components of `z0` along the `+k` and `-k` eigenvectors (`alpha beta > 0`).
fn spectral_split<T: Scalar>(params: &ModelParams<T>, z0: [T; 2]) -> ([T; 2], [T; 2]) {
    let g = GeneratorMatrix::new(params);
    let k = g.discriminant().sqrt();
    let sz = g.matrix().apply(z0);
    let h = T::half();
    let up = [h * (z0[0] + sz[0] / k), h * (z0[1] + sz[1] / k)];
    let down = [h * (z0[0] - sz[0] / k), h * (z0[1] - sz[1] / k)];
    (up, down)
}

/// `ln |z(t)|`, stable for long horizons when `alpha beta > 0`.
pub fn log_norm<T: Scalar>(params: &ModelParams<T>, z0: [T; 2], t: T) -> T {
    let d = params.alpha() * params.beta();
    if d > T::zero() {
        let k = d.sqrt();
        let (u, v) = spectral_split(params, z0);
        if norm(u) > T::zero() {
            let w = (-T::two() * k * t).exp();
            k * t + norm([u[0] + w * v[0], u[1] + w * v[1]]).ln()
        } else {
            -k * t + norm(v).ln()
        }
    } else {
        norm(propagate(params, z0, t)).ln()
    }
}

const WINDOW_POINTS: usize = 128;

fn late_window<T: Scalar>(horizon: T) -> Vec<T> {
    let start = horizon * T::half();
    let n = T::from_usize(WINDOW_POINTS - 1).expect("small integer");
    (0..WINDOW_POINTS)
        .map(|i| start + (horizon - start) * T::from_usize(i).expect("small integer") / n)
        .collect()
}

fn mean<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x) / T::from_usize(v.len()).expect("small integer")
}

fn ls_slope<T: Scalar>(t: &[T], y: &[T]) -> T {
    let (tm, ym) = (mean(t), mean(y));
    let mut sty = T::zero();
    let mut stt = T::zero();
    for (&ti, &yi) in t.iter().zip(y) {
        sty = sty + (ti - tm) * (yi - ym);
        stt = stt + (ti - tm) * (ti - tm);
    }
    sty / stt
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthEstimate<T> {
    pub exponent: T,
    /// Set when `alpha beta > 0` and the decaying mode is not yet negligible
    /// on the window (`exp(-sqrt(alpha beta) horizon) >= 1e-8`).
    pub pre_asymptotic: bool,
}

fn check_inputs<T: Scalar>(z0: [T; 2], horizon: T) -> Result<()> {
    if !(z0[0].is_finite() && z0[1].is_finite()) {
        return Err(Error::NonFinite("z0"));
    }
    if z0[0] == T::zero() && z0[1] == T::zero() {
        return Err(Error::ZeroInitialVector);
    }
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(Error::Precondition("horizon must be positive and finite".into()));
    }
    Ok(())
}

/// Least-squares slope of `ln |z(t)|` on `[horizon / 2, horizon]`.
pub fn growth_exponent<T: Scalar>(params: &ModelParams<T>, z0: [T; 2], horizon: T) -> Result<GrowthEstimate<T>> {
    check_inputs(z0, horizon)?;
    let ts = late_window(horizon);
    let logs: Vec<T> = ts.iter().map(|&t| log_norm(params, z0, t)).collect();
    let d = params.alpha() * params.beta();
    Ok(GrowthEstimate {
        exponent: ls_slope(&ts, &logs),
        pre_asymptotic: d > T::zero() && (-d.sqrt() * horizon).exp() >= T::lit(1e-8),
    })
}

/// Exponent of `|z_coop(t)| / |z_degen(t)|` on `[horizon / 2, horizon]`.
///
/// The degenerate norm grows like a polynomial of degree at most one, so the
/// log-ratio is `k t - c ln t + const` to leading order. Fitting the basis
/// `{1, t, ln t}` removes the logarithmic correction that biases a plain
/// slope (about `1 / t` at moderate horizons); the `t` coefficient is returned.
pub fn premium_ratio<T: Scalar>(
    coop: &ModelParams<T>,
    degenerate: &ModelParams<T>,
    z0: [T; 2],
    horizon: T,
) -> Result<T> {
    check_inputs(z0, horizon)?;
    if !(coop.alpha() * coop.beta() > T::zero()) {
        return Err(Error::Precondition("cooperative pair needs alpha * beta > 0".into()));
    }
    if degenerate.alpha() * degenerate.beta() != T::zero() {
        return Err(Error::Precondition("degenerate pair needs alpha * beta = 0".into()));
    }
    let (u, _) = spectral_split(coop, z0);
    if norm(u) <= T::lit(16.0) * T::epsilon() * norm(z0) {
        return Err(Error::Precondition("z0 has no component along the growing eigenvector".into()));
    }
    let ts = late_window(horizon);
    let r: Vec<T> = ts.iter().map(|&t| log_norm(coop, z0, t) - log_norm(degenerate, z0, t)).collect();
    let l: Vec<T> = ts.iter().map(|t| t.ln()).collect();

    // Centred normal equations for r = c0 + c1 t + c2 ln t.
    let (tm, lm, rm) = (mean(&ts), mean(&l), mean(&r));
    let (mut stt, mut stl, mut sll, mut str_, mut slr) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for i in 0..ts.len() {
        let (dt, dl, dr) = (ts[i] - tm, l[i] - lm, r[i] - rm);
        stt = stt + dt * dt;
        stl = stl + dt * dl;
        sll = sll + dl * dl;
        str_ = str_ + dt * dr;
        slr = slr + dl * dr;
    }
    let det = stt * sll - stl * stl;
    if !(det > T::zero()) {
        // Window too narrow to separate t from ln t.
        return Ok(ls_slope(&ts, &r));
    }
    Ok((sll * str_ - stl * slr) / det)
}
