//! Parameter-level regime classification.
//!
//! On the share line `x' = alpha x^2 - beta (1 - x)^2` the face values are
//! `x'(0) = -beta` and `x'(1) = alpha`, so the quadrant is forward invariant
//! exactly when both coefficients are nonpositive. An interior equilibrium
//! `y* = sqrt(beta / alpha)` exists iff `alpha beta > 0`, with linearization
//! rate `2 alpha y*`.
//!
//! With `alpha = 0, beta < 0` the share obeys `x' = -beta (1 - x)^2`, so the
//! `B = 0` face attracts, but only algebraically (`1 - x ~ 1 / t`).

use crate::closed_form::hitting_time;
use crate::error::Result;
use crate::model::{Face, ModelParams, RatioState};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    StableInterior,
    UnstableInterior,
    /// `B = 0` attracts (`alpha = 0, beta < 0`).
    FaceBStable,
    /// `R = 0` attracts (`alpha < 0, beta = 0`).
    FaceRStable,
    FiniteTimeBreach,
    /// `alpha = beta = 0`: every state is stationary.
    NeutralDegenerate,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::StableInterior => "StableInterior",
            Regime::UnstableInterior => "UnstableInterior",
            Regime::FaceBStable => "FaceBStable",
            Regime::FaceRStable => "FaceRStable",
            Regime::FiniteTimeBreach => "FiniteTimeBreach",
            Regime::NeutralDegenerate => "NeutralDegenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium<T> {
    pub y_star: T,
    pub x_star: T,
    /// `2 alpha y*`; negative means attracting.
    pub linear_rate: T,
}

/// Which face a breaching trajectory reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreachFace {
    Face(Face),
    /// Both coefficients positive: the side of `y*` the start lies on decides.
    DependsOnInitialState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport<T> {
    pub params: ModelParams<T>,
    pub regime: Regime,
    pub invariant_quadrant: bool,
    pub equilibrium: Option<Equilibrium<T>>,
    pub breach: Option<BreachFace>,
}

impl<T: Scalar> RegimeReport<T> {
    /// Hitting time and face for a concrete start; `None` when the start
    /// never leaves the quadrant.
    pub fn hitting_time(&self, y0: RatioState<T>) -> Result<Option<(T, Face)>> {
        hitting_time(&self.params, y0)
    }
}

pub fn is_forward_invariant<T: Scalar>(params: &ModelParams<T>) -> bool {
    params.alpha() <= T::zero() && params.beta() <= T::zero()
}

pub fn interior_equilibrium<T: Scalar>(params: &ModelParams<T>) -> Option<Equilibrium<T>> {
    let (a, b) = (params.alpha(), params.beta());
    let both_pos = a > T::zero() && b > T::zero();
    let both_neg = a < T::zero() && b < T::zero();
    if !(both_pos || both_neg) {
        return None;
    }
    let y_star = (b / a).sqrt();
    Some(Equilibrium {
        y_star,
        x_star: y_star / (T::one() + y_star),
        linear_rate: T::two() * a * y_star,
    })
}

pub fn classify<T: Scalar>(params: &ModelParams<T>) -> RegimeReport<T> {
    let zero = T::zero();
    let (a, b) = (params.alpha(), params.beta());
    let (regime, breach) = if a < zero && b < zero {
        (Regime::StableInterior, None)
    } else if a > zero && b > zero {
        (Regime::UnstableInterior, Some(BreachFace::DependsOnInitialState))
    } else if a == zero && b < zero {
        (Regime::FaceBStable, None)
    } else if a < zero && b == zero {
        (Regime::FaceRStable, None)
    } else if a == zero && b == zero {
        (Regime::NeutralDegenerate, None)
    } else if a > zero {
        // alpha > 0 >= beta: the x = 1 end points outward.
        (Regime::FiniteTimeBreach, Some(BreachFace::Face(Face::B)))
    } else {
        // beta > 0 >= alpha: the x = 0 end points outward.
        (Regime::FiniteTimeBreach, Some(BreachFace::Face(Face::R)))
    };
    RegimeReport {
        params: *params,
        regime,
        invariant_quadrant: is_forward_invariant(params),
        equilibrium: interior_equilibrium(params),
        breach,
    }
}
