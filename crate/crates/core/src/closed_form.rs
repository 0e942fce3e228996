//! Exact solutions of the ratio equation `y' = alpha y^2 - beta`.
//!
//! Every sign configuration of `(alpha, beta)` integrates in elementary
//! functions. With `kappa = sqrt|alpha beta|` and `rho = sqrt|beta / alpha|`:
//!
//! | case                    | solution                                  | ends at          |
//! |-------------------------|-------------------------------------------|------------------|
//! | `a>0, b>0, y0>rho`      | `rho coth(artanh(rho/y0) - kappa t)`      | pole, face `B`   |
//! | `a>0, b>0, y0<rho`      | `rho tanh(artanh(y0/rho) - kappa t)`      | zero, face `R`   |
//! | `a<0, b<0, y0<rho`      | `rho tanh(artanh(y0/rho) + kappa t)`      | never            |
//! | `a<0, b<0, y0>rho`      | `rho coth(artanh(rho/y0) + kappa t)`      | never            |
//! | `a>0, b<0`              | `rho tan(arctan(y0/rho) + kappa t)`       | pole, face `B`   |
//! | `a<0, b>0`              | `rho tan(arctan(y0/rho) - kappa t)`       | zero, face `R`   |
//! | `a=0`                   | `y0 - beta t`                             | face `R` if b>0  |
//! | `b=0`                   | `y0 / (1 - alpha y0 t)`                   | face `B` if a>0  |
//!
//! `y0 = rho` is the constant solution. The `y0 < rho` branch for positive
//! coefficients and the `y0 > rho` branch for negative ones are not the
//! textbook representatives; both are checked against the numerical
//! integrator in the test suite.
//!
//! Case selection uses exact sign tests; tiny nonzero coefficients are never
//! snapped to zero.

use crate::error::{Error, Result};
use crate::model::{Face, ModelParams, RatioState, ShareState};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    PosPosOuter,
    PosPosInner,
    PosPosEquilibrium,
    NegNeg,
    PosNeg,
    NegPos,
    AlphaZero,
    BetaZero,
}

impl CaseTag {
    pub const ALL: [CaseTag; 8] = [
        CaseTag::PosPosOuter,
        CaseTag::PosPosInner,
        CaseTag::PosPosEquilibrium,
        CaseTag::NegNeg,
        CaseTag::PosNeg,
        CaseTag::NegPos,
        CaseTag::AlphaZero,
        CaseTag::BetaZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseTag::PosPosOuter => "PosPosOuter",
            CaseTag::PosPosInner => "PosPosInner",
            CaseTag::PosPosEquilibrium => "PosPosEquilibrium",
            CaseTag::NegNeg => "NegNeg",
            CaseTag::PosNeg => "PosNeg",
            CaseTag::NegPos => "NegPos",
            CaseTag::AlphaZero => "AlphaZero",
            CaseTag::BetaZero => "BetaZero",
        }
    }
}

/// Functional shape of the solution; `dir` is the sign in front of `kappa t`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    Constant,
    Tanh { dir: i8 },
    Coth { dir: i8 },
    Tan { dir: i8 },
    Linear,
    Reciprocal,
}

/// Case-tagged analytic solution, valid on `[0, t_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormSolution<T> {
    params: ModelParams<T>,
    case: CaseTag,
    form: Form,
    kappa: T,
    rho: Option<T>,
    phase: T,
    y0: T,
    t_max: T,
    terminal: Option<Face>,
}

impl<T: Scalar> ClosedFormSolution<T> {
    pub fn case(&self) -> CaseTag {
        self.case
    }

    pub fn params(&self) -> ModelParams<T> {
        self.params
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn rho(&self) -> Option<T> {
        self.rho
    }

    /// Integration constant `s0` of the hyperbolic / trigonometric forms
    /// (zero for the rational cases).
    pub fn phase(&self) -> T {
        self.phase
    }

    pub fn y0(&self) -> T {
        self.y0
    }

    /// End of the maximal interval; `+inf` when the solution is global.
    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn terminal_event(&self) -> Option<Face> {
        self.terminal
    }

    pub fn is_global(&self) -> bool {
        self.t_max.is_infinite()
    }

    /// `y(t)` for `0 <= t < t_max`.
    pub fn eval(&self, t: T) -> Result<RatioState<T>> {
        if !(t >= T::zero() && t < self.t_max) {
            return Err(Error::BeyondMaximalInterval {
                t: t.as_f64(),
                t_max: self.t_max.as_f64(),
            });
        }
        let value = self.value_unchecked(t);
        // Rounding can leave -0 or a few ulps below zero right before t_max
        // on the branches that decay to the R face.
        RatioState::new(value.max(T::zero()))
    }

    pub fn eval_share(&self, t: T) -> Result<ShareState<T>> {
        Ok(self.eval(t)?.to_share())
    }

    fn value_unchecked(&self, t: T) -> T {
        let rho = self.rho.unwrap_or_else(T::zero);
        let arg = |dir: i8| {
            if dir > 0 {
                self.phase + self.kappa * t
            } else {
                self.phase - self.kappa * t
            }
        };
        match self.form {
            Form::Constant => self.y0,
            Form::Tanh { dir } => rho * arg(dir).tanh(),
            Form::Coth { dir } => rho / arg(dir).tanh(),
            Form::Tan { dir } => rho * arg(dir).tan(),
            Form::Linear => self.y0 - self.params.beta() * t,
            Form::Reciprocal => self.y0 / (T::one() - self.params.alpha() * self.y0 * t),
        }
    }
}

/// Builds the exact solution through `y0`.
///
/// `y0 = 0` is accepted only when `beta <= 0`, i.e. when the `R = 0` face is
/// not immediately left through negative ratios.
pub fn solve_ratio<T: Scalar>(params: &ModelParams<T>, y0: RatioState<T>) -> Result<ClosedFormSolution<T>> {
    let alpha = params.alpha();
    let beta = params.beta();
    let y0 = y0.value();
    let zero = T::zero();
    let inf = T::infinity();
    if y0 == zero && beta > zero {
        return Err(Error::InvalidInitialRatio {
            y0: 0.0,
            reason: "y0 = 0 requires beta <= 0",
        });
    }
    let kappa = params.kappa();
    let rho = params.rho();

    let mut sol = ClosedFormSolution {
        params: *params,
        case: CaseTag::AlphaZero,
        form: Form::Constant,
        kappa,
        rho,
        phase: zero,
        y0,
        t_max: inf,
        terminal: None,
    };

    if alpha == zero {
        sol.case = CaseTag::AlphaZero;
        sol.form = Form::Linear;
        if beta > zero {
            sol.t_max = y0 / beta;
            sol.terminal = Some(Face::R);
        }
        return Ok(sol);
    }
    if beta == zero {
        sol.case = CaseTag::BetaZero;
        sol.form = Form::Reciprocal;
        if alpha > zero && y0 > zero {
            sol.t_max = T::one() / (alpha * y0);
            sol.terminal = Some(Face::B);
        }
        return Ok(sol);
    }

    // alpha != 0 here, so rho is defined and positive.
    let rho_v = rho.expect("rho defined for nonzero alpha");
    let q = y0 / rho_v;
    match (alpha > zero, beta > zero) {
        (true, true) => {
            if q == T::one() {
                sol.case = CaseTag::PosPosEquilibrium;
                sol.form = Form::Constant;
            } else if q > T::one() {
                sol.case = CaseTag::PosPosOuter;
                sol.form = Form::Coth { dir: -1 };
                sol.phase = (rho_v / y0).atanh();
                sol.t_max = sol.phase / kappa;
                sol.terminal = Some(Face::B);
            } else {
                sol.case = CaseTag::PosPosInner;
                sol.form = Form::Tanh { dir: -1 };
                sol.phase = q.atanh();
                sol.t_max = sol.phase / kappa;
                sol.terminal = Some(Face::R);
            }
        }
        (false, false) => {
            sol.case = CaseTag::NegNeg;
            if q == T::one() {
                sol.form = Form::Constant;
            } else if q < T::one() {
                sol.form = Form::Tanh { dir: 1 };
                sol.phase = q.atanh();
            } else {
                // arcoth(q) = artanh(1 / q)
                sol.form = Form::Coth { dir: 1 };
                sol.phase = (rho_v / y0).atanh();
            }
        }
        (true, false) => {
            sol.case = CaseTag::PosNeg;
            sol.form = Form::Tan { dir: 1 };
            sol.phase = q.atan();
            sol.t_max = (T::FRAC_PI_2() - sol.phase) / kappa;
            sol.terminal = Some(Face::B);
        }
        (false, true) => {
            sol.case = CaseTag::NegPos;
            sol.form = Form::Tan { dir: -1 };
            sol.phase = q.atan();
            sol.t_max = sol.phase / kappa;
            sol.terminal = Some(Face::R);
        }
    }
    Ok(sol)
}

/// `(t_max, face)` when the solution leaves the quadrant in finite time.
pub fn hitting_time<T: Scalar>(params: &ModelParams<T>, y0: RatioState<T>) -> Result<Option<(T, Face)>> {
    let sol = solve_ratio(params, y0)?;
    Ok(sol.terminal.map(|face| (sol.t_max, face)))
}
