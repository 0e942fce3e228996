//! TOML scenario schema.
//!
//! ```toml
//! system = "perturbed_corridor"
//! horizon = 20.0
//! seed = 7
//!
//! [corridor]
//! a = 1.0
//! b = 1.0
//! abar = 0.1
//! bbar = 0.1
//! eps = 0.25
//!
//! [initial]
//! y0 = 0.5
//!
//! [schedule]
//! kind = "random"
//! dwell = 0.5
//!
//! [output]
//! step = 0.1
//! ```
//!
//! Required sections per system:
//!
//! | system               | sections                 | initial   |
//! |----------------------|--------------------------|-----------|
//! | `constant_sum`       | `params`                 | `r0, b0`  |
//! | `classical`          | `params`                 | `r0, b0`  |
//! | `ratio_riccati`      | `params`                 | `y0`      |
//! | `share_ode`          | `params`                 | `x0`      |
//! | `perturbed_corridor` | `corridor`, `[schedule]` | `y0`      |
//! | `buffered`           | `buffer`                 | `x0`      |
//!
//! Sections or initial values not listed for the chosen system are errors.
//! `output` (either `step` or `times`) defaults to 100 equal steps;
//! `integrator` overrides individual integrator settings; `seed` is
//! mandatory with `schedule.kind = "random"`.

use std::path::Path;

use lanchester_core::corridor::{
    corridor_margins, BufferLaw, CorridorSpec, Interpolation, PerturbationSchedule, ScheduleKind, SineChannel,
};
use lanchester_core::integrator::{IntegratorConfig, Method};
use lanchester_core::model::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, IoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    ConstantSum,
    Classical,
    RatioRiccati,
    ShareOde,
    PerturbedCorridor,
    Buffered,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::ConstantSum => "constant_sum",
            SystemKind::Classical => "classical",
            SystemKind::RatioRiccati => "ratio_riccati",
            SystemKind::ShareOde => "share_ode",
            SystemKind::PerturbedCorridor => "perturbed_corridor",
            SystemKind::Buffered => "buffered",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorSection {
    pub a: f64,
    pub b: f64,
    pub abar: f64,
    pub bbar: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferSection {
    pub delta: f64,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<f64>,
    #[serde(default)]
    pub drift_a: f64,
    #[serde(default)]
    pub drift_b: f64,
    pub eps: f64,
    pub a0: f64,
    pub b0: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, alias = "R0", skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, alias = "B0", skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationName {
    #[default]
    Hold,
    Linear,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSection {
    Zero,
    Constant {
        da: f64,
        db: f64,
    },
    Sinusoid {
        amplitude_a: f64,
        frequency_a: f64,
        #[serde(default)]
        phase_a: f64,
        amplitude_b: f64,
        frequency_b: f64,
        #[serde(default)]
        phase_b: f64,
    },
    Random {
        dwell: f64,
        #[serde(default = "yes")]
        saturate: bool,
    },
    Table {
        times: Vec<f64>,
        da: Vec<f64>,
        db: Vec<f64>,
        #[serde(default)]
        interpolation: InterpolationName,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub system: SystemKind,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corridor: Option<CorridorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer: Option<BufferSection>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

fn need<T: Copy>(v: Option<T>, what: &str, system: SystemKind) -> Result<T> {
    v.ok_or_else(|| IoError::Validation(format!("system {} requires {what}", system.name())))
}

fn forbid<T>(v: &Option<T>, what: &str, system: SystemKind) -> Result<()> {
    if v.is_some() {
        return invalid(format!("{what} is not used by system {}", system.name()));
    }
    Ok(())
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        invalid(format!("{what} must be finite"))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        invalid("eps must lie in (0, 0.5)")
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let sys = self.system;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return invalid("horizon must be positive and finite");
        }
        let init = &self.initial;
        let uses_params = matches!(
            sys,
            SystemKind::ConstantSum | SystemKind::Classical | SystemKind::RatioRiccati | SystemKind::ShareOde
        );
        if uses_params {
            let p = self
                .params
                .as_ref()
                .ok_or_else(|| IoError::Validation(format!("system {} requires [params]", sys.name())))?;
            finite(p.alpha, "params.alpha")?;
            finite(p.beta, "params.beta")?;
        } else {
            forbid(&self.params, "[params]", sys)?;
        }
        if sys != SystemKind::PerturbedCorridor {
            forbid(&self.corridor, "[corridor]", sys)?;
            forbid(&self.schedule, "[schedule]", sys)?;
        }
        if sys != SystemKind::Buffered {
            forbid(&self.buffer, "[buffer]", sys)?;
        }

        match sys {
            SystemKind::ConstantSum | SystemKind::Classical => {
                let r0 = finite(need(init.r0, "initial.r0", sys)?, "initial.r0")?;
                let b0 = finite(need(init.b0, "initial.b0", sys)?, "initial.b0")?;
                forbid(&init.x0, "initial.x0", sys)?;
                forbid(&init.y0, "initial.y0", sys)?;
                if r0 < 0.0 || b0 < 0.0 {
                    return invalid("initial populations must be nonnegative");
                }
                if sys == SystemKind::ConstantSum && r0 + b0 <= 0.0 {
                    return invalid("initial total population must be positive");
                }
            }
            SystemKind::RatioRiccati | SystemKind::PerturbedCorridor => {
                let y0 = finite(need(init.y0, "initial.y0", sys)?, "initial.y0")?;
                forbid(&init.r0, "initial.r0", sys)?;
                forbid(&init.b0, "initial.b0", sys)?;
                forbid(&init.x0, "initial.x0", sys)?;
                if y0 < 0.0 {
                    return invalid("initial.y0 must be nonnegative");
                }
            }
            SystemKind::ShareOde | SystemKind::Buffered => {
                let x0 = finite(need(init.x0, "initial.x0", sys)?, "initial.x0")?;
                forbid(&init.r0, "initial.r0", sys)?;
                forbid(&init.b0, "initial.b0", sys)?;
                forbid(&init.y0, "initial.y0", sys)?;
                if !(0.0..=1.0).contains(&x0) {
                    return invalid("initial.x0 must lie in [0, 1]");
                }
            }
        }

        if sys == SystemKind::PerturbedCorridor {
            let c = self
                .corridor
                .as_ref()
                .ok_or_else(|| IoError::Validation("system perturbed_corridor requires [corridor]".into()))?;
            check_eps(c.eps)?;
            if !(c.a > 0.0 && c.b > 0.0 && c.a.is_finite() && c.b.is_finite()) {
                return invalid("corridor.a and corridor.b must be positive");
            }
            if !(c.abar >= 0.0 && c.bbar >= 0.0 && c.abar.is_finite() && c.bbar.is_finite()) {
                return invalid("corridor.abar and corridor.bbar must be nonnegative");
            }
            let m = corridor_margins(c.a, c.b, c.eps)
                .map_err(|_| IoError::Validation("equilibrium sqrt(b / a) must lie inside the buffer".into()))?;
            let y0 = init.y0.unwrap_or_default();
            if y0 < m.y_lower || y0 > m.y_upper {
                return invalid(format!("initial.y0 must lie in [{}, {}]", m.y_lower, m.y_upper));
            }
            self.validate_schedule(c)?;
        }

        if sys == SystemKind::Buffered {
            let b = self
                .buffer
                .as_ref()
                .ok_or_else(|| IoError::Validation("system buffered requires [buffer]".into()))?;
            check_eps(b.eps)?;
            let law = self.buffer_law()?;
            let (lo, hi) = law.band();
            if !(b.a0 >= lo && b.a0 <= hi && b.b0 >= lo && b.b0 <= hi) {
                return invalid(format!("buffer.a0 and buffer.b0 must lie in [{lo}, {hi}]"));
            }
            let x0 = init.x0.unwrap_or_default();
            if x0 < b.eps || x0 > 1.0 - b.eps {
                return invalid("initial.x0 must lie in [eps, 1 - eps]");
            }
        }

        self.output_times()?;
        self.integrator_config()?;
        Ok(())
    }

    fn validate_schedule(&self, c: &CorridorSection) -> Result<()> {
        let Some(s) = &self.schedule else {
            return Ok(());
        };
        let within = |v: f64, bound: f64, what: &str| -> Result<()> {
            if v.is_finite() && v.abs() <= bound {
                Ok(())
            } else {
                invalid(format!("schedule {what} exceeds its bound"))
            }
        };
        match s {
            ScheduleSection::Zero => {}
            ScheduleSection::Constant { da, db } => {
                within(*da, c.abar, "da")?;
                within(*db, c.bbar, "db")?;
            }
            ScheduleSection::Sinusoid {
                amplitude_a,
                amplitude_b,
                frequency_a,
                frequency_b,
                phase_a,
                phase_b,
            } => {
                within(*amplitude_a, c.abar, "amplitude_a")?;
                within(*amplitude_b, c.bbar, "amplitude_b")?;
                for (v, n) in [(frequency_a, "frequency_a"), (frequency_b, "frequency_b"), (phase_a, "phase_a"), (phase_b, "phase_b")] {
                    finite(*v, n)?;
                }
            }
            ScheduleSection::Random { dwell, .. } => {
                if self.seed.is_none() {
                    return invalid("a random schedule requires a seed");
                }
                if !(*dwell > 0.0 && dwell.is_finite()) {
                    return invalid("schedule.dwell must be positive");
                }
            }
            ScheduleSection::Table { times, da, db, .. } => {
                if times.is_empty() || times.len() != da.len() || times.len() != db.len() {
                    return invalid("schedule.times, da and db must be nonempty and of equal length");
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
                    return invalid("schedule.times must be finite and strictly increasing");
                }
                for v in da {
                    within(*v, c.abar, "da")?;
                }
                for v in db {
                    within(*v, c.bbar, "db")?;
                }
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams<f64>> {
        let p = self
            .params
            .as_ref()
            .ok_or_else(|| IoError::Validation("scenario has no [params]".into()))?;
        Ok(ModelParams::new(p.alpha, p.beta)?)
    }

    pub fn corridor_spec(&self) -> Result<CorridorSpec<f64>> {
        let c = self
            .corridor
            .as_ref()
            .ok_or_else(|| IoError::Validation("scenario has no [corridor]".into()))?;
        Ok(CorridorSpec::new(c.a, c.b, c.abar, c.bbar, c.eps)?)
    }

    pub fn perturbation_schedule(&self) -> Result<PerturbationSchedule<f64>> {
        let c = self
            .corridor
            .as_ref()
            .ok_or_else(|| IoError::Validation("scenario has no [corridor]".into()))?;
        let kind = match self.schedule.clone().unwrap_or(ScheduleSection::Zero) {
            ScheduleSection::Zero => ScheduleKind::Zero,
            ScheduleSection::Constant { da, db } => ScheduleKind::Constant { da, db },
            ScheduleSection::Sinusoid {
                amplitude_a,
                frequency_a,
                phase_a,
                amplitude_b,
                frequency_b,
                phase_b,
            } => ScheduleKind::Sinusoid {
                a: SineChannel {
                    amplitude: amplitude_a,
                    frequency: frequency_a,
                    phase: phase_a,
                },
                b: SineChannel {
                    amplitude: amplitude_b,
                    frequency: frequency_b,
                    phase: phase_b,
                },
            },
            ScheduleSection::Random { dwell, saturate } => ScheduleKind::PiecewiseConstantRandom {
                seed: self
                    .seed
                    .ok_or_else(|| IoError::Validation("a random schedule requires a seed".into()))?,
                dwell,
                saturate,
            },
            ScheduleSection::Table {
                times,
                da,
                db,
                interpolation,
            } => ScheduleKind::Table {
                times,
                da,
                db,
                interpolation: match interpolation {
                    InterpolationName::Hold => Interpolation::Hold,
                    InterpolationName::Linear => Interpolation::Linear,
                },
            },
        };
        Ok(PerturbationSchedule::new(kind, c.abar, c.bbar)?)
    }

    pub fn buffer_law(&self) -> Result<BufferLaw<f64>> {
        let b = self
            .buffer
            .as_ref()
            .ok_or_else(|| IoError::Validation("scenario has no [buffer]".into()))?;
        let law = match b.ramp {
            Some(r) => BufferLaw::new(b.delta, b.eta, r),
            None => BufferLaw::with_default_ramp(b.delta, b.eta),
        }
        .and_then(|l| l.with_drift(b.drift_a, b.drift_b))
        .map_err(|e| IoError::Validation(e.to_string()))?;
        Ok(law)
    }

    /// Sample grid on `[0, horizon]`; a fixed step always ends exactly at the horizon.
    pub fn output_times(&self) -> Result<Vec<f64>> {
        let out = self.output.clone().unwrap_or_default();
        match (out.step, out.times) {
            (Some(_), Some(_)) => invalid("output takes either step or times, not both"),
            (Some(step), None) => {
                if !(step > 0.0 && step.is_finite()) {
                    return invalid("output.step must be positive");
                }
                Ok(step_grid(self.horizon, step))
            }
            (None, Some(times)) => {
                if times.is_empty() {
                    return invalid("output.times must not be empty");
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return invalid("output.times must be strictly increasing");
                }
                if times.iter().any(|&t| !(t >= 0.0 && t <= self.horizon)) {
                    return invalid("output.times must lie in [0, horizon]");
                }
                Ok(times)
            }
            (None, None) => Ok(step_grid(self.horizon, self.horizon / 100.0)),
        }
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig<f64>> {
        let mut cfg = IntegratorConfig::default();
        if let Some(s) = &self.integrator {
            if let Some(m) = s.method {
                cfg.method = match m {
                    MethodName::Rk4 => Method::FixedRk4,
                    MethodName::Rk45 => Method::AdaptiveRk45,
                };
            }
            if let Some(v) = s.step {
                cfg.step = v;
            }
            if let Some(v) = s.rel_tol {
                cfg.rel_tol = v;
            }
            if let Some(v) = s.abs_tol {
                cfg.abs_tol = v;
            }
            if let Some(v) = s.max_steps {
                cfg.max_steps = usize::try_from(v).map_err(|_| IoError::Validation("integrator.max_steps too large".into()))?;
            }
            if let Some(v) = s.event_tol {
                cfg.event_tol = v;
            }
            if let Some(v) = s.max_step {
                cfg.max_step = v;
            }
        }
        cfg.validate().map_err(|e| IoError::Validation(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| IoError::Serialize(e.to_string()))
    }
}

/// `0, step, 2 step, ...` up to `horizon`, with `horizon` appended when the
/// last multiple falls short of it.
pub fn step_grid(horizon: f64, step: f64) -> Vec<f64> {
    let n = (horizon / step * (1.0 + 1e-12)).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(horizon)).collect();
    times.dedup();
    let last = *times.last().expect("grid starts at zero");
    if horizon - last > 1e-12 * horizon {
        times.push(horizon);
    } else if let Some(t) = times.last_mut() {
        *t = horizon;
    }
    times
}

pub fn write_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_toml_string()?).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}
