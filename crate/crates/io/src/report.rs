//! JSON reports. Every report has `format_version` and `kind` first;
//! trajectory reports end with an `events` array.
//!
//! Non-finite numbers serialize as `null`.

use std::path::Path;

use lanchester_core::classifier::{BreachFace, RegimeReport};
use lanchester_core::corridor::{check_corridor, CorridorSpec};
use lanchester_core::integrator::EventRecord;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEntry {
    pub t: f64,
    pub label: String,
    pub face: Option<String>,
    /// Final localization bracket.
    pub bracket: [f64; 2],
}

impl From<&EventRecord<f64>> for EventEntry {
    fn from(e: &EventRecord<f64>) -> Self {
        Self {
            t: e.t,
            label: e.label.clone(),
            face: e.face.map(|f| f.label().to_string()),
            bracket: [e.bracket.0, e.bracket.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub format_version: u32,
    pub kind: String,
    pub alpha: f64,
    pub beta: f64,
    pub regime: String,
    pub invariant_quadrant: bool,
    pub y_star: Option<f64>,
    pub x_star: Option<f64>,
    pub linear_rate: Option<f64>,
    pub breach_face: Option<String>,
}

pub fn breach_label(b: BreachFace) -> &'static str {
    match b {
        BreachFace::Face(f) => f.label(),
        BreachFace::DependsOnInitialState => "DependsOnInitialState",
    }
}

impl From<&RegimeReport<f64>> for ClassifyReport {
    fn from(r: &RegimeReport<f64>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: "classify".into(),
            alpha: r.params.alpha(),
            beta: r.params.beta(),
            regime: r.regime.name().into(),
            invariant_quadrant: r.invariant_quadrant,
            y_star: r.equilibrium.map(|e| e.y_star),
            x_star: r.equilibrium.map(|e| e.x_star),
            linear_rate: r.equilibrium.map(|e| e.linear_rate),
            breach_face: r.breach.map(|b| breach_label(b).to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub format_version: u32,
    pub kind: String,
    pub alpha: f64,
    pub beta: f64,
    pub y0: f64,
    pub case: String,
    /// `null` when the solution is global.
    pub t_max: Option<f64>,
    pub t_end: f64,
    pub rows: usize,
    pub events: Vec<EventEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorDiagnostics {
    pub admissible: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub stayed_in: bool,
    pub max_envelope_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferDiagnostics {
    pub x_range: [f64; 2],
    pub a_range: [f64; 2],
    pub b_range: [f64; 2],
    pub schedule_invariant: bool,
    pub eps_bound: f64,
    pub eps_certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub format_version: u32,
    pub kind: String,
    pub system: String,
    pub horizon: f64,
    pub seed: Option<u64>,
    pub end_time: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corridor: Option<CorridorDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer: Option<BufferDiagnostics>,
    pub events: Vec<EventEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub trials: usize,
    pub seed: u64,
    pub horizon: f64,
    pub dwell: f64,
    pub exits: usize,
    pub envelope_violations: usize,
    pub envelope_slack: f64,
    pub max_envelope_violation: f64,
    /// Index of the trial with the largest violation, if any trial failed.
    pub worst_trial: Option<usize>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorReport {
    pub format_version: u32,
    pub kind: String,
    pub a: f64,
    pub b: f64,
    pub abar: f64,
    pub bbar: f64,
    pub eps: f64,
    pub y_star: f64,
    pub y_lower: f64,
    pub y_upper: f64,
    pub m_eps: f64,
    pub big_m: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub admissible: bool,
    pub steady_state_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationSummary>,
}

impl From<&CorridorSpec<f64>> for CorridorReport {
    fn from(s: &CorridorSpec<f64>) -> Self {
        let m = s.margins();
        let adm = check_corridor(s);
        Self {
            format_version: FORMAT_VERSION,
            kind: "corridor".into(),
            a: s.a(),
            b: s.b(),
            abar: s.abar(),
            bbar: s.bbar(),
            eps: s.eps(),
            y_star: m.y_star,
            y_lower: m.y_lower,
            y_upper: m.y_upper,
            m_eps: m.m_eps,
            big_m: m.big_m,
            lhs: adm.lhs,
            rhs: adm.rhs,
            admissible: adm.admissible,
            steady_state_offset: s.steady_state_offset(),
            verification: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumComparison {
    pub alpha: f64,
    pub beta: f64,
    pub ratio_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumReport {
    pub format_version: u32,
    pub kind: String,
    pub alpha: f64,
    pub beta: f64,
    pub z0: [f64; 2],
    pub horizon: f64,
    pub exponent: f64,
    pub pre_asymptotic: bool,
    /// `sqrt(alpha beta)` when positive.
    pub sqrt_alpha_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<PremiumComparison>,
}

pub fn to_json_string<R: Serialize>(report: &R) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| IoError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_report<R: Serialize>(report: &R, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json_string(report)?).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}
