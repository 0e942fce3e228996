//! Randomized checks of the corridor bound.
//!
//! Trial `i` draws from its own ChaCha stream (`seed`, stream `i`), so the
//! outcome does not depend on how rayon schedules the trials.

use lanchester_core::corridor::{simulate_perturbed, CorridorSpec, PerturbationSchedule, ScheduleKind};
use lanchester_core::integrator::IntegratorConfig;
use lanchester_core::model::RatioState;
use lanchester_io::report::VerificationSummary;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliResult;

/// Tolerance on `|y - y*| <= envelope`.
pub const ENVELOPE_SLACK: f64 = 1e-7;

/// `20 / (2 sqrt(ab))`: twenty decay times.
pub fn default_horizon(spec: &CorridorSpec<f64>) -> f64 {
    20.0 / spec.decay_rate()
}

/// One decay time.
pub fn default_dwell(spec: &CorridorSpec<f64>) -> f64 {
    1.0 / spec.decay_rate()
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub y0: f64,
    pub stayed_in: bool,
    pub violation: f64,
}

impl TrialResult {
    pub fn passed(&self) -> bool {
        self.stayed_in && self.violation <= ENVELOPE_SLACK
    }
}

/// Saturating random schedule from `schedule_seed`, `y0` uniform in `Y_eps`.
pub fn run_trial(
    spec: &CorridorSpec<f64>,
    rng: &mut ChaCha8Rng,
    horizon: f64,
    dwell: f64,
    config: &IntegratorConfig<f64>,
) -> CliResult<TrialResult> {
    let m = spec.margins();
    let y0 = rng.gen_range(m.y_lower..=m.y_upper);
    let schedule = PerturbationSchedule::new(
        ScheduleKind::PiecewiseConstantRandom {
            seed: rng.gen(),
            dwell,
            saturate: true,
        },
        spec.abar(),
        spec.bbar(),
    )?;
    let run = simulate_perturbed(spec, &schedule, RatioState::new(y0)?, horizon, config)?;
    Ok(TrialResult {
        y0,
        stayed_in: run.stayed_in,
        violation: run.max_envelope_violation,
    })
}

pub fn verify_corridor(
    spec: &CorridorSpec<f64>,
    seed: u64,
    trials: usize,
    horizon: f64,
    dwell: f64,
) -> CliResult<VerificationSummary> {
    let config = IntegratorConfig::default();
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(spec, &mut trial_rng(seed, i), horizon, dwell, &config))
        .collect::<CliResult<_>>()?;
    Ok(summarize(&results, seed, horizon, dwell))
}

pub fn summarize(results: &[TrialResult], seed: u64, horizon: f64, dwell: f64) -> VerificationSummary {
    let exits = results.iter().filter(|r| !r.stayed_in).count();
    let violations = results.iter().filter(|r| r.violation > ENVELOPE_SLACK).count();
    let worst = results
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.passed())
        .max_by(|a, b| a.1.violation.total_cmp(&b.1.violation))
        .map(|(i, _)| i);
    VerificationSummary {
        trials: results.len(),
        seed,
        horizon,
        dwell,
        exits,
        envelope_violations: violations,
        envelope_slack: ENVELOPE_SLACK,
        max_envelope_violation: results.iter().map(|r| r.violation).fold(0.0, f64::max),
        worst_trial: worst,
        passed: exits == 0 && violations == 0,
    }
}

/// Random admissible corridor: `a, b` log-uniform in `[0.2, 5]`, `eps` with
/// the equilibrium strictly inside the buffer, and perturbation bounds using
/// a random fraction of the admissible budget split between `abar` and `bbar`.
pub fn random_admissible_spec(rng: &mut impl Rng) -> CorridorSpec<f64> {
    let (lo, hi) = (0.2f64.ln(), 5.0f64.ln());
    loop {
        let a = rng.gen_range(lo..hi).exp();
        let b = rng.gen_range(lo..hi).exp();
        let y_star = (b / a).sqrt();
        let x_star = y_star / (1.0 + y_star);
        let eps_max = (0.98 * x_star.min(1.0 - x_star)).min(0.45);
        let eps = rng.gen_range(0.02..eps_max);
        let Ok(nominal) = CorridorSpec::new(a, b, 0.0, 0.0, eps) else {
            continue;
        };
        let lhs = nominal.decay_rate() * nominal.margins().m_eps;
        let budget = rng.gen_range(0.05..0.95) * lhs;
        let split: f64 = rng.gen();
        let abar = split * budget / nominal.margins().big_m;
        let bbar = (1.0 - split) * budget;
        if let Ok(spec) = CorridorSpec::new(a, b, abar, bbar, eps) {
            return spec;
        }
    }
}
