//! Numerical runs of a loaded scenario.

use lanchester_core::corridor::{check_corridor, share_buffer_bound, simulate_buffered, simulate_perturbed};
use lanchester_core::integrator::{integrate_with_events, EventFn, Sample, Trajectory};
use lanchester_core::model::{RatioState, ShareState};
use lanchester_core::Face;
use lanchester_io::report::{BufferDiagnostics, CorridorDiagnostics, EventEntry, SimulateReport};
use lanchester_io::{Scenario, SystemKind, TrajectoryRow, TrajectoryTable, FORMAT_VERSION};

use crate::error::{CliError, CliResult};

/// Indices of the samples that sit on the output grid. The integrator lands
/// on every requested time exactly, so an exact merge suffices.
pub fn grid_indices<T: PartialOrd + Copy>(samples: &[Sample<T>], grid: &[T]) -> Vec<usize> {
    let mut out = Vec::with_capacity(grid.len());
    let mut g = 0;
    for (i, s) in samples.iter().enumerate() {
        while g < grid.len() && grid[g] < s.t {
            g += 1;
        }
        if g < grid.len() && grid[g] == s.t {
            out.push(i);
            g += 1;
        }
    }
    out
}

pub struct SimulationOutput {
    pub table: TrajectoryTable,
    pub report: SimulateReport,
}

fn base_report(scenario: &Scenario, traj: &Trajectory<f64>, rows: usize) -> SimulateReport {
    SimulateReport {
        format_version: FORMAT_VERSION,
        kind: "simulate".into(),
        system: scenario.system.name().into(),
        horizon: scenario.horizon,
        seed: scenario.seed,
        end_time: traj.end_time(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        rows,
        corridor: None,
        buffer: None,
        events: traj.event.iter().map(EventEntry::from).collect(),
    }
}

pub fn run_scenario(scenario: &Scenario) -> CliResult<SimulationOutput> {
    let grid = scenario.output_times()?;
    let config = scenario.integrator_config()?.with_output_times(grid.clone());
    let span = (0.0, scenario.horizon);
    let init = &scenario.initial;
    let missing = |what: &str| CliError::Usage(format!("scenario is missing {what}"));

    match scenario.system {
        SystemKind::ConstantSum | SystemKind::Classical => {
            let params = scenario.model_params()?;
            let r0 = init.r0.ok_or_else(|| missing("initial.r0"))?;
            let b0 = init.b0.ok_or_else(|| missing("initial.b0"))?;
            let constant_sum = scenario.system == SystemKind::ConstantSum;
            let events = [
                EventFn::population_hits_zero(0, Face::R),
                EventFn::population_hits_zero(1, Face::B),
            ];
            let traj = integrate_with_events(
                |_, s, d| {
                    let (dr, db) = if constant_sum {
                        params.constant_sum_field(s[0], s[1])
                    } else {
                        params.classical_field(s[0], s[1])
                    };
                    d[0] = dr;
                    d[1] = db;
                },
                &[r0, b0],
                span,
                &config,
                &events,
            )?;
            let mut table = TrajectoryTable::new(false, false);
            for i in grid_indices(&traj.samples, &grid) {
                let s = &traj.samples[i];
                table.push(TrajectoryRow::from_populations(s.t, s.state[0], s.state[1], params.alpha(), params.beta()));
            }
            let report = base_report(scenario, &traj, table.rows.len());
            Ok(SimulationOutput { table, report })
        }
        SystemKind::RatioRiccati => {
            let params = scenario.model_params()?;
            let y0 = init.y0.ok_or_else(|| missing("initial.y0"))?;
            let events = [EventFn::ratio_hits_zero(0), EventFn::ratio_blowup(0, config.event_tol)];
            let traj = integrate_with_events(|_, s, d| d[0] = params.ratio_field(s[0]), &[y0], span, &config, &events)?;
            let mut table = TrajectoryTable::new(false, false);
            for i in grid_indices(&traj.samples, &grid) {
                let s = &traj.samples[i];
                table.push(TrajectoryRow::from_ratio(s.t, s.state[0].max(0.0), params.alpha(), params.beta()));
            }
            let report = base_report(scenario, &traj, table.rows.len());
            Ok(SimulationOutput { table, report })
        }
        SystemKind::ShareOde => {
            let params = scenario.model_params()?;
            let x0 = init.x0.ok_or_else(|| missing("initial.x0"))?;
            let events = [EventFn::share_hits_zero(0), EventFn::share_hits_one(0)];
            let traj = integrate_with_events(|_, s, d| d[0] = params.share_field(s[0]), &[x0], span, &config, &events)?;
            let mut table = TrajectoryTable::new(false, false);
            for i in grid_indices(&traj.samples, &grid) {
                let s = &traj.samples[i];
                table.push(TrajectoryRow::from_share(s.t, s.state[0].clamp(0.0, 1.0), params.alpha(), params.beta()));
            }
            let report = base_report(scenario, &traj, table.rows.len());
            Ok(SimulationOutput { table, report })
        }
        SystemKind::PerturbedCorridor => {
            let spec = scenario.corridor_spec()?;
            let schedule = scenario.perturbation_schedule()?;
            let y0 = RatioState::new(init.y0.ok_or_else(|| missing("initial.y0"))?)?;
            let run = simulate_perturbed(&spec, &schedule, y0, scenario.horizon, &config)?;
            let mut table = TrajectoryTable::new(true, true);
            for i in grid_indices(&run.trajectory.samples, &grid) {
                let s = &run.trajectory.samples[i];
                let (al, be) = (run.alpha[i], run.beta[i]);
                table.push(
                    TrajectoryRow::from_ratio(s.t, s.state[0].max(0.0), al, be)
                        .with_coefficients(al, be)
                        .with_envelope(run.envelope[i]),
                );
            }
            let adm = check_corridor(&spec);
            let mut report = base_report(scenario, &run.trajectory, table.rows.len());
            report.corridor = Some(CorridorDiagnostics {
                admissible: adm.admissible,
                lhs: adm.lhs,
                rhs: adm.rhs,
                stayed_in: run.stayed_in,
                max_envelope_violation: run.max_envelope_violation,
            });
            Ok(SimulationOutput { table, report })
        }
        SystemKind::Buffered => {
            let law = scenario.buffer_law()?;
            let b = scenario.buffer.as_ref().ok_or_else(|| missing("[buffer]"))?;
            let x0 = ShareState::new(init.x0.ok_or_else(|| missing("initial.x0"))?)?;
            let run = simulate_buffered(&law, b.eps, x0, b.a0, b.b0, scenario.horizon, &config)?;
            let mut table = TrajectoryTable::new(true, false);
            for i in grid_indices(&run.trajectory.samples, &grid) {
                let s = &run.trajectory.samples[i];
                let (x, a, bb) = (s.state[0], s.state[1], s.state[2]);
                table.push(TrajectoryRow::from_share(s.t, x, a, bb).with_coefficients(a, bb));
            }
            let mut report = base_report(scenario, &run.trajectory, table.rows.len());
            report.buffer = Some(BufferDiagnostics {
                x_range: [run.x_range.0, run.x_range.1],
                a_range: [run.a_range.0, run.a_range.1],
                b_range: [run.b_range.0, run.b_range.1],
                schedule_invariant: run.schedule_invariant,
                eps_bound: share_buffer_bound(law.delta()),
                eps_certified: run.eps_certified,
            });
            Ok(SimulationOutput { table, report })
        }
    }
}
