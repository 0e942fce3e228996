//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Criteria 5 and 7 contain targets that contradict the model itself (see
//! README, "Known limitations"); they are evaluated as stated and reported
//! as FAIL, without failing the run. Any other failure exits non-zero.

use std::process::Command;

use lanchester_cli::verify::{random_admissible_spec, run_trial, trial_rng, TrialResult, ENVELOPE_SLACK};
use lanchester_core::classifier::{classify, BreachFace, Regime};
use lanchester_core::closed_form::{hitting_time, solve_ratio};
use lanchester_core::corridor::{simulate_buffered, BufferLaw};
use lanchester_core::integrator::{integrate_with_events, EventFn, IntegratorConfig};
use lanchester_core::model::{ModelParams, RatioState, ShareState};
use lanchester_core::premium::{growth_exponent, matrix_exp, premium_ratio, GeneratorMatrix, Mat2};
use lanchester_core::Face;
use rand::Rng;
use rayon::prelude::*;

/// Criteria whose stated targets are contradicted by the mathematics.
const KNOWN_CONTRADICTED: &[u32] = &[5, 7];

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn p(a: f64, b: f64) -> ModelParams<f64> {
    ModelParams::new(a, b).unwrap()
}

const RATIO_CASES: &[(f64, f64, f64)] = &[
    (1.0, 1.0, 2.0),
    (1.0, 1.0, 0.5),
    (1.0, 1.0, 1.0),
    (-1.0, -1.0, 0.5),
    (-1.0, -1.0, 3.0),
    (-1.0, -1.0, 1.0),
    (1.0, -1.0, 1.0),
    (-1.0, 1.0, 1.0),
    (0.0, 1.0, 1.0),
    (0.0, -1.0, 1.0),
    (1.0, 0.0, 0.5),
    (-1.0, 0.0, 2.0),
    (2.0, 0.5, 3.0),
    (-0.5, 2.0, 0.1),
];

fn ratio_rhs(a: f64, b: f64) -> impl FnMut(f64, &[f64], &mut [f64]) {
    move |_, s, d| d[0] = a * s[0] * s[0] - b
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut tags = std::collections::BTreeSet::new();
    for &(a, b, y0) in RATIO_CASES {
        let sol = solve_ratio(&p(a, b), RatioState::new(y0).unwrap()).unwrap();
        tags.insert(sol.case().name());
        let t_end = 0.9 * sol.t_max().min(10.0);
        let grid: Vec<f64> = (1..=400).map(|i| t_end * i as f64 / 400.0).collect();
        let cfg = IntegratorConfig::default().with_output_times(grid);
        let traj = integrate_with_events(ratio_rhs(a, b), &[y0], (0.0, t_end), &cfg, &[]).unwrap();
        for s in &traj.samples {
            worst = worst.max((s.state[0] - sol.eval(s.t).unwrap().value()).abs());
        }
    }
    Outcome {
        id: 1,
        name: "closed form vs integrator",
        passed: worst <= 1e-8 && tags.len() == 8,
        detail: format!("{} case tags, max |diff| = {worst:.2e} (limit 1e-8)", tags.len()),
    }
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    let mut n = 0;
    let mut faces_ok = true;
    for &(a, b, y0) in RATIO_CASES {
        let Some((t_hit, face)) = hitting_time(&p(a, b), RatioState::new(y0).unwrap()).unwrap() else {
            continue;
        };
        let events = [EventFn::ratio_hits_zero(0), EventFn::ratio_blowup(0, 1e-12)];
        let traj = integrate_with_events(ratio_rhs(a, b), &[y0], (0.0, 2.0 * t_hit + 1.0), &IntegratorConfig::default(), &events).unwrap();
        match traj.event {
            Some(ev) => {
                faces_ok &= ev.face == Some(face);
                worst = worst.max((ev.t - t_hit).abs() / t_hit);
            }
            None => faces_ok = false,
        }
        n += 1;
    }
    let quarter_pi = hitting_time(&p(1.0, -1.0), RatioState::new(1.0).unwrap()).unwrap().unwrap().0;
    let artanh_half = hitting_time(&p(1.0, 1.0), RatioState::new(2.0).unwrap()).unwrap().unwrap().0;
    let analytic = (quarter_pi - std::f64::consts::FRAC_PI_4).abs() < 1e-14 && (artanh_half - 0.5f64.atanh()).abs() < 1e-14;
    Outcome {
        id: 2,
        name: "hitting times",
        passed: worst <= 1e-6 && faces_ok && analytic && n >= 6,
        detail: format!(
            "{n} breach cases, max rel err = {worst:.2e} (limit 1e-6), faces {}, pi/4 = {quarter_pi:.15}, artanh(1/2) = {artanh_half:.15}",
            if faces_ok { "match" } else { "MISMATCH" }
        ),
    }
}

fn share_run(a: f64, b: f64, x0: f64, horizon: f64) -> lanchester_core::integrator::Trajectory<f64> {
    let q = p(a, b);
    let events = [EventFn::share_hits_zero(0), EventFn::share_hits_one(0)];
    integrate_with_events(|_, s, d| d[0] = q.share_field(s[0]), &[x0], (0.0, horizon), &IntegratorConfig::default(), &events).unwrap()
}

fn check_cell(a: f64, b: f64) -> Result<Regime, String> {
    let report = classify(&p(a, b));
    let starts = [0.05, 0.35, 0.8];
    match report.regime {
        Regime::StableInterior => {
            let e = report.equilibrium.unwrap();
            let kappa = (a * b).sqrt();
            for x0 in starts {
                let traj = share_run(a, b, x0, 50.0 / kappa);
                if traj.event.is_some() {
                    return Err(format!("({a},{b}) x0={x0}: unexpected face event"));
                }
                let x = traj.last().state[0];
                if (x - e.x_star).abs() > 1e-6 {
                    return Err(format!("({a},{b}) x0={x0}: x(50/kappa) = {x}, x* = {}", e.x_star));
                }
            }
        }
        Regime::FaceBStable | Regime::FaceRStable => {
            let toward_b = report.regime == Regime::FaceBStable;
            let rate = a.abs().max(b.abs());
            for x0 in starts {
                // 1 - x (or x) decays like 1 / (rate t): reach 1e-3 well inside the horizon.
                let traj = share_run(a, b, x0, 4e3 / rate);
                let xs: Vec<f64> = traj.component(0).collect();
                let monotone = xs.windows(2).all(|w| if toward_b { w[1] >= w[0] } else { w[1] <= w[0] });
                let gap = if toward_b { 1.0 - xs[xs.len() - 1] } else { xs[xs.len() - 1] };
                if !monotone || !(gap > 0.0 && gap < 1e-3) || traj.event.is_some() {
                    return Err(format!("({a},{b}) x0={x0}: monotone={monotone} final gap={gap:e}"));
                }
            }
        }
        Regime::NeutralDegenerate => {
            for x0 in starts {
                let traj = share_run(a, b, x0, 10.0);
                if traj.component(0).any(|x| x != x0) {
                    return Err(format!("({a},{b}): neutral state moved"));
                }
            }
        }
        Regime::UnstableInterior | Regime::FiniteTimeBreach => {
            if report.invariant_quadrant {
                return Err(format!("({a},{b}): breach regime marked invariant"));
            }
            for x0 in starts {
                let want = match report.breach {
                    Some(BreachFace::Face(f)) => f,
                    Some(BreachFace::DependsOnInitialState) => {
                        let x_star = report.equilibrium.unwrap().x_star;
                        if x0 == x_star {
                            continue;
                        }
                        if x0 > x_star {
                            Face::B
                        } else {
                            Face::R
                        }
                    }
                    None => return Err(format!("({a},{b}): breach face missing")),
                };
                let y0 = x0 / (1.0 - x0);
                let (t_hit, face) = hitting_time(&p(a, b), RatioState::new(y0).unwrap())
                    .unwrap()
                    .ok_or_else(|| format!("({a},{b}) x0={x0}: closed form reports no breach"))?;
                let traj = share_run(a, b, x0, 2.0 * t_hit + 1.0);
                let ev = traj.event.ok_or_else(|| format!("({a},{b}) x0={x0}: no face event"))?;
                if ev.face != Some(want) || face != want || (ev.t - t_hit).abs() > 1e-6 * t_hit.max(1.0) {
                    return Err(format!("({a},{b}) x0={x0}: event {:?} at {} vs {want:?} at {t_hit}", ev.face, ev.t));
                }
            }
        }
    }
    Ok(report.regime)
}

fn criterion_3() -> Outcome {
    let axis: Vec<f64> = (0..21).map(|i| ((20 - i) as f64 * -2.0 + i as f64 * 2.0) / 20.0).collect();
    let cells: Vec<(f64, f64)> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect();
    let results: Vec<Result<Regime, String>> = cells.par_iter().map(|&(a, b)| check_cell(a, b)).collect();
    let failures: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let mut counts = std::collections::BTreeMap::new();
    for r in results.iter().flatten() {
        *counts.entry(r.name()).or_insert(0) += 1;
    }
    Outcome {
        id: 3,
        name: "classification by simulation",
        passed: failures.is_empty() && cells.len() == 441,
        detail: if failures.is_empty() {
            format!("441 cells agree; {counts:?}")
        } else {
            format!("{} cells disagree, first: {}", failures.len(), failures[0])
        },
    }
}

fn criterion_4() -> Outcome {
    let vals = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut worst_n = 0.0f64;
    let mut worst_y = 0.0f64;
    let mut samples = 0usize;
    for &a in &vals {
        for &b in &vals {
            let q = p(a, b);
            for (r0, b0) in [(1.0, 3.0), (2.0, 1.0), (0.5, 0.5), (0.1, 4.0)] {
                let n = r0 + b0;
                let events = [
                    EventFn::population_hits_zero(0, Face::R),
                    EventFn::population_hits_zero(1, Face::B),
                ];
                let traj = integrate_with_events(
                    |_, s, d| {
                        let (dr, db) = q.constant_sum_field(s[0], s[1]);
                        d[0] = dr;
                        d[1] = db;
                    },
                    &[r0, b0],
                    (0.0, 10.0),
                    &IntegratorConfig::default(),
                    &events,
                )
                .unwrap();
                for s in &traj.samples {
                    let (r, bb) = (s.state[0], s.state[1]);
                    worst_n = worst_n.max((r + bb - n).abs() / n);
                    if bb <= 0.0 {
                        continue;
                    }
                    let y = r / bb;
                    let ydot = (s.deriv[0] * bb - r * s.deriv[1]) / (bb * bb);
                    let want = a * y * y - b;
                    let scale = (a.abs() * y * y + b.abs()).max(1e-300);
                    worst_y = worst_y.max((ydot - want).abs() / scale);
                    samples += 1;
                }
            }
        }
    }
    Outcome {
        id: 4,
        name: "conservation and reduction",
        passed: worst_n <= 1e-10 && worst_y <= 1e-6,
        detail: format!("{samples} samples, max |N - N0|/N0 = {worst_n:.2e} (limit 1e-10), max rel ydot err = {worst_y:.2e} (limit 1e-6)"),
    }
}

fn criterion_5() -> Outcome {
    const TRIALS: usize = 1000;
    const SEED: u64 = 20_240_517;
    let cfg = IntegratorConfig::default();
    let results: Vec<(f64, TrialResult)> = (0..TRIALS)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(SEED, i);
            let spec = random_admissible_spec(&mut rng);
            let rate = spec.decay_rate();
            let y_star = spec.margins().y_star;
            let r = run_trial(&spec, &mut rng, 20.0 / rate, 1.0 / rate, &cfg).unwrap();
            (y_star, r)
        })
        .collect();
    let exits = results.iter().filter(|(_, r)| !r.stayed_in).count();
    let violations: Vec<&(f64, TrialResult)> = results.iter().filter(|(_, r)| r.violation > ENVELOPE_SLACK).collect();
    let below = violations.iter().filter(|(ys, r)| r.y0 < *ys).count();
    let max_v = results.iter().map(|(_, r)| r.violation).fold(0.0, f64::max);
    Outcome {
        id: 5,
        name: "corridor soundness",
        passed: exits == 0 && violations.is_empty(),
        detail: format!(
            "{TRIALS} admissible specs: {exits} exits, {} envelope violations ({below} started below y*), max violation {max_v:.3e} (slack {ENVELOPE_SLACK:e})",
            violations.len()
        ),
    }
}

fn criterion_6() -> Outcome {
    let (delta, eta, eps) = (0.2, 0.5, 0.25);
    let slack = 1e-9;
    let mut bad = Vec::new();
    let mut rng = trial_rng(606, 0);
    let base = BufferLaw::with_default_ramp(delta, eta).unwrap();
    for i in 0..100 {
        let a0 = rng.gen_range(-1.0 + delta..=-delta);
        let b0 = rng.gen_range(-1.0 + delta..=-delta);
        let x0 = rng.gen_range(eps..=1.0 - eps);
        // Every other trial adds a constant drift that pushes against the buffer.
        let law = if i % 2 == 1 {
            base.clone().with_drift(rng.gen_range(-0.9 * eta..0.9 * eta), rng.gen_range(-0.9 * eta..0.9 * eta)).unwrap()
        } else {
            base.clone()
        };
        let run = simulate_buffered(&law, eps, ShareState::new(x0).unwrap(), a0, b0, 100.0, &IntegratorConfig::default()).unwrap();
        let ok = run.a_range.0 >= -1.0 + delta - slack
            && run.a_range.1 <= -delta + slack
            && run.b_range.0 >= -1.0 + delta - slack
            && run.b_range.1 <= -delta + slack
            && run.x_range.0 >= eps - slack
            && run.x_range.1 <= 1.0 - eps + slack;
        if !ok {
            bad.push(format!("trial {i}: a {:?} b {:?} x {:?}", run.a_range, run.b_range, run.x_range));
        }
    }
    Outcome {
        id: 6,
        name: "buffered invariance",
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            "100 initial conditions (50 with adversarial drift) stay in band and buffer over horizon 100".into()
        } else {
            format!("{} trials left the band, first: {}", bad.len(), bad[0])
        },
    }
}

fn series_oracle(q: &ModelParams<f64>, t: f64) -> Mat2<f64> {
    let a = GeneratorMatrix::new(q).matrix().scale(t);
    let size = a.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut squarings = 0;
    while size / 2f64.powi(squarings) > 0.25 {
        squarings += 1;
    }
    let a = a.scale(0.5f64.powi(squarings));
    let mut term = Mat2::identity();
    let mut sum = Mat2::identity();
    for k in 1..30 {
        term = (term * a).scale(1.0 / k as f64);
        sum = sum + term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

fn criterion_7() -> Outcome {
    // Pairs with alpha beta in {-4, -1, 0, 1, 4}.
    let pairs = [(-2.0, 2.0), (1.0, -4.0), (-1.0, 1.0), (1.0, -1.0), (0.0, 3.0), (2.0, 0.0), (0.0, 0.0), (1.0, 1.0), (-1.0, -1.0), (2.0, 2.0), (-1.0, -4.0)];
    let mut worst_scaled = 0.0f64;
    let mut worst_abs = 0.0f64;
    for (a, b) in pairs {
        for i in 0..=100 {
            let t = 0.05 * i as f64;
            let want = series_oracle(&p(a, b), t);
            let d = matrix_exp(&p(a, b), t).max_abs_diff(&want);
            let size = want.0.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            worst_abs = worst_abs.max(d);
            worst_scaled = worst_scaled.max(d / size);
        }
    }
    let oracle_ok = worst_scaled <= 1e-12;

    let generic = [[1.0, 0.0], [0.3, -2.0], [2.0, 0.7], [-1.0, 0.25]];
    let growth: Vec<f64> = generic.iter().map(|&z| growth_exponent(&p(1.0, 1.0), z, 20.0).unwrap().exponent).collect();
    let growth_ok = growth.iter().all(|g| (g - 1.0).abs() <= 1e-2);
    let sub = growth_exponent(&p(1.0, 0.0), [1.0, 0.0], 100.0).unwrap().exponent;
    let sub_ok = sub <= 0.05;

    let stated = premium_ratio(&p(4.0, 4.0), &p(0.0, 0.0), [1.0, 0.0], 10.0).unwrap();
    let stated_ok = (stated - 2.0).abs() <= 2e-2;
    let sqrt_two = premium_ratio(&p(1.0, 4.0), &p(0.0, 0.0), [1.0, 0.0], 10.0).unwrap();
    Outcome {
        id: 7,
        name: "premium",
        passed: oracle_ok && growth_ok && sub_ok && stated_ok,
        detail: format!(
            "series oracle max err {worst_scaled:.1e} relative to max(1,|entry|) [abs {worst_abs:.1e}] {}; growth(1,1) = {:.4}..{:.4} {}; alpha beta = 0 exponent {sub:.4} {}; premium (4,4) vs (0,0) = {stated:.4}, target 2.0 {} [sqrt(4*4) = 4; (1,4) vs (0,0) = {sqrt_two:.4}]",
            ok(oracle_ok),
            growth.iter().cloned().fold(f64::INFINITY, f64::min),
            growth.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ok(growth_ok),
            ok(sub_ok),
            ok(stated_ok),
        ),
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.toml");
    std::fs::write(
        &scenario,
        "system = \"perturbed_corridor\"\nhorizon = 15.0\nseed = 99\n[corridor]\na = 1.5\nb = 0.7\nabar = 0.02\nbbar = 0.2\neps = 0.2\n[initial]\ny0 = 0.4\n[schedule]\nkind = \"random\"\ndwell = 0.4\nsaturate = false\n[output]\nstep = 0.05\n",
    )
    .unwrap();
    let sc = scenario.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["simulate", "--config", sc],
        vec!["simulate", "--config", sc, "--format", "json"],
        vec!["corridor", "--a", "1", "--b", "2", "--abar", "0.01", "--bbar", "0.3", "--eps", "0.2", "--verify", "--seed", "7", "--trials", "64"],
        vec!["sweep", "--alpha-range", "-2:2:21", "--beta-range", "-2:2:21"],
        vec!["solve", "--alpha", "1", "--beta", "1", "--y0", "2", "--t-end", "1", "--dt", "0.001"],
        vec!["premium", "--alpha", "2", "--beta", "0.5", "--r0", "1", "--b0", "0.2", "--t-end", "30"],
        vec!["classify", "--alpha", "0", "--beta", "-1"],
    ];
    let mut differing = Vec::new();
    for args in &runs {
        let first = Command::new(env!("CARGO_BIN_EXE_lanchester")).args(args).output().unwrap();
        let second = Command::new(env!("CARGO_BIN_EXE_lanchester")).args(args).output().unwrap();
        if first.stdout != second.stdout || first.status.code() != second.status.code() || first.stdout.is_empty() {
            differing.push(args[0]);
        }
    }
    Outcome {
        id: 8,
        name: "determinism",
        passed: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("{} commands byte-identical across reruns", runs.len())
        } else {
            format!("outputs differ for {differing:?}")
        },
    }
}

fn main() {
    let outcomes = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ];
    for o in &outcomes {
        println!("criterion {} {:<30} {} {}", o.id, o.name, if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    let unexpected: Vec<u32> = outcomes
        .iter()
        .filter(|o| !o.passed && !KNOWN_CONTRADICTED.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let known: Vec<u32> = outcomes.iter().filter(|o| !o.passed && KNOWN_CONTRADICTED.contains(&o.id)).map(|o| o.id).collect();
    println!(
        "acceptance: {}/{} PASS; contradicted criteria failing as analysed: {known:?}; unexpected failures: {unexpected:?}",
        outcomes.iter().filter(|o| o.passed).count(),
        outcomes.len()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
