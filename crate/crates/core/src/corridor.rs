//! Invariance of the interior under time-varying coefficients.
//!
//! Two mechanisms are covered:
//!
//! * **Buffer feedback.** The coefficients follow `a' = phi(a)`, `b' = phi(b)`
//!   where `phi` pushes away from both ends of `[-1, 0]`. If `a, b` stay in
//!   `[-1 + delta, -delta]` the share field points inward at `x = eps` and
//!   `x = 1 - eps` for every `eps < sqrt(delta) / (sqrt(delta) + sqrt(1 - delta))`.
//! * **Bounded perturbations.** `alpha(t) = -a + da(t)`, `beta(t) = -b + db(t)`
//!   with `|da| <= abar`, `|db| <= bbar`. The ratio buffer is
//!   `Y_eps = [eps / (1 - eps), (1 - eps) / eps]`; the corridor inequality
//!   `2 sqrt(ab) m_eps > abar M_eps + bbar` is checked by [`check_corridor`]
//!   and [`iss_envelope`] gives the matching deviation envelope.
//!
//! The envelope uses the restoring rate `2 sqrt(ab) = 2 a y*`, which is the
//! exact linear rate only above the equilibrium. Below it the deviation obeys
//! `e' = -a (y + y*) e + u` and `a (y + y*) < 2 a y*`, so trajectories that sit
//! below `y*` can decay slower than the envelope. [`simulate_perturbed`]
//! measures the violation instead of assuming it away.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrator::{integrate_with_events, EventFn, IntegratorConfig, Provenance, Trajectory};
use crate::model::{ModelParams, RatioState, ShareState};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorridorMargins<T> {
    pub m_eps: T,
    pub big_m: T,
    pub y_lower: T,
    pub y_upper: T,
    pub y_star: T,
}

pub fn corridor_margins<T: Scalar>(a: T, b: T, eps: T) -> Result<CorridorMargins<T>> {
    if !(a > T::zero() && a.is_finite() && b > T::zero() && b.is_finite()) {
        return Err(Error::InvalidCorridor("a and b must be positive and finite".into()));
    }
    if !(eps > T::zero() && eps < T::half()) {
        return Err(Error::InvalidCorridor("eps must lie in (0, 0.5)".into()));
    }
    let y_star = (b / a).sqrt();
    let y_lower = eps / (T::one() - eps);
    let y_upper = (T::one() - eps) / eps;
    let m_eps = (y_star - y_lower).min(y_upper - y_star);
    if !(m_eps > T::zero()) {
        return Err(Error::EquilibriumOutsideBuffer(m_eps.as_f64()));
    }
    Ok(CorridorMargins {
        m_eps,
        big_m: y_upper * y_upper,
        y_lower,
        y_upper,
        y_star,
    })
}

/// Nominal magnitudes, perturbation bounds and share buffer half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorridorSpec<T> {
    a: T,
    b: T,
    abar: T,
    bbar: T,
    eps: T,
    margins: CorridorMargins<T>,
}

impl<T: Scalar> CorridorSpec<T> {
    pub fn new(a: T, b: T, abar: T, bbar: T, eps: T) -> Result<Self> {
        if !(abar >= T::zero() && abar.is_finite() && bbar >= T::zero() && bbar.is_finite()) {
            return Err(Error::InvalidCorridor("abar and bbar must be finite and nonnegative".into()));
        }
        let margins = corridor_margins(a, b, eps)?;
        Ok(Self {
            a,
            b,
            abar,
            bbar,
            eps,
            margins,
        })
    }

    pub fn a(&self) -> T {
        self.a
    }
    pub fn b(&self) -> T {
        self.b
    }
    pub fn abar(&self) -> T {
        self.abar
    }
    pub fn bbar(&self) -> T {
        self.bbar
    }
    pub fn eps(&self) -> T {
        self.eps
    }
    pub fn margins(&self) -> &CorridorMargins<T> {
        &self.margins
    }

    /// `2 sqrt(ab)`.
    pub fn decay_rate(&self) -> T {
        T::two() * (self.a * self.b).sqrt()
    }

    /// Worst-case size of the perturbation term on `Y_eps`: `abar M_eps + bbar`.
    pub fn forcing_bound(&self) -> T {
        self.abar * self.margins.big_m + self.bbar
    }

    /// Limit of the envelope as `t -> inf`.
    pub fn steady_state_offset(&self) -> T {
        self.forcing_bound() / self.decay_rate()
    }

    pub fn contains(&self, y: T) -> bool {
        y >= self.margins.y_lower && y <= self.margins.y_upper
    }

    pub fn nominal_params(&self) -> ModelParams<T> {
        ModelParams::new(-self.a, -self.b).expect("finite by construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility<T> {
    pub lhs: T,
    pub rhs: T,
    pub admissible: bool,
}

pub fn check_corridor<T: Scalar>(spec: &CorridorSpec<T>) -> Admissibility<T> {
    let lhs = spec.decay_rate() * spec.margins.m_eps;
    let rhs = spec.forcing_bound();
    Admissibility {
        lhs,
        rhs,
        admissible: lhs > rhs,
    }
}

/// `exp(-2 sqrt(ab) t) |e0| + (abar M + bbar) / (2 sqrt(ab)) (1 - exp(-2 sqrt(ab) t))`.
pub fn iss_envelope<T: Scalar>(spec: &CorridorSpec<T>, e0: T, t: T) -> T {
    let rate = spec.decay_rate();
    let decay = (-rate * t).exp();
    decay * e0.abs() + spec.steady_state_offset() * (T::one() - decay)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineChannel<T> {
    pub amplitude: T,
    /// Angular frequency, radians per unit time.
    pub frequency: T,
    pub phase: T,
}

impl<T: Scalar> SineChannel<T> {
    fn at(&self, t: T) -> T {
        self.amplitude * (self.frequency * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Hold,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind<T> {
    Zero,
    Constant {
        da: T,
        db: T,
    },
    Sinusoid {
        a: SineChannel<T>,
        b: SineChannel<T>,
    },
    /// Values redrawn every `dwell` time units from a seeded stream. With
    /// `saturate` each draw is `+-bound`, otherwise uniform in `[-bound, bound]`.
    PiecewiseConstantRandom {
        seed: u64,
        dwell: T,
        saturate: bool,
    },
    Table {
        times: Vec<T>,
        da: Vec<T>,
        db: Vec<T>,
        interpolation: Interpolation,
    },
}

/// Disturbances `(da(t), db(t))` with certified bounds; every value is
/// clamped into `[-abar, abar] x [-bbar, bbar]` at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSchedule<T> {
    kind: ScheduleKind<T>,
    abar: T,
    bbar: T,
}

fn clamp_sym<T: Scalar>(v: T, bound: T) -> T {
    v.max(-bound).min(bound)
}

impl<T: Scalar> PerturbationSchedule<T> {
    pub fn new(kind: ScheduleKind<T>, abar: T, bbar: T) -> Result<Self> {
        if !(abar >= T::zero() && abar.is_finite() && bbar >= T::zero() && bbar.is_finite()) {
            return Err(Error::InvalidCorridor("schedule bounds must be finite and nonnegative".into()));
        }
        let kind = match kind {
            ScheduleKind::Zero => ScheduleKind::Zero,
            ScheduleKind::Constant { da, db } => ScheduleKind::Constant {
                da: clamp_sym(da, abar),
                db: clamp_sym(db, bbar),
            },
            ScheduleKind::Sinusoid { a, b } => {
                let ok = |c: &SineChannel<T>| c.amplitude.is_finite() && c.frequency.is_finite() && c.phase.is_finite();
                if !ok(&a) || !ok(&b) {
                    return Err(Error::InvalidCorridor("sinusoid channels must be finite".into()));
                }
                ScheduleKind::Sinusoid {
                    a: SineChannel {
                        amplitude: a.amplitude.abs().min(abar),
                        ..a
                    },
                    b: SineChannel {
                        amplitude: b.amplitude.abs().min(bbar),
                        ..b
                    },
                }
            }
            ScheduleKind::PiecewiseConstantRandom { seed, dwell, saturate } => {
                if !(dwell > T::zero() && dwell.is_finite()) {
                    return Err(Error::InvalidCorridor("dwell must be positive".into()));
                }
                ScheduleKind::PiecewiseConstantRandom { seed, dwell, saturate }
            }
            ScheduleKind::Table {
                times,
                da,
                db,
                interpolation,
            } => {
                if times.is_empty() || times.len() != da.len() || times.len() != db.len() {
                    return Err(Error::InvalidCorridor("table columns must be nonempty and of equal length".into()));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
                    return Err(Error::InvalidCorridor("table times must be finite and strictly increasing".into()));
                }
                ScheduleKind::Table {
                    times,
                    da: da.into_iter().map(|v| clamp_sym(v, abar)).collect(),
                    db: db.into_iter().map(|v| clamp_sym(v, bbar)).collect(),
                    interpolation,
                }
            }
        };
        Ok(Self { kind, abar, bbar })
    }

    pub fn zero() -> Self {
        Self {
            kind: ScheduleKind::Zero,
            abar: T::zero(),
            bbar: T::zero(),
        }
    }

    pub fn kind(&self) -> &ScheduleKind<T> {
        &self.kind
    }

    pub fn certified_bounds(&self) -> (T, T) {
        (self.abar, self.bbar)
    }

    /// Fixes the random draws (if any) on `[0, horizon]`.
    pub fn realize(&self, horizon: T) -> RealizedSchedule<T> {
        let pieces = match &self.kind {
            ScheduleKind::PiecewiseConstantRandom { seed, dwell, saturate } => {
                let n = (horizon / *dwell).ceil().to_usize().unwrap_or(0) + 1;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let abar = self.abar.as_f64();
                let bbar = self.bbar.as_f64();
                let mut draw = |bound: f64| -> f64 {
                    if *saturate {
                        if rng.gen::<bool>() {
                            bound
                        } else {
                            -bound
                        }
                    } else {
                        bound * (2.0 * rng.gen::<f64>() - 1.0)
                    }
                };
                (0..n)
                    .map(|_| {
                        let da = draw(abar);
                        let db = draw(bbar);
                        (clamp_sym(T::lit(da), self.abar), clamp_sym(T::lit(db), self.bbar))
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        RealizedSchedule {
            schedule: self.clone(),
            pieces,
            horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizedSchedule<T> {
    schedule: PerturbationSchedule<T>,
    pieces: Vec<(T, T)>,
    horizon: T,
}

impl<T: Scalar> RealizedSchedule<T> {
    /// `(da(t), db(t))`; piecewise-constant kinds are right-continuous.
    pub fn at(&self, t: T) -> (T, T) {
        match &self.schedule.kind {
            ScheduleKind::Zero => (T::zero(), T::zero()),
            ScheduleKind::Constant { da, db } => (*da, *db),
            ScheduleKind::Sinusoid { a, b } => (
                clamp_sym(a.at(t), self.schedule.abar),
                clamp_sym(b.at(t), self.schedule.bbar),
            ),
            ScheduleKind::PiecewiseConstantRandom { dwell, .. } => {
                let k = (t / *dwell).floor().to_usize().unwrap_or(0).min(self.pieces.len() - 1);
                self.pieces[k]
            }
            ScheduleKind::Table {
                times,
                da,
                db,
                interpolation,
            } => {
                let idx = times.partition_point(|&s| s <= t);
                if idx == 0 {
                    return (da[0], db[0]);
                }
                let i = idx - 1;
                if i + 1 >= times.len() || *interpolation == Interpolation::Hold {
                    return (da[i], db[i]);
                }
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                (da[i] + w * (da[i + 1] - da[i]), db[i] + w * (db[i + 1] - db[i]))
            }
        }
    }

    fn piecewise_constant(&self) -> bool {
        matches!(
            self.schedule.kind,
            ScheduleKind::PiecewiseConstantRandom { .. }
                | ScheduleKind::Table {
                    interpolation: Interpolation::Hold,
                    ..
                }
        )
    }

    /// Times in `(0, horizon)` where the schedule switches or has a kink.
    pub fn breakpoints(&self) -> Vec<T> {
        let inside = |t: &T| *t > T::zero() && *t < self.horizon;
        match &self.schedule.kind {
            ScheduleKind::PiecewiseConstantRandom { dwell, .. } => (1..self.pieces.len())
                .map(|k| *dwell * T::from_usize(k).expect("piece index fits"))
                .filter(inside)
                .collect(),
            ScheduleKind::Table { times, .. } => times.iter().copied().filter(inside).collect(),
            _ => Vec::new(),
        }
    }

    /// Integration segments; on each one the disturbance is smooth.
    fn segments(&self) -> Vec<(T, T)> {
        let mut cuts = vec![T::zero()];
        cuts.extend(self.breakpoints());
        cuts.push(self.horizon);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Disturbance used inside `segment`; constant pieces are read at the
    /// segment midpoint so the right end never picks up the next piece.
    fn on_segment(&self, segment: (T, T), t: T) -> (T, T) {
        if self.piecewise_constant() {
            self.at((segment.0 + segment.1) * T::half())
        } else {
            self.at(t)
        }
    }
}

/// Integrates `rhs(t, state, disturbance, deriv)` segment by segment and
/// stitches the pieces; returns the trajectory and the disturbance per sample.
fn integrate_over_schedule<T, F>(
    realized: &RealizedSchedule<T>,
    state0: &[T],
    config: &IntegratorConfig<T>,
    events: &[EventFn<T>],
    rhs: F,
) -> Result<(Trajectory<T>, Vec<(T, T)>)>
where
    T: Scalar,
    F: Fn(T, &[T], (T, T), &mut [T]),
{
    let mut out: Option<Trajectory<T>> = None;
    let mut disturbances = Vec::new();
    let mut state = state0.to_vec();
    for seg in realized.segments() {
        let cfg = IntegratorConfig {
            output_times: config.output_times.iter().copied().filter(|&t| t > seg.0 && t < seg.1).collect(),
            ..config.clone()
        };
        let piece = integrate_with_events(|t, y, d| rhs(t, y, realized.on_segment(seg, t), d), &state, seg, &cfg, events)?;
        let skip = usize::from(out.is_some());
        for s in &piece.samples[skip..] {
            disturbances.push(realized.on_segment(seg, s.t));
        }
        state = piece.last().state.clone();
        let stop = piece.event.is_some();
        match out.as_mut() {
            None => out = Some(piece),
            Some(acc) => {
                acc.samples.extend(piece.samples.into_iter().skip(1));
                acc.event = piece.event;
                acc.accepted_steps += piece.accepted_steps;
                acc.rejected_steps += piece.rejected_steps;
            }
        }
        if stop {
            break;
        }
    }
    let mut traj = out.expect("at least one segment");
    traj.provenance = Provenance::Numerical;
    Ok((traj, disturbances))
}

#[derive(Debug, Clone)]
pub struct PerturbedRun<T> {
    /// Ratio trajectory, state `[y]`.
    pub trajectory: Trajectory<T>,
    /// Instantaneous `alpha(t)` and `beta(t)` per sample.
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    /// `iss_envelope` at each sample time.
    pub envelope: Vec<T>,
    pub stayed_in: bool,
    /// `max(|y - y*| - envelope)`, clamped at zero.
    pub max_envelope_violation: T,
}

/// Integrates `y' = (-a + da(t)) y^2 + b - db(t)` from `y0 in Y_eps`.
pub fn simulate_perturbed<T: Scalar>(
    spec: &CorridorSpec<T>,
    schedule: &PerturbationSchedule<T>,
    y0: RatioState<T>,
    horizon: T,
    config: &IntegratorConfig<T>,
) -> Result<PerturbedRun<T>> {
    let (sa, sb) = schedule.certified_bounds();
    if sa > spec.abar || sb > spec.bbar {
        return Err(Error::ScheduleExceedsBounds {
            abar: sa.as_f64(),
            bbar: sb.as_f64(),
        });
    }
    let y0 = y0.value();
    if !spec.contains(y0) {
        return Err(Error::InvalidInitialCondition(format!("y0 = {y0} lies outside Y_eps")));
    }
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(Error::InvalidConfig("horizon must be positive and finite".into()));
    }
    let realized = schedule.realize(horizon);
    let (a, b) = (spec.a, spec.b);
    let events = [EventFn::ratio_blowup(0, config.event_tol)];
    let (trajectory, dist) = integrate_over_schedule(&realized, &[y0], config, &events, |_, y, (da, db), d| {
        d[0] = (-a + da) * y[0] * y[0] + b - db;
    })?;

    let y_star = spec.margins.y_star;
    let e0 = y0 - y_star;
    let mut stayed_in = trajectory.event.is_none();
    let mut worst = T::zero();
    let mut envelope = Vec::with_capacity(trajectory.samples.len());
    for s in &trajectory.samples {
        let y = s.state[0];
        let env = iss_envelope(spec, e0, s.t);
        stayed_in &= spec.contains(y);
        worst = worst.max((y - y_star).abs() - env);
        envelope.push(env);
    }
    Ok(PerturbedRun {
        alpha: dist.iter().map(|&(da, _)| -a + da).collect(),
        beta: dist.iter().map(|&(_, db)| -b + db).collect(),
        trajectory,
        envelope,
        stayed_in,
        max_envelope_violation: worst.max(T::zero()),
    })
}

/// Continuous feedback on a coefficient living in `[-1, 0]`: `-eta` on
/// `[-delta, 0]`, `+eta` on `[-1, -1 + delta]`, linear ramps of width `ramp`
/// to zero inside, zero in the core. An optional constant drift is added on
/// top; with `|drift| < eta` the band still pushes inward at `eta - |drift|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferLaw<T> {
    delta: T,
    eta: T,
    ramp: T,
    drift_a: T,
    drift_b: T,
}

impl<T: Scalar> BufferLaw<T> {
    pub fn new(delta: T, eta: T, ramp: T) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidBufferLaw(m.to_string()));
        if !(delta > T::zero() && delta < T::half()) {
            return bad("delta must lie in (0, 0.5)");
        }
        if !(eta > T::zero() && eta.is_finite()) {
            return bad("eta must be positive");
        }
        if !(ramp > T::zero() && ramp <= delta) {
            return bad("ramp must lie in (0, delta]");
        }
        if T::two() * ramp > T::one() - T::two() * delta {
            return bad("ramps overlap: need 2 ramp <= 1 - 2 delta");
        }
        Ok(Self {
            delta,
            eta,
            ramp,
            drift_a: T::zero(),
            drift_b: T::zero(),
        })
    }

    /// Law with `ramp = delta / 2` (shrunk if the core is narrow).
    pub fn with_default_ramp(delta: T, eta: T) -> Result<Self> {
        let core = T::one() - T::two() * delta;
        Self::new(delta, eta, (delta * T::half()).min(core * T::half()))
    }

    pub fn with_drift(mut self, drift_a: T, drift_b: T) -> Result<Self> {
        if !(drift_a.abs() < self.eta && drift_b.abs() < self.eta) {
            return Err(Error::InvalidBufferLaw("drift must be smaller than eta in magnitude".into()));
        }
        self.drift_a = drift_a;
        self.drift_b = drift_b;
        Ok(self)
    }

    pub fn delta(&self) -> T {
        self.delta
    }
    pub fn eta(&self) -> T {
        self.eta
    }
    pub fn ramp(&self) -> T {
        self.ramp
    }
    pub fn drift(&self) -> (T, T) {
        (self.drift_a, self.drift_b)
    }

    /// Feedback part of the coefficient rate.
    pub fn feedback(&self, v: T) -> T {
        let one = T::one();
        let top = -self.delta;
        let bottom = -one + self.delta;
        if v >= top {
            -self.eta
        } else if v > top - self.ramp {
            -self.eta * (v - (top - self.ramp)) / self.ramp
        } else if v <= bottom {
            self.eta
        } else if v < bottom + self.ramp {
            self.eta * ((bottom + self.ramp) - v) / self.ramp
        } else {
            T::zero()
        }
    }

    pub fn rate_a(&self, a: T) -> T {
        self.feedback(a) + self.drift_a
    }

    pub fn rate_b(&self, b: T) -> T {
        self.feedback(b) + self.drift_b
    }

    /// Coefficient band `[-1 + delta, -delta]` kept invariant by the law.
    pub fn band(&self) -> (T, T) {
        (-T::one() + self.delta, -self.delta)
    }
}

/// Supremum of the share buffer half-widths `eps` for which
/// `[eps, 1 - eps]` is invariant whenever both coefficients lie in
/// `[-1 + delta, -delta]`: `sqrt(delta) / (sqrt(delta) + sqrt(1 - delta))`.
///
/// At `x = eps` the field is `a eps^2 - b (1 - eps)^2 >= -(1 - delta) eps^2 + delta (1 - eps)^2`,
/// positive exactly below this bound; `x = 1 - eps` is symmetric.
pub fn share_buffer_bound<T: Scalar>(delta: T) -> T {
    let s = delta.sqrt();
    s / (s + (T::one() - delta).sqrt())
}

/// Coarse certification of a buffered configuration through the corridor
/// inequality: nominal magnitudes at the band centre and perturbation bounds
/// equal to the largest excursion inside the band.
pub fn certify_buffer_with_corridor<T: Scalar>(law: &BufferLaw<T>, eps: T) -> Result<Admissibility<T>> {
    let centre = T::half();
    let excursion = T::half() - law.delta;
    let spec = CorridorSpec::new(centre, centre, excursion, excursion, eps)?;
    Ok(check_corridor(&spec))
}

#[derive(Debug, Clone)]
pub struct BufferedRun<T> {
    /// Joint trajectory, state `[x, a, b]`.
    pub trajectory: Trajectory<T>,
    pub x_range: (T, T),
    pub a_range: (T, T),
    pub b_range: (T, T),
    /// `a(t) <= 0` and `b(t) <= 0` at every sample.
    pub schedule_invariant: bool,
    /// `eps` lies below [`share_buffer_bound`] for the law's `delta`.
    pub eps_certified: bool,
}

fn range_of<T: Scalar>(values: impl Iterator<Item = T>) -> (T, T) {
    values.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Integrates `x' = (a - b) x^2 + 2 b x - b`, `a' = phi(a)`, `b' = phi(b)`.
pub fn simulate_buffered<T: Scalar>(
    law: &BufferLaw<T>,
    eps: T,
    x0: ShareState<T>,
    a0: T,
    b0: T,
    horizon: T,
    config: &IntegratorConfig<T>,
) -> Result<BufferedRun<T>> {
    if !(eps > T::zero() && eps < T::half()) {
        return Err(Error::InvalidInitialCondition("eps must lie in (0, 0.5)".into()));
    }
    let (lo, hi) = law.band();
    for (name, v) in [("a0", a0), ("b0", b0)] {
        if !(v >= lo && v <= hi) {
            return Err(Error::InvalidInitialCondition(format!("{name} = {v} lies outside [{lo}, {hi}]")));
        }
    }
    let x0 = x0.value();
    if !(x0 >= eps && x0 <= T::one() - eps) {
        return Err(Error::InvalidInitialCondition(format!("x0 = {x0} lies outside [eps, 1 - eps]")));
    }
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(Error::InvalidConfig("horizon must be positive and finite".into()));
    }
    let law = *law;
    let trajectory = integrate_with_events(
        move |_, s, d| {
            let (x, a, b) = (s[0], s[1], s[2]);
            let w = T::one() - x;
            d[0] = a * x * x - b * w * w;
            d[1] = law.rate_a(a);
            d[2] = law.rate_b(b);
        },
        &[x0, a0, b0],
        (T::zero(), horizon),
        config,
        &[],
    )?;
    let a_samples: Vec<T> = trajectory.component(1).collect();
    let b_samples: Vec<T> = trajectory.component(2).collect();
    Ok(BufferedRun {
        x_range: range_of(trajectory.component(0)),
        a_range: range_of(a_samples.iter().copied()),
        b_range: range_of(b_samples.iter().copied()),
        schedule_invariant: check_schedule_invariance(&a_samples, &b_samples),
        eps_certified: eps < share_buffer_bound(law.delta),
        trajectory,
    })
}

/// Share dynamics under user-supplied coefficients `t -> (a(t), b(t))`,
/// with the nonpositivity hypothesis checked afterwards on the sample grid.
pub fn simulate_share_schedule<T, S>(
    x0: ShareState<T>,
    coefficients: S,
    horizon: T,
    config: &IntegratorConfig<T>,
) -> Result<(Trajectory<T>, bool)>
where
    T: Scalar,
    S: Fn(T) -> (T, T),
{
    let trajectory = integrate_with_events(
        |t, s, d| {
            let (a, b) = coefficients(t);
            let w = T::one() - s[0];
            d[0] = a * s[0] * s[0] - b * w * w;
        },
        &[x0.value()],
        (T::zero(), horizon),
        config,
        &[EventFn::share_hits_zero(0), EventFn::share_hits_one(0)],
    )?;
    let (a, b): (Vec<T>, Vec<T>) = trajectory.times().map(&coefficients).unzip();
    let ok = check_schedule_invariance(&a, &b);
    Ok((trajectory, ok))
}

/// `a(t) <= 0` and `b(t) <= 0` at every sample.
pub fn check_schedule_invariance<T: Scalar>(a_samples: &[T], b_samples: &[T]) -> bool {
    a_samples.iter().chain(b_samples).all(|&v| v <= T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(a: f64, b: f64, abar: f64, bbar: f64, eps: f64) -> CorridorSpec<f64> {
        CorridorSpec::new(a, b, abar, bbar, eps).unwrap()
    }

    #[test]
    fn margins_examples() {
        let m = corridor_margins(1.0f64, 1.0, 0.25).unwrap();
        assert!((m.m_eps - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.big_m - 9.0).abs() < 1e-14);
        assert!((m.y_lower - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.y_upper - 3.0).abs() < 1e-15);
        assert_eq!(m.y_star, 1.0);

        let m = corridor_margins(4.0f64, 1.0, 0.25).unwrap();
        assert_eq!(m.y_star, 0.5);
        assert!((m.m_eps - 1.0 / 6.0).abs() < 1e-15);

        assert!(corridor_margins(1.0, 1.0, 0.5 - 1e-12).unwrap().m_eps < 1e-11);
        assert!(corridor_margins(1.0, 1.0, 0.5).is_err());
        assert!(matches!(corridor_margins(100.0, 1.0, 0.25), Err(Error::EquilibriumOutsideBuffer(_))));
    }

    #[test]
    fn admissibility_examples() {
        let r = check_corridor(&spec(1.0, 1.0, 0.0, 0.0, 0.25));
        assert!((r.lhs - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.rhs, 0.0);
        assert!(r.admissible);

        let r = check_corridor(&spec(1.0, 1.0, 0.1, 0.1, 0.25));
        assert!((r.rhs - 1.0).abs() < 1e-14);
        assert!(r.admissible);

        let r = check_corridor(&spec(1.0, 1.0, 0.2, 0.0, 0.25));
        assert!((r.rhs - 1.8).abs() < 1e-14);
        assert!(!r.admissible);
    }

    #[test]
    fn envelope_examples() {
        let s = spec(1.0, 1.0, 0.1, 0.1, 0.25);
        assert_eq!(iss_envelope(&s, -0.3, 0.0), 0.3);
        assert!((iss_envelope(&s, 0.0, 1e3) - 0.5).abs() < 1e-15);
        assert!((iss_envelope(&s, 0.0, 1.0) - 0.5 * (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert!((iss_envelope(&s, 0.0, 1.0) - 0.43233).abs() < 1e-5);
    }

    #[test]
    fn zero_schedule_at_equilibrium() {
        let s = spec(1.0, 1.0, 0.1, 0.1, 0.25);
        let run = simulate_perturbed(
            &s,
            &PerturbationSchedule::zero(),
            RatioState::new(1.0).unwrap(),
            10.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(run.stayed_in);
        assert_eq!(run.max_envelope_violation, 0.0);
        assert!(run.trajectory.component(0).all(|y| y == 1.0));
    }

    #[test]
    fn sinusoid_from_lower_edge_stays_in() {
        let s = spec(1.0, 1.0, 0.1, 0.1, 0.25);
        let ch = SineChannel { amplitude: 0.1, frequency: 3.0, phase: 0.0 };
        let sched = PerturbationSchedule::new(ScheduleKind::Sinusoid { a: ch, b: ch }, 0.1, 0.1).unwrap();
        let y0 = s.margins().y_lower;
        let run = simulate_perturbed(&s, &sched, RatioState::new(y0).unwrap(), 20.0, &IntegratorConfig::default()).unwrap();
        assert!(run.stayed_in);
        assert!(run.alpha.iter().all(|&a| (a + 1.0).abs() <= 0.1 + 1e-15));
    }

    #[test]
    fn non_admissible_run_is_diagnostic_only() {
        let s = spec(1.0, 1.0, 0.2, 0.0, 0.25);
        let sched = PerturbationSchedule::new(ScheduleKind::Constant { da: 0.2, db: 0.0 }, 0.2, 0.0).unwrap();
        let run = simulate_perturbed(&s, &sched, RatioState::new(2.0).unwrap(), 20.0, &IntegratorConfig::default()).unwrap();
        // y settles at sqrt(1 / 0.8) either way; nothing is asserted about exits.
        let last = run.trajectory.last().state[0];
        assert!((last - (1.0f64 / 0.8).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn schedule_bounds_enforced() {
        let s = spec(1.0, 1.0, 0.1, 0.1, 0.25);
        let sched = PerturbationSchedule::new(ScheduleKind::Constant { da: 0.2, db: 0.0 }, 0.2, 0.0).unwrap();
        let res = simulate_perturbed(&s, &sched, RatioState::new(1.0).unwrap(), 1.0, &IntegratorConfig::default());
        assert!(matches!(res, Err(Error::ScheduleExceedsBounds { .. })));
        let res = simulate_perturbed(&s, &PerturbationSchedule::zero(), RatioState::new(5.0).unwrap(), 1.0, &IntegratorConfig::default());
        assert!(matches!(res, Err(Error::InvalidInitialCondition(_))));
    }

    #[test]
    fn schedules_are_clamped_and_replayable() {
        let sched = PerturbationSchedule::new(
            ScheduleKind::PiecewiseConstantRandom { seed: 7, dwell: 0.5, saturate: true },
            0.3,
            0.1,
        )
        .unwrap();
        let r1 = sched.realize(10.0);
        let r2 = sched.realize(10.0);
        for i in 0..200 {
            let t = i as f64 * 0.05;
            let (da, db) = r1.at(t);
            assert_eq!((da, db), r2.at(t));
            assert_eq!(da.abs(), 0.3);
            assert_eq!(db.abs(), 0.1);
        }
        assert_eq!(r1.breakpoints().len(), 19);

        let sched = PerturbationSchedule::new(
            ScheduleKind::Table {
                times: vec![0.0, 1.0, 2.0],
                da: vec![0.0, 5.0, -5.0],
                db: vec![0.0, 0.0, 0.0],
                interpolation: Interpolation::Linear,
            },
            0.5,
            0.0,
        )
        .unwrap();
        let r = sched.realize(3.0);
        assert_eq!(r.at(0.5).0, 0.25);
        assert_eq!(r.at(2.5).0, -0.5);
        let c = PerturbationSchedule::new(ScheduleKind::Constant { da: -3.0, db: 3.0 }, 1.0, 2.0).unwrap();
        assert_eq!(c.realize(1.0).at(0.3), (-1.0, 2.0));
    }

    #[test]
    fn piecewise_run_matches_constant_segments() {
        // Two pieces: integrate by hand with the exact constant-coefficient
        // solutions on each piece.
        let s = spec(1.0, 1.0, 0.2, 0.2, 0.2);
        let sched = PerturbationSchedule::new(
            ScheduleKind::Table {
                times: vec![0.0, 1.0],
                da: vec![0.2, -0.2],
                db: vec![-0.2, 0.2],
                interpolation: Interpolation::Hold,
            },
            0.2,
            0.2,
        )
        .unwrap();
        let run = simulate_perturbed(&s, &sched, RatioState::new(0.5).unwrap(), 2.0, &IntegratorConfig::default()).unwrap();
        let piece = |alpha: f64, beta: f64, y0: f64, t: f64| {
            crate::closed_form::solve_ratio(&ModelParams::new(alpha, beta).unwrap(), RatioState::new(y0).unwrap())
                .unwrap()
                .eval(t)
                .unwrap()
                .value()
        };
        let y1 = piece(-0.8, -1.2, 0.5, 1.0);
        let y2 = piece(-1.2, -0.8, y1, 1.0);
        assert!((run.trajectory.last().state[0] - y2).abs() < 1e-9);
    }

    #[test]
    fn envelope_fails_below_equilibrium_without_perturbation() {
        // Unperturbed decay from below runs at a (y + y*) < 2 sqrt(ab).
        let s = spec(1.0, 1.0, 0.0, 0.0, 0.25);
        let run = simulate_perturbed(
            &s,
            &PerturbationSchedule::zero(),
            RatioState::new(1.0 / 3.0).unwrap(),
            5.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(run.stayed_in);
        assert!(run.max_envelope_violation > 1e-2);
        // From above the envelope holds.
        let run = simulate_perturbed(&s, &PerturbationSchedule::zero(), RatioState::new(3.0).unwrap(), 5.0, &IntegratorConfig::default()).unwrap();
        assert!(run.max_envelope_violation <= 1e-9);
    }

    #[test]
    fn admissible_spec_can_exit_through_lower_edge() {
        // bbar > b passes the corridor inequality here, yet the constant
        // disturbance db = +bbar removes the equilibrium altogether.
        let s = spec(1.0, 1.0, 0.0, 1.2, 0.25);
        assert!(check_corridor(&s).admissible);
        let sched = PerturbationSchedule::new(ScheduleKind::Constant { da: 0.0, db: 1.2 }, 0.0, 1.2).unwrap();
        let run = simulate_perturbed(&s, &sched, RatioState::new(1.0).unwrap(), 10.0, &IntegratorConfig::default()).unwrap();
        assert!(!run.stayed_in);
    }

    #[test]
    fn buffered_example() {
        let law = BufferLaw::with_default_ramp(0.2, 0.5).unwrap();
        let run = simulate_buffered(&law, 0.25, ShareState::new(0.5).unwrap(), -0.5, -0.5, 50.0, &IntegratorConfig::default()).unwrap();
        assert!(run.a_range.0 >= -0.8 && run.a_range.1 <= -0.2);
        assert!(run.b_range.0 >= -0.8 && run.b_range.1 <= -0.2);
        assert!(run.x_range.0 > 0.0 && run.x_range.1 < 1.0);
        assert!(run.schedule_invariant);
        assert!(run.eps_certified);
    }

    #[test]
    fn buffered_reduces_to_constant_coefficients() {
        let law = BufferLaw::with_default_ramp(0.2f64, 1e-12).unwrap();
        let run = simulate_buffered(&law, 0.25, ShareState::new(0.3).unwrap(), -0.5, -0.5, 60.0, &IntegratorConfig::default()).unwrap();
        let last = run.trajectory.last();
        assert_eq!(last.state[1], -0.5);
        assert!((last.state[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn adversarial_drift_is_pushed_back() {
        let law = BufferLaw::new(0.2f64, 0.5, 0.1).unwrap().with_drift(0.4, -0.4).unwrap();
        let run = simulate_buffered(&law, 0.25, ShareState::new(0.6).unwrap(), -0.5, -0.5, 100.0, &IntegratorConfig::default()).unwrap();
        assert!(run.a_range.1 <= -0.2 + 1e-9, "{:?}", run.a_range);
        assert!(run.b_range.0 >= -0.8 - 1e-9, "{:?}", run.b_range);
        // a parks where the ramp cancels the drift: -0.3 + 0.1 * 0.4 / 0.5
        assert!((run.trajectory.last().state[1] - (-0.22)).abs() < 1e-6);
        assert!(run.x_range.0 >= 0.25 && run.x_range.1 <= 0.75);
    }

    #[test]
    fn buffer_law_validation() {
        assert!(BufferLaw::new(0.0, 0.5, 0.1).is_err());
        assert!(BufferLaw::new(0.2, 0.0, 0.1).is_err());
        assert!(BufferLaw::new(0.2, 0.5, 0.3).is_err());
        assert!(BufferLaw::new(0.45, 0.5, 0.1).is_err());
        assert!(BufferLaw::new(0.2, 0.5, 0.1).unwrap().with_drift(0.5, 0.0).is_err());
        let law = BufferLaw::new(0.2, 0.5, 0.1).unwrap();
        assert!(simulate_buffered(&law, 0.25, ShareState::new(0.5).unwrap(), -0.1, -0.5, 1.0, &IntegratorConfig::default()).is_err());
        assert!(simulate_buffered(&law, 0.25, ShareState::new(0.1).unwrap(), -0.5, -0.5, 1.0, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn buffer_feedback_shape() {
        let law = BufferLaw::new(0.2f64, 0.5, 0.1).unwrap();
        for v in [0.0, -0.1, -0.2] {
            assert!(law.feedback(v) <= -0.5);
        }
        for v in [-1.0, -0.9, -0.8] {
            assert!(law.feedback(v) >= 0.5);
        }
        assert_eq!(law.feedback(-0.5), 0.0);
        assert!((law.feedback(-0.25) + 0.25).abs() < 1e-15);
        // continuity at the ramp ends
        assert!((law.feedback(-0.3 + 1e-12)).abs() < 1e-10);
        assert!((law.feedback(-0.7 - 1e-12)).abs() < 1e-10);
    }

    #[test]
    fn corridor_certification_of_buffer_is_conservative() {
        let law = BufferLaw::with_default_ramp(0.2, 0.5).unwrap();
        let cert = certify_buffer_with_corridor(&law, 0.25).unwrap();
        assert!(!cert.admissible);
        assert!((share_buffer_bound(0.2f64) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_invariance_examples() {
        assert!(check_schedule_invariance(&[-0.1, -0.5], &[-0.2, -0.3]));
        assert!(!check_schedule_invariance(&[-0.1, 1e-6], &[-0.2, -0.3]));
        let (traj, ok) = simulate_share_schedule(
            ShareState::new(0.4).unwrap(),
            |t: f64| (-0.5 - 0.2 * t.sin(), -0.6),
            20.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(ok);
        assert!(traj.event.is_none());
        let (traj, ok) = simulate_share_schedule(ShareState::new(0.4).unwrap(), |_| (0.5, -0.1), 20.0, &IntegratorConfig::default()).unwrap();
        assert!(!ok);
        assert!(traj.event.is_some());
    }

    proptest! {
        #[test]
        fn envelope_monotonicity(a in 0.2..5.0f64, b in 0.2..5.0f64, abar in 0.0..0.05f64, bbar in 0.0..0.5f64, e0 in -2.0..2.0f64) {
            let s = match CorridorSpec::new(a, b, abar, bbar, 0.1) { Ok(s) => s, Err(_) => return Ok(()) };
            let ss = s.steady_state_offset();
            let vals: Vec<f64> = (0..50).map(|i| iss_envelope(&s, e0, i as f64 * 0.1)).collect();
            for w in vals.windows(2) {
                if e0.abs() > ss {
                    prop_assert!(w[1] <= w[0] + 1e-15);
                } else {
                    prop_assert!(w[1] >= w[0] - 1e-15);
                }
            }
            let fixed: Vec<f64> = (0..20).map(|i| iss_envelope(&s, ss, i as f64 * 0.3)).collect();
            prop_assert!(fixed.iter().all(|v| (v - ss).abs() <= 1e-14 * ss.max(1.0)));
        }

        #[test]
        fn margin_consistency(a in 0.1..10.0f64, b in 0.1..10.0f64, abar in 0.0..1.0f64, bbar in 0.0..3.0f64, eps in 0.01..0.49f64) {
            let s = match CorridorSpec::new(a, b, abar, bbar, eps) { Ok(s) => s, Err(_) => return Ok(()) };
            if check_corridor(&s).admissible {
                prop_assert!(s.steady_state_offset() < s.margins().m_eps);
            }
        }

        #[test]
        fn share_mapping(eps in 0.001..0.499f64, w in 0.0..=1.0f64) {
            let m = corridor_margins(1.0, 1.0, eps).unwrap();
            let y = m.y_lower + w * (m.y_upper - m.y_lower);
            let x = y / (1.0 + y);
            let slack = 4.0 * f64::EPSILON;
            prop_assert!(x >= eps - slack && x <= 1.0 - eps + slack);
            prop_assert!((m.y_lower / (1.0 + m.y_lower) - eps).abs() <= slack);
            prop_assert!((m.y_upper / (1.0 + m.y_upper) - (1.0 - eps)).abs() <= slack);
        }
    }
}
