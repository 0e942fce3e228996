//! Explicit Runge–Kutta integration with event detection.
//!
//! Two methods are provided: classical fixed-step RK4 and the adaptive
//! Dormand–Prince 5(4) pair. Events are scalar functions `g(t, state)`; the
//! run stops at the first sign change of any of them, localized by bisection
//! (each probe re-takes a single step from the last accepted point, so the
//! probe state carries the method's own local accuracy).
//!
//! Requested output times are hit exactly: the step is clipped so that the
//! solver lands on them. Between accepted samples the trajectory can be
//! queried with cubic Hermite interpolation.

use crate::error::{Error, Result};
use crate::model::Face;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FixedRk4,
    AdaptiveRk45,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig<T> {
    pub method: Method,
    /// Step of `FixedRk4`; initial step hint is computed automatically for
    /// the adaptive method.
    pub step: T,
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_steps: usize,
    /// Width of the bisection bracket around an event.
    pub event_tol: T,
    /// Upper bound on adaptive steps.
    pub max_step: T,
    /// Times the solver must land on, in addition to the end of the span.
    pub output_times: Vec<T>,
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveRk45,
            step: T::lit(1e-3),
            rel_tol: T::lit(1e-10),
            abs_tol: T::lit(1e-12),
            max_steps: 1_000_000,
            event_tol: T::lit(1e-9),
            max_step: T::infinity(),
            output_times: Vec::new(),
        }
    }
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn fixed_rk4(step: T) -> Self {
        Self {
            method: Method::FixedRk4,
            step,
            ..Self::default()
        }
    }

    pub fn with_output_times(mut self, times: Vec<T>) -> Self {
        self.output_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        let open_unit = |v: T| v > T::zero() && v < T::one();
        if !(self.step > T::zero() && self.step.is_finite()) {
            return bad("step must be positive and finite");
        }
        if !open_unit(self.rel_tol) || !open_unit(self.abs_tol) {
            return bad("tolerances must lie in (0, 1)");
        }
        if !(self.event_tol > T::zero() && self.event_tol.is_finite()) {
            return bad("event_tol must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if !(self.max_step > T::zero()) {
            return bad("max_step must be positive");
        }
        if self.output_times.iter().any(|t| !t.is_finite()) {
            return bad("output times must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Numerical,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub state: Vec<T>,
    /// Right-hand side at `(t, state)`.
    pub deriv: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord<T> {
    pub t: T,
    /// Last time with the pre-event sign and first time with the post-event sign.
    pub bracket: (T, T),
    pub label: String,
    pub face: Option<Face>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub samples: Vec<Sample<T>>,
    pub event: Option<EventRecord<T>>,
    pub provenance: Provenance,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn component(&self, i: usize) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(move |s| s.state[i])
    }

    pub fn last(&self) -> &Sample<T> {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn end_time(&self) -> T {
        self.last().t
    }

    /// Cubic Hermite interpolation between the stored samples.
    pub fn interpolate(&self, t: T) -> Option<Vec<T>> {
        let first = self.samples.first()?;
        if t < first.t || t > self.end_time() {
            return None;
        }
        let idx = self.samples.partition_point(|s| s.t <= t);
        if idx == 0 {
            return Some(first.state.clone());
        }
        if idx >= self.samples.len() {
            return Some(self.last().state.clone());
        }
        let a = &self.samples[idx - 1];
        let b = &self.samples[idx];
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::two();
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        Some(
            (0..a.state.len())
                .map(|i| h00 * a.state[i] + h10 * h * a.deriv[i] + h01 * b.state[i] + h11 * h * b.deriv[i])
                .collect(),
        )
    }
}

type EventFnBox<T> = Box<dyn Fn(T, &[T]) -> T + Send + Sync>;

/// Scalar event function; a sign change terminates the run.
pub struct EventFn<T> {
    pub label: String,
    pub face: Option<Face>,
    func: EventFnBox<T>,
}

impl<T> std::fmt::Debug for EventFn<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventFn").field("label", &self.label).field("face", &self.face).finish()
    }
}

impl<T: Scalar> EventFn<T> {
    pub fn new(label: impl Into<String>, func: impl Fn(T, &[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            face: None,
            func: Box::new(func),
        }
    }

    pub fn with_face(mut self, face: Face) -> Self {
        self.face = Some(face);
        self
    }

    pub fn eval(&self, t: T, state: &[T]) -> T {
        (self.func)(t, state)
    }

    /// `state[index] - level` changes sign.
    pub fn level(label: impl Into<String>, index: usize, level: T) -> Self {
        Self::new(label, move |_, s| s[index] - level)
    }

    /// Share component reaches `x = 0` (face `R`).
    pub fn share_hits_zero(index: usize) -> Self {
        Self::new("share_zero", move |_, s| s[index]).with_face(Face::R)
    }

    /// Share component reaches `x = 1` (face `B`).
    pub fn share_hits_one(index: usize) -> Self {
        Self::new("share_one", move |_, s| T::one() - s[index]).with_face(Face::B)
    }

    /// Ratio component reaches `y = 0` (face `R`).
    pub fn ratio_hits_zero(index: usize) -> Self {
        Self::new("ratio_zero", move |_, s| s[index]).with_face(Face::R)
    }

    /// Blow-up guard: fires once `|y|` exceeds `1 / event_tol` (face `B`).
    pub fn ratio_blowup(index: usize, event_tol: T) -> Self {
        Self::new("ratio_blowup", move |_, s| T::one() / (T::one() + s[index].abs()) - event_tol)
            .with_face(Face::B)
    }

    /// Population component reaches zero.
    pub fn population_hits_zero(index: usize, face: Face) -> Self {
        let label = match face {
            Face::R => "population_r_zero",
            Face::B => "population_b_zero",
        };
        Self::new(label, move |_, s| s[index]).with_face(face)
    }
}

pub fn integrate<T, F>(rhs: F, state0: &[T], t_span: (T, T), config: &IntegratorConfig<T>) -> Result<Trajectory<T>>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    integrate_with_events(rhs, state0, t_span, config, &[])
}

pub fn integrate_with_events<T, F>(
    mut rhs: F,
    state0: &[T],
    t_span: (T, T),
    config: &IntegratorConfig<T>,
    events: &[EventFn<T>],
) -> Result<Trajectory<T>>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    config.validate()?;
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::InvalidConfig("t_span must satisfy t0 < t1".into()));
    }
    if state0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }
    let dim = state0.len();
    let mut stepper = Stepper::new(config.method, dim);

    let mut stops: Vec<T> = config.output_times.iter().copied().filter(|&t| t > t0 && t < t1).collect();
    stops.push(t1);
    stops.sort_by(|a, b| a.partial_cmp(b).expect("finite stops"));
    stops.dedup();

    let mut t = t0;
    let mut y = state0.to_vec();
    let mut f = vec![T::zero(); dim];
    rhs(t, &y, &mut f);
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteRhs(t.as_f64()));
    }

    let mut traj = Trajectory {
        samples: vec![Sample {
            t,
            state: y.clone(),
            deriv: f.clone(),
        }],
        event: None,
        provenance: Provenance::Numerical,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut g_prev: Vec<T> = events.iter().map(|e| e.eval(t, &y)).collect();

    let mut h = match config.method {
        Method::FixedRk4 => config.step,
        Method::AdaptiveRk45 => initial_step(&mut rhs, t, &y, &f, t1 - t0, config),
    }
    .min(config.max_step);

    let mut stop_idx = 0;
    let mut y_new = vec![T::zero(); dim];
    let mut f_new = vec![T::zero(); dim];
    let mut attempts = 0usize;

    while stop_idx < stops.len() {
        if attempts >= config.max_steps {
            return Err(Error::StepLimit(config.max_steps));
        }
        attempts += 1;
        let target = stops[stop_idx];
        let remaining = target - t;
        let landing = h >= remaining;
        let h_try = if landing { remaining } else { h };

        let err = stepper.step(&mut rhs, t, &y, &f, h_try, &mut y_new, &mut f_new, config);
        let finite = y_new.iter().chain(f_new.iter()).all(|v| v.is_finite());

        if config.method == Method::AdaptiveRk45 {
            if !finite || err > T::one() {
                traj.rejected_steps += 1;
                let factor = if finite {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2))
                } else {
                    T::lit(0.25)
                };
                h = h_try * factor;
                if h <= T::lit(16.0) * T::epsilon() * t.abs().max(T::one()) {
                    return Err(if finite {
                        Error::StepSizeUnderflow(t.as_f64())
                    } else {
                        Error::NonFiniteRhs(t.as_f64())
                    });
                }
                continue;
            }
        } else if !finite {
            return Err(Error::NonFiniteRhs(t.as_f64()));
        }

        let t_new = if landing { target } else { t + h_try };
        traj.accepted_steps += 1;

        if !events.is_empty() {
            let g_new: Vec<T> = events.iter().map(|e| e.eval(t_new, &y_new)).collect();
            let mut earliest: Option<(usize, T, T, Vec<T>, Vec<T>)> = None;
            for (i, ev) in events.iter().enumerate() {
                if !crossed(g_prev[i], g_new[i]) {
                    continue;
                }
                let (lo, hi, state_hi, deriv_hi) =
                    localize(&mut stepper, &mut rhs, ev, g_prev[i], t, &y, &f, t_new, &y_new, &f_new, config);
                if earliest.as_ref().map_or(true, |e| hi < e.2) {
                    earliest = Some((i, lo, hi, state_hi, deriv_hi));
                }
            }
            if let Some((i, lo, hi, state_hi, deriv_hi)) = earliest {
                if hi > t {
                    traj.samples.push(Sample {
                        t: hi,
                        state: state_hi,
                        deriv: deriv_hi,
                    });
                }
                traj.event = Some(EventRecord {
                    t: hi,
                    bracket: (lo, hi),
                    label: events[i].label.clone(),
                    face: events[i].face,
                });
                return Ok(traj);
            }
            g_prev = g_new;
        }

        traj.samples.push(Sample {
            t: t_new,
            state: y_new.clone(),
            deriv: f_new.clone(),
        });
        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut f, &mut f_new);
        t = t_new;
        if landing {
            stop_idx += 1;
        }
        if config.method == Method::AdaptiveRk45 {
            let factor = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
            };
            // A clipped landing step says little about the natural step size.
            let base = if landing { h.max(h_try) } else { h_try };
            h = (base * factor).min(config.max_step);
        }
    }
    Ok(traj)
}

fn crossed<T: Scalar>(before: T, after: T) -> bool {
    (before > T::zero() && after <= T::zero()) || (before < T::zero() && after >= T::zero())
}

#[allow(clippy::too_many_arguments)]
fn localize<T, F>(
    stepper: &mut Stepper<T>,
    rhs: &mut F,
    ev: &EventFn<T>,
    g_start: T,
    t: T,
    y: &[T],
    f: &[T],
    t_end: T,
    y_end: &[T],
    f_end: &[T],
    config: &IntegratorConfig<T>,
) -> (T, T, Vec<T>, Vec<T>)
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    let mut lo = t;
    let mut hi = t_end;
    let mut state_hi = y_end.to_vec();
    let mut deriv_hi = f_end.to_vec();
    let mut probe = vec![T::zero(); y.len()];
    let mut probe_f = vec![T::zero(); y.len()];
    while hi - lo > config.event_tol {
        let mid = lo + (hi - lo) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        stepper.step(rhs, t, y, f, mid - t, &mut probe, &mut probe_f, config);
        let g = ev.eval(mid, &probe);
        let same_side = g.is_finite() && ((g_start > T::zero() && g > T::zero()) || (g_start < T::zero() && g < T::zero()));
        if same_side {
            lo = mid;
        } else {
            hi = mid;
            state_hi.copy_from_slice(&probe);
            deriv_hi.copy_from_slice(&probe_f);
        }
    }
    (lo, hi, state_hi, deriv_hi)
}

fn weighted_rms<T: Scalar>(v: &[T], scale_from: &[T], config: &IntegratorConfig<T>) -> T {
    if v.is_empty() {
        return T::zero();
    }
    let sum = v.iter().zip(scale_from).fold(T::zero(), |acc, (&e, &y)| {
        let sc = config.abs_tol + config.rel_tol * y.abs();
        acc + (e / sc) * (e / sc)
    });
    (sum / T::from_usize(v.len()).expect("dimension fits")).sqrt()
}

fn initial_step<T, F>(rhs: &mut F, t: T, y: &[T], f: &[T], span: T, config: &IntegratorConfig<T>) -> T
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    let d0 = weighted_rms(y, y, config);
    let d1 = weighted_rms(f, y, config);
    let small = T::lit(1e-5);
    let h0 = if d0 < small || d1 < small {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    }
    .min(span);
    let y1: Vec<T> = y.iter().zip(f).map(|(&a, &b)| a + h0 * b).collect();
    let mut f1 = vec![T::zero(); y.len()];
    rhs(t + h0, &y1, &mut f1);
    let diff: Vec<T> = f1.iter().zip(f).map(|(&a, &b)| a - b).collect();
    let d2 = weighted_rms(&diff, y, config) / h0;
    let dmax = d1.max(d2);
    let h1 = if !dmax.is_finite() {
        h0 * T::lit(1e-3)
    } else if dmax <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / dmax).powf(T::lit(0.2))
    };
    (T::lit(100.0) * h0).min(h1).min(span)
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

struct Stepper<T> {
    method: Method,
    k: Vec<Vec<T>>,
    tmp: Vec<T>,
    c: [T; 7],
    a: [[T; 6]; 7],
    e: [T; 7],
}

impl<T: Scalar> Stepper<T> {
    fn new(method: Method, dim: usize) -> Self {
        let c = DP_C.map(T::lit);
        let a = DP_A.map(|row| row.map(T::lit));
        let e = DP_E.map(T::lit);
        Self {
            method,
            k: vec![vec![T::zero(); dim]; 7],
            tmp: vec![T::zero(); dim],
            c,
            a,
            e,
        }
    }

    /// One step of size `h` from `(t, y)` with `f = rhs(t, y)`. Writes the new
    /// state and its derivative; returns the scaled error norm (zero for RK4).
    #[allow(clippy::too_many_arguments)]
    fn step<F>(
        &mut self,
        rhs: &mut F,
        t: T,
        y: &[T],
        f: &[T],
        h: T,
        y_out: &mut [T],
        f_out: &mut [T],
        config: &IntegratorConfig<T>,
    ) -> T
    where
        F: FnMut(T, &[T], &mut [T]),
    {
        match self.method {
            Method::FixedRk4 => {
                self.rk4(rhs, t, y, f, h, y_out);
                rhs(t + h, y_out, f_out);
                T::zero()
            }
            Method::AdaptiveRk45 => self.dopri(rhs, t, y, f, h, y_out, f_out, config),
        }
    }

    fn rk4<F>(&mut self, rhs: &mut F, t: T, y: &[T], f: &[T], h: T, y_out: &mut [T])
    where
        F: FnMut(T, &[T], &mut [T]),
    {
        let half = T::half();
        let n = y.len();
        let (k1, rest) = self.k.split_at_mut(1);
        let k1 = &mut k1[0];
        k1.copy_from_slice(f);
        let (k2, rest) = rest.split_at_mut(1);
        let k2 = &mut k2[0];
        let (k3, rest) = rest.split_at_mut(1);
        let k3 = &mut k3[0];
        let k4 = &mut rest[0];
        for i in 0..n {
            self.tmp[i] = y[i] + half * h * k1[i];
        }
        rhs(t + half * h, &self.tmp, k2);
        for i in 0..n {
            self.tmp[i] = y[i] + half * h * k2[i];
        }
        rhs(t + half * h, &self.tmp, k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &self.tmp, k4);
        let sixth = h / T::lit(6.0);
        for i in 0..n {
            y_out[i] = y[i] + sixth * (k1[i] + T::two() * (k2[i] + k3[i]) + k4[i]);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dopri<F>(
        &mut self,
        rhs: &mut F,
        t: T,
        y: &[T],
        f: &[T],
        h: T,
        y_out: &mut [T],
        f_out: &mut [T],
        config: &IntegratorConfig<T>,
    ) -> T
    where
        F: FnMut(T, &[T], &mut [T]),
    {
        let n = y.len();
        self.k[0].copy_from_slice(f);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::zero();
                for j in 0..s {
                    acc = acc + self.a[s][j] * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            rhs(t + self.c[s] * h, &self.tmp, &mut self.k[s]);
        }
        // Stage 7 was evaluated at the fifth-order solution (FSAL).
        y_out.copy_from_slice(&self.tmp);
        f_out.copy_from_slice(&self.k[6]);
        let mut sum = T::zero();
        for i in 0..n {
            let mut err = T::zero();
            for s in 0..7 {
                err = err + self.e[s] * self.k[s][i];
            }
            err = err * h;
            let sc = config.abs_tol + config.rel_tol * y[i].abs().max(y_out[i].abs());
            sum = sum + (err / sc) * (err / sc);
        }
        if n == 0 {
            return T::zero();
        }
        let norm = (sum / T::from_usize(n).expect("dimension fits")).sqrt();
        if norm.is_nan() {
            T::infinity()
        } else {
            norm
        }
    }
}
