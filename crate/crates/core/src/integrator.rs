//! Fixed-step RK4 integration with mean-crossing event detection.
//!
//! The field is smooth and bounded (`|dx_i/dt| <= 1 + gamma + kappa
//! ||P|| ||R||`), so a uniform step with a documented convergence test is
//! preferred over adaptive control. The final step of a time span is
//! shortened to land exactly on `t_end`.
//!
//! Mean crossings are bracketed on consecutive RK4 nodes, localized on the
//! cubic Hermite interpolant of the mean, and then re-stepped from the left
//! node so the returned state is an actual RK4 state with
//! `|mean - target| <= event_tolerance`.

use serde::{Deserialize, Serialize};

use crate::error::IntegratorError;
use crate::model::{vector_field_into, EnsembleParams, EnsembleState, ModelSpec};
use crate::observables::Observables;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Step size (time units).
    pub step: f64,
    pub method: Method,
    /// Tolerance on the mean value at event crossings.
    pub event_tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { step: 1e-2, method: Method::Rk4, event_tolerance: 1e-12 }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        Self { step, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(IntegratorError::InvalidStep(self.step));
        }
        if !self.event_tolerance.is_finite() || self.event_tolerance <= 0.0 {
            return Err(IntegratorError::InvalidEventTolerance(self.event_tolerance));
        }
        Ok(())
    }
}

/// Recorded samples of one integration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Per-sample observables, filled on demand by [`Trajectory::cache_observables`].
    pub observables: Option<Vec<Observables>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> EnsembleState {
        EnsembleState::new(*self.times.last().expect("non-empty"), self.states.last().expect("non-empty").clone())
    }

    pub fn compute_observables(&self) -> Vec<Observables> {
        self.states.iter().map(|x| Observables::of(x).expect("non-empty state")).collect()
    }

    pub fn cache_observables(&mut self) {
        self.observables = Some(self.compute_observables());
    }
}

struct Rk4Buffers {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Buffers {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// One classical RK4 step of size `dt`, writing the result into `out`.
    fn step<F: FnMut(&[f64], &mut [f64])>(&mut self, field: &mut F, x: &[f64], dt: f64, out: &mut [f64]) {
        let n = x.len();
        field(x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * self.k1[i];
        }
        field(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * self.k2[i];
        }
        field(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + dt * self.k3[i];
        }
        field(&self.tmp, &mut self.k4);
        for i in 0..n {
            out[i] = x[i] + dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

fn check_finite(x: &[f64], t: f64) -> Result<(), IntegratorError> {
    for (index, v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(IntegratorError::NonFiniteState { t, index });
        }
    }
    Ok(())
}

/// Fixed-step RK4 over an arbitrary autonomous field on slices.
///
/// `on_node` is invoked at every accepted node including the initial state
/// and the exact final time. Returns the final state.
pub fn integrate_field<F, O>(
    mut field: F,
    x0: &[f64],
    t0: f64,
    t_end: f64,
    step: f64,
    mut on_node: O,
) -> Result<Vec<f64>, IntegratorError>
where
    F: FnMut(&[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    if !step.is_finite() || step <= 0.0 {
        return Err(IntegratorError::InvalidStep(step));
    }
    if !(t_end > t0) {
        return Err(IntegratorError::EmptyTimeSpan { t0, t_end });
    }
    let span = t_end - t0;
    let mut n_full = (span / step).floor() as u64;
    let mut remainder = span - n_full as f64 * step;
    // Swallow a remainder at roundoff scale so t_end is hit by a full step.
    if remainder <= span * 1e-14 {
        remainder = 0.0;
    } else if remainder >= step * (1.0 - 1e-12) {
        n_full += 1;
        remainder = 0.0;
    }

    let mut buffers = Rk4Buffers::new(x0.len());
    let mut x = x0.to_vec();
    let mut next = vec![0.0; x0.len()];
    check_finite(&x, t0)?;
    on_node(t0, &x);
    for k in 1..=n_full {
        let t = if k == n_full && remainder == 0.0 { t_end } else { t0 + k as f64 * step };
        buffers.step(&mut field, &x, step, &mut next);
        std::mem::swap(&mut x, &mut next);
        check_finite(&x, t)?;
        on_node(t, &x);
    }
    if remainder > 0.0 {
        buffers.step(&mut field, &x, remainder, &mut next);
        std::mem::swap(&mut x, &mut next);
        check_finite(&x, t_end)?;
        on_node(t_end, &x);
    }
    Ok(x)
}

fn ensemble_field<'a>(
    params: &'a EnsembleParams,
    model: &'a ModelSpec,
) -> impl FnMut(&[f64], &mut [f64]) + 'a {
    move |x: &[f64], out: &mut [f64]| vector_field_into(x, params.omega(), params.kappa(), model, out)
}

fn check_dims(state0: &EnsembleState, params: &EnsembleParams) -> Result<(), IntegratorError> {
    if state0.x.len() != params.n() {
        return Err(IntegratorError::Model(crate::error::ModelError::DimensionMismatch {
            state: state0.x.len(),
            params: params.n(),
        }));
    }
    Ok(())
}

/// Integrates the ensemble and hands every node to `on_node`; returns the
/// final state. Recording policy is left entirely to the caller.
pub fn integrate_with<O: FnMut(f64, &[f64])>(
    state0: &EnsembleState,
    params: &EnsembleParams,
    model: &ModelSpec,
    config: &IntegratorConfig,
    t_end: f64,
    on_node: O,
) -> Result<EnsembleState, IntegratorError> {
    config.validate()?;
    check_dims(state0, params)?;
    let x = integrate_field(ensemble_field(params, model), &state0.x, state0.t, t_end, config.step, on_node)?;
    Ok(EnsembleState::new(t_end, x))
}

/// Integrates and records every `record_every`-th node (the initial state
/// and the final state are always kept).
pub fn integrate(
    state0: &EnsembleState,
    params: &EnsembleParams,
    model: &ModelSpec,
    config: &IntegratorConfig,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory, IntegratorError> {
    if record_every == 0 {
        return Err(IntegratorError::InvalidRecordStride);
    }
    let mut times = Vec::new();
    let mut states: Vec<Vec<f64>> = Vec::new();
    let mut node_index = 0usize;
    let final_state = integrate_with(state0, params, model, config, t_end, |t, x| {
        if node_index % record_every == 0 {
            times.push(t);
            states.push(x.to_vec());
        }
        node_index = node_index.wrapping_add(1);
    })?;
    if *times.last().expect("at least the initial node") != final_state.t {
        times.push(final_state.t);
        states.push(final_state.x.clone());
    }
    Ok(Trajectory { times, states, observables: None })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Cubic Hermite value at `tau` in [0,1] for endpoint values/derivatives.
fn hermite(tau: f64, v0: f64, d0: f64, v1: f64, d1: f64, dt: f64) -> f64 {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    (2.0 * t3 - 3.0 * t2 + 1.0) * v0
        + (t3 - 2.0 * t2 + tau) * dt * d0
        + (-2.0 * t3 + 3.0 * t2) * v1
        + (t3 - t2) * dt * d1
}

/// Integrates until the mean of the lifts first reaches `target_mean`.
///
/// Returns the crossing state (with `t` set to the crossing time) and the
/// elapsed time since `state0.t`. The crossing is located by bracketing on
/// consecutive nodes, bisecting the cubic Hermite interpolant of the mean,
/// and polishing with Newton steps on re-integrated partial steps, so the
/// result is a genuine RK4 state of the same step sequence.
pub fn integrate_until_mean(
    state0: &EnsembleState,
    params: &EnsembleParams,
    model: &ModelSpec,
    config: &IntegratorConfig,
    target_mean: f64,
    t_max: f64,
) -> Result<(EnsembleState, f64), IntegratorError> {
    config.validate()?;
    check_dims(state0, params)?;
    let mut field = ensemble_field(params, model);
    let dim = state0.x.len();
    let mut buffers = Rk4Buffers::new(dim);
    let mut deriv = vec![0.0; dim];

    let mu0_start = mean(&state0.x);
    if mu0_start >= target_mean {
        return Err(IntegratorError::MeanAlreadyPast { mu0: mu0_start, target: target_mean });
    }

    let h = config.step;
    let tol = config.event_tolerance;
    let mut x = state0.x.clone();
    let mut next = vec![0.0; dim];
    let mut elapsed = 0.0f64;
    let mut mu_prev = mu0_start;

    while elapsed < t_max {
        let dt = h.min(t_max - elapsed);
        buffers.step(&mut field, &x, dt, &mut next);
        let t_next = elapsed + dt;
        check_finite(&next, state0.t + t_next)?;
        let mu_next = mean(&next);

        if mu_next < mu0_start - std::f64::consts::PI {
            return Err(IntegratorError::MeanDecreasing {
                t: state0.t + t_next,
                mu: mu_next,
                mu0: mu0_start,
            });
        }

        if mu_next >= target_mean {
            // Bracketed in [elapsed, t_next]; interpolate the mean.
            field(&x, &mut deriv);
            let m0 = mean(&deriv);
            field(&next, &mut deriv);
            let m1 = mean(&deriv);
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hermite(mid, mu_prev, m0, mu_next, m1, dt) < target_mean {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut dt_event = (0.5 * (lo + hi)) * dt;

            // Newton polish on actual partial RK4 steps from the left node.
            let mut candidate = vec![0.0; dim];
            let mut defect = f64::INFINITY;
            for _ in 0..12 {
                if dt_event <= 0.0 {
                    // Left node itself is within tolerance of the target.
                    candidate.copy_from_slice(&x);
                    defect = mu_prev - target_mean;
                    break;
                }
                buffers.step(&mut field, &x, dt_event, &mut candidate);
                let mu_c = mean(&candidate);
                defect = mu_c - target_mean;
                if defect.abs() <= tol {
                    break;
                }
                field(&candidate, &mut deriv);
                let slope = mean(&deriv);
                if slope <= 0.0 {
                    break;
                }
                dt_event = (dt_event - defect / slope).clamp(0.0, dt);
            }
            if defect.abs() > tol {
                return Err(IntegratorError::EventToleranceNotMet { defect: defect.abs(), tolerance: tol });
            }
            let crossing_elapsed = elapsed + dt_event;
            check_finite(&candidate, state0.t + crossing_elapsed)?;
            return Ok((EnsembleState::new(state0.t + crossing_elapsed, candidate), crossing_elapsed));
        }

        std::mem::swap(&mut x, &mut next);
        mu_prev = mu_next;
        elapsed = t_next;
    }

    Err(IntegratorError::MeanCrossingTimeout { target: target_mean, t_max, mu_last: mu_prev })
}
