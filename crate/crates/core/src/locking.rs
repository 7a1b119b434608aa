//! Periodically locked solutions via the return map to the section
//! `mean(X) = 0`.
//!
//! One map application integrates the flow until the mean first reaches
//! 2pi and subtracts `2pi * (1,..,1)`; a fixed point `X*` with return time
//! `theta*` satisfies `Phi^{theta*}(X*) = X* + 2pi` and yields the locked
//! solution `x_i(t) = Omega t + Psi_i(t)` with `Omega = 2pi/theta*` and
//! `theta*`-periodic deviations `Psi_i`.
//!
//! The fixed point is located by plain iteration of the map (the dispersion
//! dynamics contract inside the certified tube), with optional Anderson
//! mixing for slow contraction. Non-convergence is reported as "not found",
//! never as a proof of absence.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::LockingError;
use crate::integrator::{integrate, integrate_until_mean, IntegratorConfig, Trajectory};
use crate::model::{EnsembleParams, EnsembleState, ModelSpec};
use crate::theory::DomainCertificate;

const TAU: f64 = 2.0 * PI;

/// Tolerance on the section constraint `|mean(X)| <= SECTION_TOL`.
const SECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Acceleration {
    /// Plain iteration of the return map.
    None,
    /// Anderson mixing over the last `history` residuals.
    Anderson { history: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockingOptions {
    /// Iteration budget for the fixed-point search.
    pub max_iters: usize,
    /// Sup-norm tolerance on consecutive map iterates.
    pub map_tolerance: f64,
    /// Sup-norm tolerance on the full-period flow residual.
    pub flow_tolerance: f64,
    pub acceleration: Acceleration,
    /// Time budget for a single return; `None` derives it from the
    /// certified return-time bounds.
    pub t_max: Option<f64>,
}

impl Default for LockingOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            map_tolerance: 1e-10,
            flow_tolerance: 1e-8,
            acceleration: Acceleration::None,
            t_max: None,
        }
    }
}

/// A periodically locked solution on the section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockedSolution {
    /// Fixed point of the return map, `mean(x_star) = 0`.
    pub x_star: Vec<f64>,
    /// Return time.
    pub theta_star: f64,
    /// Rotation number `2pi / theta_star`.
    pub omega: f64,
    /// Uniform sample times over `[0, theta_star]`.
    pub psi_times: Vec<f64>,
    /// Deviations `psi[i][k] = x_i(t_k) - omega t_k`, one row per oscillator.
    pub psi: Vec<Vec<f64>>,
    /// `max_i sup_k |psi[i][k]|`.
    pub max_abs_psi: f64,
    /// Sup-norm distance between the last two map iterates.
    pub map_residual: f64,
    /// `max_i |Phi^{theta*}(x_star)_i - x_star_i - 2pi|`.
    pub flow_residual: f64,
    /// Map applications spent in the search.
    pub iterations: usize,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A-priori bounds on the return time for a certified pair:
/// `2pi/(1 + gamma + kappa ||P|| ||R||) < theta < 2pi/margin` with
/// `margin = 1 - gamma - C~ kappa D - kappa/kappa_star`.
pub fn return_time_bounds(
    params: &EnsembleParams,
    model: &ModelSpec,
    certificate: &DomainCertificate,
) -> Option<(f64, f64)> {
    let capacity = certificate.capacity?;
    let norms = model.sup_norms();
    let margin = 1.0
        - params.gamma()
        - certificate.constants.c_tilde * params.kappa() * capacity
        - certificate.kappa_star.ratio(params.kappa());
    if margin <= 0.0 {
        return None;
    }
    let lower = TAU / (1.0 + params.gamma() + params.kappa() * norms.p * norms.r);
    Some((lower, TAU / margin))
}

/// One application of the return map: integrate from `X` (with
/// `mean(X) = 0`) until the mean reaches 2pi, then translate back by
/// `2pi * (1,..,1)`. Returns the image and the return time.
///
/// The section constraint is re-imposed exactly on the image (the mean
/// drift at the event is within the event tolerance).
pub fn poincare_map(
    x: &[f64],
    params: &EnsembleParams,
    model: &ModelSpec,
    config: &IntegratorConfig,
    t_max: f64,
) -> Result<(Vec<f64>, f64), LockingError> {
    let mu = mean(x);
    if mu.abs() > SECTION_TOL {
        return Err(LockingError::NotOnSection { mu, tolerance: SECTION_TOL });
    }
    let state0 = EnsembleState::new(0.0, x.to_vec());
    let (state, theta) = integrate_until_mean(&state0, params, model, config, TAU, t_max)?;
    let mut image: Vec<f64> = state.x.iter().map(|v| v - TAU).collect();
    let drift = mean(&image);
    for v in image.iter_mut() {
        *v -= drift;
    }
    Ok((image, theta))
}

/// Solves the small least-squares system of Anderson mixing over the
/// residual differences; `m <= history` is at most a handful, so plain
/// Gaussian elimination with partial pivoting suffices.
fn anderson_combine(xs: &[Vec<f64>], gs: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = xs.len() - 1;
    if k == 0 {
        return None;
    }
    let dim = xs[0].len();
    let res = |j: usize| -> Vec<f64> { (0..dim).map(|i| gs[j][i] - xs[j][i]).collect() };
    let f_last = res(k);
    let df: Vec<Vec<f64>> = (0..k).map(|j| {
        let a = res(j + 1);
        let b = res(j);
        (0..dim).map(|i| a[i] - b[i]).collect()
    }).collect();

    let mut ata = vec![vec![0.0; k]; k];
    let mut atb = vec![0.0; k];
    for a in 0..k {
        for b in 0..k {
            ata[a][b] = df[a].iter().zip(&df[b]).map(|(x, y)| x * y).sum();
        }
        ata[a][a] += 1e-12;
        atb[a] = df[a].iter().zip(&f_last).map(|(x, y)| x * y).sum();
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| {
            ata[a][col].abs().partial_cmp(&ata[b][col].abs()).unwrap()
        })?;
        ata.swap(col, piv);
        atb.swap(col, piv);
        if ata[col][col].abs() < 1e-300 {
            return None;
        }
        for row in col + 1..k {
            let factor = ata[row][col] / ata[col][col];
            for c in col..k {
                ata[row][c] -= factor * ata[col][c];
            }
            atb[row] -= factor * atb[col];
        }
    }
    let mut theta = vec![0.0; k];
    for row in (0..k).rev() {
        let mut v = atb[row];
        for c in row + 1..k {
            v -= ata[row][c] * theta[c];
        }
        theta[row] = v / ata[row][row];
    }

    // x_next = g_k - sum_j theta_j (g_{j+1} - g_j)
    let mut next = gs[k].clone();
    for (j, &t) in theta.iter().enumerate() {
        for i in 0..dim {
            next[i] -= t * (gs[j + 1][i] - gs[j][i]);
        }
    }
    let drift = mean(&next);
    for v in next.iter_mut() {
        *v -= drift;
    }
    Some(next)
}

fn initial_iterate(
    params: &EnsembleParams,
    certificate: &DomainCertificate,
) -> Vec<f64> {
    // Equal phases sit on the section with zero dispersion; nudge them in
    // the direction of the ordered frequencies to start near the expected
    // locked configuration.
    let gamma = params.gamma();
    let mut x: Vec<f64> = if gamma > 0.0 {
        params.omega().iter().map(|w| 1e-3 * (w - 1.0) / gamma).collect()
    } else {
        vec![0.0; params.n()]
    };
    let mu = mean(&x);
    for v in x.iter_mut() {
        *v -= mu;
    }
    if let Some(curve) = &certificate.curve {
        let spread = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - x.iter().cloned().fold(f64::INFINITY, f64::min);
        let ceiling = curve.eval(0.0);
        if spread >= ceiling {
            let scale = 0.45 * ceiling / spread;
            for v in x.iter_mut() {
                *v *= scale;
            }
        }
    }
    x
}

/// Locates the locked solution at a certified parameter pair.
pub fn find_locked_solution(
    params: &EnsembleParams,
    model: &ModelSpec,
    config: &IntegratorConfig,
    certificate: &DomainCertificate,
    options: &LockingOptions,
) -> Result<LockedSolution, LockingError> {
    if !certificate.in_u || certificate.curve.is_none() {
        return Err(LockingError::Theory(crate::error::TheoryError::NotCertified));
    }
    let bounds = return_time_bounds(params, model, certificate);
    let t_max = options.t_max.unwrap_or_else(|| match bounds {
        Some((_, upper)) => 4.0 * upper,
        None => 100.0 * TAU,
    });

    let mut x = initial_iterate(params, certificate);
    let mut residual = f64::INFINITY;
    let mut theta = f64::NAN;
    let mut iterations = 0usize;

    let history_cap = match options.acceleration {
        Acceleration::None => 0,
        Acceleration::Anderson { history } => history.max(1),
    };
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut gs: Vec<Vec<f64>> = Vec::new();

    while iterations < options.max_iters {
        let (image, th) = poincare_map(&x, params, model, config, t_max)?;
        iterations += 1;
        residual = sup_distance(&image, &x);
        theta = th;
        if residual <= options.map_tolerance {
            x = image;
            break;
        }
        if history_cap > 0 {
            xs.push(x.clone());
            gs.push(image.clone());
            if xs.len() > history_cap + 1 {
                xs.remove(0);
                gs.remove(0);
            }
            match anderson_combine(&xs, &gs) {
                Some(accelerated) => x = accelerated,
                None => x = image,
            }
        } else {
            x = image;
        }
    }
    if residual > options.map_tolerance {
        return Err(LockingError::NoConvergence { iterations, residual });
    }

    // Return time measured at the fixed point itself.
    let (_, theta_star) = poincare_map(&x, params, model, config, t_max)?;
    iterations += 1;
    let theta_star = if theta_star.is_finite() { theta_star } else { theta };

    if let Some((lower, upper)) = bounds {
        if !(theta_star > lower && theta_star < upper) {
            return Err(LockingError::ReturnTimeOutOfBounds { theta: theta_star, lower, upper });
        }
    }

    // Full-period flow verification on a uniform grid that lands exactly
    // on theta_star.
    let steps = (theta_star / config.step).ceil().max(1.0);
    let uniform = IntegratorConfig { step: theta_star / steps, ..*config };
    let state0 = EnsembleState::new(0.0, x.clone());
    let trajectory = integrate(&state0, params, model, &uniform, theta_star, 1)?;
    let end = trajectory.final_state();
    let flow_residual = x
        .iter()
        .zip(&end.x)
        .map(|(x0, x1)| (x1 - x0 - TAU).abs())
        .fold(0.0, f64::max);
    if flow_residual > options.flow_tolerance {
        return Err(LockingError::FlowResidualTooLarge {
            residual: flow_residual,
            tolerance: options.flow_tolerance,
        });
    }

    let omega = TAU / theta_star;
    let psi = extract_psi(&trajectory, omega)?;
    Ok(LockedSolution {
        x_star: x,
        theta_star,
        omega,
        psi_times: psi.times,
        psi: psi.psi,
        max_abs_psi: psi.max_abs,
        map_residual: residual,
        flow_residual,
        iterations,
    })
}

/// Sampled deviations of one locked period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSamples {
    pub times: Vec<f64>,
    /// `psi[i][k] = x_i(t_k) - omega * t_k`.
    pub psi: Vec<Vec<f64>>,
    pub max_abs: f64,
}

/// Extracts `Psi_i(s) = x_i(s) - Omega s` from a one-period trajectory.
///
/// The trajectory must close: each lift advances by exactly 2pi over the
/// period (within 1e-7), which is also the periodicity of the deviations.
pub fn extract_psi(trajectory: &Trajectory, omega: f64) -> Result<PsiSamples, LockingError> {
    const CLOSURE_TOL: f64 = 1e-7;
    if trajectory.len() < 2 {
        return Err(LockingError::TrajectoryTooShort);
    }
    let t0 = trajectory.times[0];
    let first = &trajectory.states[0];
    let last = &trajectory.states[trajectory.len() - 1];
    let defect = first
        .iter()
        .zip(last)
        .map(|(a, b)| (b - a - TAU).abs())
        .fold(0.0, f64::max);
    if defect > CLOSURE_TOL {
        return Err(LockingError::TrajectoryNotClosed { defect, tolerance: CLOSURE_TOL });
    }

    let n = first.len();
    let times: Vec<f64> = trajectory.times.iter().map(|t| t - t0).collect();
    let mut psi = vec![Vec::with_capacity(times.len()); n];
    let mut max_abs = 0.0f64;
    for (k, state) in trajectory.states.iter().enumerate() {
        let drift = omega * times[k];
        for (i, &xi) in state.iter().enumerate() {
            let v = xi - drift;
            max_abs = max_abs.max(v.abs());
            psi[i].push(v);
        }
    }
    Ok(PsiSamples { times, psi, max_abs })
}
