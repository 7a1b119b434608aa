//! Simulation cells, verdicts, the gamma-boundary scan, and deterministic
//! parallel execution over grid cells.

use anyhow::{Context, Result};
use winfree_core::integrator::{integrate, IntegratorConfig};
use winfree_core::model::{
    make_frequencies, make_initial_conditions, EnsembleParams, FrequencyScheme, ModelSpec,
    SimplifiedModel,
};
use winfree_core::observables::{order_d, order_r, sync_verdict, SyncVerdict};

/// Upper limit of the gamma scan; the admissible range is [0, 1).
pub const GAMMA_SCAN_CAP: f64 = 0.999;

/// One simulation cell, fully determined by its inputs and seed.
#[derive(Debug, Clone, Copy)]
pub struct SimCell {
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub n: usize,
    pub seed: u64,
    pub t_end: f64,
    pub step: f64,
    pub ic: (f64, f64),
    pub scheme: FrequencyScheme,
}

/// Final-time outcome of one cell.
#[derive(Debug, Clone, Copy)]
pub struct SimOutcome {
    pub d_final: f64,
    pub r_final: f64,
    pub mu_final: f64,
}

impl SimCell {
    pub fn params(&self) -> Result<EnsembleParams> {
        let omega = make_frequencies(self.n, self.gamma, self.scheme, self.seed)?;
        Ok(EnsembleParams::new(self.kappa, self.gamma, omega)?)
    }

    /// Integrates to the horizon and reports the final-time observables.
    pub fn run(&self, model: &ModelSpec) -> Result<SimOutcome> {
        let params = self.params()?;
        let state0 = make_initial_conditions(self.n, self.ic.0, self.ic.1, self.seed)?;
        let config = IntegratorConfig::with_step(self.step);
        let trajectory = integrate(&state0, &params, model, &config, self.t_end, usize::MAX)
            .with_context(|| {
                format!(
                    "integrating cell beta={} gamma={} kappa={} seed={}",
                    self.beta, self.gamma, self.kappa, self.seed
                )
            })?;
        let end = trajectory.final_state();
        Ok(SimOutcome {
            d_final: order_d(&end.x)?,
            r_final: order_r(&end.x)?,
            mu_final: end.x.iter().sum::<f64>() / end.x.len() as f64,
        })
    }
}

/// Synchronization verdict of one cell, optionally by majority over
/// `trials` consecutive seeds.
pub fn cell_verdict(
    cell: &SimCell,
    model: &ModelSpec,
    threshold: f64,
    trials: usize,
) -> Result<SyncVerdict> {
    let trials = trials.max(1);
    let mut synchronized = 0usize;
    for k in 0..trials {
        let trial = SimCell { seed: cell.seed.wrapping_add(k as u64), ..*cell };
        let outcome = trial.run(model)?;
        if sync_verdict(outcome.d_final, threshold).is_synchronized() {
            synchronized += 1;
        }
    }
    Ok(if 2 * synchronized > trials {
        SyncVerdict::Synchronized
    } else {
        SyncVerdict::Desynchronized
    })
}

/// Largest synchronized gamma: coarse upward scan at `resolution`, then
/// `bisection_steps` bisections between the last synchronized and the
/// first desynchronized gamma. Returns 0 when even the first probe fails.
pub fn scan_gamma_max(
    mut synchronized_at: impl FnMut(f64) -> Result<bool>,
    resolution: f64,
    bisection_steps: usize,
) -> Result<f64> {
    anyhow::ensure!(resolution > 0.0 && resolution < 1.0, "resolution must be in (0, 1)");
    if !synchronized_at(resolution)? {
        return Ok(0.0);
    }
    let mut lo = resolution;
    let mut hi = None;
    let mut k = 2u64;
    loop {
        let gamma = k as f64 * resolution;
        if gamma >= GAMMA_SCAN_CAP {
            break;
        }
        if synchronized_at(gamma)? {
            lo = gamma;
            k += 1;
        } else {
            hi = Some(gamma);
            break;
        }
    }
    let Some(mut hi) = hi else {
        return Ok(GAMMA_SCAN_CAP);
    };
    for _ in 0..bisection_steps {
        let mid = 0.5 * (lo + hi);
        if synchronized_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Runs one closure per item on a dedicated pool of `workers` threads.
///
/// The output order equals the input order, so the worker count can never
/// change row content or placement.
pub fn run_parallel<T, R, F>(items: Vec<T>, workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Per-cell seed derived from the base seed and the cell's position in the
/// (sorted) grid; recorded so any single cell can be reproduced in isolation.
pub fn cell_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

/// The simplified coupling family used by every sweep command.
pub fn simplified(beta: f64) -> Result<ModelSpec> {
    Ok(SimplifiedModel::new(beta)?.model_spec())
}
