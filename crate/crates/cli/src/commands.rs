//! The eight experiment subcommands. Each resolves its grid cells in key
//! order, evaluates them (in parallel where the work is per-cell), sorts
//! the rows, and writes one CSV (or JSON report) plus a metadata sidecar.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use winfree_core::error::{IntegratorError, TheoryError};
use winfree_core::integrator::{integrate_with, IntegratorConfig};
use winfree_core::locking::{find_locked_solution, return_time_bounds, LockingOptions};
use winfree_core::model::{make_initial_conditions, ModelSpec};
use winfree_core::observables::{order_r, Observables};
use winfree_core::theory::{certify_domain, h_integral, kappa_star, KappaStar};

use crate::config::RunConfig;
use crate::csvout::{fmt_float, write_csv, RunMetadata};
use crate::sweep::{cell_seed, cell_verdict, run_parallel, scan_gamma_max, simplified, SimCell};

fn fmt_bool(v: bool) -> String {
    if v { "true" } else { "false" }.to_string()
}

fn grid<'a>(cfg: &'a RunConfig, name: &str) -> Result<&'a [f64]> {
    let g = match name {
        "beta" => &cfg.grid_beta,
        "gamma" => &cfg.grid_gamma,
        "kappa" => &cfg.grid_kappa,
        _ => unreachable!(),
    };
    g.as_deref().ok_or_else(|| anyhow!("--grid-{name} is required for `{}`", cfg.command))
}

fn scalar(value: Option<f64>, name: &str, command: &str) -> Result<f64> {
    value.ok_or_else(|| anyhow!("--{name} is required for `{command}`"))
}

fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values
}

fn finish(
    cfg: &RunConfig,
    header: &[&str],
    rows: Vec<Vec<String>>,
    started: Instant,
    notes: Vec<String>,
) -> Result<PathBuf> {
    let mut meta = RunMetadata::new(cfg.clone());
    meta.wallclock_seconds = started.elapsed().as_secs_f64();
    meta.notes = notes;
    write_csv(&cfg.out, header, &rows, &meta)?;
    Ok(cfg.out.clone())
}

fn cell_from(cfg: &RunConfig, beta: f64, gamma: f64, kappa: f64, seed: u64) -> SimCell {
    SimCell {
        beta,
        gamma,
        kappa,
        n: cfg.n,
        seed,
        t_end: cfg.t_end,
        step: cfg.step,
        ic: (cfg.ic_min, cfg.ic_max),
        scheme: cfg.freq_scheme,
    }
}

/// `kappa-star`: the critical-coupling curve over a beta grid.
pub fn cmd_kappa_star(cfg: &RunConfig) -> Result<PathBuf> {
    let started = Instant::now();
    let betas = sorted(grid(cfg, "beta")?.to_vec());
    let rows = run_parallel(betas, cfg.workers, |&beta| {
        let model = simplified(beta)?;
        let star = kappa_star(&model);
        Ok(vec![fmt_float(beta), star.value().map_or("inf".to_string(), fmt_float)])
    })?;
    finish(cfg, &["beta", "kappa_star"], rows, started, vec![])
}

/// `h-map`: the hypothesis integral over a (beta, kappa) grid, evaluated
/// only where `kappa < kappa_star(beta)`; the sign column is 0 when the
/// value is within quadrature resolution of zero.
pub fn cmd_h_map(cfg: &RunConfig) -> Result<PathBuf> {
    let started = Instant::now();
    let betas = sorted(grid(cfg, "beta")?.to_vec());
    let kappas = sorted(grid(cfg, "kappa")?.to_vec());
    let rows_nested = run_parallel(betas, cfg.workers, |&beta| {
        let model = simplified(beta)?;
        let star = kappa_star(&model);
        let mut rows = Vec::with_capacity(kappas.len());
        for &kappa in &kappas {
            let valid = kappa >= 0.0 && star.admits(kappa);
            let (h_col, sign_col) = if valid {
                let h = h_integral(&model, kappa)?;
                let sign = if h.abs() <= 1e-9 {
                    "0"
                } else if h > 0.0 {
                    "1"
                } else {
                    "-1"
                };
                (fmt_float(h), sign.to_string())
            } else {
                (String::new(), String::new())
            };
            rows.push(vec![fmt_float(beta), fmt_float(kappa), fmt_bool(valid), h_col, sign_col]);
        }
        Ok(rows)
    })?;
    let rows = rows_nested.into_iter().flatten().collect();
    finish(cfg, &["beta", "kappa", "valid", "h", "sign"], rows, started, vec![])
}

/// `sync-domain`: for each kappa, the largest gamma that still passes the
/// synchronization verdict at the horizon.
pub fn cmd_sync_domain(cfg: &RunConfig) -> Result<PathBuf> {
    let started = Instant::now();
    let beta = scalar(cfg.beta, "beta", &cfg.command)?;
    let kappas = sorted(grid(cfg, "kappa")?.to_vec());
    let model = simplified(beta)?;
    let star = kappa_star(&model);
    for &kappa in &kappas {
        if kappa <= 0.0 || !star.admits(kappa) {
            bail!("kappa = {kappa} outside (0, kappa_star) = (0, {star}) for beta = {beta}");
        }
    }
    let indexed: Vec<(usize, f64)> = kappas.into_iter().enumerate().collect();
    let rows = run_parallel(indexed, cfg.workers, |&(index, kappa)| {
        let model = simplified(beta)?;
        let seed = cell_seed(cfg.seed, index);
        let gamma_max = scan_gamma_max(
            |gamma| {
                let cell = cell_from(cfg, beta, gamma, kappa, seed);
                Ok(cell_verdict(&cell, &model, cfg.threshold, cfg.majority_seeds)?
                    .is_synchronized())
            },
            cfg.gamma_resolution,
            10,
        )?;
        Ok(vec![fmt_float(kappa), fmt_float(gamma_max)])
    })?;
    finish(cfg, &["kappa", "gamma_max"], rows, started, vec![])
}

/// `desync-curve`: the gamma boundary over a beta grid at fixed kappa.
pub fn cmd_desync_curve(cfg: &RunConfig) -> Result<PathBuf> {
    let started = Instant::now();
    let kappa = scalar(cfg.kappa, "kappa", &cfg.command)?;
    let betas = sorted(grid(cfg, "beta")?.to_vec());
    for &beta in &betas {
        let star = kappa_star(&simplified(beta)?);
        if kappa <= 0.0 || !star.admits(kappa) {
            bail!("kappa = {kappa} not below kappa_star(beta={beta}) = {star}");
        }
    }
    let indexed: Vec<(usize, f64)> = betas.into_iter().enumerate().collect();
    let rows = run_parallel(indexed, cfg.workers, |&(index, beta)| {
        let model = simplified(beta)?;
        let seed = cell_seed(cfg.seed, index);
        let gamma_max = scan_gamma_max(
            |gamma| {
                let cell = cell_from(cfg, beta, gamma, kappa, seed);
                Ok(cell_verdict(&cell, &model, cfg.threshold, cfg.majority_seeds)?
                    .is_synchronized())
            },
            cfg.gamma_resolution,
            10,
        )?;
        Ok(vec![fmt_float(beta), fmt_float(gamma_max)])
    })?;
    finish(cfg, &["beta", "gamma_max"], rows, started, vec![])
}

/// `order-scan`: the phasor order parameter at the horizon over a
/// (beta, gamma) grid at fixed kappa.
pub fn cmd_order_scan(cfg: &RunConfig) -> Result<PathBuf> {
    let started = Instant::now();
    let kappa = scalar(cfg.kappa, "kappa", &cfg.command)?;
    let betas = sorted(grid(cfg, "beta")?.to_vec());
    let gammas = sorted(grid(cfg, "gamma")?.to_vec());
    let mut cells = Vec::new();
    for &beta in &betas {
        for &gamma in &gammas {
            let index = cells.len();
            cells.push((index, beta, gamma));
        }
    }
    let rows = run_parallel(cells, cfg.workers, |&(index, beta, gamma)| {
        let model = simplified(beta)?;
        let cell = cell_from(cfg, beta, gamma, kappa, cell_seed(cfg.seed, index));
        let outcome = cell.run(&model)?;
        Ok(vec![fmt_float(beta), fmt_float(gamma), fmt_float(outcome.r_final)])
    })?;
    finish(cfg, &["beta", "gamma", "r"], rows, started, vec![])
}

/// `timeseries`: one trajectory's `(t, d, mu)` samples plus a final
/// circle snapshot. A non-finite state aborts but still writes the partial
/// series with an explanatory note.
pub fn cmd_timeseries(cfg: &RunConfig) -> Result<PathBuf> {
    let started = Instant::now();
    let beta = scalar(cfg.beta, "beta", &cfg.command)?;
    let gamma = scalar(cfg.gamma, "gamma", &cfg.command)?;
    let kappa = scalar(cfg.kappa, "kappa", &cfg.command)?;
    let model = simplified(beta)?;
    let cell = cell_from(cfg, beta, gamma, kappa, cfg.seed);
    let params = cell.params()?;
    let state0 = make_initial_conditions(cfg.n, cfg.ic_min, cfg.ic_max, cfg.seed)?;
    let config = IntegratorConfig::with_step(cfg.step);

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut node = 0usize;
    let mut last: Option<(f64, Vec<f64>)> = None;
    let outcome = integrate_with(&state0, &params, &model, &config, cfg.t_end, |t, x| {
        if node % cfg.record_every == 0 {
            let obs = Observables::of(x).expect("non-empty state");
            rows.push(vec![fmt_float(t), fmt_float(obs.max_deviation), fmt_float(obs.mean)]);
            last = Some((t, x.to_vec()));
        }
        node = node.wrapping_add(1);
    });

    let mut notes = Vec::new();
    let (aborted, final_state) = match outcome {
        Ok(state) => {
            if last.as_ref().map(|(t, _)| *t) != Some(state.t) {
                let obs = Observables::of(&state.x)?;
                rows.push(vec![
                    fmt_float(state.t),
                    fmt_float(obs.max_deviation),
                    fmt_float(obs.mean),
                ]);
            }
            (None, Some((state.t, state.x)))
        }
        Err(IntegratorError::NonFiniteState { t, index }) => {
            notes.push(format!("aborted: non-finite state at t={t} (component {index}); output is partial"));
            (Some((t, index)), last.clone())
        }
        Err(e) => return Err(e.into()),
    };

    if let Some((t, x)) = &final_state {
        let r = order_r(x)?;
        notes.push(format!("r_final: {} at t={}", fmt_float(r), fmt_float(*t)));
        let snapshot: Vec<Vec<String>> = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                vec![
                    i.to_string(),
                    fmt_float(params.omega()[i]),
                    fmt_float(xi.rem_euclid(2.0 * std::f64::consts::PI)),
                ]
            })
            .collect();
        let snap_path = cfg.out.with_extension("snapshot.csv");
        let mut snap_cfg = cfg.clone();
        snap_cfg.out = snap_path.clone();
        let mut snap_meta = RunMetadata::new(snap_cfg);
        snap_meta.wallclock_seconds = started.elapsed().as_secs_f64();
        snap_meta.notes = notes.clone();
        write_csv(&snap_path, &["index", "omega", "phase_mod_2pi"], &snapshot, &snap_meta)?;
    }

    let out = finish(cfg, &["t", "d", "mu"], rows, started, notes)?;
    if let Some((t, index)) = aborted {
        bail!("non-finite state at t={t} (component {index}); partial output written to {}", out.display());
    }
    Ok(out)
}

/// `certify`: one certificate row per (gamma, kappa) cell. Hypothesis
/// failures are marked per cell, never fatal.
pub fn cmd_certify(cfg: &RunConfig) -> Result<PathBuf> {
    let started = Instant::now();
    let beta = scalar(cfg.beta, "beta", &cfg.command)?;
    let gammas = sorted(grid(cfg, "gamma")?.to_vec());
    let kappas = sorted(grid(cfg, "kappa")?.to_vec());
    for &gamma in &gammas {
        if !(0.0..1.0).contains(&gamma) || gamma == 0.0 {
            bail!("certification needs gamma in (0, 1); got {gamma}");
        }
    }
    for &kappa in &kappas {
        if kappa <= 0.0 {
            bail!("certification needs kappa > 0; got {kappa}");
        }
    }
    let mut cells = Vec::new();
    for &gamma in &gammas {
        for &kappa in &kappas {
            cells.push((gamma, kappa));
        }
    }
    let rows = run_parallel(cells, cfg.workers, |&(gamma, kappa)| {
        let model = simplified(beta)?;
        match certify_domain(&model, gamma, kappa) {
            Ok(cert) => {
                let max_delta = cert.curve.as_ref().map(|c| c.max());
                Ok(vec![
                    fmt_float(gamma),
                    fmt_float(kappa),
                    fmt_bool(cert.in_u),
                    cert.capacity.map(fmt_float).unwrap_or_default(),
                    cert.gain.map(fmt_float).unwrap_or_default(),
                    max_delta.map(fmt_float).unwrap_or_default(),
                    fmt_bool(cert.condition8),
                    fmt_bool(true),
                ])
            }
            Err(TheoryError::H3Violated { .. }) => Ok(vec![
                fmt_float(gamma),
                fmt_float(kappa),
                fmt_bool(false),
                String::new(),
                String::new(),
                String::new(),
                fmt_bool(false),
                fmt_bool(false),
            ]),
            Err(e) => Err(e.into()),
        }
    })?;
    finish(
        cfg,
        &["gamma", "kappa", "in_u", "d", "l", "max_delta", "condition8", "h3_ok"],
        rows,
        started,
        vec![],
    )
}

#[derive(Debug, Serialize)]
struct LockReport {
    config: RunConfig,
    kappa_star: KappaStar,
    gain: Option<f64>,
    capacity: Option<f64>,
    alpha: Option<f64>,
    max_delta: Option<f64>,
    return_time_lower: Option<f64>,
    return_time_upper: Option<f64>,
    theta_star: f64,
    omega: f64,
    map_residual: f64,
    flow_residual: f64,
    iterations: usize,
    max_abs_psi: f64,
    x_star: Vec<f64>,
    psi_times: Vec<f64>,
    psi: Vec<Vec<f64>>,
}

/// `lock`: certify the pair, locate the locked solution, and write the
/// full structured report as JSON.
pub fn cmd_lock(cfg: &RunConfig) -> Result<PathBuf> {
    let started = Instant::now();
    let beta = scalar(cfg.beta, "beta", &cfg.command)?;
    let gamma = scalar(cfg.gamma, "gamma", &cfg.command)?;
    let kappa = scalar(cfg.kappa, "kappa", &cfg.command)?;
    let model: ModelSpec = simplified(beta)?;
    let certificate = certify_domain(&model, gamma, kappa)
        .with_context(|| format!("certifying gamma={gamma}, kappa={kappa}"))?;
    if !certificate.in_u {
        bail!(
            "(gamma, kappa) = ({gamma}, {kappa}) is not certified: gamma must be below kappa D^2 = {}",
            certificate.capacity.map(|d| kappa * d * d).map(|v| v.to_string()).unwrap_or_else(|| "n/a".into())
        );
    }
    let cell = cell_from(cfg, beta, gamma, kappa, cfg.seed);
    let params = cell.params()?;
    let config = IntegratorConfig::with_step(cfg.step);
    let solution = find_locked_solution(&params, &model, &config, &certificate, &LockingOptions::default())?;
    let bounds = return_time_bounds(&params, &model, &certificate);

    let report = LockReport {
        config: cfg.clone(),
        kappa_star: certificate.kappa_star,
        gain: certificate.gain,
        capacity: certificate.capacity,
        alpha: certificate.alpha,
        max_delta: certificate.curve.as_ref().map(|c| c.max()),
        return_time_lower: bounds.map(|b| b.0),
        return_time_upper: bounds.map(|b| b.1),
        theta_star: solution.theta_star,
        omega: solution.omega,
        map_residual: solution.map_residual,
        flow_residual: solution.flow_residual,
        iterations: solution.iterations,
        max_abs_psi: solution.max_abs_psi,
        x_star: solution.x_star,
        psi_times: solution.psi_times,
        psi: solution.psi,
    };
    if let Some(parent) = cfg.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&cfg.out, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("writing {}", cfg.out.display()))?;

    let mut meta = RunMetadata::new(cfg.clone());
    meta.wallclock_seconds = started.elapsed().as_secs_f64();
    std::fs::write(crate::csvout::sidecar_path(&cfg.out), serde_json::to_string_pretty(&meta)?)?;
    Ok(cfg.out.clone())
}

pub fn dispatch(cfg: &RunConfig) -> Result<PathBuf> {
    match cfg.command.as_str() {
        "kappa-star" => cmd_kappa_star(cfg),
        "h-map" => cmd_h_map(cfg),
        "sync-domain" => cmd_sync_domain(cfg),
        "desync-curve" => cmd_desync_curve(cfg),
        "order-scan" => cmd_order_scan(cfg),
        "timeseries" => cmd_timeseries(cfg),
        "certify" => cmd_certify(cfg),
        "lock" => cmd_lock(cfg),
        other => bail!("unknown command {other}"),
    }
}
