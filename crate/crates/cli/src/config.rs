//! Run configuration: command-line flags, optional JSON config file, and
//! per-command defaults. Flags override the file; the file overrides the
//! defaults. The effective configuration is serialized into every output's
//! metadata so a run can be reproduced from its artifacts alone.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use winfree_core::model::FrequencyScheme;

/// A one-dimensional parameter grid.
///
/// Accepted forms: a single number (`0.6`), a comma list (`0,0.011,0.0412`),
/// a linear range `start:stop:count`, or a log range `start:stop:count:log`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty grid specification".into());
        }
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 && parts.len() != 4 {
                return Err(format!("expected start:stop:count[:log], got `{s}`"));
            }
            let start: f64 = parts[0].parse().map_err(|e| format!("bad grid start: {e}"))?;
            let stop: f64 = parts[1].parse().map_err(|e| format!("bad grid stop: {e}"))?;
            let count: usize = parts[2].parse().map_err(|e| format!("bad grid count: {e}"))?;
            let log = match parts.get(3) {
                None => false,
                Some(&"log") => true,
                Some(other) => return Err(format!("unknown grid modifier `{other}`")),
            };
            if count == 0 {
                return Err("grid count must be >= 1".into());
            }
            if count == 1 {
                return Ok(Grid(vec![start]));
            }
            if log && (start <= 0.0 || stop <= 0.0) {
                return Err("log grids need positive endpoints".into());
            }
            let pts = (0..count)
                .map(|i| {
                    let u = i as f64 / (count - 1) as f64;
                    if log {
                        (start.ln() + u * (stop.ln() - start.ln())).exp()
                    } else {
                        start + u * (stop - start)
                    }
                })
                .collect();
            return Ok(Grid(pts));
        }
        let values: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
        let values = values.map_err(|e| format!("bad grid value: {e}"))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err("grid values must be finite".into());
        }
        Ok(Grid(values))
    }
}

/// The effective, fully resolved configuration of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub grid_beta: Option<Vec<f64>>,
    pub grid_gamma: Option<Vec<f64>>,
    pub grid_kappa: Option<Vec<f64>>,
    pub n: usize,
    pub t_end: f64,
    pub step: f64,
    pub seed: u64,
    pub threshold: f64,
    pub ic_min: f64,
    pub ic_max: f64,
    pub freq_scheme: FrequencyScheme,
    pub gamma_resolution: f64,
    pub record_every: usize,
    pub workers: usize,
    pub majority_seeds: usize,
    pub out: PathBuf,
}

/// Optional JSON file mirroring the flags; any present field acts as a
/// default for the corresponding flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub grid_beta: Option<GridValue>,
    pub grid_gamma: Option<GridValue>,
    pub grid_kappa: Option<GridValue>,
    pub n: Option<usize>,
    pub t_end: Option<f64>,
    pub step: Option<f64>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub ic_min: Option<f64>,
    pub ic_max: Option<f64>,
    pub freq_scheme: Option<FrequencyScheme>,
    pub gamma_resolution: Option<f64>,
    pub record_every: Option<usize>,
    pub workers: Option<usize>,
    pub majority_seeds: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Grids in config files may be written as a spec string or a plain array.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Spec(String),
    Values(Vec<f64>),
}

impl GridValue {
    pub fn resolve(&self) -> Result<Grid> {
        match self {
            GridValue::Spec(s) => Grid::from_str(s).map_err(|e| anyhow::anyhow!(e)),
            GridValue::Values(v) => Ok(Grid(v.clone())),
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }
}

/// Raw option set shared by all subcommands (every flag optional, so the
/// config file can fill the gaps).
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonOpts {
    /// JSON config file mirroring the flags; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Phase offset of the coupling family, in [0, pi].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Spectrum half-width, in [0, 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Coupling strength.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Grid over beta: `a:b:n[:log]`, a comma list, or one value.
    #[arg(long, value_name = "GRID")]
    pub grid_beta: Option<Grid>,
    /// Grid over gamma.
    #[arg(long, value_name = "GRID")]
    pub grid_gamma: Option<Grid>,
    /// Grid over kappa.
    #[arg(long, value_name = "GRID")]
    pub grid_kappa: Option<Grid>,
    /// Number of oscillators.
    #[arg(long)]
    pub n: Option<usize>,
    /// Simulation horizon.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Integrator step size.
    #[arg(long)]
    pub step: Option<f64>,
    /// Base RNG seed; grid cells derive their own seeds from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synchronization threshold on the final max deviation.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Lower end of the initial-phase interval.
    #[arg(long)]
    pub ic_min: Option<f64>,
    /// Upper end of the initial-phase interval.
    #[arg(long)]
    pub ic_max: Option<f64>,
    /// Natural-frequency scheme: equidistant or seeded-uniform.
    #[arg(long, value_enum)]
    pub freq_scheme: Option<FreqSchemeArg>,
    /// Coarse resolution of the upward gamma scan.
    #[arg(long)]
    pub gamma_resolution: Option<f64>,
    /// Record every k-th integration step.
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Worker threads for grid sweeps (never affects row content).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Trials per verdict; > 1 switches to seeded majority voting.
    #[arg(long)]
    pub majority_seeds: Option<usize>,
    /// Output path (CSV for sweeps, JSON for lock reports).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FreqSchemeArg {
    Equidistant,
    SeededUniform,
}

impl From<FreqSchemeArg> for FrequencyScheme {
    fn from(v: FreqSchemeArg) -> Self {
        match v {
            FreqSchemeArg::Equidistant => FrequencyScheme::Equidistant,
            FreqSchemeArg::SeededUniform => FrequencyScheme::SeededUniform,
        }
    }
}

/// Per-command defaults: horizons and initial-condition intervals follow
/// the reference experiments for each figure-style output.
#[derive(Debug, Clone)]
pub struct CommandDefaults {
    pub command: &'static str,
    pub t_end: f64,
    pub ic: (f64, f64),
    pub record_every: usize,
    pub out: &'static str,
    pub grid_beta: Option<&'static str>,
    pub grid_gamma: Option<&'static str>,
    pub grid_kappa: Option<&'static str>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
}

pub fn defaults_for(command: &str) -> CommandDefaults {
    let base = CommandDefaults {
        command: "",
        t_end: 1500.0,
        ic: (-PI / 2.0, PI / 2.0),
        record_every: 1,
        out: "out.csv",
        grid_beta: None,
        grid_gamma: None,
        grid_kappa: None,
        beta: None,
        kappa: None,
    };
    match command {
        "kappa-star" => CommandDefaults {
            command: "kappa-star",
            out: "kappa_star.csv",
            grid_beta: Some("0:3.141592653589793:129"),
            ..base
        },
        "h-map" => CommandDefaults {
            command: "h-map",
            out: "h_map.csv",
            grid_beta: Some("0:3.141592653589793:65"),
            grid_kappa: Some("0.05:3:60"),
            ..base
        },
        "sync-domain" => CommandDefaults {
            command: "sync-domain",
            t_end: 1500.0,
            out: "sync_domain.csv",
            beta: Some(0.0),
            grid_kappa: Some("0.05:0.75:15"),
            ..base
        },
        "desync-curve" => CommandDefaults {
            command: "desync-curve",
            t_end: 3e4,
            out: "desync_curve.csv",
            kappa: Some(0.6),
            grid_beta: Some("0:3.141592653589793:33"),
            ..base
        },
        "order-scan" => CommandDefaults {
            command: "order-scan",
            t_end: 3000.0,
            out: "order_scan.csv",
            kappa: Some(0.6),
            grid_beta: Some("0:3.141592653589793:65"),
            grid_gamma: Some("0,0.011,0.0412"),
            ..base
        },
        "timeseries" => CommandDefaults {
            command: "timeseries",
            t_end: 3e4,
            ic: (-PI, PI),
            record_every: 100,
            out: "timeseries.csv",
            beta: Some(0.0),
            kappa: Some(0.6),
            ..base
        },
        "certify" => CommandDefaults {
            command: "certify",
            out: "certify.csv",
            beta: Some(0.0),
            grid_gamma: Some("1e-9:1e-3:20:log"),
            grid_kappa: Some("0.05:0.75:15"),
            ..base
        },
        "lock" => CommandDefaults { command: "lock", out: "lock.json", beta: Some(0.0), ..base },
        other => unreachable!("unknown command {other}"),
    }
}

fn grid_from(
    flag: Option<Grid>,
    file: Option<&GridValue>,
    default: Option<&'static str>,
) -> Result<Option<Vec<f64>>> {
    if let Some(g) = flag {
        return Ok(Some(g.0));
    }
    if let Some(v) = file {
        return Ok(Some(v.resolve()?.0));
    }
    match default {
        Some(spec) => Ok(Some(Grid::from_str(spec).expect("default grids parse").0)),
        None => Ok(None),
    }
}

/// Resolves flags, file values and defaults into one [`RunConfig`].
pub fn build_run_config(command: &str, opts: &CommonOpts) -> Result<RunConfig> {
    let file = match &opts.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let d = defaults_for(command);

    let config = RunConfig {
        command: command.to_string(),
        beta: opts.beta.or(file.beta).or(d.beta),
        gamma: opts.gamma.or(file.gamma),
        kappa: opts.kappa.or(file.kappa).or(d.kappa),
        grid_beta: grid_from(opts.grid_beta.clone(), file.grid_beta.as_ref(), d.grid_beta)?,
        grid_gamma: grid_from(opts.grid_gamma.clone(), file.grid_gamma.as_ref(), d.grid_gamma)?,
        grid_kappa: grid_from(opts.grid_kappa.clone(), file.grid_kappa.as_ref(), d.grid_kappa)?,
        n: opts.n.or(file.n).unwrap_or(100),
        t_end: opts.t_end.or(file.t_end).unwrap_or(d.t_end),
        step: opts.step.or(file.step).unwrap_or(1e-2),
        seed: opts.seed.or(file.seed).unwrap_or(1),
        threshold: opts
            .threshold
            .or(file.threshold)
            .unwrap_or(winfree_core::observables::DEFAULT_SYNC_THRESHOLD),
        ic_min: opts.ic_min.or(file.ic_min).unwrap_or(d.ic.0),
        ic_max: opts.ic_max.or(file.ic_max).unwrap_or(d.ic.1),
        freq_scheme: opts
            .freq_scheme
            .map(FrequencyScheme::from)
            .or(file.freq_scheme)
            .unwrap_or(FrequencyScheme::Equidistant),
        gamma_resolution: opts.gamma_resolution.or(file.gamma_resolution).unwrap_or(1e-3),
        record_every: opts.record_every.or(file.record_every).unwrap_or(d.record_every),
        workers: opts
            .workers
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |v| v.get())),
        majority_seeds: opts.majority_seeds.or(file.majority_seeds).unwrap_or(1),
        out: opts.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(d.out)),
    };

    if config.t_end <= 0.0 {
        bail!("t_end must be positive");
    }
    if config.step <= 0.0 || !config.step.is_finite() {
        bail!("step must be positive");
    }
    if config.threshold <= 0.0 {
        bail!("threshold must be positive");
    }
    if config.n == 0 {
        bail!("n must be >= 1");
    }
    if config.record_every == 0 {
        bail!("record-every must be >= 1");
    }
    if config.workers == 0 {
        bail!("workers must be >= 1");
    }
    if config.majority_seeds == 0 {
        bail!("majority-seeds must be >= 1");
    }
    if config.gamma_resolution <= 0.0 || config.gamma_resolution >= 1.0 {
        bail!("gamma-resolution must lie in (0, 1)");
    }
    for (name, grid) in [
        ("grid-beta", &config.grid_beta),
        ("grid-gamma", &config.grid_gamma),
        ("grid-kappa", &config.grid_kappa),
    ] {
        if let Some(g) = grid {
            if g.is_empty() {
                bail!("{name} must not be empty");
            }
            if g.iter().any(|v| !v.is_finite()) {
                bail!("{name} must contain only finite values");
            }
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_single_value() {
        assert_eq!(Grid::from_str("0.5").unwrap().0, vec![0.5]);
    }

    #[test]
    fn grid_comma_list() {
        assert_eq!(Grid::from_str("0,0.011,0.0412").unwrap().0, vec![0.0, 0.011, 0.0412]);
    }

    #[test]
    fn grid_linear_range() {
        let g = Grid::from_str("0:1:5").unwrap().0;
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn grid_log_range() {
        let g = Grid::from_str("1e-4:1:5:log").unwrap().0;
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!((g[4] - 1.0).abs() < 1e-12);
        assert!((g[2] - 1e-2).abs() < 1e-14);
    }

    #[test]
    fn grid_rejects_nonsense() {
        assert!(Grid::from_str("").is_err());
        assert!(Grid::from_str("1:2").is_err());
        assert!(Grid::from_str("1:2:0").is_err());
        assert!(Grid::from_str("-1:2:4:log").is_err());
        assert!(Grid::from_str("a,b").is_err());
    }

    #[test]
    fn defaults_differ_per_command() {
        let ts = defaults_for("timeseries");
        assert_eq!(ts.ic, (-PI, PI));
        assert_eq!(ts.t_end, 3e4);
        let sd = defaults_for("sync-domain");
        assert_eq!(sd.ic, (-PI / 2.0, PI / 2.0));
        assert_eq!(sd.t_end, 1500.0);
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let dir = std::env::temp_dir().join(format!("winfree-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.json");
        std::fs::write(&path, r#"{"kappa": 0.4, "n": 12, "grid-kappa": [0.1, 0.2]}"#).unwrap();

        let opts = CommonOpts {
            config: Some(path.clone()),
            kappa: Some(0.9),
            ..Default::default()
        };
        let cfg = build_run_config("sync-domain", &opts).unwrap();
        assert_eq!(cfg.kappa, Some(0.9), "flag wins over file");
        assert_eq!(cfg.n, 12, "file wins over default");
        assert_eq!(cfg.grid_kappa.as_deref(), Some(&[0.1, 0.2][..]));
        assert_eq!(cfg.t_end, 1500.0, "default fills the rest");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = std::env::temp_dir().join(format!("winfree-cfg2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.json");
        std::fs::write(&path, r#"{"kapa": 0.4}"#).unwrap();
        let opts = CommonOpts { config: Some(path.clone()), ..Default::default() };
        assert!(build_run_config("sync-domain", &opts).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn invalid_values_are_rejected() {
        let opts = CommonOpts { t_end: Some(-1.0), ..Default::default() };
        assert!(build_run_config("timeseries", &opts).is_err());
        let opts = CommonOpts { n: Some(0), ..Default::default() };
        assert!(build_run_config("timeseries", &opts).is_err());
    }
}
