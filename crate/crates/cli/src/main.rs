use anyhow::Result;
use clap::{Parser, Subcommand};

use winfree_cli::commands::dispatch;
use winfree_cli::config::{build_run_config, CommonOpts};

/// Mean-field Winfree oscillator experiments: critical-coupling curves,
/// hypothesis maps, synchronization-domain sweeps, order-parameter scans,
/// time series, certified parameter domains and locked-solution reports.
#[derive(Parser, Debug)]
#[command(name = "winfree", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical coupling kappa_star over a beta grid -> CSV(beta, kappa_star).
    KappaStar(CommonOpts),
    /// Hypothesis integral over a (beta, kappa) grid -> CSV(beta, kappa, valid, h, sign).
    HMap(CommonOpts),
    /// Largest synchronized gamma per kappa at fixed beta -> CSV(kappa, gamma_max).
    SyncDomain(CommonOpts),
    /// Largest synchronized gamma per beta at fixed kappa -> CSV(beta, gamma_max).
    DesyncCurve(CommonOpts),
    /// Final-time order parameter over (beta, gamma) at fixed kappa -> CSV(beta, gamma, r).
    OrderScan(CommonOpts),
    /// One trajectory -> CSV(t, d, mu) plus a final circle snapshot.
    Timeseries(CommonOpts),
    /// Certified-domain map over (gamma, kappa) -> CSV(gamma, kappa, in_u, ...).
    Certify(CommonOpts),
    /// Locked-solution report at a certified (gamma, kappa) -> JSON.
    Lock(CommonOpts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::KappaStar(_) => "kappa-star",
            Command::HMap(_) => "h-map",
            Command::SyncDomain(_) => "sync-domain",
            Command::DesyncCurve(_) => "desync-curve",
            Command::OrderScan(_) => "order-scan",
            Command::Timeseries(_) => "timeseries",
            Command::Certify(_) => "certify",
            Command::Lock(_) => "lock",
        }
    }

    fn opts(&self) -> &CommonOpts {
        match self {
            Command::KappaStar(o)
            | Command::HMap(o)
            | Command::SyncDomain(o)
            | Command::DesyncCurve(o)
            | Command::OrderScan(o)
            | Command::Timeseries(o)
            | Command::Certify(o)
            | Command::Lock(o) => o,
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = build_run_config(cli.command.name(), cli.command.opts())?;
    let out = dispatch(&config)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}
