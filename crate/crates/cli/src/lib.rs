//! Command-line front end for the `risfeed` simulator.
//!
//! Every command writes plot-ready CSV and JSON files into `--out-dir`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{DesignKind, Distance, RunConfig};
use risfeed::PhaseConvention;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl From<risfeed::Error> for CliError {
    fn from(e: risfeed::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "risfeed",
    version,
    about = "Near-field fed RIS beamforming simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Far-field pattern, metrics and design of one beam design.
    Pattern,
    /// Optimal distance and pencil-beam metrics for a list of RIS sizes.
    Sweep,
    /// Link budget and PA power comparison against a phased array.
    Power,
    /// Pattern of the design steered to `--theta` degrees.
    Steer {
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named experiment applied before the config file.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    #[arg(long, global = true)]
    pub n_p: Option<usize>,
    #[arg(long, global = true)]
    pub n_a: Option<usize>,
    /// Feeder distance in half wavelengths, or `auto`.
    #[arg(long, global = true)]
    pub d: Option<Distance>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub offset: Option<f64>,
    #[arg(long, global = true)]
    pub ris_element: Option<String>,
    #[arg(long, global = true)]
    pub amaf_element: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub design: Option<DesignKind>,
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub betas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub grid_step: Option<f64>,
    #[arg(long, global = true, value_parser = parse_convention)]
    pub phase_convention: Option<PhaseConvention>,
    /// Enable the distance optimizer.
    #[arg(long, global = true)]
    pub optimize: bool,
    #[arg(long, global = true)]
    pub d_step: Option<f64>,
    /// Comma-separated RIS sizes for `sweep`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub carrier_hz: Option<f64>,
    #[arg(long, global = true)]
    pub bandwidth_hz: Option<f64>,
    #[arg(long, global = true)]
    pub range_m: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub noise_figure_db: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long, global = true)]
    pub technology: Option<String>,
    #[arg(long, global = true)]
    pub backoff_db: Option<f64>,
    /// Also write the propagation matrix as `channel.csv`.
    #[arg(long, global = true)]
    pub export_channel: bool,
}

fn parse_convention(s: &str) -> Result<PhaseConvention, String> {
    match s {
        "amaf-center" => Ok(PhaseConvention::AmafCenter),
        "ris-peak" => Ok(PhaseConvention::RisPeak),
        _ => Err(format!("expected amaf-center or ris-peak, got {s:?}")),
    }
}

/// Layers defaults, preset, config file and flags, then validates.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let a = &cli.common;
    let mut cfg = match &a.preset {
        Some(name) => config::preset(name)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut base = serde_json::to_value(&cfg).expect("config serializes");
        merge(&mut base, file);
        cfg = serde_json::from_value(base)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }

    let s = &mut cfg.scene;
    if let Some(v) = a.n_p {
        s.n_p = v;
    }
    if let Some(v) = a.n_a {
        s.n_a = v;
    }
    if let Some(v) = a.d {
        s.d = v;
    }
    if let Some(v) = a.offset {
        s.offset = v;
    }
    if let Some(v) = &a.ris_element {
        s.ris_element = v.clone();
    }
    if let Some(v) = &a.amaf_element {
        s.amaf_element = v.clone();
    }
    if let Some(v) = a.design {
        cfg.design.kind = v;
    }
    if let Some(v) = &a.betas {
        cfg.design.betas = v.clone();
    }
    if let Some(v) = a.grid_step {
        cfg.grid_step_deg = v;
    }
    if let Some(v) = a.phase_convention {
        cfg.phase_convention = v;
    }
    if a.optimize {
        cfg.optimizer.enabled = true;
    }
    if let Some(v) = a.d_step {
        cfg.optimizer.d_step = v;
    }
    if let Some(v) = &a.sizes {
        cfg.sweep.n_p = v.clone();
        cfg.sweep.distances = None;
    }
    let budget_flags = [
        a.carrier_hz,
        a.bandwidth_hz,
        a.range_m,
        a.noise_figure_db,
        a.snr_db,
    ];
    if budget_flags.iter().any(Option::is_some) {
        let lb = cfg.link_budget.get_or_insert(risfeed::LinkBudget::EXAMPLE);
        if let Some(v) = a.carrier_hz {
            lb.carrier_hz = v;
        }
        if let Some(v) = a.bandwidth_hz {
            lb.bandwidth_hz = v;
        }
        if let Some(v) = a.range_m {
            lb.range_m = v;
        }
        if let Some(v) = a.noise_figure_db {
            lb.rx_noise_figure_db = v;
        }
        if let Some(v) = a.snr_db {
            lb.required_snr_db = v;
        }
    }
    if let Some(v) = &a.technology {
        cfg.amplifier.technology = v.clone();
    }
    if let Some(v) = a.backoff_db {
        cfg.amplifier.backoff_db = v;
    }
    if a.export_channel {
        cfg.export_channel = true;
    }
    if let Command::Steer { theta: Some(t) } = cli.command {
        cfg.steer_deg = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Recursive object merge; `patch` wins on conflicts.
fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Runs the parsed command and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve_config(cli)?;
    let out = &cli.common.out_dir;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Compute(format!("cannot create {}: {e}", out.display())))?;
    match cli.command {
        Command::Pattern => commands::pattern(&cfg, out, false),
        Command::Steer { .. } => commands::pattern(&cfg, out, true),
        Command::Sweep => commands::sweep(&cfg, out),
        Command::Power => commands::power(&cfg, out),
    }
}
