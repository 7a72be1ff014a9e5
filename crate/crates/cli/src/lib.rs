//! `qmem` command-line front end.
//!
//! Every subcommand writes one CSV document (to `--out` or stdout) whose
//! first line is a comment carrying the tool version, the SHA-256 of the
//! canonical config document and the seed. Exit codes: 0 on success, 1 on
//! model or i/o failures, 2 on usage and config errors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use qmem_core::calibrate::paper_default;
use qmem_core::config::{load_config, ConfigWarning};
use qmem_core::emission::{control_variant, TrialModel};
use qmem_core::rng::point_seed;
use qmem_core::spectral::{build_channel_spectrum, scan, ComponentKind, LINE_NAMES};
use qmem_core::stats::{cauchy_schwarz, g2_auto, g2_cross, CorrelationEstimate};
use qmem_core::units::Dimension;
use qmem_core::{Channel, ExperimentConfig, VERSION};

pub mod error;
pub mod grid;
mod report;

pub use error::CliError;

/// Name of the built-in preset accepted by `--config`.
pub const PRESET: &str = "paper-default";

#[derive(Debug, Parser)]
#[command(
    name = "qmem",
    version,
    about = "DLCZ quantum-memory simulator for warm buffer-gas vapor"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Config document path, or `paper-default` for the built-in preset.
    #[arg(long, default_value = PRESET)]
    pub config: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=1024))]
    pub workers: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// g⁽²⁾ versus storage time between write end and read start.
    G2Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value = "0:8:0.5 us", allow_hyphen_values = true)]
        delays: String,
        /// Fluorescence-tuned anti-Stokes etalon: signal blocked, backgrounds kept.
        #[arg(long)]
        control: bool,
        /// Per-event CSV of the first `--dump-trials` trials of every point.
        #[arg(long)]
        dump_events: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        dump_trials: u64,
    },
    /// Expected etalon-scan counts per channel and buffer pressure.
    SpectrumScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ChannelArg::Stokes)]
        channel: ChannelArg,
        /// Etalon centers relative to the channel's signal line.
        #[arg(long, default_value = "-5:5:0.02 GHz", allow_hyphen_values = true)]
        centers: String,
        /// Buffer pressures to overlay; the config's pressure when omitted.
        #[arg(long)]
        pressures: Option<String>,
        /// Integration time per point.
        #[arg(long, default_value = "1 s")]
        integration: String,
    },
    /// Phase-mismatch report for the co- and/or counter-propagating geometry.
    PhaseMatch {
        #[command(flatten)]
        common: Common,
        /// `co_propagating`, `counter_propagating`, `both` (collinear
        /// collection presets) or `config` (the config's own angles).
        #[arg(long, default_value = "both")]
        geometry: String,
    },
    /// Derived quantities as (name, SI value) rows.
    Params {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Stokes,
    AntiStokes,
    Both,
}

impl ChannelArg {
    fn channels(self) -> Vec<Channel> {
        match self {
            ChannelArg::Stokes => vec![Channel::Stokes],
            ChannelArg::AntiStokes => vec![Channel::AntiStokes],
            ChannelArg::Both => vec![Channel::Stokes, Channel::AntiStokes],
        }
    }
}

/// Loads `--config`: the preset name or a document path.
pub fn resolve_config(spec: &str) -> Result<ExperimentConfig, CliError> {
    if spec == PRESET {
        return Ok(paper_default());
    }
    let text =
        std::fs::read_to_string(spec).map_err(|e| CliError::Usage(format!("cannot read config `{spec}`: {e}")))?;
    let config = load_config(&text)?;
    for w in config.validate()? {
        match w {
            ConfigWarning::MultiExcitationRegime { excitation_probability } => {
                eprintln!(
                    "warning: excitation probability {excitation_probability} is outside the single-excitation regime"
                )
            }
        }
    }
    Ok(config)
}

/// Hex SHA-256 of the canonical serialization of `config`.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let digest = Sha256::digest(config.to_toml().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn header(subcommand: &str, config: &ExperimentConfig, seed: u64) -> String {
    format!(
        "# qmem {VERSION} {subcommand} config_sha256={} seed={seed}\n",
        config_hash(config)
    )
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

/// Fixed-point with trailing zeros removed, for grid coordinates.
fn coordinate(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::G2Scan {
            common,
            trials,
            delays,
            control,
            dump_events,
            dump_trials,
        } => {
            let config = resolve_config(&common.config)?;
            let delays = grid::parse_grid("--delays", &delays, Dimension::Time)?;
            if delays.iter().any(|d| *d < 0.0) || delays.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Usage("--delays must be nonnegative and ascending".into()));
            }
            let text = g2_scan(&config, &delays, trials, common.seed, common.workers as usize, control)?;
            emit(&common.out, &text)?;
            if let Some(path) = dump_events {
                let dump = event_dump(&config, &delays, dump_trials.min(trials), common.seed, control)?;
                emit(&Some(path), &dump)?;
            }
            Ok(())
        }
        Command::SpectrumScan {
            common,
            channel,
            centers,
            pressures,
            integration,
        } => {
            let config = resolve_config(&common.config)?;
            let centers = grid::parse_grid("--centers", &centers, Dimension::Frequency)?;
            let pressures = match pressures {
                Some(p) => grid::parse_grid("--pressures", &p, Dimension::Pressure)?,
                None => vec![config.cell.buffer_pressure],
            };
            let integration = grid::parse_grid("--integration", &integration, Dimension::Time)?;
            let [integration] = integration[..] else {
                return Err(CliError::Usage("--integration takes a single duration".into()));
            };
            let text = spectrum_scan(
                &config,
                &channel.channels(),
                &centers,
                &pressures,
                integration,
                common.seed,
            )?;
            emit(&common.out, &text)
        }
        Command::PhaseMatch { common, geometry } => {
            let config = resolve_config(&common.config)?;
            let text = report::phase_match(&config, &geometry, common.seed)?;
            emit(&common.out, &text)
        }
        Command::Params { common } => {
            let config = resolve_config(&common.config)?;
            let text = report::params(&config, common.seed)?;
            emit(&common.out, &text)
        }
    }
}

fn estimate(e: &Result<CorrelationEstimate, qmem_core::Error>) -> Option<CorrelationEstimate> {
    e.as_ref().ok().copied()
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "nan".to_string(),
    }
}

/// g2-scan CSV: one row per storage delay.
pub fn g2_scan(
    config: &ExperimentConfig,
    delays: &[f64],
    trials: u64,
    seed: u64,
    workers: usize,
    control: bool,
) -> Result<String, CliError> {
    let config = if control {
        control_variant(config)
    } else {
        config.clone()
    };
    let mut out = header(if control { "g2-scan --control" } else { "g2-scan" }, &config, seed);
    out.push_str("delay_us,g12,sigma_g12,g11,g22,R,nonclassical,N1,N2,N12,n_trials\n");
    for (i, &delay) in delays.iter().enumerate() {
        let record = TrialModel::new(&config, delay)?.run(trials, point_seed(seed, i as u64), workers)?;
        let g12 = estimate(&g2_cross(&record));
        let g11 = estimate(&g2_auto(&record, Channel::Stokes));
        let g22 = estimate(&g2_auto(&record, Channel::AntiStokes));
        let cs = match (g12, g11, g22) {
            (Some(a), Some(b), Some(c)) => Some(cauchy_schwarz(&a, &b, &c)),
            _ => None,
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            coordinate(delay * 1e6),
            num(g12.map(|e| e.g)),
            num(g12.map(|e| e.sigma)),
            num(g11.map(|e| e.g)),
            num(g22.map(|e| e.g)),
            num(cs.map(|c| c.r)),
            cs.is_some_and(|c| c.nonclassical && !c.undetermined),
            record.n1,
            record.n2,
            record.n12,
            record.n_trials,
        );
        eprintln!("g2-scan: point {}/{} done", i + 1, delays.len());
    }
    Ok(out)
}

fn event_dump(
    config: &ExperimentConfig,
    delays: &[f64],
    trials: u64,
    seed: u64,
    control: bool,
) -> Result<String, CliError> {
    let config = if control {
        control_variant(config)
    } else {
        config.clone()
    };
    let mut out = header("g2-scan events", &config, seed);
    out.push_str("delay_us,trial,channel,timestamp_ns,label\n");
    for (i, &delay) in delays.iter().enumerate() {
        let model = TrialModel::new(&config, delay)?;
        let delay_us = coordinate(delay * 1e6);
        model.for_each_trial(trials, point_seed(seed, i as u64), |trial, outcome| {
            for channel in [Channel::Stokes, Channel::AntiStokes] {
                for e in outcome.events(channel) {
                    let _ = writeln!(
                        out,
                        "{delay_us},{trial},{channel},{:.3},{}",
                        e.timestamp * 1e9,
                        e.label.as_str()
                    );
                }
            }
        });
    }
    Ok(out)
}

/// spectrum-scan CSV: one row per (channel, pressure, etalon center).
pub fn spectrum_scan(
    config: &ExperimentConfig,
    channels: &[Channel],
    centers: &[f64],
    pressures: &[f64],
    integration: f64,
    seed: u64,
) -> Result<String, CliError> {
    if centers.is_empty() {
        return Err(CliError::Usage("--centers is empty".into()));
    }
    let mut out = header("spectrum-scan", config, seed);
    out.push_str("channel,pressure_pa,etalon_center_ghz,expected_counts,signal");
    for name in LINE_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for &channel in channels {
        for &pressure in pressures {
            let mut at_pressure = config.clone();
            at_pressure.cell.buffer_pressure = pressure;
            at_pressure.validate()?;
            let model = build_channel_spectrum(channel, &at_pressure, &config.spectral)?;
            let points = scan(&model, centers, integration)?;
            for point in points {
                let mut columns = [0.0; 5];
                for (comp, counts) in model.components.iter().zip(&point.per_component) {
                    let slot = match comp.kind {
                        ComponentKind::Signal => 0,
                        ComponentKind::Fluorescence => {
                            1 + LINE_NAMES
                                .iter()
                                .position(|n| *n == comp.name)
                                .expect("known line name")
                        }
                    };
                    columns[slot] += counts;
                }
                let _ = write!(
                    out,
                    "{channel},{pressure},{},{}",
                    coordinate(point.center / 1e9),
                    point.expected_counts
                );
                for c in columns {
                    let _ = write!(out, ",{c}");
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}
