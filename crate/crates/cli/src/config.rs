//! Config-file schema and flag/file/default resolution.
//!
//! Precedence is total: CLI flag > config file > built-in default. The
//! config file is strict JSON; unknown keys are rejected.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use rewire_core::attachment::AttachmentMode;
use rewire_core::engine::RewiringConfig;
use rewire_core::evaluation::SplitSpec;
use rewire_core::experiments::DEFAULT_REPLICAS;

/// JSON run-configuration file. Every field is optional; flags override.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub theta: Option<f64>,
    pub p: Option<f64>,
    pub list_length: Option<usize>,
    pub attachment: Option<String>,
    pub seed: Option<u64>,
    pub max_sweeps: Option<usize>,
    pub window: Option<usize>,
    pub eps: Option<f64>,
    pub probe_fraction: Option<f64>,
    pub divisions: Option<usize>,
    pub replicas: Option<usize>,
    pub theta_grid: Option<String>,
    pub p_grid: Option<String>,
    pub density_grid: Option<String>,
    pub methods: Option<String>,
    pub mode: Option<String>,
    pub threshold: Option<u8>,
    pub output: Option<String>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
}

impl RunConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))
    }
}

/// Engine flags shared by the rewiring subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct EngineFlags {
    /// Similarity exponent θ in [0, 1]
    #[arg(long)]
    pub theta: Option<f64>,

    /// Probability of following recommendation at each rewiring event
    #[arg(long)]
    pub p: Option<f64>,

    /// Recommendation list length L
    #[arg(long)]
    pub list_length: Option<usize>,

    /// Attachment channel: pa (preferential) or ra (random)
    #[arg(long)]
    pub attachment: Option<String>,

    /// Maximum number of sweeps before giving up on stationarity
    #[arg(long)]
    pub max_sweeps: Option<usize>,

    /// Stationarity window W, in sweeps
    #[arg(long)]
    pub window: Option<usize>,

    /// Stationarity threshold ε, in Gini units
    #[arg(long)]
    pub eps: Option<f64>,
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Resolve the full rewiring configuration for one run.
pub fn resolve_rewiring(
    flags: &EngineFlags,
    seed_flag: Option<u64>,
    file: &RunConfigFile,
) -> Result<RewiringConfig> {
    let d = RewiringConfig::default();
    let attachment = match flags.attachment.clone().or_else(|| file.attachment.clone()) {
        Some(s) => s.parse::<AttachmentMode>()?,
        None => d.attachment,
    };
    let cfg = RewiringConfig {
        theta: pick(flags.theta, file.theta, d.theta),
        p: pick(flags.p, file.p, d.p),
        list_length: pick(flags.list_length, file.list_length, d.list_length),
        attachment,
        max_sweeps: pick(flags.max_sweeps, file.max_sweeps, d.max_sweeps),
        window: pick(flags.window, file.window, d.window),
        eps: pick(flags.eps, file.eps, d.eps),
        seed: pick(seed_flag, file.seed, d.seed),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn resolve_split(
    probe_fraction: Option<f64>,
    divisions: Option<usize>,
    seed: u64,
    file: &RunConfigFile,
) -> Result<SplitSpec> {
    let d = SplitSpec::default();
    let spec = SplitSpec {
        probe_fraction: pick(probe_fraction, file.probe_fraction, d.probe_fraction),
        n_divisions: pick(divisions, file.divisions, d.n_divisions),
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn resolve_replicas(flag: Option<usize>, file: &RunConfigFile) -> usize {
    pick(flag, file.replicas, DEFAULT_REPLICAS)
}

/// Parse a grid: either `start:end:step` (inclusive) or a comma list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.len() {
        3 => {
            let start: f64 = parts[0].parse().context("bad grid start")?;
            let end: f64 = parts[1].parse().context("bad grid end")?;
            let step: f64 = parts[2].parse().context("bad grid step")?;
            if step <= 0.0 || end < start {
                bail!("grid '{spec}' needs start <= end and step > 0");
            }
            let count = ((end - start) / step + 1e-9).floor() as usize;
            (0..=count)
                .map(|i| {
                    let v = start + i as f64 * step;
                    if (v - end).abs() < step * 1e-9 {
                        end
                    } else {
                        v
                    }
                })
                .collect()
        }
        1 => spec
            .split(',')
            .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad grid value '{v}'")))
            .collect::<Result<Vec<f64>>>()?,
        _ => bail!("grid '{spec}' is neither 'start:end:step' nor a comma list"),
    };
    if values.is_empty() {
        bail!("grid '{spec}' is empty");
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_range_is_inclusive() {
        let g = parse_grid("0:1:0.5").unwrap();
        assert_eq!(g, vec![0.0, 0.5, 1.0]);
        let g = parse_grid("0:1:0.05").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn grid_comma_list() {
        assert_eq!(parse_grid("0.25,0.5, 1").unwrap(), vec![0.25, 0.5, 1.0]);
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let err = serde_json::from_str::<RunConfigFile>("{\"thetaa\": 1}").unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn precedence_flag_over_file_over_default() {
        let file = RunConfigFile {
            theta: Some(0.3),
            p: Some(0.5),
            ..Default::default()
        };
        let flags = EngineFlags {
            theta: Some(0.9),
            ..Default::default()
        };
        let cfg = resolve_rewiring(&flags, None, &file).unwrap();
        assert_eq!(cfg.theta, 0.9); // flag wins
        assert_eq!(cfg.p, 0.5); // file wins
        assert_eq!(cfg.list_length, 20); // default
    }
}
