//! Subcommand implementations: load inputs, run the core operations, and
//! emit tables, reports, snapshots and manifests.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use rewire_core::engine::{run_to_stationarity_with, RewiringConfig, SweepRecord};
use rewire_core::evaluation::{evaluate, tradeoff_curve, SplitSpec};
use rewire_core::experiments::{
    density_sweep, hysteresis_run, theta_sweep, DensityMode, ExperimentConfig,
    HysteresisProtocol, Method,
};
use rewire_core::io::{
    export_snapshot, import_snapshot, ingest, sha256_file, synthetic_network, to_csv_string,
    to_json_string, DatasetInfo, OutputFormat, RunManifest, SyntheticSpec, TableRow,
};
use rewire_core::metrics::{
    gini, herfindahl, popularity_rank_curve, top_share, TOP_SHARE_FRACTION,
};
use rewire_core::network::BipartiteNetwork;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where a command writes its artifacts: `<base>.<ext>` files plus
/// `<base>.manifest.json`.
pub struct Emitter {
    base: PathBuf,
    format: OutputFormat,
    outputs: Vec<String>,
}

impl Emitter {
    pub fn new(output: Option<&Path>, command: &str, format: OutputFormat) -> Result<Self> {
        let base = match output {
            Some(p) => p.to_path_buf(),
            None => {
                let dir = std::env::var("REWIRE_OUT_DIR").unwrap_or_else(|_| "out".into());
                Path::new(&dir).join(command)
            }
        };
        if let Some(dir) = base.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create output directory {}", dir.display()))?;
            }
        }
        Ok(Emitter {
            base,
            format,
            outputs: Vec::new(),
        })
    }

    pub fn base(&self) -> &Path {
        &self.base
    }

    fn record(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Write a table in the selected format; returns the path written.
    pub fn table<R: TableRow>(&mut self, rows: &[R]) -> Result<PathBuf> {
        let (path, payload) = match self.format {
            OutputFormat::Csv => (self.base.with_extension("csv"), to_csv_string(rows)),
            OutputFormat::Json => (self.base.with_extension("json"), to_json_string(rows)),
        };
        std::fs::write(&path, payload)
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.record(&path);
        Ok(path)
    }

    /// Write an auxiliary file under `<base stem>.<suffix>`.
    pub fn aux(&mut self, suffix: &str, payload: &str) -> Result<PathBuf> {
        let path = self.with_suffix(suffix);
        std::fs::write(&path, payload)
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.record(&path);
        Ok(path)
    }

    fn with_suffix(&self, suffix: &str) -> PathBuf {
        let stem = self.base.file_name().unwrap_or_default().to_string_lossy();
        self.base.with_file_name(format!("{stem}.{suffix}"))
    }

    /// Write the run manifest next to the outputs.
    pub fn manifest(
        mut self,
        command: &str,
        seed: u64,
        config: serde_json::Value,
        input: Option<DatasetInfo>,
    ) -> Result<()> {
        let path = self.with_suffix("manifest.json");
        self.record(&path);
        let manifest = RunManifest {
            tool: "rewire".into(),
            version: VERSION.into(),
            command: command.into(),
            seed,
            config,
            input,
            outputs: std::mem::take(&mut self.outputs),
        };
        manifest.write(&path)?;
        Ok(())
    }
}

/// Import a snapshot (base path, `.csv`, or `.json`) plus its provenance.
pub fn load_network(input: &Path) -> Result<(BipartiteNetwork, DatasetInfo)> {
    let net = import_snapshot(input)?;
    let csv_path = if input.extension().and_then(|e| e.to_str()) == Some("csv") {
        input.to_path_buf()
    } else {
        input.with_extension("csv")
    };
    let info = DatasetInfo {
        path: csv_path.display().to_string(),
        sha256: sha256_file(&csv_path)?,
        n_users: net.n_users(),
        n_items: net.n_items(),
        n_links: net.n_links(),
    };
    Ok((net, info))
}

fn summary(quiet: bool, line: String) {
    if !quiet {
        eprintln!("{line}");
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_ingest(
    input: Option<&Path>,
    threshold: u8,
    synthetic: Option<SyntheticSpec>,
    seed: u64,
    emitter: Emitter,
    quiet: bool,
) -> Result<()> {
    let mut emitter = emitter;
    let (network, input_info, config) = match synthetic {
        Some(spec) => {
            let net = synthetic_network(&spec)?;
            (net, None, json!({ "synthetic": spec, "seed": seed }))
        }
        None => {
            let path = input.ok_or_else(|| anyhow!("ingest needs --input or --synthetic"))?;
            let result = ingest(path, threshold, seed)?;
            let idmap = serde_json::to_string_pretty(&result.id_map)
                .expect("id map serializes")
                + "\n";
            emitter.aux("idmap.json", &idmap)?;
            let info = DatasetInfo {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
                n_users: result.network.n_users(),
                n_items: result.network.n_items(),
                n_links: result.network.n_links(),
            };
            (
                result.network,
                Some(info),
                json!({ "threshold": threshold, "seed": seed }),
            )
        }
    };
    let (csv_path, json_path) = export_snapshot(&network, emitter.base())?;
    emitter.record(&csv_path);
    emitter.record(&json_path);
    summary(
        quiet,
        format!(
            "ingested {} users, {} items, {} links -> {}",
            network.n_users(),
            network.n_items(),
            network.n_links(),
            csv_path.display()
        ),
    );
    emitter.manifest("ingest", seed, config, input_info)
}

pub fn run_simulate(
    input: &Path,
    cfg: &RewiringConfig,
    final_snapshot: Option<&Path>,
    mut emitter: Emitter,
    quiet: bool,
) -> Result<()> {
    let (mut net, info) = load_network(input)?;
    let mut records = Vec::new();
    let trace = run_to_stationarity_with(&mut net, cfg, |r: &SweepRecord| {
        if !quiet && r.snapshot.sweep % 100 == 0 {
            eprintln!(
                "sweep {:5}  gini {:.4}  fallbacks {}",
                r.snapshot.sweep, r.snapshot.gini, r.fallbacks
            );
        }
        records.push(*r);
    })?;
    let path = emitter.table(&trace.records)?;
    if let Some(snap) = final_snapshot {
        let (c, j) = export_snapshot(&net, snap)?;
        emitter.record(&c);
        emitter.record(&j);
    }
    summary(
        quiet,
        format!(
            "{} sweeps, terminal {:?}, G* = {:.4} -> {}",
            trace.sweeps(),
            trace.terminal,
            trace.stationary_gini(),
            path.display()
        ),
    );
    emitter.manifest(
        "simulate",
        cfg.seed,
        serde_json::to_value(cfg).expect("config serializes"),
        Some(info),
    )
}

pub fn run_sweep(
    input: &Path,
    theta_grid: &[f64],
    p_grid: &[f64],
    cfg: &ExperimentConfig,
    mut emitter: Emitter,
    quiet: bool,
) -> Result<()> {
    let (net, info) = load_network(input)?;
    let mut rows = Vec::new();
    for &p in p_grid {
        rows.extend(theta_sweep(&net, theta_grid, p, cfg)?);
    }
    let path = emitter.table(&rows)?;
    summary(quiet, format!("{} grid points -> {}", rows.len(), path.display()));
    emitter.manifest(
        "sweep",
        cfg.base.seed,
        json!({
            "base": cfg.base,
            "replicas": cfg.replicas,
            "theta_grid": theta_grid,
            "p_grid": p_grid,
        }),
        Some(info),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn run_hysteresis(
    input: &Path,
    theta_grid: Vec<f64>,
    theta_phase1: f64,
    theta_phase2: f64,
    base: &RewiringConfig,
    replicas: usize,
    mut emitter: Emitter,
    quiet: bool,
) -> Result<()> {
    let (net, info) = load_network(input)?;
    let mut protocol = HysteresisProtocol::standard(base.clone(), theta_grid);
    protocol.phase1.theta = theta_phase1;
    protocol.phase2.theta = theta_phase2;
    let rows = hysteresis_run(&net, &protocol, replicas)?;
    let path = emitter.table(&rows)?;
    summary(quiet, format!("{} branch points -> {}", rows.len(), path.display()));
    emitter.manifest(
        "hysteresis",
        base.seed,
        json!({
            "phase1": protocol.phase1,
            "phase2": protocol.phase2,
            "theta_grid": protocol.theta_grid,
            "replicas": replicas,
        }),
        Some(info),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn run_density(
    input: &Path,
    density_grid: &[f64],
    methods: &[Method],
    mode: DensityMode,
    cfg: &ExperimentConfig,
    mut emitter: Emitter,
    quiet: bool,
) -> Result<()> {
    let (net, info) = load_network(input)?;
    let rows = density_sweep(&net, density_grid, methods, mode, cfg)?;
    let path = emitter.table(&rows)?;
    summary(quiet, format!("{} cells -> {}", rows.len(), path.display()));
    emitter.manifest(
        "density",
        cfg.base.seed,
        json!({
            "base": cfg.base,
            "replicas": cfg.replicas,
            "mode": mode,
            "density_grid": density_grid,
            "methods": methods,
        }),
        Some(info),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn run_evaluate(
    input: &Path,
    theta_grid: Option<Vec<f64>>,
    split: &SplitSpec,
    run_cfg: &RewiringConfig,
    mut emitter: Emitter,
    quiet: bool,
) -> Result<()> {
    let (net, info) = load_network(input)?;
    match theta_grid {
        // grid given: emit the precision / stationary-Gini trade-off curve
        Some(grid) => {
            let curve = tradeoff_curve(&net, &grid, split, run_cfg)?;
            let path = emitter.table(&curve)?;
            summary(quiet, format!("{} trade-off points -> {}", curve.len(), path.display()));
            emitter.manifest(
                "evaluate",
                split.seed,
                json!({
                    "split": split,
                    "run": run_cfg,
                    "theta_grid": grid,
                }),
                Some(info),
            )
        }
        None => {
            let report = evaluate(&net, split, run_cfg.theta, run_cfg.list_length)?;
            emitter.aux("report.json", &report.to_json())?;
            let rows = report.division_rows();
            let path = emitter.table(&rows)?;
            summary(
                quiet,
                format!(
                    "precision {:.4}, diversity {:.2} over {} divisions -> {}",
                    report.precision,
                    report.short_term_diversity,
                    report.n_divisions,
                    path.display()
                ),
            );
            emitter.manifest(
                "evaluate",
                split.seed,
                json!({
                    "split": split,
                    "theta": run_cfg.theta,
                    "list_length": run_cfg.list_length,
                }),
                Some(info),
            )
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsRow {
    pub gini: f64,
    pub herfindahl: f64,
    pub top1_share: f64,
    pub n_users: u32,
    pub n_items: u32,
    pub n_links: usize,
}

impl TableRow for MetricsRow {
    fn csv_header() -> &'static str {
        "gini,herfindahl,top1_share,n_users,n_items,n_links"
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.gini, self.herfindahl, self.top1_share, self.n_users, self.n_items, self.n_links
        )
    }
}

#[derive(Serialize)]
struct CurvePoint {
    rank_norm: f64,
    pop_norm: f64,
}

impl TableRow for CurvePoint {
    fn csv_header() -> &'static str {
        "rank_norm,pop_norm"
    }

    fn csv_row(&self) -> String {
        format!("{},{}", self.rank_norm, self.pop_norm)
    }
}

pub fn run_metrics(
    input: &Path,
    curve: Option<&Path>,
    mut emitter: Emitter,
    quiet: bool,
) -> Result<()> {
    let (net, info) = load_network(input)?;
    let degrees = net.item_degrees();
    let row = MetricsRow {
        gini: gini(degrees)?,
        herfindahl: herfindahl(degrees)?,
        top1_share: top_share(degrees, TOP_SHARE_FRACTION)?,
        n_users: net.n_users(),
        n_items: net.n_items(),
        n_links: net.n_links(),
    };
    let path = emitter.table(&[row])?;
    if let Some(curve_path) = curve {
        let points: Vec<CurvePoint> = popularity_rank_curve(degrees)?
            .into_iter()
            .map(|(rank_norm, pop_norm)| CurvePoint {
                rank_norm,
                pop_norm,
            })
            .collect();
        let payload = to_csv_string(&points);
        if let Some(dir) = curve_path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(curve_path, payload)
            .with_context(|| format!("cannot write {}", curve_path.display()))?;
        emitter.record(curve_path);
    }
    summary(
        quiet,
        format!(
            "gini {:.4}, herfindahl {:.5}, top-1% share {:.4} -> {}",
            row.gini,
            row.herfindahl,
            row.top1_share,
            path.display()
        ),
    );
    emitter.manifest("metrics", net.seed(), json!({}), Some(info))
}

/// Parse a comma list of method presets.
pub fn parse_methods(spec: &str) -> Result<Vec<Method>> {
    spec.split(',')
        .map(|m| m.trim().parse::<Method>().map_err(Into::into))
        .collect()
}

pub fn parse_density_mode(spec: &str) -> Result<DensityMode> {
    spec.parse::<DensityMode>().map_err(Into::into)
}

pub fn parse_format(spec: Option<&str>) -> Result<OutputFormat> {
    match spec {
        None => Ok(OutputFormat::Csv),
        Some(s) => s.parse::<OutputFormat>().map_err(Into::into),
    }
}

/// Build a synthetic spec from the ingest flags, if requested.
pub fn synthetic_spec(
    synthetic: bool,
    users: Option<u32>,
    items: Option<u32>,
    links: Option<usize>,
    skew: Option<f64>,
    seed: u64,
) -> Result<Option<SyntheticSpec>> {
    if !synthetic {
        if users.is_some() || items.is_some() || links.is_some() || skew.is_some() {
            bail!("--users/--items/--links/--skew require --synthetic");
        }
        return Ok(None);
    }
    Ok(Some(SyntheticSpec {
        users: users.unwrap_or(500),
        items: items.unwrap_or(400),
        links: links.unwrap_or(12000),
        skew: skew.unwrap_or(0.8),
        seed,
    }))
}
