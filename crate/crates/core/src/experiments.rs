//! Orchestration of the simulation protocols: θ sweeps, hysteresis, and
//! data-density modification.
//!
//! Every experiment is a pure function of (input network, spec, seed).
//! Replica RNG streams derive from the grid *coordinates* rather than
//! execution order, so grid points are reproducible standalone and tables
//! are identical under any parallel schedule.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_to_stationarity, RewiringConfig};
use crate::error::{Error, Result};
use crate::io::TableRow;
use crate::metrics::gini;
use crate::network::{BipartiteNetwork, ItemId, Link, UserId};
use crate::rng::{mix_seed, replica_seed, rng_from_seed};

pub const DEFAULT_REPLICAS: usize = 5;

/// Default θ grid: 0 to 1 in steps of 0.05.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

/// Default p grid for the reliance sweep.
pub fn default_p_grid() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}

/// Shared experiment settings: the base run configuration (θ and p get
/// overridden per grid point) and the replica count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub base: RewiringConfig,
    pub replicas: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            base: RewiringConfig::default(),
            replicas: DEFAULT_REPLICAS,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.replicas == 0 {
            return Err(Error::InvalidConfig("replicas must be >= 1".into()));
        }
        Ok(())
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run `replicas` seeded copies of one grid point; returns (G* values,
/// all-converged).
fn replicate(
    net: &BipartiteNetwork,
    cfg: &ExperimentConfig,
    theta: f64,
    p: f64,
) -> Result<(Vec<f64>, bool)> {
    let outcomes: Vec<(f64, bool)> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let run_cfg = RewiringConfig {
                theta,
                p,
                seed: replica_seed(cfg.base.seed, theta, p, r as u64),
                ..cfg.base.clone()
            };
            let mut copy = net.clone();
            let trace = run_to_stationarity(&mut copy, &run_cfg)?;
            Ok((trace.stationary_gini(), trace.converged()))
        })
        .collect::<Result<_>>()?;
    let ginis = outcomes.iter().map(|o| o.0).collect();
    let converged = outcomes.iter().all(|o| o.1);
    Ok((ginis, converged))
}

/// One row of a θ sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub theta: f64,
    pub p: f64,
    pub replicas: usize,
    pub gini_mean: f64,
    pub gini_std: f64,
    pub converged: bool,
}

impl TableRow for SweepCell {
    fn csv_header() -> &'static str {
        "theta,p,replicas,gini_mean,gini_std,converged"
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.theta, self.p, self.replicas, self.gini_mean, self.gini_std, self.converged
        )
    }
}

/// Stationary Gini over a θ grid at fixed p. Each grid point starts from a
/// fresh copy of the input network.
pub fn theta_sweep(
    net: &BipartiteNetwork,
    theta_grid: &[f64],
    p: f64,
    cfg: &ExperimentConfig,
) -> Result<Vec<SweepCell>> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidConfig("theta grid is empty".into()));
    }
    cfg.validate()?;
    theta_grid
        .par_iter()
        .map(|&theta| {
            let (ginis, converged) = replicate(net, cfg, theta, p)?;
            let (gini_mean, gini_std) = mean_std(&ginis);
            Ok(SweepCell {
                theta,
                p,
                replicas: cfg.replicas,
                gini_mean,
                gini_std,
                converged,
            })
        })
        .collect()
}

/// The two initial conditions of the hysteresis protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Grid runs start from the phase-1 stationary state (θ = 1 by
    /// default: the low-inequality branch).
    Phase1,
    /// Grid runs start from the phase-2 stationary state (θ = 0 by
    /// default: the high-inequality branch).
    Phase2,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Phase1 => write!(f, "phase1"),
            Branch::Phase2 => write!(f, "phase2"),
        }
    }
}

/// Two preparation runs that differ only in θ (and seed), plus the θ grid
/// for the branch curves continued from each terminal state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisProtocol {
    pub phase1: RewiringConfig,
    pub phase2: RewiringConfig,
    pub theta_grid: Vec<f64>,
}

impl HysteresisProtocol {
    /// The paper's setting: phase 1 prepares the low-G* state at θ = 1,
    /// phase 2 the high-G* state at θ = 0.
    pub fn standard(base: RewiringConfig, theta_grid: Vec<f64>) -> Self {
        HysteresisProtocol {
            phase1: RewiringConfig {
                theta: 1.0,
                ..base.clone()
            },
            phase2: RewiringConfig {
                theta: 0.0,
                seed: mix_seed(base.seed, &[2]),
                ..base
            },
            theta_grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.phase1.validate()?;
        self.phase2.validate()?;
        if self.theta_grid.is_empty() {
            return Err(Error::InvalidConfig("theta grid is empty".into()));
        }
        let mut a = self.phase1.clone();
        let mut b = self.phase2.clone();
        a.theta = 0.0;
        b.theta = 0.0;
        a.seed = 0;
        b.seed = 0;
        if a != b {
            return Err(Error::InvalidConfig(
                "hysteresis phases may differ only in theta and seed".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HysteresisRow {
    pub branch: Branch,
    pub theta: f64,
    pub replicas: usize,
    pub gini_mean: f64,
    pub gini_std: f64,
    pub converged: bool,
}

impl TableRow for HysteresisRow {
    fn csv_header() -> &'static str {
        "branch,theta,replicas,gini_mean,gini_std,converged"
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.branch, self.theta, self.replicas, self.gini_mean, self.gini_std, self.converged
        )
    }
}

const HYSTERESIS_TAG: u64 = 0x4859_5354;

/// Run both hysteresis branches: bring the input network to stationarity
/// under each phase config, then continue to stationarity at every grid θ
/// from a deep copy of that terminal state.
pub fn hysteresis_run(
    net: &BipartiteNetwork,
    protocol: &HysteresisProtocol,
    replicas: usize,
) -> Result<Vec<HysteresisRow>> {
    protocol.validate()?;
    if replicas == 0 {
        return Err(Error::InvalidConfig("replicas must be >= 1".into()));
    }
    let phases = [
        (Branch::Phase1, &protocol.phase1),
        (Branch::Phase2, &protocol.phase2),
    ];
    let mut rows = Vec::new();
    for (branch, phase_cfg) in phases {
        let mut prepared = net.clone();
        run_to_stationarity(&mut prepared, phase_cfg)?;
        let branch_rows: Vec<HysteresisRow> = protocol
            .theta_grid
            .par_iter()
            .map(|&theta| {
                let outcomes: Vec<(f64, bool)> = (0..replicas)
                    .into_par_iter()
                    .map(|r| {
                        let cfg = RewiringConfig {
                            theta,
                            seed: replica_seed(
                                mix_seed(phase_cfg.seed, &[HYSTERESIS_TAG]),
                                theta,
                                phase_cfg.p,
                                r as u64,
                            ),
                            ..phase_cfg.clone()
                        };
                        let mut copy = prepared.clone();
                        let trace = run_to_stationarity(&mut copy, &cfg)?;
                        Ok((trace.stationary_gini(), trace.converged()))
                    })
                    .collect::<Result<_>>()?;
                let ginis: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
                let (gini_mean, gini_std) = mean_std(&ginis);
                Ok(HysteresisRow {
                    branch,
                    theta,
                    replicas,
                    gini_mean,
                    gini_std,
                    converged: outcomes.iter().all(|o| o.1),
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(branch_rows);
    }
    Ok(rows)
}

/// Which elements random removal targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    /// Remove links uniformly, never a user's last link.
    Link,
    /// Remove users with all their links; the item universe is unchanged.
    User,
    /// Remove items with all their links; users left with no links are
    /// dropped too (the dynamics need every user to hold a link).
    Item,
}

impl std::fmt::Display for DensityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DensityMode::Link => write!(f, "link"),
            DensityMode::User => write!(f, "user"),
            DensityMode::Item => write!(f, "item"),
        }
    }
}

impl std::str::FromStr for DensityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "link" => Ok(DensityMode::Link),
            "user" => Ok(DensityMode::User),
            "item" => Ok(DensityMode::Item),
            other => Err(Error::InvalidConfig(format!(
                "unknown density mode '{other}' (expected link, user or item)"
            ))),
        }
    }
}

/// How much to remove: keep a fraction of the mode's elements, or remove a
/// count of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DensityTarget {
    KeepFraction(f64),
    RemoveCount(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub mode: DensityMode,
    pub target: DensityTarget,
    pub seed: u64,
}

/// A reduced network plus the id bookkeeping of the reduction.
pub struct DensityOutcome {
    pub network: BipartiteNetwork,
    /// Surviving original user ids, in dense-id order.
    pub kept_users: Vec<UserId>,
    /// Surviving original item ids, in dense-id order.
    pub kept_items: Vec<ItemId>,
    /// Achieved relative density E'/E₀.
    pub density: f64,
}

fn keep_count(total: usize, target: DensityTarget, what: &str) -> Result<usize> {
    let keep = match target {
        DensityTarget::KeepFraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InfeasibleTarget(format!(
                    "keep fraction {f} outside (0, 1]"
                )));
            }
            (f * total as f64).round() as usize
        }
        DensityTarget::RemoveCount(r) => total.saturating_sub(r),
    };
    if keep == 0 || keep > total {
        return Err(Error::InfeasibleTarget(format!(
            "cannot keep {keep} of {total} {what}"
        )));
    }
    Ok(keep)
}

/// Randomly reduce the network per the spec. Timestamps of surviving links
/// are preserved, so link ages carry over to the reduced network.
pub fn modify_density(net: &BipartiteNetwork, spec: &DensitySpec) -> Result<DensityOutcome> {
    let e0 = net.n_links() as f64;
    let mut rng = rng_from_seed(mix_seed(spec.seed, &[0x44454e53]));
    match spec.mode {
        DensityMode::Link => {
            let keep = keep_count(net.n_links(), spec.target, "links")?;
            let n_users = net.n_users() as usize;
            if keep < n_users {
                return Err(Error::InfeasibleTarget(format!(
                    "keeping {keep} links breaks the one-link-per-user floor ({n_users} users)"
                )));
            }
            let mut pool = net.links();
            let mut degrees: Vec<usize> =
                (0..net.n_users()).map(|u| net.user_degree(u)).collect();
            let mut removed = Vec::new();
            let to_remove = net.n_links() - keep;
            while removed.len() < to_remove {
                debug_assert!(!pool.is_empty());
                let idx = rng.gen_range(0..pool.len());
                let link = pool.swap_remove(idx);
                if degrees[link.user as usize] <= 1 {
                    continue; // the last link of a user is never removed
                }
                degrees[link.user as usize] -= 1;
                removed.push((link.user, link.item));
            }
            let removed_set: std::collections::HashSet<(u32, u32)> =
                removed.into_iter().collect();
            let kept: Vec<Link> = net
                .links()
                .into_iter()
                .filter(|l| !removed_set.contains(&(l.user, l.item)))
                .collect();
            let network = BipartiteNetwork::from_links(
                net.n_users(),
                net.n_items(),
                &kept,
                net.clock(),
                net.seed(),
            )?;
            let density = network.n_links() as f64 / e0;
            Ok(DensityOutcome {
                kept_users: (0..net.n_users()).collect(),
                kept_items: (0..net.n_items()).collect(),
                network,
                density,
            })
        }
        DensityMode::User => {
            let keep = keep_count(net.n_users() as usize, spec.target, "users")?;
            let mut kept_users =
                rand::seq::index::sample(&mut rng, net.n_users() as usize, keep).into_vec();
            kept_users.sort_unstable();
            let dense: std::collections::HashMap<u32, u32> = kept_users
                .iter()
                .enumerate()
                .map(|(new, &old)| (old as u32, new as u32))
                .collect();
            let kept: Vec<Link> = net
                .links()
                .into_iter()
                .filter_map(|l| {
                    dense.get(&l.user).map(|&u| Link {
                        user: u,
                        item: l.item,
                        timestamp: l.timestamp,
                    })
                })
                .collect();
            let network = BipartiteNetwork::from_links(
                keep as u32,
                net.n_items(),
                &kept,
                net.clock(),
                net.seed(),
            )?;
            let density = network.n_links() as f64 / e0;
            Ok(DensityOutcome {
                kept_users: kept_users.into_iter().map(|u| u as u32).collect(),
                kept_items: (0..net.n_items()).collect(),
                network,
                density,
            })
        }
        DensityMode::Item => {
            let keep = keep_count(net.n_items() as usize, spec.target, "items")?;
            let mut kept_items =
                rand::seq::index::sample(&mut rng, net.n_items() as usize, keep).into_vec();
            kept_items.sort_unstable();
            let dense_item: std::collections::HashMap<u32, u32> = kept_items
                .iter()
                .enumerate()
                .map(|(new, &old)| (old as u32, new as u32))
                .collect();
            let surviving: Vec<Link> = net
                .links()
                .into_iter()
                .filter_map(|l| {
                    dense_item.get(&l.item).map(|&i| Link {
                        user: l.user,
                        item: i,
                        timestamp: l.timestamp,
                    })
                })
                .collect();
            // users stripped of all links cannot rewire; drop and compact
            let mut user_alive = vec![false; net.n_users() as usize];
            for l in &surviving {
                user_alive[l.user as usize] = true;
            }
            let kept_users: Vec<u32> = (0..net.n_users())
                .filter(|&u| user_alive[u as usize])
                .collect();
            let dense_user: std::collections::HashMap<u32, u32> = kept_users
                .iter()
                .enumerate()
                .map(|(new, &old)| (old, new as u32))
                .collect();
            let kept: Vec<Link> = surviving
                .into_iter()
                .map(|l| Link {
                    user: dense_user[&l.user],
                    item: l.item,
                    timestamp: l.timestamp,
                })
                .collect();
            let network = BipartiteNetwork::from_links(
                kept_users.len() as u32,
                keep as u32,
                &kept,
                net.clock(),
                net.seed(),
            )?;
            let density = network.n_links() as f64 / e0;
            Ok(DensityOutcome {
                kept_users,
                kept_items: kept_items.into_iter().map(|i| i as u32).collect(),
                network,
                density,
            })
        }
    }
}

/// A recommendation method of the density comparison: a (p, θ) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub name: String,
    pub p: f64,
    pub theta: f64,
}

impl Method {
    pub fn cn() -> Self {
        Method {
            name: "cn".into(),
            p: 1.0,
            theta: 0.0,
        }
    }

    pub fn cos() -> Self {
        Method {
            name: "cos".into(),
            p: 1.0,
            theta: 0.5,
        }
    }

    pub fn lhn() -> Self {
        Method {
            name: "lhn".into(),
            p: 1.0,
            theta: 1.0,
        }
    }

    /// Pure preferential attachment: the recommendation branch never fires.
    pub fn pa() -> Self {
        Method {
            name: "pa".into(),
            p: 0.0,
            theta: 0.0,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cn" => Ok(Method::cn()),
            "cos" => Ok(Method::cos()),
            "lhn" => Ok(Method::lhn()),
            "pa" => Ok(Method::pa()),
            other => Err(Error::InvalidConfig(format!(
                "unknown method '{other}' (expected cn, cos, lhn or pa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCell {
    pub mode: DensityMode,
    pub target_fraction: f64,
    pub density: f64,
    pub method: String,
    pub replicas: usize,
    pub gini_original: f64,
    pub gini_mean: f64,
    pub gini_std: f64,
    pub converged: bool,
}

impl TableRow for DensityCell {
    fn csv_header() -> &'static str {
        "mode,target_fraction,density,method,replicas,gini_original,gini_mean,gini_std,converged"
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.target_fraction,
            self.density,
            self.method,
            self.replicas,
            self.gini_original,
            self.gini_mean,
            self.gini_std,
            self.converged
        )
    }
}

/// Stationary Gini after density modification, per (density, method) cell.
/// Each replica draws its own removal sample and dynamics stream; the
/// post-modification, pre-rewiring Gini is reported as `gini_original`
/// (mean over replicas).
pub fn density_sweep(
    net: &BipartiteNetwork,
    fractions: &[f64],
    methods: &[Method],
    mode: DensityMode,
    cfg: &ExperimentConfig,
) -> Result<Vec<DensityCell>> {
    if fractions.is_empty() || methods.is_empty() {
        return Err(Error::InvalidConfig("density grids are empty".into()));
    }
    cfg.validate()?;
    let grid: Vec<(f64, &Method)> = fractions
        .iter()
        .flat_map(|&f| methods.iter().map(move |m| (f, m)))
        .collect();
    grid.par_iter()
        .map(|&(fraction, method)| {
            let outcomes: Vec<(f64, f64, f64, bool)> = (0..cfg.replicas)
                .into_par_iter()
                .map(|r| {
                    let spec = DensitySpec {
                        mode,
                        target: DensityTarget::KeepFraction(fraction),
                        seed: mix_seed(
                            cfg.base.seed,
                            &[0x4d4f44, mode as u64, fraction.to_bits(), r as u64],
                        ),
                    };
                    let reduced = modify_density(net, &spec)?;
                    let original = gini(reduced.network.item_degrees())?;
                    let run_cfg = RewiringConfig {
                        theta: method.theta,
                        p: method.p,
                        seed: replica_seed(cfg.base.seed, method.theta, method.p, r as u64),
                        ..cfg.base.clone()
                    };
                    let mut network = reduced.network;
                    let trace = run_to_stationarity(&mut network, &run_cfg)?;
                    Ok((
                        reduced.density,
                        original,
                        trace.stationary_gini(),
                        trace.converged(),
                    ))
                })
                .collect::<Result<_>>()?;
            let densities: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
            let originals: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
            let ginis: Vec<f64> = outcomes.iter().map(|o| o.2).collect();
            let (gini_mean, gini_std) = mean_std(&ginis);
            Ok(DensityCell {
                mode,
                target_fraction: fraction,
                density: mean_std(&densities).0,
                method: method.name.clone(),
                replicas: cfg.replicas,
                gini_original: mean_std(&originals).0,
                gini_mean,
                gini_std,
                converged: outcomes.iter().all(|o| o.3),
            })
        })
        .collect()
}
