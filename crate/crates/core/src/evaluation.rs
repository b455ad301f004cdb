//! Short-term recommendation quality on a static network.
//!
//! The standard procedure: hold out a probe set (10% of links by default),
//! build top-L lists on the training remainder, and score precision
//! P_i(L) = d_i(L)/L per user with at least one probe entry, averaged over
//! users and over independent divisions. Short-term diversity is the mean
//! training-network degree of recommended items, with multiplicity across
//! users. Probe links never influence the lists; only the train network is
//! scored.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_to_stationarity, RewiringConfig};
use crate::error::{Error, Result};
use crate::io::TableRow;
use crate::metrics::gini;
use crate::network::{BipartiteNetwork, ItemId, UserId};
use crate::recommender::ScoreBuffers;
use crate::rng::{mix_seed, replica_seed, rng_from_seed, Rng};

pub const DEFAULT_PROBE_FRACTION: f64 = 0.1;
pub const DEFAULT_DIVISIONS: usize = 10;

/// How to divide links into train and probe sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub probe_fraction: f64,
    pub n_divisions: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            probe_fraction: DEFAULT_PROBE_FRACTION,
            n_divisions: DEFAULT_DIVISIONS,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.probe_fraction > 0.0 && self.probe_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "probe_fraction must be in (0,1), got {}",
                self.probe_fraction
            )));
        }
        if self.n_divisions == 0 {
            return Err(Error::InvalidConfig("n_divisions must be >= 1".into()));
        }
        Ok(())
    }
}

/// One train-probe division.
pub struct Split {
    pub train: BipartiteNetwork,
    pub probe: Vec<(UserId, ItemId)>,
}

/// Divide the network's links: the probe is a seeded random sample of
/// ⌊probe_fraction·E⌋ links, the train network keeps the rest. Train and
/// probe are disjoint and their union is the original link set.
pub fn split_train_probe(
    net: &BipartiteNetwork,
    spec: &SplitSpec,
    division: usize,
) -> Result<Split> {
    spec.validate()?;
    // canonical link enumeration, independent of storage order
    let mut edges: Vec<(UserId, ItemId)> = net.links().iter().map(|l| (l.user, l.item)).collect();
    edges.sort_unstable();
    let probe_size = (spec.probe_fraction * edges.len() as f64).floor() as usize;
    if probe_size == 0 {
        return Err(Error::InvalidConfig(format!(
            "probe_fraction {} yields an empty probe on {} links",
            spec.probe_fraction,
            edges.len()
        )));
    }
    let mut rng = rng_from_seed(mix_seed(spec.seed, &[division as u64]));
    let mut picked = rand::seq::index::sample(&mut rng, edges.len(), probe_size).into_vec();
    picked.sort_unstable();
    let mut probe = Vec::with_capacity(probe_size);
    let mut train_edges = Vec::with_capacity(edges.len() - probe_size);
    let mut next_pick = 0;
    for (i, &e) in edges.iter().enumerate() {
        if next_pick < picked.len() && picked[next_pick] == i {
            probe.push(e);
            next_pick += 1;
        } else {
            train_edges.push(e);
        }
    }
    let train = BipartiteNetwork::from_edges_with_dims(
        net.n_users(),
        net.n_items(),
        &train_edges,
        mix_seed(spec.seed, &[division as u64, 1]),
    )?;
    Ok(Split { train, probe })
}

/// Top-list entries for every user of the network, sharing score buffers.
fn build_lists(
    net: &BipartiteNetwork,
    theta: f64,
    list_length: usize,
    rng: &mut Rng,
) -> Vec<Vec<ItemId>> {
    let mut buffers = ScoreBuffers::new(theta);
    (0..net.n_users())
        .map(|u| {
            buffers
                .top_list_into(net, u, list_length, rng)
                .iter()
                .map(|e| e.item)
                .collect()
        })
        .collect()
}

fn probe_by_user(n_users: u32, probe: &[(UserId, ItemId)]) -> Vec<Vec<ItemId>> {
    let mut by_user = vec![Vec::new(); n_users as usize];
    for &(u, i) in probe {
        by_user[u as usize].push(i);
    }
    by_user
}

fn precision_from_lists(
    train: &BipartiteNetwork,
    lists: &[Vec<ItemId>],
    probe: &[(UserId, ItemId)],
    list_length: usize,
) -> Result<(f64, usize)> {
    let by_user = probe_by_user(train.n_users(), probe);
    let mut sum = 0.0;
    let mut eligible = 0;
    for u in 0..train.n_users() {
        let probe_items = &by_user[u as usize];
        if probe_items.is_empty() || train.user_degree(u) == 0 {
            continue;
        }
        let hits = lists[u as usize]
            .iter()
            .filter(|i| probe_items.contains(i))
            .count();
        sum += hits as f64 / list_length as f64;
        eligible += 1;
    }
    if eligible == 0 {
        return Err(Error::NoEligibleUsers);
    }
    Ok((sum / eligible as f64, eligible))
}

fn diversity_from_lists(train: &BipartiteNetwork, lists: &[Vec<ItemId>]) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for list in lists {
        for &item in list {
            sum += train.item_degree(item) as f64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::AllListsEmpty);
    }
    Ok(sum / count as f64)
}

/// Precision@L on one division: mean of d_i(L)/L over users with at least
/// one probe entry and nonzero train degree. Returns (precision, eligible
/// user count).
pub fn precision_at_l(
    train: &BipartiteNetwork,
    probe: &[(UserId, ItemId)],
    theta: f64,
    list_length: usize,
    rng: &mut Rng,
) -> Result<(f64, usize)> {
    let lists = build_lists(train, theta, list_length, rng);
    precision_from_lists(train, &lists, probe, list_length)
}

/// Mean train-network degree of all recommended items, with multiplicity
/// across users.
pub fn short_term_diversity(
    train: &BipartiteNetwork,
    theta: f64,
    list_length: usize,
    rng: &mut Rng,
) -> Result<f64> {
    let lists = build_lists(train, theta, list_length, rng);
    diversity_from_lists(train, &lists)
}

/// Precision and diversity averaged over train-probe divisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub theta: f64,
    pub list_length: usize,
    pub probe_fraction: f64,
    pub n_divisions: usize,
    pub precision: f64,
    pub precision_per_division: Vec<f64>,
    pub short_term_diversity: f64,
    pub diversity_per_division: Vec<f64>,
    pub eligible_users_per_division: Vec<usize>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Per-division detail row for CSV export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivisionRow {
    pub division: usize,
    pub precision: f64,
    pub diversity: f64,
    pub eligible_users: usize,
}

impl TableRow for DivisionRow {
    fn csv_header() -> &'static str {
        "division,precision,diversity,eligible_users"
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.division, self.precision, self.diversity, self.eligible_users
        )
    }
}

impl EvaluationReport {
    pub fn division_rows(&self) -> Vec<DivisionRow> {
        (0..self.n_divisions)
            .map(|d| DivisionRow {
                division: d,
                precision: self.precision_per_division[d],
                diversity: self.diversity_per_division[d],
                eligible_users: self.eligible_users_per_division[d],
            })
            .collect()
    }
}

/// Run the full evaluation: `n_divisions` independent splits, averaged.
/// Divisions evaluate in parallel; the report is a deterministic reduction
/// in division order.
pub fn evaluate(
    net: &BipartiteNetwork,
    spec: &SplitSpec,
    theta: f64,
    list_length: usize,
) -> Result<EvaluationReport> {
    spec.validate()?;
    let per_division: Vec<(f64, f64, usize)> = (0..spec.n_divisions)
        .into_par_iter()
        .map(|d| {
            let split = split_train_probe(net, spec, d)?;
            let mut rng = rng_from_seed(mix_seed(spec.seed, &[d as u64, 2]));
            let lists = build_lists(&split.train, theta, list_length, &mut rng);
            let (precision, eligible) =
                precision_from_lists(&split.train, &lists, &split.probe, list_length)?;
            let diversity = diversity_from_lists(&split.train, &lists)?;
            Ok((precision, diversity, eligible))
        })
        .collect::<Result<_>>()?;

    let n = spec.n_divisions as f64;
    Ok(EvaluationReport {
        theta,
        list_length,
        probe_fraction: spec.probe_fraction,
        n_divisions: spec.n_divisions,
        precision: per_division.iter().map(|r| r.0).sum::<f64>() / n,
        precision_per_division: per_division.iter().map(|r| r.0).collect(),
        short_term_diversity: per_division.iter().map(|r| r.1).sum::<f64>() / n,
        diversity_per_division: per_division.iter().map(|r| r.1).collect(),
        eligible_users_per_division: per_division.iter().map(|r| r.2).collect(),
    })
}

/// One point of the accuracy / long-term-diversity trade-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub theta: f64,
    pub precision: f64,
    pub gini_star: f64,
    pub converged: bool,
}

impl TableRow for TradeoffPoint {
    fn csv_header() -> &'static str {
        "theta,precision,gini_star,converged"
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.theta, self.precision, self.gini_star, self.converged
        )
    }
}

/// For each θ: short-term precision on the input network plus the
/// stationary Gini of the rewiring dynamics started from it.
pub fn tradeoff_curve(
    net: &BipartiteNetwork,
    theta_grid: &[f64],
    split: &SplitSpec,
    run_cfg: &RewiringConfig,
) -> Result<Vec<TradeoffPoint>> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidConfig("theta grid is empty".into()));
    }
    run_cfg.validate()?;
    theta_grid
        .par_iter()
        .map(|&theta| {
            let report = evaluate(net, split, theta, run_cfg.list_length)?;
            let cfg = RewiringConfig {
                theta,
                seed: replica_seed(run_cfg.seed, theta, run_cfg.p, 0),
                ..run_cfg.clone()
            };
            let mut copy = net.clone();
            let trace = run_to_stationarity(&mut copy, &cfg)?;
            Ok(TradeoffPoint {
                theta,
                precision: report.precision,
                gini_star: trace.stationary_gini(),
                converged: trace.converged(),
            })
        })
        .collect()
}

/// Given a trade-off curve, the relative precision cost of constraining
/// G* to at most `gini_cap`: (P_opt − P_constrained) / P_opt. Errors if no
/// grid point satisfies the cap.
pub fn precision_cost_at_gini_cap(curve: &[TradeoffPoint], gini_cap: f64) -> Result<f64> {
    let best = curve
        .iter()
        .map(|p| p.precision)
        .fold(f64::NEG_INFINITY, f64::max);
    let constrained = curve
        .iter()
        .filter(|p| p.gini_star <= gini_cap)
        .map(|p| p.precision)
        .fold(f64::NEG_INFINITY, f64::max);
    if !constrained.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "no grid point reaches stationary Gini <= {gini_cap}"
        )));
    }
    Ok((best - constrained) / best)
}

/// The original-data Gini of a network, the natural cap for
/// [`precision_cost_at_gini_cap`].
pub fn original_gini(net: &BipartiteNetwork) -> Result<f64> {
    gini(net.item_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{synthetic_network, SyntheticSpec};

    fn synth(seed: u64) -> BipartiteNetwork {
        synthetic_network(&SyntheticSpec {
            users: 40,
            items: 30,
            links: 400,
            skew: 0.8,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn split_sizes_and_identity() {
        let net = synth(1);
        let spec = SplitSpec {
            probe_fraction: 0.1,
            n_divisions: 3,
            seed: 5,
        };
        let split = split_train_probe(&net, &spec, 0).unwrap();
        assert_eq!(split.probe.len(), 40);
        assert_eq!(split.train.n_links(), 360);

        // determinism: same seed and division index give the same split
        let again = split_train_probe(&net, &spec, 0).unwrap();
        assert_eq!(split.probe, again.probe);
        assert_eq!(split.train.links(), again.train.links());

        // different divisions differ
        let other = split_train_probe(&net, &spec, 1).unwrap();
        assert_ne!(split.probe, other.probe);
    }

    #[test]
    fn split_union_and_disjointness() {
        let net = synth(2);
        let spec = SplitSpec::default();
        for d in 0..3 {
            let split = split_train_probe(&net, &spec, d).unwrap();
            let mut rebuilt: Vec<(u32, u32)> = split
                .train
                .links()
                .iter()
                .map(|l| (l.user, l.item))
                .chain(split.probe.iter().copied())
                .collect();
            rebuilt.sort_unstable();
            let mut original: Vec<(u32, u32)> =
                net.links().iter().map(|l| (l.user, l.item)).collect();
            original.sort_unstable();
            assert_eq!(rebuilt, original);
            for &(u, i) in &split.probe {
                assert!(!split.train.has_link(u, i));
            }
        }
    }

    #[test]
    fn empty_probe_is_an_error() {
        let net = BipartiteNetwork::from_edge_list(&[(0, 0), (1, 1), (1, 0)], 1).unwrap();
        let spec = SplitSpec {
            probe_fraction: 0.01,
            n_divisions: 1,
            seed: 0,
        };
        assert!(split_train_probe(&net, &spec, 0).is_err());
    }

    /// The planted-optimum family: N users share a hub item; user u's k
    /// probe items are linked to every *other* user in train, so for u they
    /// are candidates scoring N−1 while nothing else is a candidate at all.
    /// Exact precision: min(k, L)/L for every user.
    fn planted(n: u32, k: u32) -> (BipartiteNetwork, Vec<(UserId, ItemId)>) {
        let mut train_edges = Vec::new();
        let mut probe = Vec::new();
        // item 0 is the hub; items 1 + u*k + j are user u's planted items
        for u in 0..n {
            train_edges.push((u, 0));
            for j in 0..k {
                let item = 1 + u * k + j;
                probe.push((u, item));
                for v in 0..n {
                    if v != u {
                        train_edges.push((v, item));
                    }
                }
            }
        }
        let n_items = 1 + n * k;
        let train =
            BipartiteNetwork::from_edges_with_dims(n, n_items, &train_edges, 9).unwrap();
        (train, probe)
    }

    #[test]
    fn planted_optimum_precision_is_exact() {
        let (train, probe) = planted(6, 2);
        for (l, expected) in [(20, 2.0 / 20.0), (4, 2.0 / 4.0), (1, 1.0)] {
            let mut rng = rng_from_seed(3);
            let (p, eligible) = precision_at_l(&train, &probe, 0.0, l, &mut rng).unwrap();
            assert_eq!(eligible, 6);
            assert!((p - expected).abs() < 1e-15, "L={l}: {p} vs {expected}");
        }
    }

    #[test]
    fn planted_optimum_diversity_is_exact() {
        // all recommended items have train degree N−1 = 5
        let (train, probe) = planted(6, 2);
        let _ = probe;
        let mut rng = rng_from_seed(4);
        let d = short_term_diversity(&train, 0.0, 2, &mut rng).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn two_probe_hits_in_top_twenty_is_point_one() {
        let (train, probe) = planted(6, 2);
        let mut rng = rng_from_seed(5);
        let (p, _) = precision_at_l(&train, &probe, 0.0, 20, &mut rng).unwrap();
        assert!((p - 0.1).abs() < 1e-15);
    }

    #[test]
    fn probe_links_never_influence_lists() {
        // leakage check: precision inputs are train-only, so replacing the
        // probe with a perturbed one leaves the train-based lists unchanged
        let net = synth(7);
        let spec = SplitSpec::default();
        let split = split_train_probe(&net, &spec, 0).unwrap();
        let lists_a = build_lists(&split.train, 0.5, 10, &mut rng_from_seed(11));
        let mut perturbed = split.probe.clone();
        perturbed.pop();
        perturbed.push((0, net.n_items() - 1));
        let lists_b = build_lists(&split.train, 0.5, 10, &mut rng_from_seed(11));
        assert_eq!(lists_a, lists_b);
    }

    #[test]
    fn report_aggregates_divisions() {
        let net = synth(8);
        let spec = SplitSpec {
            probe_fraction: 0.1,
            n_divisions: 5,
            seed: 3,
        };
        let report = evaluate(&net, &spec, 0.5, 10).unwrap();
        assert_eq!(report.precision_per_division.len(), 5);
        assert!(report.precision >= 0.0 && report.precision <= 1.0);
        for &p in &report.precision_per_division {
            assert!((0.0..=1.0).contains(&p));
        }
        let mean = report.precision_per_division.iter().sum::<f64>() / 5.0;
        assert!((report.precision - mean).abs() < 1e-15);

        // averaging reduces variance: the mean's stderr is below the
        // single-division spread whenever there is any spread
        let var = report
            .precision_per_division
            .iter()
            .map(|p| (p - mean).powi(2))
            .sum::<f64>()
            / 4.0;
        if var > 0.0 {
            assert!((var / 5.0).sqrt() < var.sqrt());
        }

        // evaluation is deterministic
        let again = evaluate(&net, &spec, 0.5, 10).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn tradeoff_degenerate_grid_is_single_point() {
        let net = synth(9);
        let spec = SplitSpec {
            n_divisions: 2,
            ..SplitSpec::default()
        };
        let cfg = RewiringConfig {
            max_sweeps: 10,
            window: 3,
            seed: 21,
            ..RewiringConfig::default()
        };
        let curve = tradeoff_curve(&net, &[0.5], &spec, &cfg).unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve[0].theta, 0.5);

        // matches the same run done by hand
        let report = evaluate(&net, &spec, 0.5, cfg.list_length).unwrap();
        assert_eq!(curve[0].precision, report.precision);
        let mut copy = net.clone();
        let run = run_to_stationarity(
            &mut copy,
            &RewiringConfig {
                theta: 0.5,
                seed: replica_seed(cfg.seed, 0.5, cfg.p, 0),
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(curve[0].gini_star, run.stationary_gini());
    }

    #[test]
    fn precision_cost_helper() {
        let curve = vec![
            TradeoffPoint {
                theta: 0.0,
                precision: 0.10,
                gini_star: 0.9,
                converged: true,
            },
            TradeoffPoint {
                theta: 0.5,
                precision: 0.20,
                gini_star: 0.8,
                converged: true,
            },
            TradeoffPoint {
                theta: 1.0,
                precision: 0.16,
                gini_star: 0.5,
                converged: true,
            },
        ];
        let cost = precision_cost_at_gini_cap(&curve, 0.6).unwrap();
        assert!((cost - 0.2).abs() < 1e-12);
        assert!(precision_cost_at_gini_cap(&curve, 0.1).is_err());
    }
}
