//! The co-evolution dynamics: oldest-link rewiring with probability-p
//! recommendation following, sweep scheduling, and stationarity detection.
//!
//! One sweep rewires every user exactly once, in a fresh random order, with
//! updates applied immediately (asynchronous dynamics): each event sees the
//! network as left by the previous one. A run is strictly sequential; use
//! independent network copies and seeds for parallel experiments.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::attachment::AttachmentMode;
use crate::error::{Error, Result};
use crate::metrics::InequalitySnapshot;
use crate::network::{BipartiteNetwork, ItemId, UserId};
use crate::recommender::{rank_reciprocal_index, ScoreBuffers, DEFAULT_LIST_LENGTH};
use crate::rng::{rng_from_seed, Rng};

pub const DEFAULT_MAX_SWEEPS: usize = 2000;
pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_EPS: f64 = 0.002;

/// The knobs of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewiringConfig {
    /// Probability of following recommendation at each rewiring event.
    pub p: f64,
    /// Similarity exponent in [0, 1].
    pub theta: f64,
    /// Recommendation list length L.
    pub list_length: usize,
    /// Channel used with probability 1 − p (and as fallback on empty lists).
    pub attachment: AttachmentMode,
    pub max_sweeps: usize,
    /// Stationarity window W, in sweeps.
    pub window: usize,
    /// Stationarity threshold ε, in Gini units.
    pub eps: f64,
    pub seed: u64,
}

impl Default for RewiringConfig {
    fn default() -> Self {
        RewiringConfig {
            p: 1.0,
            theta: 0.0,
            list_length: DEFAULT_LIST_LENGTH,
            attachment: AttachmentMode::Preferential,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            window: DEFAULT_WINDOW,
            eps: DEFAULT_EPS,
            seed: 42,
        }
    }
}

impl RewiringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidConfig(format!("p must be in [0,1], got {}", self.p)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!(
                "theta must be in [0,1], got {}",
                self.theta
            )));
        }
        if self.list_length == 0 {
            return Err(Error::InvalidConfig("list_length must be >= 1".into()));
        }
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be >= 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// How one rewiring event chose its new item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewireOutcome {
    /// Rank-reciprocal pick from a non-empty recommendation list.
    Recommended,
    /// The 1 − p branch: the configured attachment channel.
    Attached,
    /// The p branch was taken but the list was empty; attachment stood in.
    RecommendationFallback,
}

/// Per-sweep trace row: inequality snapshot plus the number of empty-list
/// fallbacks during that sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(flatten)]
    pub snapshot: InequalitySnapshot,
    pub fallbacks: u64,
}

impl crate::io::TableRow for SweepRecord {
    fn csv_header() -> &'static str {
        "sweep,gini,herfindahl,top1_share,fallbacks"
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.snapshot.sweep,
            self.snapshot.gini,
            self.snapshot.herfindahl,
            self.snapshot.top1_share,
            self.fallbacks
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Stationary,
    MaxSweepsReached,
}

/// Full per-sweep history of a run. Row 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub records: Vec<SweepRecord>,
    pub terminal: Terminal,
    /// Stationarity window the run was configured with.
    pub window: usize,
}

impl SweepTrace {
    pub fn converged(&self) -> bool {
        self.terminal == Terminal::Stationary
    }

    /// The stationary Gini estimate G*: mean Gini over the final window.
    pub fn stationary_gini(&self) -> f64 {
        let n = self.records.len().min(self.window).max(1);
        let tail = &self.records[self.records.len() - n..];
        tail.iter().map(|r| r.snapshot.gini).sum::<f64>() / n as f64
    }

    pub fn sweeps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

/// Reusable buffers for a run; avoids per-event allocation.
pub(crate) struct EngineScratch {
    buffers: ScoreBuffers,
    excluded: Vec<bool>,
    order: Vec<UserId>,
}

impl EngineScratch {
    pub(crate) fn new(cfg: &RewiringConfig) -> Self {
        EngineScratch {
            buffers: ScoreBuffers::new(cfg.theta),
            excluded: Vec::new(),
            order: Vec::new(),
        }
    }
}

fn rewire_user_buffered(
    net: &mut BipartiteNetwork,
    user: UserId,
    cfg: &RewiringConfig,
    rng: &mut Rng,
    scratch: &mut EngineScratch,
) -> Result<RewireOutcome> {
    let oldest = net.oldest_link(user)?;

    // Exclusion set: the user's current neighborhood. It contains the link
    // being rewired, so the replacement always differs from the removed item
    // and never duplicates an existing link.
    scratch.excluded.resize(net.n_items() as usize, false);
    for &(i, _) in net.user_links(user) {
        scratch.excluded[i as usize] = true;
    }

    let follow = rng.gen_bool(cfg.p);
    let picked: Result<(ItemId, RewireOutcome)> = if follow {
        let list = scratch
            .buffers
            .top_list_into(net, user, cfg.list_length, rng);
        if list.is_empty() {
            cfg.attachment
                .pick(net, &scratch.excluded, rng)
                .map(|item| (item, RewireOutcome::RecommendationFallback))
        } else {
            let rank = rank_reciprocal_index(list.len(), rng);
            Ok((list[rank].item, RewireOutcome::Recommended))
        }
    } else {
        cfg.attachment
            .pick(net, &scratch.excluded, rng)
            .map(|item| (item, RewireOutcome::Attached))
    };

    for &(i, _) in net.user_links(user) {
        scratch.excluded[i as usize] = false;
    }
    let (new_item, outcome) = picked?;
    net.rewire_link(user, oldest.item, new_item)?;
    Ok(outcome)
}

fn sweep_buffered(
    net: &mut BipartiteNetwork,
    cfg: &RewiringConfig,
    rng: &mut Rng,
    scratch: &mut EngineScratch,
) -> Result<u64> {
    scratch.order.clear();
    scratch.order.extend(0..net.n_users());
    scratch.order.shuffle(rng);
    let mut fallbacks = 0;
    for idx in 0..scratch.order.len() {
        let user = scratch.order[idx];
        if rewire_user_buffered(net, user, cfg, rng, scratch)?
            == RewireOutcome::RecommendationFallback
        {
            fallbacks += 1;
        }
    }
    Ok(fallbacks)
}

/// Rewire one user's oldest link following the configured dynamics.
pub fn rewire_user(
    net: &mut BipartiteNetwork,
    user: UserId,
    cfg: &RewiringConfig,
    rng: &mut Rng,
) -> Result<RewireOutcome> {
    cfg.validate()?;
    rewire_user_buffered(net, user, cfg, rng, &mut EngineScratch::new(cfg))
}

/// One full sweep: every user rewired exactly once, in a fresh random
/// order, with updates applied immediately. Returns the number of
/// empty-list fallbacks.
pub fn sweep(net: &mut BipartiteNetwork, cfg: &RewiringConfig, rng: &mut Rng) -> Result<u64> {
    cfg.validate()?;
    sweep_buffered(net, cfg, rng, &mut EngineScratch::new(cfg))
}

/// Sweep until the Gini plateau criterion triggers or `max_sweeps` is
/// reached: stop once the mean Gini over the last W sweeps differs from the
/// mean over the W sweeps before by less than ε. Non-convergence is a
/// reported outcome, not an error.
pub fn run_to_stationarity(
    net: &mut BipartiteNetwork,
    cfg: &RewiringConfig,
) -> Result<SweepTrace> {
    run_to_stationarity_with(net, cfg, |_| {})
}

/// Like [`run_to_stationarity`], invoking `hook` on every recorded row
/// (including the initial state) as it is produced.
pub fn run_to_stationarity_with(
    net: &mut BipartiteNetwork,
    cfg: &RewiringConfig,
    mut hook: impl FnMut(&SweepRecord),
) -> Result<SweepTrace> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut scratch = EngineScratch::new(cfg);
    let mut records = Vec::with_capacity(cfg.max_sweeps + 1);

    let initial = SweepRecord {
        snapshot: InequalitySnapshot::measure(net, 0)?,
        fallbacks: 0,
    };
    hook(&initial);
    records.push(initial);

    let mut terminal = Terminal::MaxSweepsReached;
    for s in 1..=cfg.max_sweeps {
        let fallbacks = sweep_buffered(net, cfg, &mut rng, &mut scratch)?;
        let record = SweepRecord {
            snapshot: InequalitySnapshot::measure(net, s)?,
            fallbacks,
        };
        hook(&record);
        records.push(record);

        let w = cfg.window;
        if s >= 2 * w {
            let gini_at = |i: usize| records[i].snapshot.gini;
            let recent: f64 = (s - w + 1..=s).map(gini_at).sum::<f64>() / w as f64;
            let previous: f64 = (s - 2 * w + 1..=s - w).map(gini_at).sum::<f64>() / w as f64;
            if (recent - previous).abs() < cfg.eps {
                terminal = Terminal::Stationary;
                break;
            }
        }
    }

    Ok(SweepTrace {
        records,
        terminal,
        window: cfg.window,
    })
}
