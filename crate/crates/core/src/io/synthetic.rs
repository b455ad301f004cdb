//! Synthetic bipartite networks with a configurable item-popularity skew,
//! so the full experiment pipeline runs without any downloaded dataset.
//!
//! Item popularity follows a zipf-like law: item j is drawn with weight
//! (j + 1)^-skew. Links are distributed as evenly as possible across users
//! (every user gets at least one), and each user's items are sampled
//! without replacement, weighted by popularity.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BipartiteNetwork;
use crate::rng::{mix_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub users: u32,
    pub items: u32,
    pub links: usize,
    /// Zipf exponent of the item-weight law; 0 gives uniform items.
    pub skew: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.items == 0 {
            return Err(Error::InvalidConfig("users and items must be >= 1".into()));
        }
        if self.links < self.users as usize {
            return Err(Error::InvalidConfig(format!(
                "need at least one link per user: links {} < users {}",
                self.links, self.users
            )));
        }
        if self.links > self.users as usize * self.items as usize {
            return Err(Error::InvalidConfig(format!(
                "links {} exceed the {} possible (user, item) pairs",
                self.links,
                self.users as usize * self.items as usize
            )));
        }
        if self.skew < 0.0 {
            return Err(Error::InvalidConfig("skew must be >= 0".into()));
        }
        Ok(())
    }
}

/// Generate a seeded random bipartite network per the spec.
pub fn synthetic_network(spec: &SyntheticSpec) -> Result<BipartiteNetwork> {
    spec.validate()?;
    let n = spec.users as usize;
    let m = spec.items as usize;

    // near-equal user degrees summing to exactly `links`
    let base = spec.links / n;
    let remainder = spec.links % n;
    let degree = |u: usize| base + usize::from(u < remainder);

    let weights: Vec<f64> = (0..m).map(|j| ((j + 1) as f64).powf(-spec.skew)).collect();

    let mut rng = rng_from_seed(mix_seed(spec.seed, &[0x53594e54]));
    let mut edges = Vec::with_capacity(spec.links);
    let mut keys: Vec<(f64, u32)> = Vec::with_capacity(m);
    for u in 0..n {
        let d = degree(u);
        // Efraimidis-Spirakis weighted sampling without replacement:
        // the d largest ln(U)/w keys are the sample
        keys.clear();
        keys.extend((0..m).map(|j| {
            let uniform: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            (uniform.ln() / weights[j], j as u32)
        }));
        keys.select_nth_unstable_by(d - 1, |a, b| b.0.partial_cmp(&a.0).unwrap());
        for &(_, item) in keys.iter().take(d) {
            edges.push((u as u32, item));
        }
    }

    BipartiteNetwork::from_edges_with_dims(spec.users, spec.items, &edges, spec.seed)
}
