//! Timestamped bipartite user-item network with incremental bookkeeping.
//!
//! The network is the single mutable state of a simulation. It maintains,
//! incrementally under rewiring: per-user link lists with timestamps, the
//! item degree vector, and the item-item common-neighbor counts used by the
//! recommender. Rewiring never changes a user's degree; items may drop to
//! degree zero and remain part of the item universe.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

pub type UserId = u32;
pub type ItemId = u32;
pub type Timestamp = u64;

/// One user-item link and the tick at which it was (re)placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub user: UserId,
    pub item: ItemId,
    pub timestamp: Timestamp,
}

/// Bipartite user-item network.
///
/// Timestamps are unique network-wide, so "the oldest link of a user" is
/// always well defined. The common-neighbor matrix `cooc` stores
/// |Γ_α ∩ Γ_β| for every item pair α ≠ β; the diagonal is unused and kept
/// at zero.
#[derive(Clone)]
pub struct BipartiteNetwork {
    n_users: u32,
    n_items: u32,
    user_links: Vec<Vec<(ItemId, Timestamp)>>,
    item_degree: Vec<u32>,
    cooc: Vec<u32>,
    n_links: usize,
    clock: Timestamp,
    seed: u64,
}

impl std::fmt::Debug for BipartiteNetwork {
    // the co-occurrence matrix is far too large to dump
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BipartiteNetwork")
            .field("n_users", &self.n_users)
            .field("n_items", &self.n_items)
            .field("n_links", &self.n_links)
            .field("clock", &self.clock)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl BipartiteNetwork {
    /// Build a network from an edge list, inferring dimensions from the
    /// maximum ids. Every id in `0..n` must occur at least once; gaps mean
    /// the input was not densified.
    ///
    /// Timestamps are a seeded uniform random permutation of `1..=E`; the
    /// clock starts at `E + 1`.
    pub fn from_edge_list(edges: &[(UserId, ItemId)], seed: u64) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let n_users = edges.iter().map(|e| e.0).max().unwrap() + 1;
        let n_items = edges.iter().map(|e| e.1).max().unwrap() + 1;
        let mut user_seen = vec![false; n_users as usize];
        let mut item_seen = vec![false; n_items as usize];
        for &(u, i) in edges {
            user_seen[u as usize] = true;
            item_seen[i as usize] = true;
        }
        if let Some(missing) = user_seen.iter().position(|s| !s) {
            return Err(Error::NonContiguousIds {
                kind: "user",
                missing: missing as u32,
            });
        }
        if let Some(missing) = item_seen.iter().position(|s| !s) {
            return Err(Error::NonContiguousIds {
                kind: "item",
                missing: missing as u32,
            });
        }
        Self::from_edges_with_dims(n_users, n_items, edges, seed)
    }

    /// Build a network with explicit dimensions; ids outside the edge list
    /// are allowed and end up with degree zero. Timestamps are a seeded
    /// random permutation of `1..=E`.
    pub fn from_edges_with_dims(
        n_users: u32,
        n_items: u32,
        edges: &[(UserId, ItemId)],
        seed: u64,
    ) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let mut stamps: Vec<Timestamp> = (1..=edges.len() as Timestamp).collect();
        stamps.shuffle(&mut rng::rng_from_seed(seed));
        let links: Vec<Link> = edges
            .iter()
            .zip(stamps)
            .map(|(&(user, item), timestamp)| Link {
                user,
                item,
                timestamp,
            })
            .collect();
        Self::from_links(n_users, n_items, &links, edges.len() as Timestamp + 1, seed)
    }

    /// Build a network from fully specified links (explicit timestamps and
    /// clock). This is the snapshot-import path; everything is validated.
    pub fn from_links(
        n_users: u32,
        n_items: u32,
        links: &[Link],
        clock: Timestamp,
        seed: u64,
    ) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let m = n_items as usize;
        let mut user_links: Vec<Vec<(ItemId, Timestamp)>> = vec![Vec::new(); n_users as usize];
        let mut item_degree = vec![0u32; m];
        let mut pairs = HashSet::with_capacity(links.len());
        let mut stamps = HashSet::with_capacity(links.len());
        for l in links {
            if l.user >= n_users {
                return Err(Error::IdOutOfRange {
                    kind: "user",
                    id: l.user,
                    bound: n_users,
                });
            }
            if l.item >= n_items {
                return Err(Error::IdOutOfRange {
                    kind: "item",
                    id: l.item,
                    bound: n_items,
                });
            }
            if !pairs.insert((l.user, l.item)) {
                return Err(Error::DuplicateEdge {
                    user: l.user,
                    item: l.item,
                });
            }
            if !stamps.insert(l.timestamp) {
                return Err(Error::BadSnapshot(format!(
                    "timestamp {} occurs twice",
                    l.timestamp
                )));
            }
            if l.timestamp >= clock {
                return Err(Error::BadSnapshot(format!(
                    "timestamp {} not below clock {clock}",
                    l.timestamp
                )));
            }
            user_links[l.user as usize].push((l.item, l.timestamp));
            item_degree[l.item as usize] += 1;
        }

        let mut cooc = vec![0u32; m * m];
        for items in &user_links {
            for (i, &(a, _)) in items.iter().enumerate() {
                for &(b, _) in &items[i + 1..] {
                    cooc[a as usize * m + b as usize] += 1;
                    cooc[b as usize * m + a as usize] += 1;
                }
            }
        }

        Ok(BipartiteNetwork {
            n_users,
            n_items,
            user_links,
            item_degree,
            cooc,
            n_links: links.len(),
            clock,
            seed,
        })
    }

    pub fn n_users(&self) -> u32 {
        self.n_users
    }

    pub fn n_items(&self) -> u32 {
        self.n_items
    }

    pub fn n_links(&self) -> usize {
        self.n_links
    }

    pub fn clock(&self) -> Timestamp {
        self.clock
    }

    /// Seed used to assign the initial timestamps; carried into snapshots.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Links of one user, in storage order (not sorted by age).
    pub fn user_links(&self, user: UserId) -> &[(ItemId, Timestamp)] {
        &self.user_links[user as usize]
    }

    pub fn user_degree(&self, user: UserId) -> usize {
        self.user_links[user as usize].len()
    }

    pub fn item_degree(&self, item: ItemId) -> u32 {
        self.item_degree[item as usize]
    }

    pub fn item_degrees(&self) -> &[u32] {
        &self.item_degree
    }

    pub fn has_link(&self, user: UserId, item: ItemId) -> bool {
        self.user_links[user as usize].iter().any(|&(i, _)| i == item)
    }

    /// Common-neighbor count |Γ_α ∩ Γ_β|, maintained incrementally.
    pub fn common_neighbors(&self, a: ItemId, b: ItemId) -> u32 {
        self.cooc[a as usize * self.n_items as usize + b as usize]
    }

    /// One item's row of the common-neighbor matrix (diagonal entry is 0).
    pub(crate) fn cooc_row(&self, item: ItemId) -> &[u32] {
        let m = self.n_items as usize;
        let start = item as usize * m;
        &self.cooc[start..start + m]
    }

    /// The unique minimum-timestamp link of `user`.
    pub fn oldest_link(&self, user: UserId) -> Result<Link> {
        self.user_links[user as usize]
            .iter()
            .min_by_key(|&&(_, ts)| ts)
            .map(|&(item, timestamp)| Link {
                user,
                item,
                timestamp,
            })
            .ok_or(Error::UserWithoutLinks { user })
    }

    /// Redirect the link (user, old_item) to (user, new_item), stamping it
    /// with the current clock tick. Degrees and common-neighbor counts are
    /// updated incrementally in O(user degree); the user's degree is
    /// unchanged.
    pub fn rewire_link(&mut self, user: UserId, old_item: ItemId, new_item: ItemId) -> Result<()> {
        if new_item >= self.n_items {
            return Err(Error::IdOutOfRange {
                kind: "item",
                id: new_item,
                bound: self.n_items,
            });
        }
        let m = self.n_items as usize;
        let links = &mut self.user_links[user as usize];
        let old_pos = links
            .iter()
            .position(|&(i, _)| i == old_item)
            .ok_or(Error::MissingLink {
                user,
                item: old_item,
            })?;
        if links.iter().any(|&(i, _)| i == new_item) {
            return Err(Error::LinkExists {
                user,
                item: new_item,
            });
        }
        links.swap_remove(old_pos);
        let (o, n) = (old_item as usize, new_item as usize);
        for &(b, _) in links.iter() {
            let b = b as usize;
            self.cooc[o * m + b] -= 1;
            self.cooc[b * m + o] -= 1;
            self.cooc[n * m + b] += 1;
            self.cooc[b * m + n] += 1;
        }
        links.push((new_item, self.clock));
        self.item_degree[o] -= 1;
        self.item_degree[n] += 1;
        self.clock += 1;
        Ok(())
    }

    /// All links, sorted by timestamp. This is the canonical order used by
    /// snapshot export.
    pub fn links(&self) -> Vec<Link> {
        let mut out: Vec<Link> = self
            .user_links
            .iter()
            .enumerate()
            .flat_map(|(u, items)| {
                items.iter().map(move |&(item, timestamp)| Link {
                    user: u as UserId,
                    item,
                    timestamp,
                })
            })
            .collect();
        out.sort_by_key(|l| l.timestamp);
        out
    }

    /// Cheap structural consistency check: degree sums match the link
    /// count. Used by tests and snapshot import.
    pub fn check_degree_sums(&self) -> Result<()> {
        let by_items: usize = self.item_degree.iter().map(|&k| k as usize).sum();
        let by_users: usize = self.user_links.iter().map(|l| l.len()).sum();
        if by_items != self.n_links || by_users != self.n_links {
            return Err(Error::BadSnapshot(format!(
                "degree sums disagree: items {by_items}, users {by_users}, links {}",
                self.n_links
            )));
        }
        Ok(())
    }
}
