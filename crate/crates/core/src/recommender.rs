//! Item-based collaborative filtering.
//!
//! Item similarity is `s_αβ = |Γ_α ∩ Γ_β| / (k_α k_β)^θ` with θ in [0, 1].
//! The exponent interpolates between three classical measures: θ = 0 is the
//! common-neighbor count, θ = 1/2 the cosine (Salton) similarity, θ = 1 the
//! Leicht-Holme-Newman similarity. A user's score for a candidate item is
//! the sum of its similarities to the items the user currently holds; items
//! already held are excluded. The top-L positive-score candidates form the
//! recommendation list, and list selection is rank-reciprocal.
//!
//! Scores are always computed from the instantaneous network state; there
//! is no precomputed global similarity model to go stale while the network
//! rewires.

use std::cmp::Ordering;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::network::{BipartiteNetwork, ItemId, UserId};
use crate::rng::Rng;

/// List length used throughout unless overridden.
pub const DEFAULT_LIST_LENGTH: usize = 20;

/// Ranked top-L items with their recommendation scores for one user.
///
/// Scores are non-increasing down the list, no entry is linked to the
/// target user, and only strictly positive scores are kept, so the list
/// may be shorter than L (or empty).
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    entries: Vec<(ItemId, f64)>,
}

impl RecommendationList {
    pub fn entries(&self) -> &[(ItemId, f64)] {
        &self.entries
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Similarity of two distinct items on the current network.
///
/// Returns 0 whenever the common-neighbor count is 0, regardless of
/// degrees; a positive count implies both degrees are at least 1, so the
/// denominator is always well defined.
pub fn item_similarity(net: &BipartiteNetwork, a: ItemId, b: ItemId, theta: f64) -> Result<f64> {
    if a == b {
        return Err(Error::SelfSimilarity { item: a });
    }
    let c = net.common_neighbors(a, b);
    if c == 0 {
        return Ok(0.0);
    }
    let ka = net.item_degree(a) as f64;
    let kb = net.item_degree(b) as f64;
    debug_assert!(ka >= 1.0 && kb >= 1.0);
    Ok(c as f64 / (ka * kb).powf(theta))
}

#[derive(Clone, Copy)]
pub(crate) struct ListEntry {
    pub(crate) item: ItemId,
    pub(crate) score: f64,
    tiebreak: u64,
}

fn by_rank(a: &ListEntry, b: &ListEntry) -> Ordering {
    // scores are finite and nonnegative, so partial_cmp cannot fail
    b.score
        .partial_cmp(&a.score)
        .unwrap()
        .then(a.tiebreak.cmp(&b.tiebreak))
        .then(a.item.cmp(&b.item))
}

/// Reusable state for repeated score/list computations on one network.
///
/// `inv_pow[k]` caches `k^{-θ}` (an item's degree never exceeds the number
/// of users). `inv_pow[0]` is a sentinel 1.0: a zero-degree item can only
/// appear with a zero accumulated score, which stays zero.
pub(crate) struct ScoreBuffers {
    theta: f64,
    inv_pow: Vec<f64>,
    acc: Vec<f64>,
    entries: Vec<ListEntry>,
}

impl ScoreBuffers {
    pub(crate) fn new(theta: f64) -> Self {
        ScoreBuffers {
            theta,
            inv_pow: Vec::new(),
            acc: Vec::new(),
            entries: Vec::new(),
        }
    }

    fn ensure(&mut self, net: &BipartiteNetwork) {
        let wanted = net.n_users() as usize + 1;
        if self.inv_pow.len() < wanted {
            self.inv_pow = (0..wanted)
                .map(|k| {
                    if k == 0 {
                        1.0
                    } else {
                        (k as f64).powf(-self.theta)
                    }
                })
                .collect();
        }
        self.acc.resize(net.n_items() as usize, 0.0);
    }

    /// Accumulate Σ_β C_αβ k_β^{-θ} into `acc` for every item α.
    fn accumulate(&mut self, net: &BipartiteNetwork, user: UserId) {
        self.ensure(net);
        self.acc.fill(0.0);
        for &(beta, _) in net.user_links(user) {
            let w = self.inv_pow[net.item_degree(beta) as usize];
            let row = net.cooc_row(beta);
            for (slot, &c) in self.acc.iter_mut().zip(row) {
                *slot += c as f64 * w;
            }
        }
    }

    /// Fill `entries` with the ranked top-`len` list for `user`.
    ///
    /// Ties in score are broken by a random key drawn per candidate, which
    /// realizes a seeded random shuffle among equal scores.
    pub(crate) fn top_list_into(
        &mut self,
        net: &BipartiteNetwork,
        user: UserId,
        len: usize,
        rng: &mut Rng,
    ) -> &[ListEntry] {
        self.accumulate(net, user);
        self.entries.clear();
        let mut linked = vec![false; net.n_items() as usize];
        for &(i, _) in net.user_links(user) {
            linked[i as usize] = true;
        }
        for (i, &a) in self.acc.iter().enumerate() {
            if linked[i] || a <= 0.0 {
                debug_assert!(net.item_degree(i as u32) > 0 || a == 0.0);
                continue;
            }
            let score = a * self.inv_pow[net.item_degree(i as u32) as usize];
            self.entries.push(ListEntry {
                item: i as u32,
                score,
                tiebreak: rng.gen(),
            });
        }
        if self.entries.len() > len {
            self.entries.select_nth_unstable_by(len - 1, by_rank);
            self.entries.truncate(len);
        }
        self.entries.sort_unstable_by(by_rank);
        &self.entries
    }

    /// Scores of every candidate item (not linked to `user`), including
    /// zeros, in ascending item order.
    fn all_scores(&mut self, net: &BipartiteNetwork, user: UserId) -> Vec<(ItemId, f64)> {
        self.accumulate(net, user);
        let mut linked = vec![false; net.n_items() as usize];
        for &(i, _) in net.user_links(user) {
            linked[i as usize] = true;
        }
        self.acc
            .iter()
            .enumerate()
            .filter(|&(i, _)| !linked[i])
            .map(|(i, &a)| (i as u32, a * self.inv_pow[net.item_degree(i as u32) as usize]))
            .collect()
    }
}

/// ICF scores of every item not currently linked to `user`, in ascending
/// item order. Items the user holds are excluded.
pub fn icf_scores(net: &BipartiteNetwork, user: UserId, theta: f64) -> Result<Vec<(ItemId, f64)>> {
    if user >= net.n_users() {
        return Err(Error::IdOutOfRange {
            kind: "user",
            id: user,
            bound: net.n_users(),
        });
    }
    Ok(ScoreBuffers::new(theta).all_scores(net, user))
}

/// The top-L recommendation list for `user`.
pub fn top_list(
    net: &BipartiteNetwork,
    user: UserId,
    theta: f64,
    len: usize,
    rng: &mut Rng,
) -> Result<RecommendationList> {
    if user >= net.n_users() {
        return Err(Error::IdOutOfRange {
            kind: "user",
            id: user,
            bound: net.n_users(),
        });
    }
    if len == 0 {
        return Err(Error::InvalidConfig("list length must be >= 1".into()));
    }
    let mut buffers = ScoreBuffers::new(theta);
    let entries = buffers
        .top_list_into(net, user, len, rng)
        .iter()
        .map(|e| (e.item, e.score))
        .collect();
    Ok(RecommendationList { entries })
}

/// Index (0-based) of the rank-reciprocal draw over a list of `len` items:
/// rank r (1-based) is chosen with probability (1/r) / Σ_q 1/q.
pub(crate) fn rank_reciprocal_index(len: usize, rng: &mut Rng) -> usize {
    debug_assert!(len >= 1);
    let harmonic: f64 = (1..=len).map(|r| 1.0 / r as f64).sum();
    let mut x = rng.gen::<f64>() * harmonic;
    for r in 1..=len {
        x -= 1.0 / r as f64;
        if x < 0.0 {
            return r - 1;
        }
    }
    len - 1
}

/// Pick an item from the list with probability inversely proportional to
/// its rank.
pub fn rank_reciprocal_pick(list: &RecommendationList, rng: &mut Rng) -> Result<ItemId> {
    if list.is_empty() {
        return Err(Error::EmptyList);
    }
    let idx = rank_reciprocal_index(list.len(), rng);
    Ok(list.entries[idx].0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use std::collections::HashSet;

    /// Γ_a = {0,1,2}, Γ_b = {0,1}, plus a lone item c with Γ_c = {3}.
    fn similarity_fixture() -> BipartiteNetwork {
        BipartiteNetwork::from_edge_list(
            &[(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (3, 2)],
            5,
        )
        .unwrap()
    }

    fn item_users(net: &BipartiteNetwork, item: ItemId) -> HashSet<UserId> {
        (0..net.n_users())
            .filter(|&u| net.has_link(u, item))
            .collect()
    }

    // Direct implementations of the three classical similarity measures,
    // computed from user sets rather than the maintained counts.
    fn direct_cn(net: &BipartiteNetwork, a: ItemId, b: ItemId) -> f64 {
        item_users(net, a).intersection(&item_users(net, b)).count() as f64
    }

    fn direct_cosine(net: &BipartiteNetwork, a: ItemId, b: ItemId) -> f64 {
        let c = direct_cn(net, a, b);
        if c == 0.0 {
            return 0.0;
        }
        c / ((net.item_degree(a) as f64) * (net.item_degree(b) as f64)).sqrt()
    }

    fn direct_lhn(net: &BipartiteNetwork, a: ItemId, b: ItemId) -> f64 {
        let c = direct_cn(net, a, b);
        if c == 0.0 {
            return 0.0;
        }
        c / ((net.item_degree(a) as f64) * (net.item_degree(b) as f64))
    }

    #[test]
    fn similarity_hand_examples() {
        let net = similarity_fixture();
        assert_eq!(item_similarity(&net, 0, 1, 0.0).unwrap(), 2.0);
        let s = item_similarity(&net, 0, 1, 0.5).unwrap();
        assert!((s - 2.0 / 6.0f64.sqrt()).abs() < 1e-15, "got {s}");
        for theta in [0.0, 0.3, 1.0] {
            assert_eq!(item_similarity(&net, 0, 2, theta).unwrap(), 0.0);
        }
    }

    #[test]
    fn self_similarity_is_an_error() {
        let net = similarity_fixture();
        assert!(matches!(
            item_similarity(&net, 1, 1, 0.5),
            Err(Error::SelfSimilarity { item: 1 })
        ));
    }

    fn random_net(seed: u64, n_users: u32, n_items: u32) -> BipartiteNetwork {
        let mut rng = rng_from_seed(seed);
        let mut edges = Vec::new();
        for u in 0..n_users {
            for i in 0..n_items {
                if rng.gen_bool(0.35) {
                    edges.push((u, i));
                }
            }
            if !edges.iter().any(|e| e.0 == u) {
                edges.push((u, rng.gen_range(0..n_items)));
            }
        }
        BipartiteNetwork::from_edges_with_dims(n_users, n_items, &edges, seed).unwrap()
    }

    #[test]
    fn endpoints_match_direct_implementations_exactly() {
        for seed in 0..10 {
            let net = random_net(seed, 8, 9);
            for a in 0..net.n_items() {
                for b in 0..net.n_items() {
                    if a == b {
                        continue;
                    }
                    assert_eq!(item_similarity(&net, a, b, 0.0).unwrap(), direct_cn(&net, a, b));
                    assert_eq!(
                        item_similarity(&net, a, b, 0.5).unwrap(),
                        direct_cosine(&net, a, b)
                    );
                    assert_eq!(item_similarity(&net, a, b, 1.0).unwrap(), direct_lhn(&net, a, b));
                }
            }
        }
    }

    #[test]
    fn similarity_is_symmetric() {
        let net = random_net(3, 10, 12);
        for a in 0..net.n_items() {
            for b in (a + 1)..net.n_items() {
                for theta in [0.0, 0.25, 0.5, 1.0] {
                    assert_eq!(
                        item_similarity(&net, a, b, theta).unwrap(),
                        item_similarity(&net, b, a, theta).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn similarity_weakly_decreases_in_theta() {
        let net = random_net(11, 10, 12);
        for a in 0..net.n_items() {
            for b in (a + 1)..net.n_items() {
                let mut last = f64::INFINITY;
                for theta in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
                    let s = item_similarity(&net, a, b, theta).unwrap();
                    assert!(s <= last + 1e-12);
                    last = s;
                }
            }
        }
    }

    #[test]
    fn icf_single_item_user_scores_are_pairwise_similarities() {
        // user 4 holds only item 1
        let net = BipartiteNetwork::from_edge_list(
            &[(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (3, 2), (4, 1)],
            5,
        )
        .unwrap();
        let theta = 0.5;
        let scores = icf_scores(&net, 4, theta).unwrap();
        for (item, score) in scores {
            assert_ne!(item, 1);
            let direct = item_similarity(&net, item, 1, theta).unwrap();
            assert!((score - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn icf_matches_brute_force_double_loop_at_theta_zero() {
        // 4 users x 4 items toy: f_α = Σ_β C_αβ a_uβ exactly (integer sums)
        let net = random_net(21, 4, 4);
        for u in 0..net.n_users() {
            let scores = icf_scores(&net, u, 0.0).unwrap();
            for (alpha, score) in scores {
                let mut expected = 0.0;
                for &(beta, _) in net.user_links(u) {
                    let mut c = 0;
                    for v in 0..net.n_users() {
                        if net.has_link(v, alpha) && net.has_link(v, beta) {
                            c += 1;
                        }
                    }
                    expected += c as f64;
                }
                assert_eq!(score, expected);
            }
        }
    }

    #[test]
    fn icf_scores_agree_with_similarity_sum_route() {
        // the factored accumulation vs the definitional sum of similarities
        let net = random_net(33, 12, 14);
        for theta in [0.0, 0.3, 0.5, 0.77, 1.0] {
            for u in 0..net.n_users() {
                for (alpha, score) in icf_scores(&net, u, theta).unwrap() {
                    let direct: f64 = net
                        .user_links(u)
                        .iter()
                        .map(|&(beta, _)| item_similarity(&net, alpha, beta, theta).unwrap())
                        .sum();
                    assert!(
                        (score - direct).abs() <= 1e-12 * direct.max(1.0),
                        "theta={theta} u={u} alpha={alpha}: {score} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn fully_connected_user_has_no_candidates() {
        let net = BipartiteNetwork::from_edge_list(&[(0, 0), (0, 1), (1, 0), (1, 1)], 2).unwrap();
        assert!(icf_scores(&net, 0, 0.0).unwrap().is_empty());
        assert!(top_list(&net, 0, 0.0, 5, &mut rng_from_seed(1)).unwrap().is_empty());
    }

    /// User 0 holds hub h=0; candidate scores at θ=0 are a=3, b=1, c=2.
    fn ranked_fixture() -> BipartiteNetwork {
        // h=0 held by users 0..4; a=1 by users 1,2,3; b=2 by 1; c=3 by 1,2
        BipartiteNetwork::from_edge_list(
            &[
                (0, 0),
                (1, 0),
                (2, 0),
                (3, 0),
                (1, 1),
                (2, 1),
                (3, 1),
                (1, 2),
                (1, 3),
                (2, 3),
            ],
            9,
        )
        .unwrap()
    }

    #[test]
    fn top_list_sorts_and_truncates() {
        let net = ranked_fixture();
        let list = top_list(&net, 0, 0.0, 2, &mut rng_from_seed(5)).unwrap();
        let items: Vec<u32> = list.items().collect();
        assert_eq!(items, vec![1, 3]);
        assert_eq!(list.entries()[0].1, 3.0);
        assert_eq!(list.entries()[1].1, 2.0);
    }

    #[test]
    fn top_list_drops_zero_scores() {
        // user 3 holds only item 2 (c); no other item co-occurs with it
        let net = BipartiteNetwork::from_edge_list(&[(0, 0), (1, 1), (2, 2), (3, 2)], 4).unwrap();
        let list = top_list(&net, 0, 0.0, 10, &mut rng_from_seed(5)).unwrap();
        assert!(list.is_empty());
    }

    #[test]
    fn top_list_never_contains_linked_items() {
        for seed in 0..20 {
            let net = random_net(seed + 100, 9, 11);
            let mut rng = rng_from_seed(seed);
            for u in 0..net.n_users() {
                let list = top_list(&net, u, 0.4, 6, &mut rng).unwrap();
                let mut seen = HashSet::new();
                let mut last = f64::INFINITY;
                for &(item, score) in list.entries() {
                    assert!(!net.has_link(u, item));
                    assert!(score > 0.0);
                    assert!(score <= last);
                    assert!(seen.insert(item));
                    last = score;
                }
            }
        }
    }

    #[test]
    fn tied_scores_are_shuffled_across_seeds() {
        // two candidates with identical scores; both orders must occur
        let net = BipartiteNetwork::from_edge_list(
            &[(0, 0), (1, 0), (1, 1), (1, 2)],
            3,
        )
        .unwrap();
        let mut orders = HashSet::new();
        for seed in 0..64 {
            let list = top_list(&net, 0, 0.0, 2, &mut rng_from_seed(seed)).unwrap();
            orders.insert(list.items().collect::<Vec<_>>());
        }
        assert_eq!(orders.len(), 2, "both tie orders should appear: {orders:?}");
    }

    #[test]
    fn rank_reciprocal_singleton_and_empty() {
        let list = RecommendationList {
            entries: vec![(7, 1.0)],
        };
        let mut rng = rng_from_seed(0);
        for _ in 0..50 {
            assert_eq!(rank_reciprocal_pick(&list, &mut rng).unwrap(), 7);
        }
        let empty = RecommendationList { entries: vec![] };
        assert!(matches!(
            rank_reciprocal_pick(&empty, &mut rng),
            Err(Error::EmptyList)
        ));
    }

    #[test]
    fn rank_reciprocal_frequencies_match_harmonic_weights() {
        // |list| = 3: exact probabilities [6/11, 3/11, 2/11]
        let mut rng = rng_from_seed(2024);
        let n = 1_000_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[rank_reciprocal_index(3, &mut rng)] += 1;
        }
        let expected = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];
        for (r, &p) in expected.iter().enumerate() {
            let freq = counts[r] as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "rank {r}: freq {freq} vs p {p} (3σ = {})",
                3.0 * sigma
            );
        }
    }
}
