//! Non-recommendation choice channels: preferential and random attachment.
//!
//! Preferential attachment weights items by degree + 1, so items that lost
//! all their links keep a positive probability of being chosen again.
//! Both channels draw from the items outside an exclusion set (the user's
//! current neighborhood plus the link being rewired).

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{BipartiteNetwork, ItemId};
use crate::rng::Rng;

/// The channel used when a user does not follow recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AttachmentMode {
    #[default]
    Preferential,
    Random,
}

impl AttachmentMode {
    pub fn pick(
        self,
        net: &BipartiteNetwork,
        excluded: &[bool],
        rng: &mut Rng,
    ) -> Result<ItemId> {
        match self {
            AttachmentMode::Preferential => preferential_pick(net, excluded, rng),
            AttachmentMode::Random => random_pick(net, excluded, rng),
        }
    }
}

impl std::fmt::Display for AttachmentMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttachmentMode::Preferential => write!(f, "pa"),
            AttachmentMode::Random => write!(f, "ra"),
        }
    }
}

impl std::str::FromStr for AttachmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pa" | "preferential" => Ok(AttachmentMode::Preferential),
            "ra" | "random" => Ok(AttachmentMode::Random),
            other => Err(Error::InvalidConfig(format!(
                "unknown attachment mode '{other}' (expected pa or ra)"
            ))),
        }
    }
}

/// Choose a non-excluded item with probability proportional to its degree
/// plus one.
pub fn preferential_pick(
    net: &BipartiteNetwork,
    excluded: &[bool],
    rng: &mut Rng,
) -> Result<ItemId> {
    debug_assert_eq!(excluded.len(), net.n_items() as usize);
    let degrees = net.item_degrees();
    let mut total = 0u64;
    for (i, &k) in degrees.iter().enumerate() {
        if !excluded[i] {
            total += k as u64 + 1;
        }
    }
    if total == 0 {
        return Err(Error::AllItemsExcluded);
    }
    let mut target = rng.gen_range(0..total);
    for (i, &k) in degrees.iter().enumerate() {
        if excluded[i] {
            continue;
        }
        let w = k as u64 + 1;
        if target < w {
            return Ok(i as ItemId);
        }
        target -= w;
    }
    unreachable!("cumulative weight walk must terminate");
}

/// Choose a non-excluded item uniformly at random.
pub fn random_pick(net: &BipartiteNetwork, excluded: &[bool], rng: &mut Rng) -> Result<ItemId> {
    debug_assert_eq!(excluded.len(), net.n_items() as usize);
    let free = excluded.iter().filter(|&&e| !e).count();
    if free == 0 {
        return Err(Error::AllItemsExcluded);
    }
    let mut target = rng.gen_range(0..free);
    for (i, &e) in excluded.iter().enumerate() {
        if e {
            continue;
        }
        if target == 0 {
            return Ok(i as ItemId);
        }
        target -= 1;
    }
    unreachable!("free-slot walk must terminate");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn degree_fixture() -> BipartiteNetwork {
        BipartiteNetwork::from_edges_with_dims(4, 3, &[(0, 1), (0, 2), (1, 2), (2, 2)], 1)
            .unwrap()
    }

    #[test]
    fn preferential_frequencies_match_k_plus_one() {
        // degrees [0,1,3] -> probabilities [1/7, 2/7, 4/7]
        let net = BipartiteNetwork::from_edges_with_dims(
            4,
            3,
            &[(0, 1), (0, 2), (1, 2), (2, 2)],
            1,
        )
        .unwrap();
        assert_eq!(net.item_degrees(), &[0, 1, 3]);
        let excluded = vec![false; 3];
        let mut rng = rng_from_seed(7);
        let n = 2_000_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[preferential_pick(&net, &excluded, &mut rng).unwrap() as usize] += 1;
        }
        for (i, &p) in [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0].iter().enumerate() {
            let freq = counts[i] as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * sigma, "item {i}: {freq} vs {p}");
        }
        // zero-degree item keeps a positive probability
        assert!(counts[0] > 0);
    }

    #[test]
    fn equal_degrees_give_equal_probabilities() {
        // degrees [5, 5]: each 1/2
        let mut edges = Vec::new();
        for u in 0..5u32 {
            edges.push((u, 0));
            edges.push((u, 1));
        }
        let net = BipartiteNetwork::from_edge_list(&edges, 2).unwrap();
        let excluded = vec![false; 2];
        let mut rng = rng_from_seed(11);
        let n = 200_000usize;
        let mut first = 0usize;
        for _ in 0..n {
            if preferential_pick(&net, &excluded, &mut rng).unwrap() == 0 {
                first += 1;
            }
        }
        let freq = first as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() <= 3.0 * sigma);
    }

    #[test]
    fn random_pick_uniform_over_non_excluded() {
        // M = 4, excluded = {2}: each remaining item 1/3
        let net =
            BipartiteNetwork::from_edges_with_dims(2, 4, &[(0, 0), (1, 1)], 3).unwrap();
        let mut excluded = vec![false; 4];
        excluded[2] = true;
        let mut rng = rng_from_seed(13);
        let n = 900_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[random_pick(&net, &excluded, &mut rng).unwrap() as usize] += 1;
        }
        assert_eq!(counts[2], 0);
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for &i in &[0usize, 1, 3] {
            let freq = counts[i] as f64 / n as f64;
            assert!((freq - p).abs() <= 3.0 * sigma, "item {i}: {freq}");
        }
    }

    #[test]
    fn all_excluded_is_an_error() {
        let net = BipartiteNetwork::from_edge_list(&[(0, 0), (0, 1)], 1).unwrap();
        let excluded = vec![true; 2];
        let mut rng = rng_from_seed(1);
        assert!(matches!(
            preferential_pick(&net, &excluded, &mut rng),
            Err(Error::AllItemsExcluded)
        ));
        assert!(matches!(
            random_pick(&net, &excluded, &mut rng),
            Err(Error::AllItemsExcluded)
        ));
    }

    #[test]
    fn picks_never_land_in_the_excluded_set() {
        let net = degree_fixture();
        let mut rng = rng_from_seed(17);
        for mask in 1..7u32 {
            // all non-full exclusion masks over 3 items
            let excluded: Vec<bool> = (0..3).map(|i| mask & (1 << i) != 0).collect();
            for _ in 0..200 {
                let p = preferential_pick(&net, &excluded, &mut rng).unwrap();
                assert!(!excluded[p as usize]);
                let r = random_pick(&net, &excluded, &mut rng).unwrap();
                assert!(!excluded[r as usize]);
            }
        }
    }
}
