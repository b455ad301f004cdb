//! Ratings-file ingestion.
//!
//! Input lines are `user_id item_id rating [timestamp]`, whitespace- or
//! tab-separated, with integer ratings 1..=5 (the MovieLens u.data layout).
//! A rating at or above the threshold becomes a link; duplicate
//! (user, item) pairs collapse to one link. External ids are densified and
//! the dense→original mapping is returned for reporting.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BipartiteNetwork;

/// One parsed ratings line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rating {
    pub user: u64,
    pub item: u64,
    pub rating: u8,
}

/// Dense id → original external id, sorted by original id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMap {
    pub users: Vec<u64>,
    pub items: Vec<u64>,
}

pub struct IngestResult {
    pub network: BipartiteNetwork,
    pub id_map: IdMap,
}

/// Parse ratings text; errors carry the 1-based offending line number.
pub fn parse_ratings(text: &str, path_label: &str) -> Result<Vec<Rating>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let fail = |msg: String| Error::MalformedLine {
            path: path_label.to_string(),
            line: idx + 1,
            msg,
        };
        if fields.len() != 3 && fields.len() != 4 {
            return Err(fail(format!(
                "expected 3 or 4 fields (user item rating [timestamp]), got {}",
                fields.len()
            )));
        }
        let user: u64 = fields[0]
            .parse()
            .map_err(|_| fail(format!("bad user id '{}'", fields[0])))?;
        let item: u64 = fields[1]
            .parse()
            .map_err(|_| fail(format!("bad item id '{}'", fields[1])))?;
        let rating: u8 = fields[2]
            .parse()
            .map_err(|_| fail(format!("bad rating '{}'", fields[2])))?;
        if !(1..=5).contains(&rating) {
            return Err(fail(format!("rating {rating} outside 1..=5")));
        }
        if fields.len() == 4 {
            let _: u64 = fields[3]
                .parse()
                .map_err(|_| fail(format!("bad timestamp '{}'", fields[3])))?;
        }
        out.push(Rating { user, item, rating });
    }
    Ok(out)
}

/// Turn parsed ratings into a network: one link per (user, item) with
/// rating >= threshold, dense ids, seeded random initial timestamps.
pub fn network_from_ratings(
    ratings: &[Rating],
    threshold: u8,
    seed: u64,
) -> Result<IngestResult> {
    if threshold == 0 {
        return Err(Error::InvalidConfig("threshold must be >= 1".into()));
    }
    let mut pairs: BTreeSet<(u64, u64)> = BTreeSet::new();
    for r in ratings {
        if r.rating >= threshold {
            pairs.insert((r.user, r.item));
        }
    }
    if pairs.is_empty() {
        return Err(Error::ZeroLinks);
    }
    let users: Vec<u64> = pairs
        .iter()
        .map(|&(u, _)| u)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let items: Vec<u64> = pairs
        .iter()
        .map(|&(_, i)| i)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let dense = |sorted: &[u64], id: u64| sorted.binary_search(&id).unwrap() as u32;
    let edges: Vec<(u32, u32)> = pairs
        .iter()
        .map(|&(u, i)| (dense(&users, u), dense(&items, i)))
        .collect();
    let network = BipartiteNetwork::from_edge_list(&edges, seed)?;
    Ok(IngestResult {
        network,
        id_map: IdMap { users, items },
    })
}

/// Read and ingest a ratings file.
pub fn ingest(path: &Path, threshold: u8, seed: u64) -> Result<IngestResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ratings = parse_ratings(&text, &path.display().to_string())?;
    network_from_ratings(&ratings, threshold, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_and_four_field_lines() {
        let ratings = parse_ratings("3 7 4\n1\t2\t5\t881250949\n", "t").unwrap();
        assert_eq!(
            ratings,
            vec![
                Rating {
                    user: 3,
                    item: 7,
                    rating: 4
                },
                Rating {
                    user: 1,
                    item: 2,
                    rating: 5
                },
            ]
        );
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let err = parse_ratings("1 2 3\nnot a line\n", "u.data").unwrap_err();
        match err {
            Error::MalformedLine { line: 2, path, .. } => assert_eq!(path, "u.data"),
            other => panic!("unexpected: {other}"),
        }
        let err = parse_ratings("1 2 9\n", "f").unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn threshold_keeps_only_strong_ratings_and_dedups() {
        // user 10 rates item 20 twice above threshold: one link
        let ratings = parse_ratings("10 20 5\n10 20 4\n10 30 2\n11 20 3\n", "t").unwrap();
        let result = network_from_ratings(&ratings, 3, 1).unwrap();
        let net = &result.network;
        assert_eq!(net.n_users(), 2);
        assert_eq!(net.n_items(), 1);
        assert_eq!(net.n_links(), 2);
        assert_eq!(result.id_map.users, vec![10, 11]);
        assert_eq!(result.id_map.items, vec![20]);
    }

    #[test]
    fn impossible_threshold_yields_zero_links_error() {
        let ratings = parse_ratings("1 1 5\n2 2 5\n", "t").unwrap();
        assert!(matches!(
            network_from_ratings(&ratings, 6, 1),
            Err(Error::ZeroLinks)
        ));
    }

    #[test]
    fn ingest_is_idempotent_for_fixed_seed() {
        let text = "1 1 5\n1 2 4\n2 1 3\n2 3 5\n3 2 4\n";
        let a = network_from_ratings(&parse_ratings(text, "t").unwrap(), 3, 99).unwrap();
        let b = network_from_ratings(&parse_ratings(text, "t").unwrap(), 3, 99).unwrap();
        assert_eq!(a.network.links(), b.network.links());
        assert_eq!(a.id_map, b.id_map);
    }
}
