//! Network snapshots: a CSV edge list `user,item,timestamp` plus a JSON
//! header. Export orders links by timestamp, so export → import → export
//! is byte-identical.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{BipartiteNetwork, Link};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub n_users: u32,
    pub n_items: u32,
    pub n_links: usize,
    pub clock: u64,
    pub seed: u64,
}

impl SnapshotHeader {
    pub fn of(net: &BipartiteNetwork) -> Self {
        SnapshotHeader {
            n_users: net.n_users(),
            n_items: net.n_items(),
            n_links: net.n_links(),
            clock: net.clock(),
            seed: net.seed(),
        }
    }
}

pub fn snapshot_csv_string(net: &BipartiteNetwork) -> String {
    let mut out = String::from("user,item,timestamp\n");
    for Link {
        user,
        item,
        timestamp,
    } in net.links()
    {
        out.push_str(&format!("{user},{item},{timestamp}\n"));
    }
    out
}

pub fn snapshot_header_string(net: &BipartiteNetwork) -> String {
    let mut s = serde_json::to_string_pretty(&SnapshotHeader::of(net)).expect("header serializes");
    s.push('\n');
    s
}

/// Resolve a snapshot base path: accepts `base`, `base.csv`, or `base.json`.
fn resolve_base(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

/// Write `<base>.csv` and `<base>.json`; returns the two paths.
pub fn export_snapshot(net: &BipartiteNetwork, base: &Path) -> Result<(PathBuf, PathBuf)> {
    let base = resolve_base(base);
    if let Some(dir) = base.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let csv_path = base.with_extension("csv");
    let json_path = base.with_extension("json");
    std::fs::write(&csv_path, snapshot_csv_string(net)).map_err(|e| Error::io(&csv_path, e))?;
    std::fs::write(&json_path, snapshot_header_string(net))
        .map_err(|e| Error::io(&json_path, e))?;
    Ok((csv_path, json_path))
}

/// Read a snapshot written by [`export_snapshot`] and rebuild the network.
pub fn import_snapshot(path: &Path) -> Result<BipartiteNetwork> {
    let base = resolve_base(path);
    let csv_path = base.with_extension("csv");
    let json_path = base.with_extension("json");

    let header_text =
        std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let header: SnapshotHeader = serde_json::from_str(&header_text).map_err(|e| Error::Json {
        path: json_path.display().to_string(),
        source: e,
    })?;

    let csv_text = std::fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let label = csv_path.display().to_string();
    let mut lines = csv_text.lines().enumerate();
    match lines.next() {
        Some((_, "user,item,timestamp")) => {}
        _ => {
            return Err(Error::BadSnapshot(format!(
                "{label}: missing 'user,item,timestamp' header row"
            )))
        }
    }
    let mut links = Vec::with_capacity(header.n_links);
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields.next().ok_or_else(|| Error::MalformedLine {
                path: label.clone(),
                line: idx + 1,
                msg: format!("missing {name} column"),
            })
        };
        let user = next("user")?;
        let item = next("item")?;
        let ts = next("timestamp")?;
        let parse_err = |what: &str, v: &str| Error::MalformedLine {
            path: label.clone(),
            line: idx + 1,
            msg: format!("bad {what} '{v}'"),
        };
        links.push(Link {
            user: user.parse().map_err(|_| parse_err("user", user))?,
            item: item.parse().map_err(|_| parse_err("item", item))?,
            timestamp: ts.parse().map_err(|_| parse_err("timestamp", ts))?,
        });
    }
    if links.len() != header.n_links {
        return Err(Error::BadSnapshot(format!(
            "{label}: header says {} links, file has {}",
            header.n_links,
            links.len()
        )));
    }
    let net = BipartiteNetwork::from_links(
        header.n_users,
        header.n_items,
        &links,
        header.clock,
        header.seed,
    )?;
    net.check_degree_sums()?;
    Ok(net)
}
