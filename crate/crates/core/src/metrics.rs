//! Inequality and distribution metrics over item popularity.
//!
//! All functions take the raw item degree vector; zero-degree items count
//! towards `M`, which makes the Gini coefficient sensitive to item
//! extinction. With `k` sorted ascending and ranks 1-based,
//!
//! ```text
//! G = 2 Σ_α α k_α / (M Σ_α k_α) − (M + 1) / M
//! ```
//!
//! so perfect equality gives 0 and full concentration on one item gives
//! (M − 1)/M, the finite-M ceiling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BipartiteNetwork;

/// Fraction of items counted as "top" in the snapshot's top-share column.
pub const TOP_SHARE_FRACTION: f64 = 0.01;

/// One time-series point of the popularity-inequality measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalitySnapshot {
    pub sweep: usize,
    pub gini: f64,
    pub herfindahl: f64,
    pub top1_share: f64,
}

impl InequalitySnapshot {
    /// Measure a network at the given sweep index.
    pub fn measure(net: &BipartiteNetwork, sweep: usize) -> Result<Self> {
        let degrees = net.item_degrees();
        Ok(InequalitySnapshot {
            sweep,
            gini: gini(degrees)?,
            herfindahl: herfindahl(degrees)?,
            top1_share: top_share(degrees, TOP_SHARE_FRACTION)?,
        })
    }
}

fn total(degrees: &[u32]) -> Result<f64> {
    let sum: u64 = degrees.iter().map(|&k| k as u64).sum();
    if degrees.is_empty() || sum == 0 {
        return Err(Error::AllZeroDegrees);
    }
    Ok(sum as f64)
}

/// Gini coefficient of the degree vector.
pub fn gini(degrees: &[u32]) -> Result<f64> {
    let sum = total(degrees)?;
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let m = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &k)| (i as f64 + 1.0) * k as f64)
        .sum();
    Ok(2.0 * weighted / (m * sum) - (m + 1.0) / m)
}

/// Herfindahl index: sum of squared popularity shares.
pub fn herfindahl(degrees: &[u32]) -> Result<f64> {
    let sum = total(degrees)?;
    Ok(degrees
        .iter()
        .map(|&k| {
            let share = k as f64 / sum;
            share * share
        })
        .sum())
}

/// Link share of the top ⌈fraction·M⌉ most popular items.
pub fn top_share(degrees: &[u32], fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "top-share fraction must be in (0, 1], got {fraction}"
        )));
    }
    let sum = total(degrees)?;
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let take = (fraction * sorted.len() as f64).ceil() as usize;
    let top: u64 = sorted.iter().take(take).map(|&k| k as u64).sum();
    Ok(top as f64 / sum)
}

/// Normalized popularity-rank curve: degrees sorted descending, rank r
/// (1-based) maps to (r/M, k_(r)/Σk).
pub fn popularity_rank_curve(degrees: &[u32]) -> Result<Vec<(f64, f64)>> {
    let sum = total(degrees)?;
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let m = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &k)| ((i as f64 + 1.0) / m, k as f64 / sum))
        .collect())
}
