//! Co-evolution of a recommender system and its users on a bipartite network.
//!
//! The model: users and items form a bipartite network whose links carry
//! timestamps. At each sweep every user's oldest link is rewired to a new
//! item, chosen either from an item-based collaborative-filtering
//! recommendation list (with probability `p`) or by an attachment rule
//! (preferential or random, with probability `1 - p`). Repeated rewiring
//! drives the item-popularity distribution towards a stationary state whose
//! inequality is tracked with the Gini coefficient and related metrics.
//!
//! Crate layout:
//! - [`network`]: the timestamped bipartite network with incremental
//!   degree and co-occurrence bookkeeping
//! - [`recommender`]: θ-parameterized item similarity, ICF scores, top-L
//!   lists, rank-reciprocal selection
//! - [`attachment`]: preferential / random attachment channels
//! - [`engine`]: the rewiring dynamics and stationarity detection
//! - [`metrics`]: Gini, Herfindahl, top-share, popularity-rank curves
//! - [`evaluation`]: train/probe splits, precision@L, short-term diversity
//! - [`experiments`]: θ and density sweeps, hysteresis protocol
//! - [`io`]: ratings ingestion, snapshots, synthetic networks, manifests

pub mod attachment;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod network;
pub mod recommender;
pub mod rng;

pub use error::{Error, Result};
pub use network::{BipartiteNetwork, ItemId, Link, Timestamp, UserId};
