//! Multi-window behavioral features for product search ranking.
//!
//! The crate covers the full loop: ingest daily engagement logs, build
//! Beta-Binomial smoothed rate features over long and short lookback
//! windows (plus one-hot query-vertical signals), train LambdaRank GBDT
//! rankers, simulate clickstream traffic against them, and evaluate via
//! team-draft interleaving, A/B splits, and tree-structure analysis.

pub mod error;
pub mod event_log;
pub mod experiments;
pub mod features;
pub mod ltr;
pub mod simulator;
pub mod stats;
pub mod tree_analysis;

pub use error::{Error, Result};
