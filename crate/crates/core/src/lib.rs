//! Overlapping-BSS 802.11 simulator with bandit transmit-power control and an
//! ML sandbox pipeline that evaluates models in simulation before deploying
//! them to an emulated operative network.

pub mod adapter;
pub mod bandit;
pub mod error;
pub mod sandbox;
pub mod sim;
pub mod wlan;

pub use error::ConfigError;

/// Engine version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
