//! Residential multi-BSS WLAN model: propagation, carrier sense, SINR-driven
//! MCS selection and a simplified DCF.

pub mod channel;
mod engine;
pub mod mcs;
mod report;
pub mod scenario;

pub use channel::{carrier_sensed, path_loss, rx_power, sinr, ChannelParams};
pub use engine::{simulate_scenario, simulate_with, MacEvent, SimOptions, SimOutput, WlanError};
pub use mcs::{McsEntry, McsTable};
pub use report::{BssReport, ThroughputReport, WindowSample};
pub use scenario::{
    canonical_scenario, BssConfig, MacParams, Node, Position, Role, Scenario, TrafficLoad,
};

/// Closed-form saturated throughput of one isolated link, Mbps:
/// `payload / (E[backoff]·slot + overhead + payload/rate)` with `E[backoff] = (CW_min − 1)/2`.
pub fn isolated_link_bound(mac: &MacParams, rate_mbps: f64) -> f64 {
    let payload = mac.payload_bits as f64;
    let mean_backoff = f64::from(mac.cw_min - 1) / 2.0;
    payload / (mean_backoff * mac.slot_us as f64 + mac.overhead_us as f64 + payload / rate_mbps)
}
