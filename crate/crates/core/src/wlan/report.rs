use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BssReport {
    pub bss_id: u32,
    pub thr_mbps: f64,
    /// Fraction of the window during which the AP was on air.
    pub airtime: f64,
    /// Frames that failed their SINR check.
    pub collisions: u64,
    pub frames_ok: u64,
    /// Mean per-frame worst-case SINR in dB; `None` when nothing was sent.
    pub mean_sinr_db: Option<f64>,
    pub offered_mbps: Option<f64>,
    /// At least one station cannot be reached at any MCS.
    pub zero_rate_link: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub window_start: SimTime,
    pub window_end: SimTime,
    pub bss: Vec<BssReport>,
}

impl ThroughputReport {
    pub const CSV_HEADER: &'static str = "bss_id,thr_mbps,airtime,collisions,mean_sinr";

    pub fn aggregate_mbps(&self) -> f64 {
        self.bss.iter().map(|b| b.thr_mbps).sum()
    }

    pub fn per_bss_mbps(&self) -> Vec<f64> {
        self.bss.iter().map(|b| b.thr_mbps).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for b in &self.bss {
            let sinr = b
                .mean_sinr_db
                .map_or_else(|| "nan".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{},{}",
                b.bss_id, b.thr_mbps, b.airtime, b.collisions, sinr
            );
        }
        out
    }
}

/// Per-BSS throughput over one sampling interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub end: SimTime,
    pub thr_mbps: Vec<f64>,
}
