use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsEntry {
    pub min_sinr_db: f64,
    pub rate_mbps: f64,
}

/// SINR-threshold to PHY-rate map, strictly increasing in both columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct McsTable(Vec<McsEntry>);

impl Default for McsTable {
    /// 20 MHz, one spatial stream, 0.8 us GI: 802.11ax MCS 0..10.
    fn default() -> Self {
        const ROWS: [(f64, f64); 11] = [
            (2.0, 8.6),
            (5.0, 17.2),
            (9.0, 25.8),
            (11.0, 34.4),
            (15.0, 51.6),
            (18.0, 68.8),
            (20.0, 77.4),
            (25.0, 86.0),
            (29.0, 103.2),
            (31.0, 114.7),
            (34.0, 129.0),
        ];
        McsTable(
            ROWS.iter()
                .map(|&(min_sinr_db, rate_mbps)| McsEntry {
                    min_sinr_db,
                    rate_mbps,
                })
                .collect(),
        )
    }
}

impl McsTable {
    /// Builds a table, rejecting empty or non-increasing rows.
    pub fn new(entries: Vec<McsEntry>) -> Result<Self, String> {
        let t = McsTable(entries);
        t.check()?;
        Ok(t)
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if self.0.is_empty() {
            return Err("table is empty".into());
        }
        for (i, e) in self.0.iter().enumerate() {
            if !e.min_sinr_db.is_finite() || !e.rate_mbps.is_finite() || e.rate_mbps <= 0.0 {
                return Err(format!("row {i} must be finite with a positive rate"));
            }
        }
        for (i, w) in self.0.windows(2).enumerate() {
            if w[1].min_sinr_db <= w[0].min_sinr_db || w[1].rate_mbps <= w[0].rate_mbps {
                return Err(format!("rows {i} and {} are not strictly increasing", i + 1));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.0
    }

    /// Highest entry whose threshold is at or below `sinr_db`.
    pub fn entry_for(&self, sinr_db: f64) -> Option<&McsEntry> {
        self.0.iter().rev().find(|e| e.min_sinr_db <= sinr_db)
    }

    /// PHY rate supported at `sinr_db`, zero below the lowest threshold.
    pub fn lookup(&self, sinr_db: f64) -> f64 {
        self.entry_for(sinr_db).map_or(0.0, |e| e.rate_mbps)
    }

    pub fn max_rate(&self) -> f64 {
        self.0.last().map_or(0.0, |e| e.rate_mbps)
    }
}
