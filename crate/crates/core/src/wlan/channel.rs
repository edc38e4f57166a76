use serde::{Deserialize, Serialize};

/// Log-distance propagation with per-wall attenuation plus receiver constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// Path loss at the 1 m reference distance, dB.
    pub pl0_db: f64,
    pub exponent: f64,
    pub wall_loss_db: f64,
    pub noise_floor_dbm: f64,
    pub cca_threshold_dbm: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            pl0_db: 40.0,
            exponent: 3.5,
            wall_loss_db: 5.0,
            noise_floor_dbm: -95.0,
            cca_threshold_dbm: -82.0,
        }
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// `pl0 + 10·n·log10(max(d, 1 m)) + walls·wall_loss`.
pub fn path_loss(distance_m: f64, walls: u32, ch: &ChannelParams) -> f64 {
    let d = distance_m.max(1.0);
    ch.pl0_db + 10.0 * ch.exponent * d.log10() + f64::from(walls) * ch.wall_loss_db
}

pub fn rx_power(tx_dbm: f64, path_loss_db: f64) -> f64 {
    tx_dbm - path_loss_db
}

/// Energy detection: true iff the summed received power reaches the threshold.
/// An empty set is idle.
pub fn carrier_sensed(rx_dbm: &[f64], cca_threshold_dbm: f64) -> bool {
    if rx_dbm.is_empty() {
        return false;
    }
    let total: f64 = rx_dbm.iter().map(|p| dbm_to_mw(*p)).sum();
    mw_to_dbm(total) >= cca_threshold_dbm
}

/// SINR in dB, with interference and noise summed in the linear domain.
pub fn sinr(signal_dbm: f64, interferers_dbm: &[f64], noise_floor_dbm: f64) -> f64 {
    let denom: f64 = interferers_dbm.iter().map(|p| dbm_to_mw(*p)).sum::<f64>()
        + dbm_to_mw(noise_floor_dbm);
    signal_dbm - mw_to_dbm(denom)
}
