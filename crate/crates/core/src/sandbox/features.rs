use serde::{Deserialize, Serialize};

use super::underlay::{Probe, UnderlayHandle};
use super::SandboxError;
use crate::error::ConfigError;
use crate::wlan::{BssConfig, ChannelParams, McsTable, MacParams, Node, Scenario, TrafficLoad};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BssSpec {
    pub id: u32,
    pub ap: String,
    pub traffic_load: TrafficLoad,
}

/// What the management side knows about the underlay after measuring it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub nodes: Vec<Node>,
    pub bss: Vec<BssSpec>,
    pub power_levels: Vec<f64>,
    pub default_power_dbm: Option<f64>,
    pub pl0_db: Option<f64>,
    pub exponent: Option<f64>,
    /// Probes the fit was computed from.
    pub probes_used: usize,
}

/// Least-squares fit of `loss = pl0 + 10·n·log10(d)` over the probes, with
/// wall attenuation removed using the default per-wall loss. Probes closer
/// than 1 m are skipped since the model clamps them.
pub fn fit_path_loss(probes: &[Probe], wall_loss_db: f64) -> Result<(f64, f64, usize), SandboxError> {
    let pts: Vec<(f64, f64)> = probes
        .iter()
        .filter(|p| p.distance_m >= 1.0)
        .map(|p| {
            let loss = p.tx_dbm - p.rx_dbm - f64::from(p.walls) * wall_loss_db;
            (10.0 * p.distance_m.log10(), loss)
        })
        .collect();
    let mut distinct: Vec<f64> = pts.iter().map(|(x, _)| *x).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if distinct.len() < 2 {
        return Err(SandboxError::Estimation(format!(
            "need probes at 2 or more distinct distances, got {}",
            distinct.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope, pts.len()))
}

/// Node layout and offered loads are read as-is; the propagation exponent
/// and reference loss are estimated from probe measurements.
pub fn extract_features(u: &UnderlayHandle) -> Result<ScenarioSpec, SandboxError> {
    extract_from_probes(u, &u.probe())
}

pub fn extract_from_probes(u: &UnderlayHandle, probes: &[Probe]) -> Result<ScenarioSpec, SandboxError> {
    let live = u.live();
    let (pl0, exponent, used) = fit_path_loss(probes, ChannelParams::default().wall_loss_db)?;
    Ok(ScenarioSpec {
        nodes: live.nodes.clone(),
        bss: live
            .bss
            .iter()
            .map(|b| BssSpec {
                id: b.id,
                ap: b.ap.clone(),
                traffic_load: b.traffic_load,
            })
            .collect(),
        power_levels: live.power_levels.clone(),
        default_power_dbm: Some(live.default_power_dbm),
        pl0_db: Some(pl0),
        exponent: Some(exponent),
        probes_used: used,
    })
}

/// Builds the sandbox scenario: estimated channel, default constants elsewhere,
/// every BSS at the default power.
pub fn prepare_sandbox(spec: &ScenarioSpec) -> Result<Scenario, SandboxError> {
    if spec.power_levels.is_empty() {
        return Err(ConfigError::new("power_levels", "must list at least one power level").into());
    }
    let exponent = spec
        .exponent
        .ok_or_else(|| ConfigError::new("exponent", "missing path-loss exponent estimate"))?;
    let pl0 = spec
        .pl0_db
        .ok_or_else(|| ConfigError::new("pl0_db", "missing reference loss estimate"))?;
    let default_power = spec
        .default_power_dbm
        .or_else(|| spec.power_levels.last().copied())
        .expect("power_levels is non-empty");
    let s = Scenario {
        nodes: spec.nodes.clone(),
        bss: spec
            .bss
            .iter()
            .map(|b| BssConfig {
                id: b.id,
                ap: b.ap.clone(),
                traffic_load: b.traffic_load,
                tx_power_dbm: default_power,
            })
            .collect(),
        channel: ChannelParams {
            pl0_db: pl0,
            exponent,
            ..ChannelParams::default()
        },
        mcs_table: McsTable::default(),
        mac: MacParams::default(),
        power_levels: spec.power_levels.clone(),
        default_power_dbm: default_power,
    };
    s.validate()?;
    Ok(s)
}
