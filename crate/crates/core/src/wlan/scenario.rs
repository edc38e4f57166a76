use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::channel::{self, ChannelParams};
use super::mcs::McsTable;
use crate::error::{self, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Ap,
    Sta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub role: Role,
    pub bss: u32,
    pub x: f64,
    pub y: f64,
    /// Walls between this node and others, keyed by node id. Absent means zero.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub walls: BTreeMap<String, u32>,
}

impl Node {
    pub fn position(&self) -> Position {
        Position {
            x: self.x,
            y: self.y,
        }
    }
}

/// Offered downlink load of a BSS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficLoad {
    Saturated,
    Mbps(f64),
}

impl TrafficLoad {
    pub fn offered_mbps(&self) -> Option<f64> {
        match self {
            TrafficLoad::Saturated => None,
            TrafficLoad::Mbps(v) => Some(*v),
        }
    }
}

impl Serialize for TrafficLoad {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TrafficLoad::Saturated => s.serialize_str("saturated"),
            TrafficLoad::Mbps(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for TrafficLoad {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(TrafficLoad::Mbps(v)),
            Raw::Text(t) if t.eq_ignore_ascii_case("saturated") => Ok(TrafficLoad::Saturated),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a load in Mbps or \"saturated\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BssConfig {
    pub id: u32,
    /// Node id of the access point.
    pub ap: String,
    pub traffic_load: TrafficLoad,
    pub tx_power_dbm: f64,
}

/// DCF constants. ACK and inter-frame spaces are part of `overhead_us`;
/// `difs_us` is the idle wait before a fresh access attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacParams {
    pub slot_us: u64,
    pub difs_us: u64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub payload_bits: u64,
    pub overhead_us: u64,
}

impl Default for MacParams {
    fn default() -> Self {
        Self {
            slot_us: 9,
            difs_us: 34,
            cw_min: 15,
            cw_max: 1023,
            payload_bits: 12_000,
            overhead_us: 100,
        }
    }
}

impl MacParams {
    /// Air occupancy of one frame at `rate_mbps`, rounded up to whole microseconds.
    pub fn frame_duration_us(&self, rate_mbps: f64) -> u64 {
        self.overhead_us + (self.payload_bits as f64 / rate_mbps).ceil() as u64
    }
}

/// On-disk form: `bss[].tx_power_dbm` and `default_power_dbm` are optional.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    nodes: Vec<Node>,
    bss: Vec<BssFile>,
    #[serde(default)]
    channel: ChannelParams,
    #[serde(default)]
    mcs_table: Option<McsTable>,
    #[serde(default)]
    mac: MacParams,
    power_levels: Vec<f64>,
    #[serde(default)]
    default_power_dbm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BssFile {
    id: u32,
    ap: String,
    traffic_load: TrafficLoad,
    #[serde(default)]
    tx_power_dbm: Option<f64>,
}

/// A complete WLAN deployment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub nodes: Vec<Node>,
    pub bss: Vec<BssConfig>,
    pub channel: ChannelParams,
    pub mcs_table: McsTable,
    pub mac: MacParams,
    pub power_levels: Vec<f64>,
    pub default_power_dbm: f64,
}

impl Scenario {
    /// Parses and validates a scenario file. Errors name the offending field and line.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let file: ScenarioFile = error::from_json_str(text)?;
        let default_power = match file.default_power_dbm {
            Some(p) => p,
            None => file.power_levels.last().copied().ok_or_else(|| {
                ConfigError::new("power_levels", "must list at least one power level")
                    .located_in(text)
            })?,
        };
        let s = Scenario {
            nodes: file.nodes,
            bss: file
                .bss
                .into_iter()
                .map(|b| BssConfig {
                    id: b.id,
                    ap: b.ap,
                    traffic_load: b.traffic_load,
                    tx_power_dbm: b.tx_power_dbm.unwrap_or(default_power),
                })
                .collect(),
            channel: file.channel,
            mcs_table: file.mcs_table.unwrap_or_default(),
            mac: file.mac,
            power_levels: file.power_levels,
            default_power_dbm: default_power,
        };
        s.validate().map_err(|e| e.located_in(text))?;
        Ok(s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nodes.is_empty() {
            return Err(ConfigError::new("nodes", "at least one node is required"));
        }
        let mut ids = BTreeSet::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if !ids.insert(n.id.as_str()) {
                return Err(ConfigError::new(
                    format!("nodes[{i}].id"),
                    format!("duplicate node id {:?}", n.id),
                ));
            }
            if !n.x.is_finite() || !n.y.is_finite() {
                return Err(ConfigError::new(
                    format!("nodes[{i}].x"),
                    "coordinates must be finite",
                ));
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            for (other, count) in &n.walls {
                let Some(j) = self.node_index(other) else {
                    return Err(ConfigError::new(
                        format!("nodes[{i}].walls"),
                        format!("unknown node {other:?}"),
                    ));
                };
                let back = self.nodes[j].walls.get(&n.id).copied().unwrap_or(0);
                if back != *count {
                    return Err(ConfigError::new(
                        format!("nodes[{i}].walls"),
                        format!(
                            "wall count to {other:?} is {count} but {other:?} records {back}"
                        ),
                    ));
                }
            }
        }

        if self.bss.is_empty() {
            return Err(ConfigError::new("bss", "at least one BSS is required"));
        }
        let mut bss_ids = BTreeSet::new();
        for (i, b) in self.bss.iter().enumerate() {
            if !bss_ids.insert(b.id) {
                return Err(ConfigError::new(
                    format!("bss[{i}].id"),
                    format!("duplicate BSS id {}", b.id),
                ));
            }
            match self.node(&b.ap) {
                None => {
                    return Err(ConfigError::new(
                        format!("bss[{i}].ap"),
                        format!("unknown node {:?}", b.ap),
                    ))
                }
                Some(n) if n.role != Role::Ap || n.bss != b.id => {
                    return Err(ConfigError::new(
                        format!("bss[{i}].ap"),
                        format!("node {:?} is not an AP of BSS {}", b.ap, b.id),
                    ))
                }
                Some(_) => {}
            }
            match b.traffic_load {
                TrafficLoad::Mbps(v) if !(v.is_finite() && v >= 0.0) => {
                    return Err(ConfigError::new(
                        format!("bss[{i}].traffic_load"),
                        "load must be a non-negative number of Mbps",
                    ))
                }
                _ => {}
            }
            if !self.power_levels.contains(&b.tx_power_dbm) {
                return Err(ConfigError::new(
                    format!("bss[{i}].tx_power_dbm"),
                    format!("{} dBm is not one of power_levels", b.tx_power_dbm),
                ));
            }
            if self.stations_of(b.id).next().is_none() {
                return Err(ConfigError::new(
                    format!("bss[{i}]"),
                    format!("BSS {} has no stations", b.id),
                ));
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if !bss_ids.contains(&n.bss) {
                return Err(ConfigError::new(
                    format!("nodes[{i}].bss"),
                    format!("unknown BSS {}", n.bss),
                ));
            }
            if n.role == Role::Ap && !self.bss.iter().any(|b| b.ap == n.id) {
                return Err(ConfigError::new(
                    format!("nodes[{i}].role"),
                    format!("AP {:?} is not referenced by any BSS", n.id),
                ));
            }
        }

        let ch = &self.channel;
        let finite = [
            ch.pl0_db,
            ch.exponent,
            ch.wall_loss_db,
            ch.noise_floor_dbm,
            ch.cca_threshold_dbm,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(ConfigError::new("channel", "values must be finite"));
        }
        if ch.exponent <= 0.0 {
            return Err(ConfigError::new(
                "channel.exponent",
                "path-loss exponent must be positive",
            ));
        }
        if ch.wall_loss_db < 0.0 {
            return Err(ConfigError::new(
                "channel.wall_loss_db",
                "wall loss must be non-negative",
            ));
        }
        if ch.cca_threshold_dbm <= ch.noise_floor_dbm {
            return Err(ConfigError::new(
                "channel.cca_threshold_dbm",
                "CCA threshold must exceed the noise floor",
            ));
        }
        self.mcs_table
            .check()
            .map_err(|m| ConfigError::new("mcs_table", m))?;

        let mac = &self.mac;
        if mac.slot_us == 0 {
            return Err(ConfigError::new("mac.slot_us", "must be positive"));
        }
        if mac.cw_min == 0 {
            return Err(ConfigError::new("mac.cw_min", "must be positive"));
        }
        if mac.cw_max < mac.cw_min {
            return Err(ConfigError::new("mac.cw_max", "must be at least cw_min"));
        }
        if mac.payload_bits == 0 {
            return Err(ConfigError::new("mac.payload_bits", "must be positive"));
        }

        if self.power_levels.is_empty() {
            return Err(ConfigError::new(
                "power_levels",
                "must list at least one power level",
            ));
        }
        if self.power_levels.iter().any(|p| !p.is_finite())
            || self.power_levels.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(ConfigError::new(
                "power_levels",
                "must be finite and strictly ascending",
            ));
        }
        if !self.power_levels.contains(&self.default_power_dbm) {
            return Err(ConfigError::new(
                "default_power_dbm",
                "default power must be one of power_levels",
            ));
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn bss_index(&self, id: u32) -> Option<usize> {
        self.bss.iter().position(|b| b.id == id)
    }

    pub fn stations_of(&self, bss_id: u32) -> impl Iterator<Item = &Node> {
        self.nodes
            .iter()
            .filter(move |n| n.role == Role::Sta && n.bss == bss_id)
    }

    pub fn walls_between(&self, a: usize, b: usize) -> u32 {
        self.nodes[a]
            .walls
            .get(&self.nodes[b].id)
            .copied()
            .unwrap_or(0)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.nodes[a]
            .position()
            .distance_to(&self.nodes[b].position())
    }

    pub fn path_loss_between(&self, a: usize, b: usize) -> f64 {
        channel::path_loss(self.distance(a, b), self.walls_between(a, b), &self.channel)
    }

    /// Received power at node `to` from node `from` transmitting at `tx_dbm`.
    pub fn rx_power_between(&self, from: usize, to: usize, tx_dbm: f64) -> f64 {
        channel::rx_power(tx_dbm, self.path_loss_between(from, to))
    }

    /// Carrier sense at `listener` given `(transmitter node index, tx dBm)` pairs.
    pub fn cca_busy(&self, listener: usize, active: &[(usize, f64)]) -> bool {
        let rx: Vec<f64> = active
            .iter()
            .filter(|(n, _)| *n != listener)
            .map(|(n, p)| self.rx_power_between(*n, listener, *p))
            .collect();
        channel::carrier_sensed(&rx, self.channel.cca_threshold_dbm)
    }

    pub fn powers(&self) -> Vec<f64> {
        self.bss.iter().map(|b| b.tx_power_dbm).collect()
    }

    pub fn set_tx_power(&mut self, bss_id: u32, dbm: f64) -> Result<(), ConfigError> {
        let i = self
            .bss_index(bss_id)
            .ok_or_else(|| ConfigError::new("bss", format!("unknown BSS {bss_id}")))?;
        if !self.power_levels.contains(&dbm) {
            return Err(ConfigError::new(
                format!("bss[{i}].tx_power_dbm"),
                format!("{dbm} dBm is not one of power_levels"),
            ));
        }
        self.bss[i].tx_power_dbm = dbm;
        Ok(())
    }

    /// Copy with per-BSS powers applied in `bss` order.
    pub fn with_powers(&self, powers: &[f64]) -> Result<Scenario, ConfigError> {
        if powers.len() != self.bss.len() {
            return Err(ConfigError::new(
                "bss",
                format!(
                    "expected {} power values, got {}",
                    self.bss.len(),
                    powers.len()
                ),
            ));
        }
        let mut s = self.clone();
        for (i, p) in powers.iter().enumerate() {
            let id = s.bss[i].id;
            s.set_tx_power(id, *p)?;
        }
        Ok(s)
    }

    /// Copy with every BSS at the default power.
    pub fn with_default_powers(&self) -> Scenario {
        let mut s = self.clone();
        for b in &mut s.bss {
            b.tx_power_dbm = self.default_power_dbm;
        }
        s
    }

    pub fn set_traffic_load(&mut self, bss_id: u32, load: TrafficLoad) -> Result<(), ConfigError> {
        let i = self
            .bss_index(bss_id)
            .ok_or_else(|| ConfigError::new("bss", format!("unknown BSS {bss_id}")))?;
        if let TrafficLoad::Mbps(v) = load {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::new(
                    format!("bss[{i}].traffic_load"),
                    "load must be a non-negative number of Mbps",
                ));
            }
        }
        self.bss[i].traffic_load = load;
        Ok(())
    }

    /// Normalization bound for BSS `i`: its offered load when finite, else the top PHY rate.
    pub fn throughput_bound(&self, i: usize) -> f64 {
        self.bss[i]
            .traffic_load
            .offered_mbps()
            .unwrap_or_else(|| self.mcs_table.max_rate())
    }
}

/// Two overlapping BSSs, one station each.
///
/// APs are 30 m apart on the x axis; each station sits 3 m from its AP on the
/// far side, 33 m from the other AP. With the default channel, 23 dBm APs
/// sense each other (-68.7 dBm) while 7 dBm APs do not (-84.7 dBm). At 7/7 dBm
/// each station still decodes the top MCS under the neighbour's interference
/// (35.9 dB SINR against a 34 dB threshold), leaving margin for exponent
/// errors of about 0.15.
pub fn canonical_scenario() -> Scenario {
    let node = |id: &str, role, bss, x, y| Node {
        id: id.into(),
        role,
        bss,
        x,
        y,
        walls: BTreeMap::new(),
    };
    let s = Scenario {
        nodes: vec![
            node("ap1", Role::Ap, 1, 0.0, 0.0),
            node("sta1", Role::Sta, 1, -3.0, 0.0),
            node("ap2", Role::Ap, 2, 30.0, 0.0),
            node("sta2", Role::Sta, 2, 33.0, 0.0),
        ],
        bss: vec![
            BssConfig {
                id: 1,
                ap: "ap1".into(),
                traffic_load: TrafficLoad::Saturated,
                tx_power_dbm: 23.0,
            },
            BssConfig {
                id: 2,
                ap: "ap2".into(),
                traffic_load: TrafficLoad::Saturated,
                tx_power_dbm: 23.0,
            },
        ],
        channel: ChannelParams::default(),
        mcs_table: McsTable::default(),
        mac: MacParams::default(),
        power_levels: vec![3.0, 7.0, 11.0, 15.0, 19.0, 23.0],
        default_power_dbm: 23.0,
    };
    debug_assert!(s.validate().is_ok());
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn canonical_is_valid_and_round_trips() {
        let s = canonical_scenario();
        s.validate().unwrap();
        let back = Scenario::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn canonical_geometry() {
        let s = canonical_scenario();
        let (ap1, sta1, ap2) = (0, 1, 2);
        assert_abs_diff_eq!(s.distance(ap1, sta1), 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.distance(ap1, ap2), 30.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.distance(ap2, sta1), 33.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.rx_power_between(ap2, ap1, 23.0), -68.70, epsilon = 0.01);
    }

    #[test]
    fn canonical_carrier_sense_regimes() {
        let s = canonical_scenario();
        assert!(s.cca_busy(0, &[(2, 23.0)]));
        assert!(!s.cca_busy(0, &[(2, 7.0)]));
        assert!(!s.cca_busy(0, &[]));
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let text = r#"{
  "nodes": [
    {"id": "a", "role": "ap", "bss": 1, "x": 0, "y": 0},
    {"id": "s", "role": "sta", "bss": 1, "x": 3, "y": 0}
  ],
  "bss": [{"id": 1, "ap": "a", "traffic_load": 20.5}],
  "power_levels": [5, 10, 20]
}"#;
        let s = Scenario::from_json_str(text).unwrap();
        assert_eq!(s.default_power_dbm, 20.0);
        assert_eq!(s.bss[0].tx_power_dbm, 20.0);
        assert_eq!(s.bss[0].traffic_load, TrafficLoad::Mbps(20.5));
        assert_eq!(s.mac, MacParams::default());
        assert_eq!(s.channel, ChannelParams::default());
    }

    #[test]
    fn validation_errors_name_field_and_line() {
        let text = canonical_scenario()
            .to_json_string()
            .replace("\"exponent\": 3.5", "\"exponent\": -1.0");
        let err = Scenario::from_json_str(&text).unwrap_err();
        assert_eq!(err.field, "channel.exponent");
        let line = err.line.unwrap();
        assert!(text.lines().nth(line - 1).unwrap().contains("exponent"));

        let text = canonical_scenario()
            .to_json_string()
            .replace("\"cw_min\": 15", "\"cw_min\": \"fifteen\"");
        let err = Scenario::from_json_str(&text).unwrap_err();
        assert_eq!(err.field, "mac.cw_min");
        assert!(err.line.is_some());
    }

    #[test]
    fn rejects_power_outside_levels() {
        let mut s = canonical_scenario();
        assert!(s.set_tx_power(1, 8.0).is_err());
        s.bss[1].tx_power_dbm = 8.0;
        assert_eq!(s.validate().unwrap_err().field, "bss[1].tx_power_dbm");
    }

    #[test]
    fn rejects_asymmetric_walls() {
        let mut s = canonical_scenario();
        s.nodes[0].walls.insert("ap2".into(), 2);
        assert_eq!(s.validate().unwrap_err().field, "nodes[0].walls");
        s.nodes[2].walls.insert("ap1".into(), 2);
        s.validate().unwrap();
        assert_eq!(s.walls_between(2, 0), 2);
    }

    #[test]
    fn rejects_structural_problems() {
        let mut s = canonical_scenario();
        s.nodes[1].bss = 9;
        assert!(s.validate().is_err());

        let mut s = canonical_scenario();
        s.power_levels = vec![23.0, 7.0];
        assert_eq!(s.validate().unwrap_err().field, "power_levels");

        let mut s = canonical_scenario();
        s.nodes.retain(|n| n.id != "sta2");
        assert_eq!(s.validate().unwrap_err().field, "bss[1]");

        let mut s = canonical_scenario();
        s.channel.cca_threshold_dbm = -99.0;
        assert_eq!(s.validate().unwrap_err().field, "channel.cca_threshold_dbm");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = canonical_scenario()
            .to_json_string()
            .replace("\"slot_us\"", "\"slot_time\"");
        let err = Scenario::from_json_str(&text).unwrap_err();
        assert!(err.field.starts_with("mac"), "{err}");
    }
}
