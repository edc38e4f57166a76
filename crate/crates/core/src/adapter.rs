//! Standardized command interface for driving a simulator backend.
//!
//! The reference backend wraps the in-process engine in batch mode: `Start`
//! runs the whole simulation before returning, so `Running` is only ever
//! observed by a backend that fails mid-run.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sandbox::{SandboxError, ScenarioRunner};
use crate::sim::{fnv1a64, SimTime};
use crate::wlan::{simulate_scenario, Scenario, ThroughputReport, TrafficLoad, WlanError};

/// Value of a `Configure` parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Text(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdapterCommand {
    Start {
        scenario: Box<Scenario>,
        duration: SimTime,
        seed: u64,
    },
    Stop,
    Configure(BTreeMap<String, ParamValue>),
    Status,
    Collect,
}

impl AdapterCommand {
    pub fn name(&self) -> &'static str {
        match self {
            AdapterCommand::Start { .. } => "start",
            AdapterCommand::Stop => "stop",
            AdapterCommand::Configure(_) => "configure",
            AdapterCommand::Status => "status",
            AdapterCommand::Collect => "collect",
        }
    }

    /// Compact argument summary for the transcript. Scenarios appear as a hash.
    pub fn args(&self) -> String {
        match self {
            AdapterCommand::Start {
                scenario,
                duration,
                seed,
            } => format!(
                "scenario={:016x} duration_us={} seed={seed}",
                fnv1a64(scenario.to_json_string().as_bytes()),
                duration.as_micros()
            ),
            AdapterCommand::Configure(params) => params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" "),
            _ => String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendState {
    Idle,
    Running,
    Finished,
}

impl fmt::Display for BackendState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendState::Idle => "idle",
            BackendState::Running => "running",
            BackendState::Finished => "finished",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Started { state: BackendState },
    Stopped { state: BackendState },
    Configured { keys: usize },
    Status { state: BackendState, runs: u64 },
    Report(ThroughputReport),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdapterError {
    #[error("`{command}` is not allowed while {state}")]
    IllegalState {
        command: &'static str,
        state: BackendState,
    },
    #[error("parameter `{0}` is not in the backend whitelist")]
    UnsupportedParameter(String),
    #[error("bad value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error(transparent)]
    Simulation(#[from] WlanError),
}

impl AdapterError {
    fn kind(&self) -> &'static str {
        match self {
            AdapterError::IllegalState { .. } => "illegal_state",
            AdapterError::UnsupportedParameter(_) => "unsupported_parameter",
            AdapterError::InvalidValue { .. } => "invalid_value",
            AdapterError::Simulation(_) => "simulation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitoringMode {
    Batch,
    PerIteration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendCapabilities {
    pub technologies: Vec<String>,
    pub monitoring: MonitoringMode,
    pub max_parallel_instances: usize,
    pub commands: Vec<String>,
    /// Accepted `Configure` keys; `<bss_id>` stands for any BSS id.
    pub whitelist: Vec<String>,
}

impl BackendCapabilities {
    pub fn allows(&self, key: &str) -> bool {
        self.whitelist.iter().any(|pattern| match pattern.strip_suffix("<bss_id>") {
            Some(prefix) => key
                .strip_prefix(prefix)
                .is_some_and(|id| id.parse::<u32>().is_ok()),
            None => pattern == key,
        })
    }
}

pub trait Backend {
    fn capabilities(&self) -> BackendCapabilities;
    fn dispatch(&mut self, cmd: AdapterCommand) -> Result<Response, AdapterError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub command: AdapterCommand,
    /// `ok` or `error:<kind>`.
    pub result: String,
}

pub const TRANSCRIPT_CSV_HEADER: &str = "seq,command,args,result";

pub fn transcript_csv(entries: &[TranscriptEntry]) -> String {
    let mut out = format!("{TRANSCRIPT_CSV_HEADER}\n");
    for e in entries {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.seq,
            e.command.name(),
            e.command.args().replace(',', ";"),
            e.result
        );
    }
    out
}

/// The in-process engine behind the standard command set.
#[derive(Debug, Clone)]
pub struct ReferenceBackend {
    state: BackendState,
    overrides: BTreeMap<String, ParamValue>,
    report: Option<ThroughputReport>,
    runs: u64,
    transcript: Vec<TranscriptEntry>,
}

impl Default for ReferenceBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl ReferenceBackend {
    pub fn new() -> Self {
        Self {
            state: BackendState::Idle,
            overrides: BTreeMap::new(),
            report: None,
            runs: 0,
            transcript: Vec::new(),
        }
    }

    pub fn reference_capabilities() -> BackendCapabilities {
        BackendCapabilities {
            technologies: vec!["ieee802.11ax".into()],
            monitoring: MonitoringMode::Batch,
            max_parallel_instances: 64,
            commands: ["start", "stop", "configure", "status", "collect"]
                .map(String::from)
                .to_vec(),
            whitelist: ["tx_power.<bss_id>", "traffic_load.<bss_id>", "sim.duration"]
                .map(String::from)
                .to_vec(),
        }
    }

    pub fn state(&self) -> BackendState {
        self.state
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// Last collected-or-collectable report, if any.
    pub fn last_report(&self) -> Option<&ThroughputReport> {
        self.report.as_ref()
    }

    /// Runs every command of `transcript` on a fresh backend, in order.
    pub fn replay(transcript: &[TranscriptEntry]) -> Self {
        let mut b = Self::new();
        for e in transcript {
            let _ = b.dispatch(e.command.clone());
        }
        b
    }

    fn check_value(key: &str, value: &ParamValue) -> Result<(), AdapterError> {
        let bad = |m: &str| AdapterError::InvalidValue {
            key: key.to_string(),
            message: m.to_string(),
        };
        match (key.split('.').next(), value) {
            (Some("tx_power"), ParamValue::Number(v)) if v.is_finite() => Ok(()),
            (Some("tx_power"), _) => Err(bad("expected a power in dBm")),
            (Some("traffic_load"), ParamValue::Number(v)) if v.is_finite() && *v >= 0.0 => Ok(()),
            (Some("traffic_load"), ParamValue::Text(t)) if t == "saturated" => Ok(()),
            (Some("traffic_load"), _) => Err(bad("expected Mbps >= 0 or \"saturated\"")),
            (Some("sim"), ParamValue::Number(v)) if v.is_finite() && *v > 0.0 => Ok(()),
            _ => Err(bad("expected a positive duration in seconds")),
        }
    }

    fn configured(&self, base: &Scenario, duration: SimTime) -> Result<(Scenario, SimTime), AdapterError> {
        let mut s = base.clone();
        let mut duration = duration;
        for (key, value) in &self.overrides {
            let (head, tail) = key.split_once('.').unwrap_or((key, ""));
            let invalid = |e: crate::ConfigError| AdapterError::InvalidValue {
                key: key.clone(),
                message: e.to_string(),
            };
            match (head, value) {
                ("sim", ParamValue::Number(v)) => duration = SimTime::from_secs_f64(*v),
                ("tx_power", ParamValue::Number(v)) => {
                    s.set_tx_power(tail.parse().unwrap_or(u32::MAX), *v)
                        .map_err(invalid)?
                }
                ("traffic_load", v) => {
                    let load = match v {
                        ParamValue::Number(x) => TrafficLoad::Mbps(*x),
                        ParamValue::Text(_) => TrafficLoad::Saturated,
                    };
                    s.set_traffic_load(tail.parse().unwrap_or(u32::MAX), load)
                        .map_err(invalid)?
                }
                _ => unreachable!("values are checked when configured"),
            }
        }
        Ok((s, duration))
    }

    fn execute(&mut self, cmd: &AdapterCommand) -> Result<Response, AdapterError> {
        let illegal = |command| AdapterError::IllegalState {
            command,
            state: self.state,
        };
        match cmd {
            AdapterCommand::Status => Ok(Response::Status {
                state: self.state,
                runs: self.runs,
            }),
            AdapterCommand::Stop => {
                if self.state != BackendState::Idle {
                    self.state = BackendState::Idle;
                    self.report = None;
                }
                Ok(Response::Stopped { state: self.state })
            }
            AdapterCommand::Configure(params) => {
                if self.state == BackendState::Running {
                    return Err(illegal("configure"));
                }
                let caps = Self::reference_capabilities();
                for (k, v) in params {
                    if !caps.allows(k) {
                        return Err(AdapterError::UnsupportedParameter(k.clone()));
                    }
                    Self::check_value(k, v)?;
                }
                self.overrides
                    .extend(params.iter().map(|(k, v)| (k.clone(), v.clone())));
                Ok(Response::Configured { keys: params.len() })
            }
            AdapterCommand::Collect => match (self.state, &self.report) {
                (BackendState::Finished, Some(r)) => Ok(Response::Report(r.clone())),
                _ => Err(illegal("collect")),
            },
            AdapterCommand::Start {
                scenario,
                duration,
                seed,
            } => {
                if self.state != BackendState::Idle {
                    return Err(illegal("start"));
                }
                let (s, duration) = self.configured(scenario, *duration)?;
                self.state = BackendState::Running;
                match simulate_scenario(&s, duration, *seed) {
                    Ok(r) => {
                        self.report = Some(r);
                        self.runs += 1;
                        self.state = BackendState::Finished;
                        Ok(Response::Started { state: self.state })
                    }
                    Err(e) => {
                        self.state = BackendState::Idle;
                        Err(e.into())
                    }
                }
            }
        }
    }

    #[cfg(test)]
    fn force_state(&mut self, state: BackendState) {
        self.state = state;
    }
}

impl Backend for ReferenceBackend {
    fn capabilities(&self) -> BackendCapabilities {
        Self::reference_capabilities()
    }

    fn dispatch(&mut self, cmd: AdapterCommand) -> Result<Response, AdapterError> {
        let out = self.execute(&cmd);
        if matches!(cmd, AdapterCommand::Status) {
            return out;
        }
        let result = match &out {
            Ok(_) => "ok".to_string(),
            Err(e) => format!("error:{}", e.kind()),
        };
        self.transcript.push(TranscriptEntry {
            seq: self.transcript.len() as u64,
            command: cmd,
            result,
        });
        out
    }
}

/// Orchestrator-side driver: gates parameters against the advertised
/// whitelist before anything reaches the backend.
pub struct AdapterRunner<B: Backend> {
    backend: B,
}

impl<B: Backend> AdapterRunner<B> {
    pub fn new(backend: B) -> Self {
        Self { backend }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn into_backend(self) -> B {
        self.backend
    }

    pub fn configure(&mut self, params: BTreeMap<String, ParamValue>) -> Result<Response, AdapterError> {
        let caps = self.backend.capabilities();
        if let Some(k) = params.keys().find(|k| !caps.allows(k)) {
            return Err(AdapterError::UnsupportedParameter(k.clone()));
        }
        self.backend.dispatch(AdapterCommand::Configure(params))
    }

    /// Stop, Start, Collect.
    pub fn run_once(
        &mut self,
        s: &Scenario,
        duration: SimTime,
        seed: u64,
    ) -> Result<ThroughputReport, AdapterError> {
        self.backend.dispatch(AdapterCommand::Stop)?;
        self.backend.dispatch(AdapterCommand::Start {
            scenario: Box::new(s.clone()),
            duration,
            seed,
        })?;
        match self.backend.dispatch(AdapterCommand::Collect)? {
            Response::Report(r) => Ok(r),
            other => unreachable!("collect answered {other:?}"),
        }
    }
}

impl<B: Backend> ScenarioRunner for AdapterRunner<B> {
    fn run(
        &mut self,
        s: &Scenario,
        duration: SimTime,
        seed: u64,
    ) -> Result<ThroughputReport, SandboxError> {
        self.run_once(s, duration, seed).map_err(|e| match e {
            AdapterError::Simulation(w) => SandboxError::Simulation(w),
            other => SandboxError::Invalid(other.to_string()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wlan::canonical_scenario;
    use proptest::prelude::*;

    fn start(seed: u64) -> AdapterCommand {
        AdapterCommand::Start {
            scenario: Box::new(canonical_scenario()),
            duration: SimTime::from_millis(200),
            seed,
        }
    }

    fn params(pairs: &[(&str, ParamValue)]) -> BTreeMap<String, ParamValue> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn lifecycle() {
        let mut b = ReferenceBackend::new();
        assert!(matches!(
            b.dispatch(AdapterCommand::Collect),
            Err(AdapterError::IllegalState { .. })
        ));
        assert_eq!(
            b.dispatch(AdapterCommand::Stop).unwrap(),
            Response::Stopped { state: BackendState::Idle }
        );
        b.dispatch(start(1)).unwrap();
        assert_eq!(b.state(), BackendState::Finished);
        assert!(b.dispatch(start(1)).is_err());
        let Response::Report(r) = b.dispatch(AdapterCommand::Collect).unwrap() else {
            panic!()
        };
        let direct = simulate_scenario(&canonical_scenario(), SimTime::from_millis(200), 1).unwrap();
        assert_eq!(r, direct);
        b.dispatch(AdapterCommand::Stop).unwrap();
        assert_eq!(b.state(), BackendState::Idle);
        assert!(b.dispatch(AdapterCommand::Collect).is_err());
    }

    #[test]
    fn configure_gates() {
        let mut b = ReferenceBackend::new();
        assert!(matches!(
            b.dispatch(AdapterCommand::Configure(params(&[("mac.slot", ParamValue::Number(1.0))]))),
            Err(AdapterError::UnsupportedParameter(_))
        ));
        assert!(matches!(
            b.dispatch(AdapterCommand::Configure(params(&[("tx_power.x", ParamValue::Number(7.0))]))),
            Err(AdapterError::UnsupportedParameter(_))
        ));
        assert!(matches!(
            b.dispatch(AdapterCommand::Configure(params(&[("tx_power.1", ParamValue::Text("hi".into()))]))),
            Err(AdapterError::InvalidValue { .. })
        ));
        b.force_state(BackendState::Running);
        assert!(matches!(
            b.dispatch(AdapterCommand::Configure(params(&[("tx_power.1", ParamValue::Number(7.0))]))),
            Err(AdapterError::IllegalState { .. })
        ));
    }

    #[test]
    fn overrides_apply_at_start() {
        let mut b = ReferenceBackend::new();
        b.dispatch(AdapterCommand::Configure(params(&[
            ("tx_power.1", ParamValue::Number(7.0)),
            ("tx_power.2", ParamValue::Number(7.0)),
            ("sim.duration", ParamValue::Number(0.3)),
        ])))
        .unwrap();
        b.dispatch(start(4)).unwrap();
        let s = canonical_scenario().with_powers(&[7.0, 7.0]).unwrap();
        let direct = simulate_scenario(&s, SimTime::from_millis(300), 4).unwrap();
        assert_eq!(b.last_report(), Some(&direct));
    }

    #[test]
    fn unknown_bss_fails_start_and_stays_idle() {
        let mut b = ReferenceBackend::new();
        b.dispatch(AdapterCommand::Configure(params(&[("tx_power.9", ParamValue::Number(7.0))])))
            .unwrap();
        assert!(matches!(b.dispatch(start(1)), Err(AdapterError::InvalidValue { .. })));
        assert_eq!(b.state(), BackendState::Idle);
    }

    #[test]
    fn capabilities_are_static() {
        let b = ReferenceBackend::new();
        let c = b.capabilities();
        assert_eq!(c, b.capabilities());
        assert!(c.whitelist.iter().any(|k| k.starts_with("tx_power.")));
        assert!(c.allows("tx_power.12") && c.allows("sim.duration"));
        assert!(!c.allows("tx_power.") && !c.allows("sim.seed"));
    }

    #[test]
    fn runner_rejects_before_dispatch() {
        let mut r = AdapterRunner::new(ReferenceBackend::new());
        assert!(r.configure(params(&[("channel.exponent", ParamValue::Number(3.0))])).is_err());
        assert!(r.backend().transcript().is_empty());
    }

    #[test]
    fn status_is_side_effect_free() {
        let mut b = ReferenceBackend::new();
        b.dispatch(start(2)).unwrap();
        let before = b.transcript().len();
        for _ in 0..3 {
            assert_eq!(
                b.dispatch(AdapterCommand::Status).unwrap(),
                Response::Status { state: BackendState::Finished, runs: 1 }
            );
        }
        assert_eq!(b.transcript().len(), before);
    }

    #[test]
    fn transcript_csv_shape() {
        let mut b = ReferenceBackend::new();
        let _ = b.dispatch(AdapterCommand::Collect);
        b.dispatch(start(3)).unwrap();
        let csv = transcript_csv(b.transcript());
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "seq,command,args,result");
        assert_eq!(lines[1], "0,collect,,error:illegal_state");
        assert!(lines[2].starts_with("1,start,scenario="));
        assert!(lines[2].ends_with(",ok"));
    }

    fn arb_command() -> impl Strategy<Value = AdapterCommand> {
        prop_oneof![
            (0u64..4).prop_map(start),
            Just(AdapterCommand::Stop),
            Just(AdapterCommand::Status),
            Just(AdapterCommand::Collect),
            prop_oneof![
                Just("tx_power.1"),
                Just("tx_power.2"),
                Just("tx_power.7"),
                Just("traffic_load.1"),
                Just("sim.duration"),
                Just("bogus"),
            ]
            .prop_flat_map(|k| {
                prop_oneof![
                    prop_oneof![Just(3.0), Just(7.0), Just(8.0), Just(-1.0), Just(0.05)]
                        .prop_map(ParamValue::Number),
                    Just(ParamValue::Text("saturated".into())),
                ]
                .prop_map(move |v| AdapterCommand::Configure(params(&[(k, v)])))
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_sequences_stay_in_the_machine(cmds in prop::collection::vec(arb_command(), 0..40)) {
            let mut b = ReferenceBackend::new();
            for cmd in cmds {
                let before = b.state();
                let name = cmd.name();
                let out = b.dispatch(cmd);
                let after = b.state();
                prop_assert_ne!(after, BackendState::Running);
                match (&out, name) {
                    (Ok(_), "start") => prop_assert_eq!((before, after), (BackendState::Idle, BackendState::Finished)),
                    (Ok(_), "stop") => prop_assert_eq!(after, BackendState::Idle),
                    (Ok(Response::Report(_)), "collect") => prop_assert_eq!(before, BackendState::Finished),
                    (Ok(_), _) | (Err(_), _) => prop_assert_eq!(before, after),
                }
            }
            let replayed = ReferenceBackend::replay(b.transcript());
            prop_assert_eq!(replayed.state(), b.state());
            prop_assert_eq!(replayed.last_report(), b.last_report());
            prop_assert_eq!(replayed.transcript(), b.transcript());
        }
    }
}
