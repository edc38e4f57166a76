use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wlan_sandbox::bandit::{run_learning_episode, BanditError, EpisodeConfig, PolicyKind, RewardMode};
use wlan_sandbox::sandbox::{
    exhaustive_oracle, oracle_csv, run_pipeline, stability_sweep, sweep_csv, Marketplace,
    PipelineConfig, PipelineOutcome, SandboxError, SandboxReport, UnderlayHandle,
};
use wlan_sandbox::sim::SimTime;
use wlan_sandbox::wlan::{canonical_scenario, simulate_with, Scenario, SimOptions, WlanError};

use crate::manifest::Manifest;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_EXHAUSTED: u8 = 3;
pub const EXIT_CAP: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn other(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::input(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<SandboxError> for CliError {
    fn from(e: SandboxError) -> Self {
        let code = match &e {
            SandboxError::PipelineExhausted { .. } | SandboxError::NoModel(_) => EXIT_EXHAUSTED,
            SandboxError::CapExceeded { .. } => EXIT_CAP,
            SandboxError::Simulation(WlanError::Sim(_)) => EXIT_FAILURE,
            _ => EXIT_INPUT,
        };
        let mut message = e.to_string();
        if let SandboxError::CapExceeded { configs, .. } = e {
            message.push_str(&format!("; rerun with --cap {configs} to allow it"));
        }
        Self { code, message }
    }
}

impl From<BanditError> for CliError {
    fn from(e: BanditError) -> Self {
        match e {
            BanditError::Simulation(w) => SandboxError::Simulation(w).into(),
            other => Self::input(other.to_string()),
        }
    }
}

impl From<WlanError> for CliError {
    fn from(e: WlanError) -> Self {
        SandboxError::Simulation(e).into()
    }
}

/// Fully resolved command: everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Resolved {
    Simulate {
        #[serde(with = "scenario_json")]
        scenario: Scenario,
        duration_s: f64,
        trace: bool,
    },
    Learn {
        #[serde(with = "scenario_json")]
        scenario: Scenario,
        policy: PolicyKind,
        iterations: usize,
        iter_duration_s: f64,
        reward: RewardMode,
    },
    Pipeline {
        #[serde(with = "scenario_json")]
        underlay: Scenario,
        exact: bool,
        /// Relative paths are taken relative to the output directory.
        marketplace: PathBuf,
        config: PipelineConfig,
    },
    Sweep {
        #[serde(with = "scenario_json")]
        scenario: Scenario,
        durations_s: Vec<f64>,
        seeds: Vec<u64>,
    },
    Oracle {
        #[serde(with = "scenario_json")]
        scenario: Scenario,
        seeds: Vec<u64>,
        duration_s: f64,
        cap: u64,
    },
}

impl Resolved {
    pub fn name(&self) -> &'static str {
        match self {
            Resolved::Simulate { .. } => "simulate",
            Resolved::Learn { .. } => "learn",
            Resolved::Pipeline { .. } => "pipeline",
            Resolved::Sweep { .. } => "sweep",
            Resolved::Oracle { .. } => "oracle",
        }
    }
}

mod scenario_json {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use wlan_sandbox::wlan::Scenario;

    pub fn serialize<S: Serializer>(s: &Scenario, ser: S) -> Result<S::Ok, S::Error> {
        s.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Scenario, D::Error> {
        let v = serde_json::Value::deserialize(de)?;
        Scenario::from_json_str(&v.to_string()).map_err(serde::de::Error::custom)
    }
}

pub fn load_scenario(path: Option<&Path>) -> Result<Scenario, CliError> {
    let Some(path) = path else {
        return Ok(canonical_scenario());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Scenario::from_json_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn load_pipeline_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    PipelineConfig::from_json_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write(out: &Path, name: &str, contents: &str) -> Result<String, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(name.to_string())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// `init`: default inputs for `pipeline`, `simulate` and friends.
pub fn init(out: &Path) -> Result<(), CliError> {
    write(out, "scenario.json", &(canonical_scenario().to_json_string() + "\n"))?;
    write(out, "pipeline.json", &json(&PipelineConfig::default()))?;
    let mut m = Marketplace::with_defaults();
    m.bind(out.join("marketplace"));
    m.save()?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn execute(r: &Resolved, seed: u64, jobs: usize, out: &Path) -> Result<(), CliError> {
    let mut outputs = Vec::new();
    let result = match r {
        Resolved::Simulate {
            scenario,
            duration_s,
            trace,
        } => {
            let mut opts = SimOptions::new(SimTime::from_secs_f64(*duration_s), seed);
            opts.trace = *trace;
            let res = simulate_with(scenario, &opts)?;
            outputs.push(write(out, "throughput.csv", &res.report.to_csv())?);
            if let Some(t) = &res.trace {
                outputs.push(write(out, "trace.csv", t)?);
            }
            Ok(())
        }
        Resolved::Learn {
            scenario,
            policy,
            iterations,
            iter_duration_s,
            reward,
        } => {
            let cfg = EpisodeConfig {
                iter_duration: SimTime::from_secs_f64(*iter_duration_s),
                reward: *reward,
                ..EpisodeConfig::new(*iterations, seed)
            };
            let policies = vec![policy.clone(); scenario.bss.len()];
            let trace = run_learning_episode(scenario, &policies, &cfg)?;
            outputs.push(write(out, "learning_trace.csv", &trace.to_csv())?);
            Ok(())
        }
        Resolved::Pipeline {
            underlay,
            exact,
            marketplace,
            config,
        } => pipeline(underlay, *exact, marketplace, config, seed, out, &mut outputs),
        Resolved::Sweep {
            scenario,
            durations_s,
            seeds,
        } => {
            let rows = stability_sweep(scenario, durations_s, seeds)?;
            outputs.push(write(out, "sweep.csv", &sweep_csv(&rows))?);
            Ok(())
        }
        Resolved::Oracle {
            scenario,
            seeds,
            duration_s,
            cap,
        } => {
            let rows = exhaustive_oracle(scenario, seeds, SimTime::from_secs_f64(*duration_s), *cap)?;
            outputs.push(write(out, "oracle.csv", &oracle_csv(scenario, &rows))?);
            Ok(())
        }
    };
    let manifest = Manifest::new(r.clone(), seed, jobs, outputs);
    write(out, &format!("{}.manifest.json", r.name()), &json(&manifest))?;
    result
}

fn attempts_csv(attempts: &[SandboxReport]) -> String {
    let mut s = String::from(
        "model_id,configuration_dbm,baseline_mbps,candidate_mbps,improvement_pct,passed,reason\n",
    );
    for a in attempts {
        let cfg: Vec<String> = a.configuration.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(
            s,
            "{},{},{:.6},{:.6},{:.6},{},{}",
            a.model_id,
            cfg.join(";"),
            a.baseline_mbps,
            a.candidate_mbps,
            a.improvement_pct,
            a.passed,
            a.reason.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    s
}

fn pipeline(
    scenario: &Scenario,
    exact: bool,
    marketplace: &Path,
    config: &PipelineConfig,
    seed: u64,
    out: &Path,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    let dir = if marketplace.is_relative() {
        out.join(marketplace)
    } else {
        marketplace.to_path_buf()
    };
    let mut m = if dir.exists() {
        Marketplace::load(&dir)?
    } else {
        let mut m = Marketplace::with_defaults();
        m.bind(&dir);
        m.save()?;
        m
    };
    let mut u = if exact {
        UnderlayHandle::exact(scenario, seed)?
    } else {
        UnderlayHandle::new(scenario, seed)?
    };
    match run_pipeline(&mut u, &mut m, config) {
        Ok(PipelineOutcome {
            features,
            attempts,
            monitoring,
        }) => {
            outputs.push(write(out, "features.json", &json(&features))?);
            outputs.push(write(out, "attempts.csv", &attempts_csv(&attempts))?);
            outputs.push(write(out, "sandbox_report.json", &json(attempts.last().expect("passed")))?);
            outputs.push(write(out, "monitoring_report.json", &json(&monitoring))?);
            let mut csv = String::from("bss_id,pre_mbps,post_mbps,pre_dbm,post_dbm\n");
            for (i, id) in monitoring.bss_ids.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{id},{:.6},{:.6},{},{}",
                    monitoring.pre_mbps[i],
                    monitoring.post_mbps[i],
                    monitoring.pre_config_dbm[i],
                    monitoring.post_config_dbm[i]
                );
            }
            outputs.push(write(out, "monitoring.csv", &csv)?);
            println!(
                "deployed {} at {:?} dBm: {:+.1}% monitored",
                attempts.last().expect("passed").model_id,
                monitoring.post_config_dbm,
                monitoring.improvement_pct
            );
            Ok(())
        }
        Err(SandboxError::PipelineExhausted { attempts }) => {
            outputs.push(write(out, "attempts.csv", &attempts_csv(&attempts))?);
            Err(SandboxError::PipelineExhausted { attempts }.into())
        }
        Err(e) => Err(e.into()),
    }
}
