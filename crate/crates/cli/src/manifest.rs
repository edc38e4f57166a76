use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wlan_sandbox::sim::PRNG_ALGORITHM;

use crate::commands::{CliError, Resolved};

/// Written next to every output. Holds no timestamps or host details so
/// identical runs produce identical manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub engine_version: String,
    pub prng: String,
    pub seed: u64,
    /// Thread count requested; results do not depend on it.
    pub jobs: usize,
    pub run: Resolved,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(run: Resolved, seed: u64, jobs: usize, outputs: Vec<String>) -> Self {
        Self {
            engine_version: wlan_sandbox::VERSION.to_string(),
            prng: PRNG_ALGORITHM.to_string(),
            seed,
            jobs,
            run,
            outputs,
        }
    }

    pub fn resolved(self) -> Result<Resolved, CliError> {
        if self.engine_version != wlan_sandbox::VERSION {
            eprintln!(
                "wlsbx: warning: manifest was written by engine {}, running {}",
                self.engine_version,
                wlan_sandbox::VERSION
            );
        }
        if self.prng != PRNG_ALGORITHM {
            return Err(CliError::input(format!(
                "manifest uses generator `{}`, this build has `{PRNG_ALGORITHM}`",
                self.prng
            )));
        }
        Ok(self.run)
    }
}

pub fn load(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    wlan_sandbox::error::from_json_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
