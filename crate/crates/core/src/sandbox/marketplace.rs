use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SandboxError;
use crate::bandit::{PolicyKind, RewardMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maturity {
    Experimental,
    Beta,
    Validated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub id: String,
    pub algorithm: PolicyKind,
    pub use_case: Vec<String>,
    pub maturity: Maturity,
    pub eval_count: u32,
    /// Improvement in percent observed at every evaluation, oldest first.
    #[serde(default)]
    pub history: Vec<f64>,
    /// Restricts the arms the model may use; defaults to the scenario's power levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<Vec<f64>>,
    #[serde(default)]
    pub reward: RewardMode,
}

impl ModelDescriptor {
    pub fn new(id: impl Into<String>, algorithm: PolicyKind, maturity: Maturity) -> Self {
        Self {
            id: id.into(),
            algorithm,
            use_case: vec![Marketplace::TPC_OBSS.to_string()],
            maturity,
            eval_count: 0,
            history: Vec::new(),
            arms: None,
            reward: RewardMode::Shared,
        }
    }

    pub fn mean_improvement(&self) -> Option<f64> {
        if self.history.is_empty() {
            None
        } else {
            Some(self.history.iter().sum::<f64>() / self.history.len() as f64)
        }
    }

    pub fn matches(&self, tags: &[String]) -> bool {
        tags.iter().all(|t| self.use_case.contains(t))
    }
}

/// Model registry, optionally backed by a directory of `<id>.json` files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Marketplace {
    dir: Option<PathBuf>,
    models: BTreeMap<String, ModelDescriptor>,
}

impl Marketplace {
    pub const TPC_OBSS: &'static str = "tpc-obss";

    pub fn in_memory() -> Self {
        Self::default()
    }

    /// The three shipped transmit-power models.
    pub fn with_defaults() -> Self {
        let mut m = Self::default();
        for d in [
            ModelDescriptor::new("eps-greedy-tpc", PolicyKind::epsilon_greedy(), Maturity::Validated),
            ModelDescriptor::new("ucb1-tpc", PolicyKind::ucb1(), Maturity::Beta),
            ModelDescriptor::new("thompson-tpc", PolicyKind::thompson(), Maturity::Experimental),
        ] {
            m.insert(d).expect("distinct ids");
        }
        m
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Binds the registry to `dir`; later `save` calls write there.
    pub fn bind(&mut self, dir: impl Into<PathBuf>) {
        self.dir = Some(dir.into());
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, SandboxError> {
        let dir = dir.as_ref();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| SandboxError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut m = Self {
            dir: Some(dir.to_path_buf()),
            models: BTreeMap::new(),
        };
        for p in paths {
            let text = fs::read_to_string(&p).map_err(|e| SandboxError::io(&p, e))?;
            let d: ModelDescriptor = crate::error::from_json_str(&text)
                .map_err(|e| SandboxError::Invalid(format!("{}: {e}", p.display())))?;
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if stem != d.id {
                return Err(SandboxError::Invalid(format!(
                    "{}: model id `{}` does not match its file name",
                    p.display(),
                    d.id
                )));
            }
            m.insert(d)?;
        }
        Ok(m)
    }

    /// Writes every record to the bound directory. Unknown files are left alone.
    pub fn save(&self) -> Result<(), SandboxError> {
        let dir = self
            .dir
            .as_ref()
            .ok_or_else(|| SandboxError::Invalid("marketplace has no directory".into()))?;
        fs::create_dir_all(dir).map_err(|e| SandboxError::io(dir, e))?;
        for d in self.models.values() {
            let path = dir.join(format!("{}.json", d.id));
            let tmp = dir.join(format!(".{}.json.tmp", d.id));
            let mut text = serde_json::to_string_pretty(d).expect("descriptor serializes");
            text.push('\n');
            fs::write(&tmp, text).map_err(|e| SandboxError::io(&tmp, e))?;
            fs::rename(&tmp, &path).map_err(|e| SandboxError::io(&path, e))?;
        }
        Ok(())
    }

    pub fn insert(&mut self, d: ModelDescriptor) -> Result<(), SandboxError> {
        if d.id.is_empty() || d.id.contains(['/', '\\']) || d.id.starts_with('.') {
            return Err(SandboxError::Invalid(format!("bad model id `{}`", d.id)));
        }
        d.algorithm.validate()?;
        if self.models.contains_key(&d.id) {
            return Err(SandboxError::Invalid(format!("duplicate model id `{}`", d.id)));
        }
        self.models.insert(d.id.clone(), d);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ModelDescriptor> {
        self.models.get(id)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> impl Iterator<Item = &ModelDescriptor> {
        self.models.values()
    }

    /// Appends one observation; history only ever grows.
    pub fn record(&mut self, id: &str, improvement_pct: f64) -> Result<(), SandboxError> {
        let d = self
            .models
            .get_mut(id)
            .ok_or_else(|| SandboxError::Invalid(format!("unknown model `{id}`")))?;
        d.history.push(improvement_pct);
        d.eval_count += 1;
        Ok(())
    }

    /// Tag-matching models, best first: evaluated models by mean improvement,
    /// then unevaluated ones by maturity (highest first) and id.
    pub fn rank(&self, tags: &[String]) -> Vec<&ModelDescriptor> {
        let mut hits: Vec<&ModelDescriptor> = self.models.values().filter(|d| d.matches(tags)).collect();
        hits.sort_by(|a, b| match (a.mean_improvement(), b.mean_improvement()) {
            (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.id.cmp(&b.id)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => b.maturity.cmp(&a.maturity).then_with(|| a.id.cmp(&b.id)),
        });
        hits
    }

    pub fn select_model(&self, tags: &[String]) -> Result<&ModelDescriptor, SandboxError> {
        self.rank(tags)
            .into_iter()
            .next()
            .ok_or_else(|| SandboxError::NoModel(tags.join(",")))
    }
}
