use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use garchtrack::filters::FilterSpec;
use garchtrack::scenarios::Scenario;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    pub filters: BTreeMap<String, FilterSpec>,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub id: String,
    /// Fields replacing those of the built-in scenario; nested objects merge
    /// key by key.
    #[serde(default)]
    pub overrides: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Particle counts for the sweep.
    #[serde(default)]
    pub ns_list: Vec<usize>,
    /// Filters to benchmark, in report order; empty means all.
    #[serde(default)]
    pub filters: Vec<String>,
    #[serde(default)]
    pub burn_in: usize,
}

fn default_n_runs() -> usize {
    100
}

impl Default for BenchSection {
    fn default() -> Self {
        Self { n_runs: default_n_runs(), base_seed: 0, ns_list: Vec::new(), filters: Vec::new(), burn_in: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Table,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Table]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), formats: default_formats() }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        for id in &self.bench.filters {
            if !self.filters.contains_key(id) {
                return Err(CliError::Config(format!("bench.filters references undefined filter {id:?}")));
            }
        }
        if self.bench.n_runs == 0 {
            return Err(CliError::Config("bench.n_runs must be >= 1".into()));
        }
        self.resolve_scenario()?;
        Ok(())
    }

    /// Built-in scenario with the overrides applied.
    pub fn resolve_scenario(&self) -> Result<Scenario, CliError> {
        let base = Scenario::by_id(&self.scenario.id).map_err(|e| CliError::Config(e.to_string()))?;
        if self.scenario.overrides.is_empty() {
            return Ok(base);
        }
        let mut value = serde_json::to_value(&base).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut value, &Value::Object(self.scenario.overrides.clone()));
        let scn: Scenario =
            serde_json::from_value(value).map_err(|e| CliError::Config(format!("scenario.overrides: {e}")))?;
        scn.validate().map_err(|e| CliError::Config(format!("scenario.overrides: {e}")))?;
        Ok(scn)
    }

    /// Filter ids to benchmark, in order.
    pub fn bench_filters(&self) -> Vec<String> {
        if self.bench.filters.is_empty() {
            self.filters.keys().cloned().collect()
        } else {
            self.bench.filters.clone()
        }
    }

    pub fn filter(&self, id: &str) -> Result<&FilterSpec, CliError> {
        self.filters.get(id).ok_or_else(|| {
            let known: Vec<&str> = self.filters.keys().map(String::as_str).collect();
            CliError::Usage(format!("unknown filter {id:?}; defined: {}", known.join(", ")))
        })
    }
}

fn merge(target: &mut Value, patch: &Value) {
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                match t.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        t.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (t, p) => *t = p.clone(),
    }
}
