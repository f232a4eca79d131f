//! Run configuration: one TOML file with a `schema_version` field. Relative
//! paths inside it resolve against the file's own directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use partsim_core::adversary::{AttackScenario, EconomicParams};
use partsim_core::analytics::{parse_release_dates, ReportFormat};
use partsim_core::blockaware::BlockAwareConfig;
use partsim_core::ingest::{load_prefix_table, PrefixTable};
use partsim_core::sim::SimParams;
use partsim_core::topology::{OrgAliases, TopologyParams};
use partsim_core::MiningPool;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_COVER_TARGETS: [f64; 2] = [0.30, 0.50];

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub input: InputConfig,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default)]
    pub scenarios: Vec<AttackScenario>,
    #[serde(default)]
    pub blockaware: Option<BlockAwareConfig>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub report_formats: BTreeSet<ReportFormat>,
    #[serde(default)]
    pub census: CensusConfig,
    #[serde(default)]
    pub economics: Option<EconomicParams>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub blockaware_eval: Option<EvalConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Exactly one of `snapshot_dir` and `synthetic` must be set.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub snapshot_dir: Option<PathBuf>,
    pub synthetic: Option<TopologyParams>,
    pub prefix_table: Option<PathBuf>,
    /// JSON list of pools. Synthetic inputs default to their `pool_spec`.
    pub pools: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub release_dates: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CensusConfig {
    pub targets: Vec<f64>,
    /// 60 or 600; inferred from the snapshot spacing when absent.
    pub cadence_seconds: Option<i64>,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self { targets: DEFAULT_COVER_TARGETS.to_vec(), cadence_seconds: None }
    }
}

/// Grid over scenario fields. Every scenario in the config is run at every
/// point of the cartesian product of `axes`, `repetitions` times each.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "one")]
    pub repetitions: u64,
    #[serde(default)]
    pub axes: Vec<SweepAxis>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub field: String,
    pub values: Vec<toml::Value>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub thresholds: Vec<u64>,
    pub trials: u64,
    /// Time of the single check; defaults to one expected block interval.
    pub horizon: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { thresholds: vec![1, 2, 3, 4], trials: 100_000, horizon: None }
    }
}

fn default_formats() -> BTreeSet<ReportFormat> {
    [ReportFormat::Json, ReportFormat::Csv].into()
}

fn one() -> u64 {
    1
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes).map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> CliResult<Self> {
        // check the version first so newer files fail on it, not on some unknown field
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        match table.get("schema_version") {
            None => return Err(CliError::Config("schema_version: missing".into())),
            Some(toml::Value::Integer(v)) if *v == CONFIG_SCHEMA_VERSION as i64 => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "schema_version: {v} is not supported (expected {CONFIG_SCHEMA_VERSION})"
                )))
            }
        }
        let de = toml::Deserializer::new(text);
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner().message())))?;
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        match (&self.input.snapshot_dir, &self.input.synthetic) {
            (Some(_), None) => {}
            (None, Some(t)) => t.validate().map_err(|e| CliError::at("input.synthetic", e))?,
            _ => return Err(CliError::Config("input: set exactly one of snapshot_dir and synthetic".into())),
        }
        self.sim.validate().map_err(|e| CliError::at("sim", e))?;
        let mut labels = BTreeSet::new();
        for (i, s) in self.scenarios.iter().enumerate() {
            s.validate().map_err(|e| CliError::at(&format!("scenarios[{i}]"), e))?;
            if !labels.insert(&s.label) {
                return Err(CliError::Config(format!("scenarios[{i}].label: `{}` is used twice", s.label)));
            }
        }
        if let Some(b) = &self.blockaware {
            b.validate().map_err(|e| CliError::at("blockaware", e))?;
        }
        for (i, t) in self.census.targets.iter().enumerate() {
            if !(*t > 0.0 && *t <= 1.0) {
                return Err(CliError::Config(format!("census.targets[{i}]: {t} not in (0,1]")));
            }
        }
        if self.report_formats.is_empty() {
            return Err(CliError::Config("report_formats: empty".into()));
        }
        if let Some(s) = &self.sweep {
            if s.repetitions == 0 {
                return Err(CliError::Config("sweep.repetitions: must be at least 1".into()));
            }
            if let Some(i) = s.axes.iter().position(|a| a.values.is_empty()) {
                return Err(CliError::Config(format!("sweep.axes[{i}].values: empty")));
            }
        }
        if let Some(e) = &self.blockaware_eval {
            if e.trials == 0 {
                return Err(CliError::Config("blockaware_eval.trials: must be at least 1".into()));
            }
            if e.thresholds.contains(&0) {
                return Err(CliError::Config("blockaware_eval.thresholds: must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn pools(&self) -> CliResult<Vec<MiningPool>> {
        if let Some(p) = &self.input.pools {
            let path = self.resolve(p);
            return load_pools(&path);
        }
        match &self.input.synthetic {
            Some(t) if !t.pool_spec.is_empty() => Ok(t.pool_spec.clone()),
            _ => Err(CliError::Config("input.pools: required when the input names no pools".into())),
        }
    }

    pub fn aliases(&self) -> CliResult<OrgAliases> {
        match &self.input.aliases {
            Some(p) => load_aliases(&self.resolve(p)),
            None => Ok(OrgAliases::new()),
        }
    }

    pub fn prefix_table(&self) -> CliResult<Option<PrefixTable>> {
        self.input.prefix_table.as_ref().map(|p| load_prefixes(&self.resolve(p))).transpose()
    }

    pub fn release_dates(&self) -> CliResult<Option<BTreeMap<String, partsim_core::analytics::NaiveDate>>> {
        self.input.release_dates.as_ref().map(|p| load_release_dates(&self.resolve(p))).transpose()
    }

    /// The synthetic topology with its pools and aliases filled in.
    pub fn topology(&self) -> CliResult<Option<TopologyParams>> {
        let Some(t) = &self.input.synthetic else { return Ok(None) };
        let mut t = t.clone();
        if t.pool_spec.is_empty() {
            t.pool_spec = self.pools()?;
        }
        t.aliases = self.aliases()?;
        Ok(Some(t))
    }
}

pub fn load_pools(path: &Path) -> CliResult<Vec<MiningPool>> {
    let bytes = read_input(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_aliases(path: &Path) -> CliResult<OrgAliases> {
    let bytes = read_input(path)?;
    let text = String::from_utf8_lossy(&bytes);
    OrgAliases::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_prefixes(path: &Path) -> CliResult<PrefixTable> {
    load_prefix_table(&read_input(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_release_dates(path: &Path) -> CliResult<BTreeMap<String, partsim_core::analytics::NaiveDate>> {
    let bytes = read_input(path)?;
    parse_release_dates(&String::from_utf8_lossy(&bytes)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
