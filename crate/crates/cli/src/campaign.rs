//! Campaign files and their expansion into concrete runs.
//!
//! A campaign file is TOML. Shared `[scenario]`, `[optimizer]` and `[baseline]`
//! tables apply to every run; each `[[run]]` entry names a case and seed and
//! may carry its own `scenario` and `optimizer` tables on top.

use std::fmt;
use std::path::Path;

use hemsim::optimizer::OptimizerConfig;
use hemsim::scenario::ScenarioConfig;
use hemsim::sim::BaselineConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Baseline,
    Hem,
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerKind::Baseline => "baseline",
            ControllerKind::Hem => "hem",
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignFile {
    pub scenario: toml::Table,
    pub optimizer: toml::Table,
    pub baseline: toml::Table,
    pub controllers: Option<Vec<ControllerKind>>,
    pub workers: Option<usize>,
    #[serde(rename = "run")]
    pub runs: Vec<RunEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub case: u32,
    pub seed: u64,
    pub days: Option<u32>,
    pub start_day: Option<u32>,
    pub controllers: Option<Vec<ControllerKind>>,
    #[serde(default)]
    pub scenario: toml::Table,
    #[serde(default)]
    pub optimizer: toml::Table,
}

/// Settings given on the command line. They take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub case: Option<u32>,
    pub seed: Option<u64>,
    pub days: Option<u32>,
    pub start_day: Option<u32>,
    pub controllers: Option<Vec<ControllerKind>>,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub label: String,
    pub scenario: ScenarioConfig,
    pub optimizer: OptimizerConfig,
    pub baseline: BaselineConfig,
    pub controllers: Vec<ControllerKind>,
}

#[derive(Debug, Clone)]
pub struct CampaignSpec {
    pub runs: Vec<RunSpec>,
    pub workers: Option<usize>,
}

/// Every problem found in a configuration, one line each.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics(pub Vec<String>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.0 {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

impl CampaignFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, Diagnostics> {
        toml::from_str(text).map_err(|e| Diagnostics(vec![format!("{origin}: {e}")]))
    }

    pub fn load(path: &Path) -> Result<Self, Diagnostics> {
        let text = std::fs::read_to_string(path).map_err(|e| Diagnostics(vec![format!("{}: {e}", path.display())]))?;
        Self::parse(&text, &path.display().to_string())
    }
}

fn overlay(base: &toml::Table, top: &toml::Table) -> toml::Table {
    let mut out = base.clone();
    for (k, v) in top {
        out.insert(k.clone(), v.clone());
    }
    out
}

fn typed<T: DeserializeOwned>(table: toml::Table, what: &str, label: &str, errors: &mut Vec<String>) -> Option<T> {
    match T::deserialize(toml::Value::Table(table)) {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{label}: [{what}] {}", e.message().trim()));
            None
        }
    }
}

pub fn run_label(cfg: &ScenarioConfig) -> String {
    format!("case{:02}_seed{}_day{}_{}d", cfg.case, cfg.seed, cfg.start_day, cfg.days)
}

/// Expands a campaign file and command-line settings into validated runs.
pub fn build_campaign(file: &CampaignFile, cli: &CliOverrides) -> Result<CampaignSpec, Diagnostics> {
    let mut errors = Vec::new();
    let entries: Vec<RunEntry> = if file.runs.is_empty() {
        vec![RunEntry {
            case: cli.case.unwrap_or(1),
            seed: cli.seed.unwrap_or(1),
            days: None,
            start_day: None,
            controllers: None,
            scenario: toml::Table::new(),
            optimizer: toml::Table::new(),
        }]
    } else {
        if cli.case.is_some() || cli.seed.is_some() {
            errors.push("--case and --seed cannot be combined with [[run]] entries".to_string());
        }
        file.runs.clone()
    };

    let baseline: Option<BaselineConfig> = typed(file.baseline.clone(), "baseline", "campaign", &mut errors);
    if let Some(b) = &baseline {
        if let Err(e) = b.deadband.validate() {
            errors.push(format!("campaign: [baseline] {e}"));
        }
    }

    let mut runs = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let label = format!("run {} (case {}, seed {})", i + 1, entry.case, entry.seed);
        let mut table = file.scenario.clone();
        table.insert("case".into(), toml::Value::Integer(i64::from(entry.case)));
        table.insert("seed".into(), toml::Value::Integer(entry.seed as i64));
        if let Some(d) = entry.days {
            table.insert("days".into(), toml::Value::Integer(i64::from(d)));
        }
        if let Some(d) = entry.start_day {
            table.insert("start_day".into(), toml::Value::Integer(i64::from(d)));
        }
        let mut table = overlay(&table, &entry.scenario);
        if let Some(d) = cli.days {
            table.insert("days".into(), toml::Value::Integer(i64::from(d)));
        }
        if let Some(d) = cli.start_day {
            table.insert("start_day".into(), toml::Value::Integer(i64::from(d)));
        }
        let scenario: Option<ScenarioConfig> = typed(table, "scenario", &label, &mut errors);
        if let Some(s) = &scenario {
            if let Err(e) = s.validate() {
                errors.push(format!("{label}: [scenario] {e}"));
            }
        }
        let optimizer: Option<OptimizerConfig> =
            typed(overlay(&file.optimizer, &entry.optimizer), "optimizer", &label, &mut errors);
        if let Some(o) = &optimizer {
            if let Err(e) = o.validate() {
                errors.push(format!("{label}: [optimizer] {e}"));
            }
        }
        let mut controllers = cli
            .controllers
            .clone()
            .or_else(|| entry.controllers.clone())
            .or_else(|| file.controllers.clone())
            .unwrap_or_else(|| vec![ControllerKind::Baseline, ControllerKind::Hem]);
        controllers.sort();
        controllers.dedup();
        if controllers.is_empty() {
            errors.push(format!("{label}: no controllers selected"));
        }
        if let (Some(scenario), Some(optimizer), Some(baseline)) = (scenario, optimizer, baseline.clone()) {
            runs.push(RunSpec {
                label: run_label(&scenario),
                scenario,
                optimizer,
                baseline,
                controllers,
            });
        }
    }

    let mut labels: Vec<&str> = runs.iter().map(|r| r.label.as_str()).collect();
    labels.sort_unstable();
    for w in labels.windows(2) {
        if w[0] == w[1] {
            errors.push(format!("duplicate run {}", w[0]));
        }
    }
    if file.workers == Some(0) {
        errors.push("campaign: workers must be >= 1".to_string());
    }

    if errors.is_empty() {
        Ok(CampaignSpec {
            runs,
            workers: file.workers,
        })
    } else {
        Err(Diagnostics(errors))
    }
}
