//! Per-run time series, request log and their on-disk form.
//!
//! A ledger directory holds `steps.csv` and `requests.csv`, which are fully
//! determined by the scenario, controller and seed, plus `meta.json`, which
//! also carries wall-clock timestamps and timings.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::plant::{DeferrableKind, PowerSnapshot};

pub const STEPS_FILE: &str = "steps.csv";
pub const REQUESTS_FILE: &str = "requests.csv";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time_s: f64,
    pub price: f64,
    pub ambient: f64,
    pub irradiance: f64,
    pub solar_available: f64,
    pub grid: f64,
    pub solar_used: f64,
    pub curtailed: f64,
    pub storage: f64,
    pub hvac: f64,
    pub xev: f64,
    pub deferrable: f64,
    pub non_deferrable: f64,
    /// Indoor temperature at the end of the step.
    pub t_indoor: f64,
    pub t_set: f64,
    pub soc_es: f64,
    pub soc_xev: f64,
    pub es_current: f64,
    pub u_hvac: f64,
    pub u_xev: u8,
    pub u_laundry: u8,
    pub u_dishwasher: u8,
    /// The controller accepted a plan that leaves the comfort band.
    pub band_flag: u8,
    /// The grid cap could not be restored by the tabu loop.
    pub cap_flag: u8,
    pub ga_generations: u32,
    pub objective: f64,
}

impl StepRecord {
    pub fn snapshot(&self) -> PowerSnapshot {
        PowerSnapshot {
            grid: self.grid,
            solar: self.solar_used,
            curtailed: self.curtailed,
            storage: self.storage,
            hvac: self.hvac,
            xev: self.xev,
            deferrable: self.deferrable,
            non_deferrable: self.non_deferrable,
        }
    }
}

/// One deferrable request and the steps (with power) at which it was served.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub id: usize,
    pub kind: DeferrableKind,
    pub enable_step: usize,
    pub deadline_step: usize,
    pub completion_steps: usize,
    pub served: Vec<(usize, f64)>,
}

impl RequestRecord {
    pub fn first_activation(&self) -> Option<usize> {
        self.served.first().map(|s| s.0)
    }

    pub fn energy_wh(&self, dt: f64) -> f64 {
        self.served.iter().map(|s| s.1 * dt / 3600.0).sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RequestRow {
    id: usize,
    kind: DeferrableKind,
    enable_step: usize,
    deadline_step: usize,
    completion_steps: usize,
    /// `step:power` pairs separated by `;`.
    served: String,
}

impl From<&RequestRecord> for RequestRow {
    fn from(r: &RequestRecord) -> Self {
        Self {
            id: r.id,
            kind: r.kind,
            enable_step: r.enable_step,
            deadline_step: r.deadline_step,
            completion_steps: r.completion_steps,
            served: r.served.iter().map(|(k, p)| format!("{k}:{p}")).collect::<Vec<_>>().join(";"),
        }
    }
}

impl TryFrom<RequestRow> for RequestRecord {
    type Error = HemError;

    fn try_from(r: RequestRow) -> Result<Self> {
        let served = if r.served.is_empty() {
            Vec::new()
        } else {
            r.served
                .split(';')
                .map(|pair| {
                    let (k, p) = pair
                        .split_once(':')
                        .ok_or_else(|| HemError::LedgerIntegrity(format!("request {}: malformed entry {pair:?}", r.id)))?;
                    let k = k
                        .parse()
                        .map_err(|_| HemError::LedgerIntegrity(format!("request {}: bad step {k:?}", r.id)))?;
                    let p = p
                        .parse()
                        .map_err(|_| HemError::LedgerIntegrity(format!("request {}: bad power {p:?}", r.id)))?;
                    Ok((k, p))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self {
            id: r.id,
            kind: r.kind,
            enable_step: r.enable_step,
            deadline_step: r.deadline_step,
            completion_steps: r.completion_steps,
            served,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub controller: String,
    pub fingerprint: String,
    pub case: u32,
    pub seed: u64,
    pub start_day: u32,
    pub n_steps: usize,
    pub dt: f64,
    pub house_area_ft2: f64,
    pub initial_indoor: f64,
    pub es_capacity_ah: f64,
    pub version: String,
    /// Wall-clock fields; never part of the deterministic output.
    pub created_unix_s: u64,
    pub wall_time_s: f64,
    pub max_step_time_s: f64,
    pub max_subproblem_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLedger {
    pub meta: RunMeta,
    pub steps: Vec<StepRecord>,
    pub requests: Vec<RequestRecord>,
}

impl RunLedger {
    pub fn dt(&self) -> f64 {
        self.meta.dt
    }

    /// Checks step ordering and that every served step lies after its request's enable step.
    pub fn check_integrity(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(HemError::EmptyLedger);
        }
        for (i, s) in self.steps.iter().enumerate() {
            if s.step != i {
                return Err(HemError::LedgerIntegrity(format!(
                    "step records out of order at row {}: expected step {i}, found {}",
                    i + 1,
                    s.step
                )));
            }
        }
        for r in &self.requests {
            if let Some(&(k, _)) = r.served.iter().find(|(k, _)| *k < r.enable_step) {
                return Err(HemError::LedgerIntegrity(format!(
                    "request {} served at step {k} before its enable step {}",
                    r.id, r.enable_step
                )));
            }
            if r.served.iter().any(|(k, _)| *k >= self.steps.len()) {
                return Err(HemError::LedgerIntegrity(format!(
                    "request {} served past the end of the run",
                    r.id
                )));
            }
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(STEPS_FILE))?;
        for s in &self.steps {
            w.serialize(s)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join(REQUESTS_FILE))?;
        for r in &self.requests {
            w.serialize(RequestRow::from(r))?;
        }
        w.flush()?;
        fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }

    /// Reads a ledger directory back. Truncated or malformed step files are
    /// reported with the last record that parsed.
    pub fn read(dir: &Path) -> Result<Self> {
        let meta: RunMeta = serde_json::from_str(&fs::read_to_string(dir.join(META_FILE))?)
            .map_err(|e| HemError::LedgerIntegrity(format!("{META_FILE}: {e}")))?;
        let mut steps = Vec::with_capacity(meta.n_steps);
        let mut rdr = csv::Reader::from_path(dir.join(STEPS_FILE))?;
        for row in rdr.deserialize::<StepRecord>() {
            match row {
                Ok(r) => steps.push(r),
                Err(e) => {
                    return Err(HemError::LedgerIntegrity(format!(
                        "{STEPS_FILE}: {e}; last valid record is {}",
                        last_valid(&steps)
                    )))
                }
            }
        }
        if steps.is_empty() {
            return Err(HemError::EmptyLedger);
        }
        if steps.len() != meta.n_steps {
            return Err(HemError::LedgerIntegrity(format!(
                "{STEPS_FILE}: expected {} records, found {}; last valid record is {}",
                meta.n_steps,
                steps.len(),
                last_valid(&steps)
            )));
        }
        let mut requests = Vec::new();
        let mut rdr = csv::Reader::from_path(dir.join(REQUESTS_FILE))?;
        for row in rdr.deserialize::<RequestRow>() {
            let row = row.map_err(|e| HemError::LedgerIntegrity(format!("{REQUESTS_FILE}: {e}")))?;
            requests.push(RequestRecord::try_from(row)?);
        }
        let ledger = Self { meta, steps, requests };
        ledger.check_integrity()?;
        Ok(ledger)
    }
}

fn last_valid(steps: &[StepRecord]) -> String {
    steps
        .last()
        .map_or_else(|| "none".to_string(), |s| format!("step {}", s.step))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn record(step: usize) -> StepRecord {
        StepRecord {
            step,
            time_s: step as f64 * 600.0,
            price: 0.1,
            ambient: 25.0,
            irradiance: 0.0,
            solar_available: 0.0,
            grid: 1000.0,
            solar_used: 0.0,
            curtailed: 0.0,
            storage: 0.0,
            hvac: 0.0,
            xev: 0.0,
            deferrable: 0.0,
            non_deferrable: 1000.0,
            t_indoor: 18.0,
            t_set: 18.0,
            soc_es: 0.2,
            soc_xev: 0.8,
            es_current: 0.0,
            u_hvac: 0.0,
            u_xev: 0,
            u_laundry: 0,
            u_dishwasher: 0,
            band_flag: 0,
            cap_flag: 0,
            ga_generations: 0,
            objective: 0.0,
        }
    }

    pub fn meta(n: usize) -> RunMeta {
        RunMeta {
            controller: "baseline".into(),
            fingerprint: "f".into(),
            case: 1,
            seed: 1,
            start_day: 0,
            n_steps: n,
            dt: 600.0,
            house_area_ft2: 2000.0,
            initial_indoor: 18.0,
            es_capacity_ah: 280.0,
            version: "test".into(),
            created_unix_s: 0,
            wall_time_s: 0.0,
            max_step_time_s: 0.0,
            max_subproblem_time_s: 0.0,
        }
    }

    pub fn ledger(n: usize) -> RunLedger {
        RunLedger {
            meta: meta(n),
            steps: (0..n).map(record).collect(),
            requests: vec![RequestRecord {
                id: 0,
                kind: DeferrableKind::Dishwasher,
                enable_step: 1,
                deadline_step: 49,
                completion_steps: 2,
                served: vec![(1, 1800.0), (2, 1800.1)],
            }],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut l = ledger(5);
        l.steps[2].grid = 0.1 + 0.2;
        l.write(dir.path()).unwrap();
        assert_eq!(RunLedger::read(dir.path()).unwrap(), l);
    }

    #[test]
    fn truncation_names_last_record() {
        let dir = tempfile::tempdir().unwrap();
        ledger(5).write(dir.path()).unwrap();
        let p = dir.path().join(STEPS_FILE);
        let text = fs::read_to_string(&p).unwrap();
        let cut: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        fs::write(&p, cut + "\n4,2400,0.1").unwrap();
        let err = RunLedger::read(dir.path()).unwrap_err().to_string();
        assert!(err.contains("last valid record is step 2"), "{err}");
        fs::write(&p, text.lines().take(3).collect::<Vec<_>>().join("\n") + "\n").unwrap();
        let err = RunLedger::read(dir.path()).unwrap_err().to_string();
        assert!(err.contains("expected 5 records, found 2"), "{err}");
    }

    #[test]
    fn empty_ledger() {
        let dir = tempfile::tempdir().unwrap();
        let mut l = ledger(0);
        l.requests.clear();
        l.write(dir.path()).unwrap();
        assert!(matches!(RunLedger::read(dir.path()), Err(HemError::EmptyLedger)));
    }

    #[test]
    fn served_before_enable_is_rejected() {
        let mut l = ledger(5);
        l.requests[0].served[0].0 = 0;
        assert!(matches!(l.check_integrity(), Err(HemError::LedgerIntegrity(_))));
    }
}
