//! Executes runs in a worker pool and writes ledgers, reports and the campaign table.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use hemsim::ledger::RunLedger;
use hemsim::metrics::{compare, Comparison, MetricsReport};
use hemsim::optimizer::HemController;
use hemsim::scenario::{DataSet, Scenario};
use hemsim::sim::{simulate, BaselineController, Controller};

use crate::campaign::{CampaignSpec, ControllerKind, RunSpec};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const COMPARISON_CSV: &str = "comparison.csv";
pub const CAMPAIGN_CSV: &str = "campaign.csv";
pub const FAILURES_TXT: &str = "failures.txt";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub label: String,
    pub case: u32,
    pub seed: u64,
    pub days: u32,
    pub house_area_ft2: f64,
    pub reports: Vec<MetricsReport>,
    pub comparison: Option<Comparison>,
}

impl RunOutcome {
    pub fn report(&self, controller: ControllerKind) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.controller == controller.to_string())
    }
}

pub fn write_report(report: &MetricsReport, dir: &Path) -> Result<()> {
    std::fs::write(dir.join(REPORT_JSON), serde_json::to_string_pretty(report)? + "\n")?;
    std::fs::write(dir.join(REPORT_CSV), report.to_csv()?)?;
    Ok(())
}

fn simulate_with(scn: &Scenario, run: &RunSpec, kind: ControllerKind) -> Result<RunLedger> {
    let mut controller: Box<dyn Controller> = match kind {
        ControllerKind::Baseline => Box::new(BaselineController::new(run.baseline.clone())?),
        ControllerKind::Hem => Box::new(HemController::new(run.optimizer.clone())?),
    };
    Ok(simulate(scn, controller.as_mut())?)
}

/// Runs every selected controller on one scenario and writes the results under `out/<label>`.
pub fn execute(run: &RunSpec, data: &DataSet, out: &Path) -> Result<RunOutcome> {
    let scn = Scenario::build(&run.scenario, data).context("building scenario")?;
    let dir = out.join(&run.label);
    let mut reports = Vec::new();
    for &kind in &run.controllers {
        let ledger = simulate_with(&scn, run, kind).with_context(|| format!("{kind} simulation"))?;
        let report = MetricsReport::from_ledger(&ledger)?;
        let sub = dir.join(kind.to_string());
        ledger.write(&sub).with_context(|| format!("writing {}", sub.display()))?;
        write_report(&report, &sub)?;
        reports.push(report);
    }
    let comparison = match reports.as_slice() {
        [base, hem] => {
            let c = compare(base, hem)?;
            std::fs::write(dir.join(COMPARISON_CSV), c.to_csv()?)?;
            Some(c)
        }
        _ => None,
    };
    Ok(RunOutcome {
        label: run.label.clone(),
        case: run.scenario.case,
        seed: run.scenario.seed,
        days: run.scenario.days,
        house_area_ft2: scn.house_area_ft2,
        reports,
        comparison,
    })
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".to_string())
}

/// Runs the campaign on `workers` threads. A failing run is reported in its
/// slot and never stops the others.
pub fn run_campaign(spec: &CampaignSpec, data: &DataSet, out: &Path, workers: usize) -> Vec<Result<RunOutcome, String>> {
    let n = spec.runs.len();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunOutcome, String>>>> = Mutex::new(vec![None; n]);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(run) = spec.runs.get(i) else { break };
                eprintln!("[{}/{n}] {} started", i + 1, run.label);
                let result = match catch_unwind(AssertUnwindSafe(|| execute(run, data, out))) {
                    Ok(Ok(o)) => Ok(o),
                    Ok(Err(e)) => Err(format!("{e:#}")),
                    Err(p) => Err(format!("panicked: {}", panic_message(p))),
                };
                match &result {
                    Ok(_) => eprintln!("[{}/{n}] {} done", i + 1, run.label),
                    Err(e) => eprintln!("[{}/{n}] {} FAILED: {e}", i + 1, run.label),
                }
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every run slot is filled"))
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// One row per run in campaign order.
pub fn campaign_table(specs: &[RunSpec], results: &[Result<RunOutcome, String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run",
        "case",
        "seed",
        "days",
        "house_area_ft2",
        "status",
        "baseline_cost",
        "hem_cost",
        "savings_pct",
        "deferred_mwh",
        "deferrable_mwh",
        "deferral_efficiency_pct",
        "baseline_ah",
        "hem_ah",
        "baseline_stored_pct",
        "hem_stored_pct",
    ])?;
    for (spec, result) in specs.iter().zip(results) {
        let row = match result {
            Ok(o) => {
                let b = o.report(ControllerKind::Baseline);
                let h = o.report(ControllerKind::Hem);
                let savings = b.zip(h).map(|(b, h)| 100.0 * (b.grid_cost - h.grid_cost) / b.grid_cost);
                vec![
                    o.label.clone(),
                    o.case.to_string(),
                    o.seed.to_string(),
                    o.days.to_string(),
                    format!("{:.0}", o.house_area_ft2),
                    "ok".to_string(),
                    cell(b.map(|r| r.grid_cost)),
                    cell(h.map(|r| r.grid_cost)),
                    cell(savings),
                    cell(h.map(|r| r.deferred_power)),
                    cell(h.map(|r| r.deferrable_power)),
                    cell(h.and_then(|r| r.deferral_efficiency)),
                    cell(b.map(|r| r.ah_throughput)),
                    cell(h.map(|r| r.ah_throughput)),
                    cell(b.map(|r| r.solar_split.stored_pct)),
                    cell(h.map(|r| r.solar_split.stored_pct)),
                ]
            }
            Err(_) => {
                let mut row = vec![
                    spec.label.clone(),
                    spec.scenario.case.to_string(),
                    spec.scenario.seed.to_string(),
                    spec.scenario.days.to_string(),
                    String::new(),
                    "failed".to_string(),
                ];
                row.resize(16, String::new());
                row
            }
        };
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes the campaign table and, if any run failed, the failure list.
pub fn write_summary(out: &Path, specs: &[RunSpec], results: &[Result<RunOutcome, String>]) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let path = out.join(CAMPAIGN_CSV);
    std::fs::write(&path, campaign_table(specs, results)?)?;
    let failures: Vec<String> = specs
        .iter()
        .zip(results)
        .filter_map(|(s, r)| r.as_ref().err().map(|e| format!("{}: {e}", s.label)))
        .collect();
    let fail_path = out.join(FAILURES_TXT);
    if failures.is_empty() {
        if fail_path.exists() {
            std::fs::remove_file(&fail_path)?;
        }
    } else {
        std::fs::write(&fail_path, failures.join("\n") + "\n")?;
    }
    Ok(path)
}

#[derive(Debug)]
pub enum ReplayError {
    /// The ledger is missing, empty, truncated or corrupt.
    Ledger(anyhow::Error),
    /// The recomputed report differs from the stored one.
    Mismatch(String),
}

/// Recomputes the metrics of a persisted ledger and checks them against a
/// stored report next to it, when there is one.
pub fn replay(dir: &Path) -> Result<MetricsReport, ReplayError> {
    let ledger = RunLedger::read(dir).map_err(|e| ReplayError::Ledger(e.into()))?;
    let report = MetricsReport::from_ledger(&ledger).map_err(|e| ReplayError::Ledger(e.into()))?;
    let stored = dir.join(REPORT_JSON);
    if stored.exists() {
        let text = std::fs::read_to_string(&stored).map_err(|e| ReplayError::Ledger(e.into()))?;
        let fresh = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        if text != fresh {
            return Err(ReplayError::Mismatch(format!(
                "{} differs from the recomputed metrics",
                stored.display()
            )));
        }
    }
    Ok(report)
}
