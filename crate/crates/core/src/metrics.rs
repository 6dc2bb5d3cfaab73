//! Evaluation metrics computed from a run ledger, and baseline/HEM comparison.

use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::ledger::RunLedger;

const BAND_C: f64 = 1.0;

/// Σ price · max(grid, 0) · dt ($).
pub fn grid_cost(ledger: &RunLedger) -> f64 {
    let h = ledger.dt() / 3600.0;
    ledger.steps.iter().map(|s| s.price * s.grid.max(0.0) / 1000.0 * h).sum()
}

/// Σ (T_a − T_set)² · dt, in °C²·h.
pub fn comfort_cost(ledger: &RunLedger) -> f64 {
    let h = ledger.dt() / 3600.0;
    ledger.steps.iter().map(|s| (s.t_indoor - s.t_set).powi(2) * h).sum()
}

/// Steps whose indoor temperature ends outside `T_set ± 1 °C`.
pub fn band_violations(ledger: &RunLedger) -> usize {
    ledger
        .steps
        .iter()
        .filter(|s| (s.t_indoor - s.t_set).abs() > BAND_C + 1e-9)
        .count()
}

/// Σ over requests of (first activation − enable), in steps.
pub fn total_delay(ledger: &RunLedger) -> Result<usize> {
    ledger.check_integrity()?;
    Ok(ledger
        .requests
        .iter()
        .filter_map(|r| r.first_activation().map(|k| k - r.enable_step))
        .sum())
}

/// Energy (MWh) of deferrable load served outside each request's
/// immediate-dispatch window `[enable, enable + C)`.
pub fn deferred_power(ledger: &RunLedger) -> Result<f64> {
    ledger.check_integrity()?;
    let h = ledger.dt() / 3600.0;
    let mut wh = 0.0;
    for r in &ledger.requests {
        let window = r.enable_step..r.enable_step + r.served.len();
        wh += r
            .served
            .iter()
            .filter(|(k, _)| !window.contains(k))
            .map(|(_, p)| p * h)
            .sum::<f64>();
    }
    Ok(wh / 1e6)
}

/// Total deferrable energy served (MWh).
pub fn deferrable_power(ledger: &RunLedger) -> f64 {
    ledger.requests.iter().map(|r| r.energy_wh(ledger.dt())).sum::<f64>() / 1e6
}

/// Percentage of deferrable energy actually shifted.
pub fn deferral_efficiency(deferred: f64, deferrable: f64) -> Result<f64> {
    if deferrable <= 0.0 {
        return Err(HemError::NotApplicable("no deferrable load was served".into()));
    }
    Ok(deferred / deferrable * 100.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolarSplit {
    pub generated_kwh: f64,
    pub direct_kwh: f64,
    pub stored_kwh: f64,
    pub curtailed_kwh: f64,
    /// Shares of the solar energy actually used (sum to 100).
    pub direct_pct: f64,
    pub stored_pct: f64,
    /// Share of generation that was curtailed.
    pub curtailed_pct: f64,
}

/// Splits used PV energy into what met household load directly and what
/// charged the stationary pack.
pub fn solar_split(ledger: &RunLedger) -> SolarSplit {
    let h = ledger.dt() / 3600.0 / 1000.0;
    let mut out = SolarSplit::default();
    for s in &ledger.steps {
        let direct = s.solar_used.min(s.snapshot().household());
        out.direct_kwh += direct * h;
        out.stored_kwh += (s.solar_used - direct) * h;
        out.curtailed_kwh += s.curtailed * h;
        out.generated_kwh += s.solar_available * h;
    }
    let used = out.direct_kwh + out.stored_kwh;
    if used > 0.0 {
        out.direct_pct = out.direct_kwh / used * 100.0;
        out.stored_pct = out.stored_kwh / used * 100.0;
    }
    if out.generated_kwh > 0.0 {
        out.curtailed_pct = out.curtailed_kwh / out.generated_kwh * 100.0;
    }
    out
}

/// Σ |I| · dt of the stationary pack (Ah).
pub fn ah_throughput(ledger: &RunLedger) -> f64 {
    let h = ledger.dt() / 3600.0;
    ledger.steps.iter().map(|s| s.es_current.abs() * h).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub controller: String,
    pub fingerprint: String,
    pub n_steps: usize,
    pub grid_cost: f64,
    pub grid_energy_kwh: f64,
    pub peak_grid_kw: f64,
    pub comfort_cost: f64,
    pub band_violation_steps: usize,
    pub band_flag_steps: usize,
    pub cap_violation_steps: usize,
    pub n_requests: usize,
    pub total_delay: usize,
    pub deferred_power: f64,
    pub deferrable_power: f64,
    /// `None` when no deferrable load was served.
    pub deferral_efficiency: Option<f64>,
    pub solar_split: SolarSplit,
    pub ah_throughput: f64,
}

pub const REPORT_UNITS: &[(&str, &str)] = &[
    ("grid_cost", "$"),
    ("grid_energy_kwh", "kWh"),
    ("peak_grid_kw", "kW"),
    ("comfort_cost", "degC^2*h"),
    ("band_violation_steps", "steps"),
    ("band_flag_steps", "steps"),
    ("cap_violation_steps", "steps"),
    ("n_requests", "count"),
    ("total_delay", "steps"),
    ("deferred_power", "MWh"),
    ("deferrable_power", "MWh"),
    ("deferral_efficiency", "%"),
    ("solar_generated", "kWh"),
    ("solar_direct", "kWh"),
    ("solar_stored", "kWh"),
    ("solar_curtailed", "kWh"),
    ("solar_direct_share", "%"),
    ("solar_stored_share", "%"),
    ("solar_curtailed_share", "%"),
    ("ah_throughput", "Ah"),
];

impl MetricsReport {
    pub fn from_ledger(ledger: &RunLedger) -> Result<Self> {
        ledger.check_integrity()?;
        let h = ledger.dt() / 3600.0;
        let deferred = deferred_power(ledger)?;
        let deferrable = deferrable_power(ledger);
        let cap = 14_000.0;
        Ok(Self {
            controller: ledger.meta.controller.clone(),
            fingerprint: ledger.meta.fingerprint.clone(),
            n_steps: ledger.steps.len(),
            grid_cost: grid_cost(ledger),
            grid_energy_kwh: ledger.steps.iter().map(|s| s.grid.max(0.0) * h / 1000.0).sum(),
            peak_grid_kw: ledger.steps.iter().map(|s| s.grid).fold(0.0, f64::max) / 1000.0,
            comfort_cost: comfort_cost(ledger),
            band_violation_steps: band_violations(ledger),
            band_flag_steps: ledger.steps.iter().filter(|s| s.band_flag != 0).count(),
            cap_violation_steps: ledger.steps.iter().filter(|s| s.grid > cap + 1e-6).count(),
            n_requests: ledger.requests.len(),
            total_delay: total_delay(ledger)?,
            deferred_power: deferred,
            deferrable_power: deferrable,
            deferral_efficiency: deferral_efficiency(deferred, deferrable).ok(),
            solar_split: solar_split(ledger),
            ah_throughput: ah_throughput(ledger),
        })
    }

    /// Metric name and value pairs in [`REPORT_UNITS`] order; NaN marks "not applicable".
    pub fn values(&self) -> Vec<(&'static str, f64)> {
        let s = &self.solar_split;
        let v = [
            self.grid_cost,
            self.grid_energy_kwh,
            self.peak_grid_kw,
            self.comfort_cost,
            self.band_violation_steps as f64,
            self.band_flag_steps as f64,
            self.cap_violation_steps as f64,
            self.n_requests as f64,
            self.total_delay as f64,
            self.deferred_power,
            self.deferrable_power,
            self.deferral_efficiency.unwrap_or(f64::NAN),
            s.generated_kwh,
            s.direct_kwh,
            s.stored_kwh,
            s.curtailed_kwh,
            s.direct_pct,
            s.stored_pct,
            s.curtailed_pct,
            self.ah_throughput,
        ];
        REPORT_UNITS.iter().map(|(name, _)| *name).zip(v).collect()
    }

    /// `metric,unit,value` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "unit", "value"])?;
        for ((name, value), (_, unit)) in self.values().into_iter().zip(REPORT_UNITS) {
            w.write_record([name, unit, &fmt_value(value)])?;
        }
        csv_string(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub unit: String,
    pub baseline: f64,
    pub hem: f64,
    /// `hem − baseline`; negative grid-cost deltas mean the coordinator saved money.
    pub delta: f64,
    pub delta_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub fingerprint: String,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare(base: &MetricsReport, hem: &MetricsReport) -> Result<Comparison> {
    if base.fingerprint != hem.fingerprint {
        return Err(HemError::ScenarioMismatch(base.fingerprint.clone(), hem.fingerprint.clone()));
    }
    let rows = base
        .values()
        .into_iter()
        .zip(hem.values())
        .zip(REPORT_UNITS)
        .map(|(((name, b), (_, h)), (_, unit))| {
            let delta = h - b;
            ComparisonRow {
                metric: name.to_string(),
                unit: unit.to_string(),
                baseline: b,
                hem: h,
                delta,
                delta_pct: (b != 0.0 && b.is_finite() && h.is_finite()).then(|| delta / b.abs() * 100.0),
            }
        })
        .collect();
    Ok(Comparison {
        fingerprint: base.fingerprint.clone(),
        rows,
    })
}

impl Comparison {
    pub fn row(&self, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "unit", "baseline", "hem", "delta", "delta_pct"])?;
        for r in &self.rows {
            w.write_record([
                r.metric.as_str(),
                r.unit.as_str(),
                &fmt_value(r.baseline),
                &fmt_value(r.hem),
                &fmt_value(r.delta),
                &r.delta_pct.map(fmt_value).unwrap_or_default(),
            ])?;
        }
        csv_string(w)
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| HemError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::tests::ledger;
    use crate::ledger::RequestRecord;
    use crate::plant::DeferrableKind;

    fn one_hour_at(kw: f64, price: f64) -> RunLedger {
        let mut l = ledger(6);
        l.requests.clear();
        for s in &mut l.steps {
            s.grid = kw * 1000.0;
            s.non_deferrable = kw * 1000.0;
            s.price = price;
        }
        l
    }

    #[test]
    fn grid_cost_examples() {
        assert!((grid_cost(&one_hour_at(1.0, 0.10)) - 0.10).abs() < 1e-12);
        assert_eq!(grid_cost(&one_hour_at(0.0, 0.10)), 0.0);
        let a = one_hour_at(1.0, 0.1);
        let mut b = a.clone();
        b.steps
            .extend(a.steps.iter().enumerate().map(|(i, s)| StepRecordExt::at(s, i + 6)));
        assert!((grid_cost(&b) - 2.0 * grid_cost(&a)).abs() < 1e-12);
    }

    trait StepRecordExt {
        fn at(&self, step: usize) -> Self;
    }

    impl StepRecordExt for crate::ledger::StepRecord {
        fn at(&self, step: usize) -> Self {
            Self { step, ..*self }
        }
    }

    fn dishwasher(enable: usize, start: usize) -> RequestRecord {
        RequestRecord {
            id: 0,
            kind: DeferrableKind::Dishwasher,
            enable_step: enable,
            deadline_step: enable + 48,
            completion_steps: 6,
            served: (start..start + 6).map(|k| (k, 1800.0)).collect(),
        }
    }

    fn with_request(r: RequestRecord) -> RunLedger {
        let mut l = ledger(60);
        l.requests = vec![r];
        l
    }

    #[test]
    fn deferred_power_examples() {
        assert_eq!(deferred_power(&with_request(dishwasher(2, 2))).unwrap(), 0.0);
        let whole = deferred_power(&with_request(dishwasher(2, 20))).unwrap();
        assert!((whole - 1.8e-3).abs() < 1e-12);
        let half = deferred_power(&with_request(dishwasher(2, 5))).unwrap();
        assert!((half - 0.9e-3).abs() < 1e-12);
        let mut bad = dishwasher(10, 10);
        bad.served[0].0 = 3;
        assert!(matches!(
            deferred_power(&with_request(bad)),
            Err(HemError::LedgerIntegrity(_))
        ));
    }

    #[test]
    fn efficiency_formula() {
        for (num, den, printed) in [
            (12.16, 24.77, 49.08),
            (11.43, 24.77, 46.16),
            (11.24, 24.77, 45.38),
            (10.29, 23.58, 43.64),
        ] {
            assert!((deferral_efficiency(num, den).unwrap() - printed).abs() < 0.05);
        }
        assert_eq!(deferral_efficiency(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(deferral_efficiency(3.0, 3.0).unwrap(), 100.0);
        assert!(matches!(deferral_efficiency(0.0, 0.0), Err(HemError::NotApplicable(_))));
    }

    #[test]
    fn solar_split_accounts_for_generation() {
        let mut l = ledger(4);
        l.requests.clear();
        let set = |s: &mut crate::ledger::StepRecord, avail, used, load, storage| {
            s.solar_available = avail;
            s.solar_used = used;
            s.curtailed = avail - used;
            s.non_deferrable = load;
            s.storage = storage;
            s.grid = load - used - storage;
        };
        set(&mut l.steps[0], 3000.0, 3000.0, 1000.0, -2000.0);
        set(&mut l.steps[1], 3000.0, 1000.0, 1000.0, 0.0);
        set(&mut l.steps[2], 2000.0, 2000.0, 0.0, -2000.0);
        set(&mut l.steps[3], 0.0, 0.0, 500.0, 0.0);
        let s = solar_split(&l);
        assert!((s.direct_kwh + s.stored_kwh + s.curtailed_kwh - s.generated_kwh).abs() < 1e-12);
        assert!((s.direct_pct + s.stored_pct - 100.0).abs() < 1e-9);
        assert!((s.stored_kwh - 4000.0 / 6000.0).abs() < 1e-12);
        let mut idle = ledger(3);
        idle.steps[1].solar_available = 500.0;
        idle.steps[1].solar_used = 500.0;
        assert_eq!(solar_split(&idle).stored_pct, 0.0);
    }

    #[test]
    fn throughput_examples() {
        let mut l = ledger(12);
        assert_eq!(ah_throughput(&l), 0.0);
        for s in &mut l.steps {
            s.es_current = if s.step % 2 == 0 { 10.0 } else { -10.0 };
        }
        assert!((ah_throughput(&l) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn compare_identical_and_mismatched() {
        let r = MetricsReport::from_ledger(&ledger(10)).unwrap();
        let c = compare(&r, &r).unwrap();
        assert!(c.rows.iter().all(|row| row.delta == 0.0 || row.delta.is_nan()));
        assert!(c.row("comfort_cost").is_some());
        let mut other = r.clone();
        other.fingerprint = "g".into();
        assert!(matches!(compare(&r, &other), Err(HemError::ScenarioMismatch(..))));
        let mut cheaper = r.clone();
        cheaper.grid_cost -= 0.1;
        assert!(compare(&r, &cheaper).unwrap().row("grid_cost").unwrap().delta < 0.0);
        assert!(c.to_csv().unwrap().lines().count() == REPORT_UNITS.len() + 1);
    }

    #[test]
    fn report_is_pure() {
        let l = ledger(10);
        assert_eq!(
            MetricsReport::from_ledger(&l).unwrap(),
            MetricsReport::from_ledger(&l).unwrap()
        );
    }
}
