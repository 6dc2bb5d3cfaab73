//! Closed-loop simulation of the plant under a controller.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{hvac_deadband, storage_rule, DeadbandConfig, StorageAction, StorageRuleLimits};
use crate::error::{HemError, Result};
use crate::ledger::{RequestRecord, RunLedger, RunMeta, StepRecord};
use crate::plant::{balance_close, xev_charge_step, BatteryPack, ChargePhase, DeferrableKind, Loads};
use crate::scenario::{Request, Scenario};

/// Storage command for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EsCommand {
    /// Pack current in amperes, positive when discharging.
    Current(f64),
    /// Follow the measured surplus or deficit of this step.
    Rule(StorageAction),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commands {
    pub hvac: f64,
    pub xev: bool,
    pub laundry: bool,
    pub dishwasher: bool,
    pub es: EsCommand,
}

impl Default for Commands {
    fn default() -> Self {
        Self {
            hvac: 0.0,
            xev: false,
            laundry: false,
            dishwasher: false,
            es: EsCommand::Current(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Telemetry {
    pub band_flag: bool,
    pub cap_flag: bool,
    pub ga_generations: u32,
    pub objective: f64,
    /// Wall-clock seconds of the slowest sub-problem solve in this step.
    pub max_subproblem_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Decision {
    pub commands: Commands,
    pub telemetry: Telemetry,
}

/// Progress of one deferrable request.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestState {
    pub request: Request,
    pub served: Vec<(usize, f64)>,
    pub done: bool,
}

impl RequestState {
    pub fn is_pending(&self, k: usize) -> bool {
        !self.done && self.request.enable_step <= k
    }

    /// A non-interruptible cycle that has started and not finished.
    pub fn is_running(&self) -> bool {
        !self.done && !self.served.is_empty() && self.request.kind != DeferrableKind::Ev
    }

    pub fn remaining_steps(&self) -> usize {
        self.request.completion_steps.saturating_sub(self.served.len())
    }
}

/// Everything the controller can observe at the start of a step.
#[derive(Debug, Clone)]
pub struct PlantState {
    pub step: usize,
    pub t_indoor: f64,
    pub es: BatteryPack,
    pub ev_soc: f64,
    pub requests: Vec<RequestState>,
}

impl PlantState {
    pub fn new(scn: &Scenario) -> Self {
        Self {
            step: 0,
            t_indoor: scn.house.indoor_temp,
            es: scn.es.clone(),
            ev_soc: scn.ev.soc,
            requests: scn
                .requests
                .iter()
                .map(|r| RequestState {
                    request: r.clone(),
                    served: Vec::new(),
                    done: false,
                })
                .collect(),
        }
    }

    pub fn pending(&self) -> impl Iterator<Item = &RequestState> {
        let k = self.step;
        self.requests.iter().filter(move |r| r.is_pending(k))
    }

    pub fn pending_of(&self, kind: DeferrableKind) -> Option<&RequestState> {
        self.pending().find(|r| r.request.kind == kind)
    }

    pub fn es_temperature(&self, scn: &Scenario) -> f64 {
        self.es.temperature_source.resolve(scn.ambient[self.step], self.t_indoor)
    }
}

pub trait Controller {
    fn name(&self) -> &'static str;

    /// SOC window the controller keeps the stationary pack in.
    fn es_bounds(&self) -> (f64, f64);

    fn decide(&mut self, scn: &Scenario, state: &PlantState) -> Result<Decision>;
}

/// Applies one step of commands to the plant and returns the ledger row.
pub fn step_plant(scn: &Scenario, state: &mut PlantState, cmd: &Commands, es_bounds: (f64, f64)) -> Result<StepRecord> {
    let k = state.step;
    let dt = scn.dt();
    let ambient = scn.ambient[k];
    let mode = scn.mode[k];

    let hvac = scn.hvac.power_in_mode(cmd.hvac, mode, ambient)?.electrical;
    let t_next = scn
        .house
        .response(&scn.hvac, cmd.hvac, mode, ambient, dt)
        .apply(state.t_indoor);

    let mut xev = 0.0;
    let mut u_xev = 0;
    let mut u_ld = [0u8; 2];
    let mut deferrable = 0.0;
    let mut ev_soc = state.ev_soc;
    for r in state.requests.iter_mut() {
        if !r.is_pending(k) {
            continue;
        }
        match r.request.kind {
            DeferrableKind::Ev => {
                if r.served.is_empty() {
                    ev_soc = r.request.trip.map_or(ev_soc, |t| t.soc0);
                }
                if cmd.xev {
                    let mut pack = scn.ev.clone();
                    pack.soc = ev_soc;
                    let s = xev_charge_step(&pack, &scn.config.charger, scn.config.ev_temperature_c, dt)?;
                    if s.phase != ChargePhase::Done && s.drawn_power > 0.0 {
                        xev = s.drawn_power;
                        ev_soc = s.soc;
                        u_xev = 1;
                        r.served.push((k, s.drawn_power));
                    }
                    if r.served.len() >= r.request.completion_steps || s.phase == ChargePhase::Done {
                        r.done = true;
                    }
                }
            }
            kind => {
                let slot = usize::from(kind == DeferrableKind::Dishwasher);
                let on = !r.served.is_empty() || if slot == 1 { cmd.dishwasher } else { cmd.laundry };
                if on {
                    let profile = kind.cycle_profile(dt);
                    let p = profile[r.served.len()];
                    r.served.push((k, p));
                    deferrable += p;
                    u_ld[slot] = 1;
                    if r.served.len() == profile.len() {
                        r.done = true;
                    }
                }
            }
        }
    }

    let non_deferrable = scn.non_deferrable[k];
    let loads = Loads {
        hvac,
        xev,
        deferrable,
        non_deferrable,
    };
    let solar = scn.solar[k];
    let net = loads.total() - solar;
    let temp = state.es_temperature(scn);
    let es = &state.es;
    let requested = match cmd.es {
        EsCommand::Current(i) => i,
        EsCommand::Rule(StorageAction::Idle) => 0.0,
        EsCommand::Rule(StorageAction::Charge) => es.current_for_bus_power(net.min(0.0), es.soc, temp)?,
        EsCommand::Rule(StorageAction::Discharge) => es.current_for_bus_power(net.max(0.0), es.soc, temp)?,
    };
    let d = es.dispatch(es.soc, temp, requested, net, dt, es_bounds.0, es_bounds.1)?;
    let snap = balance_close(&loads, solar, d.bus_power);
    state.es.apply_current(d.current, dt);
    state.t_indoor = t_next;
    state.ev_soc = ev_soc;
    state.step += 1;

    Ok(StepRecord {
        step: k,
        time_s: scn.time[k],
        price: scn.price[k],
        ambient,
        irradiance: scn.irradiance[k],
        solar_available: solar,
        grid: snap.grid,
        solar_used: snap.solar,
        curtailed: snap.curtailed,
        storage: snap.storage,
        hvac: snap.hvac,
        xev: snap.xev,
        deferrable: snap.deferrable,
        non_deferrable: snap.non_deferrable,
        t_indoor: t_next,
        t_set: scn.t_set[k],
        soc_es: state.es.soc,
        soc_xev: ev_soc,
        es_current: d.current,
        u_hvac: cmd.hvac,
        u_xev,
        u_laundry: u_ld[0],
        u_dishwasher: u_ld[1],
        band_flag: 0,
        cap_flag: 0,
        ga_generations: 0,
        objective: 0.0,
    })
}

/// Runs the whole scenario in closed loop.
pub fn simulate(scn: &Scenario, controller: &mut dyn Controller) -> Result<RunLedger> {
    let started = Instant::now();
    let mut state = PlantState::new(scn);
    let mut steps = Vec::with_capacity(scn.n_steps());
    let mut max_step = 0.0f64;
    let mut max_sub = 0.0f64;
    let bounds = controller.es_bounds();
    for _ in 0..scn.n_steps() {
        let t = Instant::now();
        let decision = controller.decide(scn, &state)?;
        let mut rec = step_plant(scn, &mut state, &decision.commands, bounds)?;
        let tel = decision.telemetry;
        rec.band_flag = u8::from(tel.band_flag);
        rec.cap_flag = u8::from(tel.cap_flag);
        rec.ga_generations = tel.ga_generations;
        rec.objective = tel.objective;
        max_step = max_step.max(t.elapsed().as_secs_f64());
        max_sub = max_sub.max(tel.max_subproblem_s);
        steps.push(rec);
    }
    if let Some(r) = state.requests.iter().find(|r| !r.done) {
        return Err(HemError::InfeasibleRequest {
            request: format!("{} #{}", r.request.kind.label(), r.request.id),
            reason: format!(
                "served {} of {} steps by the end of the run",
                r.served.len(),
                r.request.completion_steps
            ),
            earliest_completion: None,
        });
    }
    let requests = state
        .requests
        .into_iter()
        .map(|r| RequestRecord {
            id: r.request.id,
            kind: r.request.kind,
            enable_step: r.request.enable_step,
            deadline_step: r.request.deadline_step,
            completion_steps: r.request.completion_steps,
            served: r.served,
        })
        .collect();
    let meta = RunMeta {
        controller: controller.name().to_string(),
        fingerprint: scn.fingerprint.clone(),
        case: scn.case.id,
        seed: scn.config.seed,
        start_day: scn.calendar.start_day,
        n_steps: scn.n_steps(),
        dt: scn.dt(),
        house_area_ft2: scn.house_area_ft2,
        initial_indoor: scn.house.indoor_temp,
        es_capacity_ah: scn.es.capacity_ah(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_time_s: started.elapsed().as_secs_f64(),
        max_step_time_s: max_step,
        max_subproblem_time_s: max_sub,
    };
    Ok(RunLedger { meta, steps, requests })
}

/// Dead-band thermostat, rule-based storage and immediate dispatch.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub deadband: DeadbandConfig,
    pub storage: StorageRuleLimits,
}

#[derive(Debug, Clone)]
pub struct BaselineController {
    pub config: BaselineConfig,
    prev_hvac: f64,
}

impl BaselineController {
    pub fn new(config: BaselineConfig) -> Result<Self> {
        config.deadband.validate()?;
        Ok(Self { config, prev_hvac: 0.0 })
    }
}

impl Controller for BaselineController {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn es_bounds(&self) -> (f64, f64) {
        (self.config.storage.discharge_above, self.config.storage.charge_below)
    }

    fn decide(&mut self, scn: &Scenario, state: &PlantState) -> Result<Decision> {
        let k = state.step;
        let mode = scn.mode[k];
        let hvac = hvac_deadband(&self.config.deadband, state.t_indoor, mode, self.prev_hvac);
        self.prev_hvac = hvac;
        let mut cmd = Commands {
            hvac,
            ..Default::default()
        };
        for r in state.pending() {
            match r.request.kind {
                DeferrableKind::Ev => cmd.xev = true,
                DeferrableKind::Laundry => cmd.laundry = true,
                DeferrableKind::Dishwasher => cmd.dishwasher = true,
            }
        }

        let dt = scn.dt();
        let hvac_p = scn.hvac.power_in_mode(hvac, mode, scn.ambient[k])?.electrical;
        let mut household = hvac_p + scn.non_deferrable[k];
        for r in state.pending() {
            household += match r.request.kind {
                DeferrableKind::Ev => {
                    let mut pack = scn.ev.clone();
                    pack.soc = if r.served.is_empty() {
                        r.request.trip.map_or(state.ev_soc, |t| t.soc0)
                    } else {
                        state.ev_soc
                    };
                    xev_charge_step(&pack, &scn.config.charger, scn.config.ev_temperature_c, dt)?.drawn_power
                }
                kind => kind.cycle_profile(dt)[r.served.len()],
            };
        }
        let action = storage_rule(&self.config.storage, state.es.soc, scn.solar[k], household);
        cmd.es = EsCommand::Rule(action);
        Ok(Decision {
            commands: cmd,
            telemetry: Telemetry::default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{DataSet, ScenarioConfig};

    fn scenario(days: u32) -> Scenario {
        let cfg = ScenarioConfig {
            days,
            ..Default::default()
        };
        Scenario::build(&cfg, &DataSet::embedded().unwrap()).unwrap()
    }

    #[test]
    fn baseline_week_is_balanced_and_never_defers() {
        let scn = scenario(7);
        let mut c = BaselineController::new(BaselineConfig::default()).unwrap();
        let ledger = simulate(&scn, &mut c).unwrap();
        assert_eq!(ledger.steps.len(), 1008);
        for s in &ledger.steps {
            assert!(s.snapshot().is_balanced(), "step {}", s.step);
            assert!(s.grid >= -1e-9);
            assert!((0.2 - 1e-9..=0.9 + 1e-9).contains(&s.soc_es));
        }
        for r in &ledger.requests {
            assert_eq!(r.first_activation(), Some(r.enable_step));
            let steps: Vec<usize> = r.served.iter().map(|s| s.0).collect();
            assert_eq!(steps, (r.enable_step..r.enable_step + r.completion_steps).collect::<Vec<_>>());
        }
        let temps: Vec<f64> = ledger.steps.iter().map(|s| s.t_indoor).collect();
        let (lo, hi) = temps.iter().fold((f64::MAX, f64::MIN), |(a, b), &t| (a.min(t), b.max(t)));
        assert!(lo > 16.0 && hi < 20.0, "indoor range {lo}..{hi}");
    }

    #[test]
    fn ev_serves_exact_charge_profile() {
        let scn = scenario(2);
        let mut c = BaselineController::new(BaselineConfig::default()).unwrap();
        let ledger = simulate(&scn, &mut c).unwrap();
        let ev = ledger.requests.iter().find(|r| r.kind == DeferrableKind::Ev).unwrap();
        let mut pack = scn.ev.clone();
        pack.soc = scn.requests[ev.id].trip.unwrap().soc0;
        let profile = crate::plant::charge_profile(&pack, &scn.config.charger, 25.0, 600.0, 1000).unwrap();
        let served: Vec<f64> = ev.served.iter().map(|s| s.1).collect();
        assert_eq!(served, profile);
        assert!(served.iter().all(|&p| p <= 7560.0 + 1e-9));
    }
}
