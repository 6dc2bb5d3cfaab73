//! Receding-horizon coordinator. Every step a horizon instance is built from
//! the present observations, three sub-problems are solved in sequence with
//! the GA, a grid-cap check bars the largest contributor from violating steps
//! if needed, and the first step of the plan is applied.

pub mod capping;
pub mod model;
pub mod oracle;
pub mod subproblems;

use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::ga::GaSettings;
use crate::plant::{charge_profile, DeferrableKind};
use crate::scenario::Scenario;
use crate::sim::{Commands, Controller, Decision, EsCommand, PlantState, Telemetry};

pub use capping::{capping_check, shed_storage, violating_steps, CapCheck, TabuAppliance};
pub use model::{ApplianceRequest, CostWeights, EsModel, HorizonProblem, HorizonState, HvacModel, Limits, Loads};
pub use subproblems::{
    block_window, deferral_cost, ev_window, solve_appliances_es, solve_hvac_es, solve_xev_es, thermostat_plan, Actuator,
    ControlPlan, SolveOptions, TabuSet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub horizon_h: f64,
    /// Half-width of the comfort band (°C).
    pub comfort_band: f64,
    /// Fraction of the band kept free as a planning margin.
    pub band_backoff: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub grid_cap_w: f64,
    /// Comfort weight at zero indoor/outdoor stress ($/°C² per step).
    pub comfort_base: f64,
    /// Temperature gap that doubles the comfort weight (°C).
    pub comfort_norm: f64,
    pub deferral_weight: f64,
    pub band_linear: f64,
    pub band_quadratic: f64,
    /// $ per kW above the cap per step.
    pub cap_penalty: f64,
    /// Stored energy left at the horizon end is valued at this fraction of
    /// the cheapest price in the horizon, per delivered kWh.
    pub terminal_factor: f64,
    /// Discrete storage levels as fractions of the pack current bound.
    pub es_levels: Option<Vec<f64>>,
    pub warm_start: bool,
    /// Random seed of the GA; the scenario seed when absent.
    pub seed: Option<u64>,
    pub ga: GaSettings,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            horizon_h: 8.0,
            comfort_band: 1.0,
            band_backoff: 0.1,
            soc_min: 0.2,
            soc_max: 0.8,
            grid_cap_w: 14_000.0,
            comfort_base: 0.01,
            comfort_norm: 10.0,
            deferral_weight: 6e-7,
            band_linear: 1.0,
            band_quadratic: 10.0,
            cap_penalty: 1.0,
            terminal_factor: 0.5,
            es_levels: None,
            warm_start: true,
            seed: None,
            ga: GaSettings::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HemError::Config(format!("optimizer: {m}")));
        if !(self.horizon_h > 0.0) {
            return bad("horizon must be > 0 h");
        }
        if !(self.comfort_band > 0.0) || !(0.0..1.0).contains(&self.band_backoff) {
            return bad("comfort band must be > 0 and the backoff in [0, 1)");
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return bad("storage SOC bounds must satisfy 0 <= min < max <= 1");
        }
        if !(self.grid_cap_w > 0.0) || !(self.comfort_norm > 0.0) {
            return bad("grid cap and comfort normalisation must be > 0");
        }
        let weights = [
            self.comfort_base,
            self.deferral_weight,
            self.band_linear,
            self.band_quadratic,
            self.cap_penalty,
            self.terminal_factor,
        ];
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return bad("cost weights must be >= 0");
        }
        if let Some(l) = &self.es_levels {
            if l.is_empty() || l.iter().any(|f| !(-1.0..=1.0).contains(f)) {
                return bad("storage levels must be a nonempty set of fractions in [-1, 1]");
            }
        }
        self.ga.validate()
    }
}

/// Setpoint for the given reference ambient temperature: heating setpoint at
/// or below `t_ref`, cooling setpoint above it.
pub fn setpoint(ambient: f64, t_ref: f64, heat_setpoint: f64, cool_setpoint: f64) -> f64 {
    if ambient <= t_ref {
        heat_setpoint
    } else {
        cool_setpoint
    }
}

/// Horizon length in seconds at time `clock`, truncated so it never runs past `t_end`.
pub fn shrink_horizon(clock: f64, t_h: f64, t_end: f64) -> f64 {
    if clock + t_h > t_end {
        (t_end - clock).max(0.0)
    } else {
        t_h
    }
}

/// Freezes the present observations into a horizon instance. Returns `None`
/// once the run has no steps left.
pub fn build_horizon(cfg: &OptimizerConfig, scn: &Scenario, state: &PlantState) -> Result<Option<HorizonProblem>> {
    let k = state.step;
    let dt = scn.dt();
    let total = scn.n_steps();
    if k >= total {
        return Ok(None);
    }
    let t_end = scn.time[0] + total as f64 * dt;
    let t_h = shrink_horizon(scn.time[k], cfg.horizon_h * 3600.0, t_end);
    let n = ((t_h / dt).round() as usize).clamp(1, total - k);

    let ambient = scn.ambient[k];
    let t_set = scn.t_set[k];
    let hvac = HvacModel::new(&scn.house, &scn.hvac, scn.mode[k], ambient, dt)?;
    let es = EsModel::new(&state.es, state.es_temperature(scn), cfg.soc_min, cfg.soc_max)?;

    let mut committed = vec![0.0; n];
    let mut requests = Vec::new();
    let mut seen = Vec::new();
    for rs in state.pending() {
        let r = &rs.request;
        if seen.contains(&r.kind) {
            continue;
        }
        seen.push(r.kind);
        let served = rs.served.len();
        let power = match r.kind {
            DeferrableKind::Ev => {
                let mut pack = scn.ev.clone();
                pack.soc = if served == 0 {
                    r.trip.map_or(state.ev_soc, |t| t.soc0)
                } else {
                    state.ev_soc
                };
                let left = r.completion_steps.saturating_sub(served);
                charge_profile(&pack, &scn.config.charger, scn.config.ev_temperature_c, dt, left)?
            }
            kind => {
                let profile = kind.cycle_profile(dt);
                let rest = profile[served.min(profile.len())..].to_vec();
                if served > 0 {
                    for (c, p) in committed.iter_mut().zip(&rest) {
                        *c += p;
                    }
                }
                rest
            }
        };
        requests.push(ApplianceRequest {
            id: r.id,
            kind: r.kind,
            enable_step: r.enable_step,
            deadline_step: r.deadline_step,
            completion_steps: r.completion_steps,
            served,
            power,
        });
    }

    let price = scn.price[k..k + n].to_vec();
    let floor = price.iter().copied().fold(f64::INFINITY, f64::min);
    let comfort = cfg.comfort_base * (1.0 + (ambient - t_set).abs() / cfg.comfort_norm);
    let es_current = state.es.max_current();
    let p = HorizonProblem {
        start_step: k,
        n_steps: n,
        dt,
        t_set,
        ambient,
        solar: scn.solar[k],
        non_deferrable: scn.non_deferrable[k],
        committed,
        initial: HorizonState {
            t_indoor: state.t_indoor,
            soc_xev: state.ev_soc,
            soc_es: state.es.soc,
        },
        hvac,
        es,
        requests,
        limits: Limits {
            band: cfg.comfort_band,
            band_backoff: cfg.band_backoff,
            soc_min: cfg.soc_min,
            soc_max: cfg.soc_max,
            es_current,
            grid_cap: cfg.grid_cap_w,
        },
        weights: CostWeights {
            elec_price: price,
            deferral_weight: cfg.deferral_weight,
            comfort_weight: vec![comfort; n],
            band_linear: cfg.band_linear,
            band_quadratic: cfg.band_quadratic,
            cap_penalty: cfg.cap_penalty,
            terminal_value: cfg.terminal_factor * floor * state.es.round_trip_eff,
        },
    };
    p.validate()?;
    Ok(Some(p))
}

/// Combined plan of one horizon instance after the capping loop.
#[derive(Debug, Clone)]
pub struct SolvedHorizon {
    pub plan: ControlPlan,
    /// Actuators barred by the capping loop, in order.
    pub tabu: Vec<Actuator>,
    pub max_solve_s: f64,
}

/// Runs the three sub-problems in order, then re-solves from the stage of
/// each tabu appliance until the grid cap holds or no actuator is left to
/// bar. Random streams are derived from `seed` and `stream`.
pub fn solve_horizon(
    p: &HorizonProblem,
    ga: &GaSettings,
    es_levels: Option<&[f64]>,
    seed: u64,
    stream: u64,
    warm: Option<&ControlPlan>,
) -> Result<SolvedHorizon> {
    let warm = warm.filter(|w| w.n_steps() == p.n_steps);
    let mut tabu = TabuSet::new(p.n_steps);
    let mut stages: Vec<ControlPlan> = Vec::with_capacity(3);
    let mut from = 1;
    let mut pass = 0u64;
    let mut max_solve = 0.0f64;
    let plan = loop {
        let opts = SolveOptions {
            ga,
            es_levels,
            rng_seed: seed,
            rng_stream: stream * 16 + pass,
            warm,
        };
        stages.truncate(from - 1);
        if from <= 1 {
            stages.push(solve_hvac_es(p, &tabu, &opts)?);
        }
        if from <= 2 {
            stages.push(solve_xev_es(p, &stages[0], &tabu, &opts)?);
        }
        stages.push(solve_appliances_es(p, &stages[0], &stages[1], &tabu, &opts)?);
        let mut plan = stages[2].clone();
        max_solve = max_solve.max(plan.max_solve_s);
        match capping_check(&plan, p, &tabu) {
            CapCheck::Ok => break plan,
            CapCheck::Tabu(t) => {
                tabu.forbid(t.actuator, &t.steps);
                from = t.actuator.stage();
                pass += 1;
            }
            CapCheck::Unresolved { steps } => {
                shed_storage(&mut plan, p, &steps);
                break plan;
            }
        }
    };
    Ok(SolvedHorizon {
        plan,
        tabu: tabu.used().to_vec(),
        max_solve_s: max_solve,
    })
}

/// Result of one controller step.
#[derive(Debug, Clone)]
pub struct MpcStep {
    pub decision: Decision,
    pub plan: ControlPlan,
    pub problem: HorizonProblem,
    /// Actuators barred by the capping loop, in order.
    pub tabu: Vec<Actuator>,
}

/// Solves the sub-problems in order, runs the capping loop and returns the
/// first-step commands. `warm` is the previous step's plan advanced by one step.
pub fn mpc_step(
    cfg: &OptimizerConfig,
    scn: &Scenario,
    state: &PlantState,
    warm: Option<&ControlPlan>,
) -> Result<Option<MpcStep>> {
    let Some(p) = build_horizon(cfg, scn, state)? else {
        return Ok(None);
    };
    let seed = cfg.seed.unwrap_or(scn.config.seed);
    let solved = solve_horizon(&p, &cfg.ga, cfg.es_levels.as_deref(), seed, state.step as u64, warm)?;
    let (plan, max_solve) = (solved.plan, solved.max_solve_s);

    let t_next = plan.temperatures(&p)[0];
    let cap_flag = violating_steps(&plan, &p).first() == Some(&0);
    let decision = Decision {
        commands: Commands {
            hvac: plan.u_hvac[0],
            xev: plan.u_xev[0] == 1,
            laundry: plan.u_laundry[0] == 1,
            dishwasher: plan.u_dishwasher[0] == 1,
            es: EsCommand::Current(plan.u_es[0]),
        },
        telemetry: Telemetry {
            band_flag: (t_next - p.t_set).abs() > p.limits.band + 1e-9,
            cap_flag,
            ga_generations: plan.generations,
            objective: plan.objective,
            max_subproblem_s: max_solve,
        },
    };
    Ok(Some(MpcStep {
        decision,
        plan,
        problem: p,
        tabu: solved.tabu,
    }))
}

/// Coordinated controller built on [`mpc_step`].
#[derive(Debug, Clone)]
pub struct HemController {
    pub config: OptimizerConfig,
    last: Option<(usize, ControlPlan)>,
}

impl HemController {
    pub fn new(config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, last: None })
    }

    /// Plan chosen at the most recent step.
    pub fn last_plan(&self) -> Option<&ControlPlan> {
        self.last.as_ref().map(|(_, p)| p)
    }
}

impl Controller for HemController {
    fn name(&self) -> &'static str {
        "hem"
    }

    fn es_bounds(&self) -> (f64, f64) {
        (self.config.soc_min, self.config.soc_max)
    }

    fn decide(&mut self, scn: &Scenario, state: &PlantState) -> Result<Decision> {
        let k = state.step;
        let n = ((shrink_horizon(
            scn.time[k],
            self.config.horizon_h * 3600.0,
            scn.time[0] + scn.n_steps() as f64 * scn.dt(),
        ) / scn.dt())
        .round() as usize)
            .clamp(1, scn.n_steps() - k);
        let warm = match (&self.last, self.config.warm_start) {
            (Some((prev, plan)), true) if prev + 1 == k => Some(plan.advanced(n)),
            _ => None,
        };
        let Some(step) = mpc_step(&self.config, scn, state, warm.as_ref())? else {
            return Ok(Decision::default());
        };
        self.last = Some((k, step.plan));
        Ok(step.decision)
    }
}

#[cfg(test)]
mod tests;
