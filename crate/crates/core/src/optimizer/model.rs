//! Horizon instance and its forward model.
//!
//! External inputs (ambient temperature, solar power and the non-deferrable
//! load) are held at their present values over the horizon, so the HVAC
//! power and thermal response of each command level are constants and the
//! storage maps can be sliced at one temperature.

use crate::error::{HemError, Result};
use crate::plant::battery::soc_after;
use crate::plant::{BatteryPack, DeferrableKind, Dispatch, HvacMode, HvacUnit, PowerSnapshot, ThermalHouse, ThermalResponse};
use crate::table::Table1D;

/// HVAC electrical power and thermal response per admissible command.
#[derive(Debug, Clone, PartialEq)]
pub struct HvacModel {
    pub mode: HvacMode,
    pub levels: Vec<f64>,
    pub power: Vec<f64>,
    pub response: Vec<ThermalResponse>,
}

impl HvacModel {
    pub fn new(house: &ThermalHouse, unit: &HvacUnit, mode: HvacMode, ambient: f64, dt: f64) -> Result<Self> {
        let levels = HvacUnit::levels(mode).to_vec();
        let mut power = Vec::with_capacity(levels.len());
        let mut response = Vec::with_capacity(levels.len());
        for &u in &levels {
            power.push(unit.power_in_mode(u, mode, ambient)?.electrical);
            response.push(house.response(unit, u, mode, ambient, dt));
        }
        Ok(Self {
            mode,
            levels,
            power,
            response,
        })
    }

    /// Index of the admissible level nearest to `command`.
    pub fn index(&self, command: f64) -> usize {
        self.levels
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - command).abs().total_cmp(&(b.1 - command).abs()))
            .map_or(0, |(i, _)| i)
    }
}

/// Stationary pack with OCV and R0 sliced at the held temperature.
#[derive(Debug, Clone)]
pub struct EsModel {
    pub pack: BatteryPack,
    pub ocv: Table1D,
    pub r0: Table1D,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl EsModel {
    pub fn new(pack: &BatteryPack, temp: f64, soc_min: f64, soc_max: f64) -> Result<Self> {
        let slice = |axis: &[f64], f: &dyn Fn(f64) -> Result<f64>| -> Result<Table1D> {
            let y = axis.iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?;
            Table1D::new(axis.to_vec(), y)
        };
        Ok(Self {
            ocv: slice(&pack.cell.ocv.x, &|s| pack.ocv(s, temp))?,
            r0: slice(&pack.cell.r0.x, &|s| pack.r0(s, temp))?,
            pack: pack.clone(),
            soc_min,
            soc_max,
        })
    }

    pub fn max_current(&self) -> f64 {
        self.pack.max_current()
    }

    pub fn dispatch(&self, soc: f64, requested: f64, net_load: f64, dt: f64) -> Dispatch {
        let ocv = self.ocv.eval_clamped(soc);
        let r0 = self.r0.eval_clamped(soc);
        self.pack
            .dispatch_from(ocv, r0, soc, requested, net_load, dt, self.soc_min, self.soc_max)
    }

    /// Pack current that exchanges `bus_power` with the bus at `soc`.
    pub fn current_for(&self, soc: f64, bus_power: f64) -> f64 {
        let ocv = self.ocv.eval_clamped(soc);
        let r0 = self.r0.eval_clamped(soc);
        self.pack.current_for_bus_power_from(ocv, r0, bus_power)
    }

    pub fn next_soc(&self, soc: f64, current: f64, dt: f64) -> f64 {
        soc_after(soc, current, dt, self.pack.capacity_ah()).soc
    }

    /// Nominal pack energy in kWh per unit SOC.
    pub fn kwh_per_soc(&self) -> f64 {
        self.pack.nominal_energy_wh() / 1000.0
    }
}

/// Pending deferrable request seen from the current step. Steps are absolute
/// and `deadline_step` is exclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceRequest {
    pub id: usize,
    pub kind: DeferrableKind,
    pub enable_step: usize,
    pub deadline_step: usize,
    pub completion_steps: usize,
    /// Steps already served.
    pub served: usize,
    /// Bus power of each remaining "on" step, in order.
    pub power: Vec<f64>,
}

impl ApplianceRequest {
    pub fn remaining(&self) -> usize {
        self.power.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.enable_step > self.deadline_step || self.served + self.power.len() > self.completion_steps {
            return Err(HemError::InvalidParameter(format!(
                "{} request {}: enable {} deadline {} completion {} served {} remaining {}",
                self.kind.label(),
                self.id,
                self.enable_step,
                self.deadline_step,
                self.completion_steps,
                self.served,
                self.power.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    /// Energy price per horizon step ($/kWh).
    pub elec_price: Vec<f64>,
    /// Weight of the deferral term ($ per step of delay per "on" step).
    pub deferral_weight: f64,
    /// Comfort weight per horizon step ($/°C²).
    pub comfort_weight: Vec<f64>,
    /// Linear and quadratic penalty on leaving the tightened comfort band ($/°C, $/°C²).
    pub band_linear: f64,
    pub band_quadratic: f64,
    /// Penalty per kW above the grid cap per step ($).
    pub cap_penalty: f64,
    /// Value of one kWh of stored energy left at the end of the horizon ($/kWh).
    pub terminal_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    /// Half-width of the comfort band around the setpoint (°C).
    pub band: f64,
    /// Fraction of the band held back as a planning margin.
    pub band_backoff: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub es_current: f64,
    pub grid_cap: f64,
}

impl Limits {
    pub fn planning_band(&self) -> f64 {
        self.band * (1.0 - self.band_backoff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonState {
    pub t_indoor: f64,
    pub soc_xev: f64,
    pub soc_es: f64,
}

/// One receding-horizon instance.
#[derive(Debug, Clone)]
pub struct HorizonProblem {
    /// Absolute index of the first horizon step.
    pub start_step: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub t_set: f64,
    pub ambient: f64,
    pub solar: f64,
    pub non_deferrable: f64,
    /// Power of non-interruptible cycles already running, per horizon step.
    pub committed: Vec<f64>,
    pub initial: HorizonState,
    pub hvac: HvacModel,
    pub es: EsModel,
    pub requests: Vec<ApplianceRequest>,
    pub limits: Limits,
    pub weights: CostWeights,
}

impl HorizonProblem {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HemError::InvalidParameter(m));
        if self.n_steps == 0 {
            return bad("horizon must hold at least one step".into());
        }
        if !(self.dt > 0.0) {
            return bad(format!("step length {} must be > 0", self.dt));
        }
        if self.weights.elec_price.len() != self.n_steps
            || self.weights.comfort_weight.len() != self.n_steps
            || self.committed.len() != self.n_steps
        {
            return bad("time-indexed inputs must match the horizon length".into());
        }
        let l = &self.limits;
        if !(l.soc_min < l.soc_max) || !(l.band > 0.0) || !(0.0..1.0).contains(&l.band_backoff) || !(l.grid_cap > 0.0) {
            return bad("horizon limits are not well ordered".into());
        }
        let w = &self.weights;
        let weights_ok = w.elec_price.iter().chain(&w.comfort_weight).all(|&v| v >= 0.0)
            && [
                w.deferral_weight,
                w.band_linear,
                w.band_quadratic,
                w.cap_penalty,
                w.terminal_value,
            ]
            .iter()
            .all(|&v| v >= 0.0);
        if !weights_ok {
            return bad("cost weights must be >= 0".into());
        }
        self.requests.iter().try_for_each(ApplianceRequest::validate)
    }

    pub fn request(&self, kind: DeferrableKind) -> Option<&ApplianceRequest> {
        self.requests.iter().find(|r| r.kind == kind)
    }

    /// Energy cost factor turning watts over one step into dollars per $/kWh.
    pub fn kwh_per_watt_step(&self) -> f64 {
        self.dt / 3.6e6
    }

    /// Indoor temperature at the end of every step under the given HVAC level indices.
    pub fn temperatures(&self, hvac_idx: &[usize]) -> Vec<f64> {
        let mut t = self.initial.t_indoor;
        hvac_idx
            .iter()
            .map(|&i| {
                t = self.hvac.response[i].apply(t);
                t
            })
            .collect()
    }

    /// Comfort cost plus the band penalty of an HVAC plan.
    pub fn thermal_cost(&self, hvac_idx: &[usize]) -> f64 {
        let band = self.limits.planning_band();
        let w = &self.weights;
        let mut t = self.initial.t_indoor;
        let mut cost = 0.0;
        for (k, &i) in hvac_idx.iter().enumerate() {
            t = self.hvac.response[i].apply(t);
            let dev = t - self.t_set;
            let excess = dev.abs() - band;
            cost += w.comfort_weight[k] * dev * dev;
            if excess > 0.0 {
                cost += w.band_linear * excess + w.band_quadratic * excess * excess;
            }
        }
        cost
    }

    /// Grid cost, cap penalty and terminal storage credit of a storage plan
    /// on top of the household load `load(k)` (W, solar not subtracted).
    pub fn grid_cost(&self, load: impl Fn(usize) -> f64, es_requests: &[f64]) -> f64 {
        let mut soc = self.initial.soc_es;
        let mut cost = 0.0;
        let e = self.kwh_per_watt_step();
        let w = &self.weights;
        for (k, &req) in es_requests.iter().enumerate().take(self.n_steps) {
            let net = load(k) - self.solar;
            let d = self.es.dispatch(soc, req, net, self.dt);
            let grid = (net - d.bus_power).max(0.0);
            cost += w.elec_price[k] * grid * e;
            if grid > self.limits.grid_cap {
                cost += w.cap_penalty * (grid - self.limits.grid_cap) / 1000.0;
            }
            soc = self.es.next_soc(soc, d.current, self.dt);
        }
        cost - (soc - self.initial.soc_es) * self.es.kwh_per_soc() * w.terminal_value
    }

    /// Per-step storage dispatch and power balance of a storage plan.
    pub fn power_series(&self, load: &Loads, es_requests: &[f64]) -> (Vec<Dispatch>, Vec<PowerSnapshot>, Vec<f64>) {
        let mut soc = self.initial.soc_es;
        let mut dispatch = Vec::with_capacity(self.n_steps);
        let mut snaps = Vec::with_capacity(self.n_steps);
        let mut socs = Vec::with_capacity(self.n_steps);
        for (k, &req) in es_requests.iter().enumerate().take(self.n_steps) {
            let l = crate::plant::Loads {
                hvac: load.hvac[k],
                xev: load.xev[k],
                deferrable: load.deferrable[k],
                non_deferrable: self.non_deferrable,
            };
            let net = l.total() - self.solar;
            let d = self.es.dispatch(soc, req, net, self.dt);
            snaps.push(crate::plant::balance_close(&l, self.solar, d.bus_power));
            soc = self.es.next_soc(soc, d.current, self.dt);
            dispatch.push(d);
            socs.push(soc);
        }
        (dispatch, snaps, socs)
    }
}

/// Controllable load series over a horizon (W).
#[derive(Debug, Clone, PartialEq)]
pub struct Loads {
    pub hvac: Vec<f64>,
    pub xev: Vec<f64>,
    /// Laundry and dishwasher, including cycles already running.
    pub deferrable: Vec<f64>,
}

impl Loads {
    pub fn zeros(n: usize) -> Self {
        Self {
            hvac: vec![0.0; n],
            xev: vec![0.0; n],
            deferrable: vec![0.0; n],
        }
    }

    pub fn total_at(&self, k: usize, non_deferrable: f64) -> f64 {
        self.hvac[k] + self.xev[k] + self.deferrable[k] + non_deferrable
    }
}
