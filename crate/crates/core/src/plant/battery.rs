//! Zeroth-order equivalent-circuit battery pack, shared by the stationary
//! storage and the vehicle.
//!
//! Sign convention: positive pack current discharges the pack and produces a
//! positive bus power.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::table::Table2D;

/// Cell parameters: OCV and R0 maps indexed by (SOC, temperature °C).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellModel {
    pub name: String,
    pub nominal_voltage: f64,
    pub capacity_ah: f64,
    /// Upper cell voltage at which CC charging hands over to CV.
    pub max_voltage: f64,
    pub ocv: Table2D,
    pub r0: Table2D,
}

impl CellModel {
    pub fn validate(&self) -> Result<()> {
        self.ocv.validate()?;
        self.r0.validate()?;
        if !(self.capacity_ah > 0.0 && self.nominal_voltage > 0.0) {
            return Err(HemError::InvalidParameter(
                "cell capacity and nominal voltage must be > 0".into(),
            ));
        }
        if self.r0.values().any(|r| !(r > 0.0)) {
            return Err(HemError::InvalidParameter("cell resistance must be > 0".into()));
        }
        for j in 0..self.ocv.y.len() {
            if self.ocv.z.windows(2).any(|w| w[1][j] < w[0][j]) {
                return Err(HemError::InvalidParameter("OCV map must be nondecreasing in SOC".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureSource {
    Ambient,
    Indoor,
    Fixed(f64),
}

impl TemperatureSource {
    pub fn resolve(self, ambient: f64, indoor: f64) -> f64 {
        match self {
            TemperatureSource::Ambient => ambient,
            TemperatureSource::Indoor => indoor,
            TemperatureSource::Fixed(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminal {
    pub voltage: f64,
    pub bus_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocStep {
    pub soc: f64,
    /// Set when the unclipped update left [0, 1].
    pub saturated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryPack {
    pub n_series: u32,
    pub n_parallel: u32,
    pub cell: Arc<CellModel>,
    pub round_trip_eff: f64,
    pub soc: f64,
    pub temperature_source: TemperatureSource,
    /// Pack current bound is `current_limit_factor · n_series` amperes.
    pub current_limit_factor: f64,
}

impl BatteryPack {
    pub fn new(
        n_series: u32,
        n_parallel: u32,
        cell: Arc<CellModel>,
        round_trip_eff: f64,
        soc: f64,
        temperature_source: TemperatureSource,
    ) -> Result<Self> {
        let pack = Self {
            n_series,
            n_parallel,
            cell,
            round_trip_eff,
            soc,
            temperature_source,
            current_limit_factor: 2.5,
        };
        pack.validate()?;
        Ok(pack)
    }

    /// Sizes a pack for a desired energy (Wh) and voltage, rounding the cell
    /// counts up so the pack never under-delivers.
    pub fn sized(
        cell: Arc<CellModel>,
        energy_wh: f64,
        voltage: f64,
        round_trip_eff: f64,
        soc: f64,
        temperature_source: TemperatureSource,
    ) -> Result<Self> {
        if !(energy_wh > 0.0 && voltage > 0.0) {
            return Err(HemError::InvalidParameter(
                "desired pack energy and voltage must be > 0".into(),
            ));
        }
        let (n_series, n_parallel) = cell_counts(&cell, energy_wh, voltage);
        Self::new(n_series, n_parallel, cell, round_trip_eff, soc, temperature_source)
    }

    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        if self.n_series < 1 || self.n_parallel < 1 {
            return Err(HemError::InvalidParameter("cell counts must be >= 1".into()));
        }
        if !(self.round_trip_eff > 0.0 && self.round_trip_eff <= 1.0) {
            return Err(HemError::InvalidParameter("efficiency must lie in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.soc) {
            return Err(HemError::InvalidParameter(format!("SOC {} outside [0, 1]", self.soc)));
        }
        Ok(())
    }

    pub fn capacity_ah(&self) -> f64 {
        self.cell.capacity_ah * self.n_parallel as f64
    }

    pub fn nominal_energy_wh(&self) -> f64 {
        self.capacity_ah() * self.cell.nominal_voltage * self.n_series as f64
    }

    pub fn max_current(&self) -> f64 {
        self.current_limit_factor * self.n_series as f64
    }

    pub fn ocv(&self, soc: f64, temp: f64) -> Result<f64> {
        self.cell.ocv.eval_named("cell OCV", soc, temp)
    }

    pub fn r0(&self, soc: f64, temp: f64) -> Result<f64> {
        self.cell.r0.eval_named("cell R0", soc, temp)
    }

    /// Terminal voltage and bus power at the pack's present SOC.
    pub fn terminal(&self, pack_current: f64, temp: f64) -> Result<Terminal> {
        self.terminal_at(self.soc, pack_current, temp)
    }

    pub fn terminal_at(&self, soc: f64, pack_current: f64, temp: f64) -> Result<Terminal> {
        let ocv = self.ocv(soc, temp)?;
        let r0 = self.r0(soc, temp)?;
        Ok(self.terminal_from(ocv, r0, pack_current))
    }

    pub(crate) fn terminal_from(&self, ocv: f64, r0: f64, pack_current: f64) -> Terminal {
        let cell_current = pack_current / self.n_parallel as f64;
        let voltage = self.n_series as f64 * (ocv - r0 * cell_current);
        let raw = voltage * pack_current;
        let bus_power = if pack_current > 0.0 {
            raw * self.round_trip_eff
        } else if pack_current < 0.0 {
            raw / self.round_trip_eff
        } else {
            0.0
        };
        Terminal { voltage, bus_power }
    }

    /// Pack current that yields the requested bus power (positive = discharge).
    /// Discharge requests above the maximum deliverable power return the
    /// current at the power peak.
    pub fn current_for_bus_power(&self, bus_power: f64, soc: f64, temp: f64) -> Result<f64> {
        let ocv = self.ocv(soc, temp)?;
        let r0 = self.r0(soc, temp)?;
        Ok(self.current_for_bus_power_from(ocv, r0, bus_power))
    }

    pub(crate) fn current_for_bus_power_from(&self, ocv: f64, r0: f64, bus_power: f64) -> f64 {
        if bus_power == 0.0 {
            return 0.0;
        }
        let ns = self.n_series as f64;
        let a = r0 / self.n_parallel as f64;
        if bus_power > 0.0 {
            // ns·η·(ocv·I − a·I²) = P
            let c = bus_power / (ns * self.round_trip_eff);
            let disc = ocv * ocv - 4.0 * a * c;
            if disc <= 0.0 {
                ocv / (2.0 * a)
            } else {
                2.0 * c / (ocv + disc.sqrt())
            }
        } else {
            // ns·(ocv·x + a·x²)/η = |P|, I = −x
            let c = -bus_power * self.round_trip_eff / ns;
            let x = 2.0 * c / (ocv + (ocv * ocv + 4.0 * a * c).sqrt());
            -x
        }
    }

    /// SOC after holding `pack_current` for `dt` seconds, clipped to [0, 1].
    pub fn soc_step(&self, pack_current: f64, dt: f64) -> SocStep {
        soc_after(self.soc, pack_current, dt, self.capacity_ah())
    }

    pub fn apply_current(&mut self, pack_current: f64, dt: f64) -> SocStep {
        let step = self.soc_step(pack_current, dt);
        self.soc = step.soc;
        step
    }

    /// Current range that keeps the SOC inside `[lo, hi]` over one step of `dt`.
    pub fn current_window(&self, soc: f64, dt: f64, lo: f64, hi: f64) -> (f64, f64) {
        let per_soc = 3600.0 * self.capacity_ah() / dt;
        let max_dis = ((soc - lo) * per_soc).max(0.0);
        let max_chg = ((hi - soc) * per_soc).max(0.0);
        (-max_chg, max_dis)
    }
}

/// Current and bus power actually applied for one storage step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispatch {
    pub current: f64,
    pub bus_power: f64,
}

impl BatteryPack {
    #[allow(clippy::too_many_arguments)]
    /// Resolves a requested pack current against the current bound, the SOC
    /// window `[lo, hi]` and the no-export rule: discharge never exceeds the
    /// household's net load (`load − solar`).
    pub fn dispatch_from(
        &self,
        ocv: f64,
        r0: f64,
        soc: f64,
        requested: f64,
        net_load: f64,
        dt: f64,
        lo: f64,
        hi: f64,
    ) -> Dispatch {
        let limit = self.max_current();
        let (min_i, max_i) = self.current_window(soc, dt, lo, hi);
        let mut current = requested.clamp(-limit, limit).clamp(min_i, max_i);
        let mut bus_power = self.terminal_from(ocv, r0, current).bus_power;
        if current > 0.0 && bus_power > net_load {
            if net_load <= 0.0 {
                current = 0.0;
                bus_power = 0.0;
            } else {
                current = self.current_for_bus_power_from(ocv, r0, net_load).min(current);
                bus_power = self.terminal_from(ocv, r0, current).bus_power.min(net_load);
            }
        }
        Dispatch { current, bus_power }
    }

    #[allow(clippy::too_many_arguments)]
    /// [`BatteryPack::dispatch_from`] with the maps evaluated at `soc` and `temp`.
    pub fn dispatch(&self, soc: f64, temp: f64, requested: f64, net_load: f64, dt: f64, lo: f64, hi: f64) -> Result<Dispatch> {
        let ocv = self.ocv(soc, temp)?;
        let r0 = self.r0(soc, temp)?;
        Ok(self.dispatch_from(ocv, r0, soc, requested, net_load, dt, lo, hi))
    }
}

/// Series and parallel counts for a target pack, rounded up.
pub fn cell_counts(cell: &CellModel, energy_wh: f64, voltage: f64) -> (u32, u32) {
    let series = ceil_tol(voltage / cell.nominal_voltage);
    let parallel = ceil_tol(energy_wh / voltage / cell.capacity_ah);
    (series.max(1), parallel.max(1))
}

fn ceil_tol(x: f64) -> u32 {
    (x - 1e-9).ceil() as u32
}

pub(crate) fn soc_after(soc: f64, pack_current: f64, dt: f64, capacity_ah: f64) -> SocStep {
    let next = soc - pack_current * dt / (3600.0 * capacity_ah);
    if next < 0.0 {
        SocStep {
            soc: 0.0,
            saturated: true,
        }
    } else if next > 1.0 {
        SocStep {
            soc: 1.0,
            saturated: true,
        }
    } else {
        SocStep {
            soc: next,
            saturated: false,
        }
    }
}
