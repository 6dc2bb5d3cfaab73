//! No-coordination reference controller: dead-band thermostat, rule-based
//! storage dispatch and immediate appliance start.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::plant::{DeferrableKind, HvacMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeadbandConfig {
    pub heat_setpoint: f64,
    pub cool_setpoint: f64,
    pub half_band: f64,
}

impl Default for DeadbandConfig {
    fn default() -> Self {
        Self {
            heat_setpoint: 22.0,
            cool_setpoint: 18.0,
            half_band: 0.5,
        }
    }
}

impl DeadbandConfig {
    pub fn validate(&self) -> Result<()> {
        if self.half_band > 0.0 {
            Ok(())
        } else {
            Err(HemError::Config("dead-band half width must be > 0".into()))
        }
    }

    pub fn setpoint(&self, mode: HvacMode) -> f64 {
        match mode {
            HvacMode::Heat => self.heat_setpoint,
            HvacMode::Cool => self.cool_setpoint,
        }
    }
}

/// Thermostat with hysteresis. Inside the band the previous command is held.
pub fn hvac_deadband(cfg: &DeadbandConfig, indoor: f64, mode: HvacMode, prev_command: f64) -> f64 {
    match mode {
        HvacMode::Cool => {
            if indoor > cfg.cool_setpoint + cfg.half_band {
                1.0
            } else if indoor <= cfg.cool_setpoint - cfg.half_band {
                0.0
            } else {
                prev_command
            }
        }
        HvacMode::Heat => {
            if indoor < cfg.heat_setpoint - cfg.half_band {
                1.0
            } else if indoor >= cfg.heat_setpoint + cfg.half_band {
                0.0
            } else {
                prev_command
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StorageAction {
    Charge,
    Idle,
    Discharge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StorageRuleLimits {
    pub charge_below: f64,
    pub discharge_above: f64,
}

impl Default for StorageRuleLimits {
    fn default() -> Self {
        Self {
            charge_below: 0.9,
            discharge_above: 0.2,
        }
    }
}

/// Charge on PV surplus, discharge on deficit, within the SOC limits.
pub fn storage_rule(limits: &StorageRuleLimits, soc: f64, p_solar: f64, p_household: f64) -> StorageAction {
    if p_solar > p_household && soc < limits.charge_below {
        StorageAction::Charge
    } else if p_solar < p_household && soc > limits.discharge_above {
        StorageAction::Discharge
    } else {
        StorageAction::Idle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DispatchRequest {
    pub id: usize,
    pub kind: DeferrableKind,
    pub enable_step: usize,
    pub completion_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activation {
    pub request: usize,
    pub kind: DeferrableKind,
    pub steps: Range<usize>,
}

/// Starts every request at its enabling step and runs it to completion.
/// Two requests for the same appliance whose runs would overlap are rejected.
pub fn immediate_dispatch(requests: &[DispatchRequest]) -> Result<Vec<Activation>> {
    let mut out: Vec<Activation> = Vec::with_capacity(requests.len());
    for r in requests {
        let steps = r.enable_step..r.enable_step + r.completion_steps;
        if let Some(clash) = out
            .iter()
            .find(|a| a.kind == r.kind && a.steps.start < steps.end && steps.start < a.steps.end)
        {
            return Err(HemError::RequestRejected(format!(
                "{} request {} (steps {:?}) overlaps request {} (steps {:?})",
                r.kind.label(),
                r.id,
                steps,
                clash.request,
                clash.steps
            )));
        }
        out.push(Activation {
            request: r.id,
            kind: r.kind,
            steps,
        });
    }
    Ok(out)
}

/// Binary command vector for one appliance over `n_steps`.
pub fn commands_for(activations: &[Activation], kind: DeferrableKind, n_steps: usize) -> Vec<u8> {
    let mut v = vec![0u8; n_steps];
    for a in activations.iter().filter(|a| a.kind == kind) {
        for k in a.steps.clone().filter(|&k| k < n_steps) {
            v[k] = 1;
        }
    }
    v
}
