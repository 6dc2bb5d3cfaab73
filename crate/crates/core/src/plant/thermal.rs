//! First-order RC model of the indoor air temperature.

use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::plant::hvac::{HvacMode, HvacUnit};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalHouse {
    /// Effective thermal mass of the zone air (kg).
    pub air_mass: f64,
    pub cv_air: f64,
    pub thermal_resistance: f64,
    pub indoor_temp: f64,
}

/// Exact one-step response of the linear ODE for constant inputs:
/// `T' = equilibrium + (T − equilibrium)·decay`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalResponse {
    pub decay: f64,
    pub equilibrium: f64,
}

impl ThermalResponse {
    #[inline]
    pub fn apply(&self, temp: f64) -> f64 {
        self.equilibrium + (temp - self.equilibrium) * self.decay
    }
}

impl ThermalHouse {
    pub fn validate(&self) -> Result<()> {
        if self.air_mass > 0.0 && self.cv_air > 0.0 && self.thermal_resistance > 0.0 {
            Ok(())
        } else {
            Err(HemError::InvalidParameter(
                "air mass, c_v and thermal resistance must be > 0".into(),
            ))
        }
    }

    pub fn capacitance(&self) -> f64 {
        self.air_mass * self.cv_air
    }

    pub fn response(&self, unit: &HvacUnit, command: f64, mode: HvacMode, ambient: f64, dt: f64) -> ThermalResponse {
        let g_hvac = command * unit.mass_flow * unit.cp_air;
        let g_env = 1.0 / self.thermal_resistance;
        let equilibrium = (g_hvac * unit.supply_temp(mode) + g_env * ambient) / (g_hvac + g_env);
        let decay = (-(g_hvac + g_env) * dt / self.capacitance()).exp();
        ThermalResponse { decay, equilibrium }
    }

    pub fn step(&self, unit: &HvacUnit, command: f64, mode: HvacMode, ambient: f64, dt: f64) -> f64 {
        self.response(unit, command, mode, ambient, dt).apply(self.indoor_temp)
    }
}

/// Advances the indoor temperature by `dt` seconds. The HVAC mode follows the
/// ambient temperature.
pub fn thermal_step(house: &ThermalHouse, unit: &HvacUnit, command: f64, ambient: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(HemError::InvalidParameter("dt must be > 0".into()));
    }
    let mode = unit.mode_for(ambient);
    HvacUnit::check_command(command, mode)?;
    Ok(house.step(unit, command, mode, ambient, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::hvac::tests::unit;
    use proptest::prelude::*;

    fn house(t: f64) -> ThermalHouse {
        ThermalHouse {
            air_mass: 4000.0,
            cv_air: 718.0,
            thermal_resistance: 0.007,
            indoor_temp: t,
        }
    }

    #[test]
    fn equilibrium_is_fixed() {
        let h = house(12.0);
        assert!((thermal_step(&h, &unit(3.0), 0.0, 12.0, 600.0).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn free_decay_never_undershoots() {
        let u = unit(3.0);
        let mut h = house(25.0);
        for _ in 0..200 {
            let next = thermal_step(&h, &u, 0.0, 10.0, 600.0).unwrap();
            assert!(next < h.indoor_temp || (h.indoor_temp - 10.0).abs() < 1e-9);
            assert!(next >= 10.0);
            h.indoor_temp = next;
        }
    }

    #[test]
    fn long_step_reaches_weighted_balance() {
        let u = unit(3.0);
        let h = house(15.0);
        let g = 0.5 * 1005.0;
        let expect = (g * 40.0 + 10.0 / 0.007) / (g + 1.0 / 0.007);
        let got = thermal_step(&h, &u, 1.0, 10.0, 1e7).unwrap();
        assert!((got - expect).abs() < 1e-9);
    }

    #[test]
    fn matches_fine_euler_integration() {
        let u = unit(3.0);
        let h = house(19.0);
        let exact = thermal_step(&h, &u, 0.5, 30.0, 600.0).unwrap();
        let (mut t, n) = (19.0, 600_000);
        let dt = 600.0 / n as f64;
        for _ in 0..n {
            let q = 0.5 * 0.5 * 1005.0 * (10.0 - t) - (t - 30.0) / 0.007;
            t += q * dt / (4000.0 * 718.0);
        }
        assert!((exact - t).abs() < 1e-4);
    }

    #[test]
    fn rejects_nonpositive_dt() {
        assert!(thermal_step(&house(20.0), &unit(3.0), 0.0, 10.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn step_is_contractive(t0 in -10.0f64..40.0, amb in -15.0f64..40.0, cmd in prop::sample::select(vec![0.0, 1.0]), dt in 1.0f64..3600.0) {
            let u = unit(3.0);
            let h = house(t0);
            let r = h.response(&u, cmd, u.mode_for(amb), amb, dt);
            let next = r.apply(t0);
            if (t0 - r.equilibrium).abs() > 1e-9 {
                prop_assert!((next - r.equilibrium).abs() < (t0 - r.equilibrium).abs());
            }
        }
    }
}
