use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::table::Table1D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HvacMode {
    Heat,
    Cool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HvacPower {
    pub electrical: f64,
    /// Sensible capacity `π·ṁ·c_p·ΔT` delivered at the coil.
    pub thermal_supply: f64,
    pub mode: HvacMode,
}

/// Single-zone air handler with a heat pump. Separate supply temperatures are
/// kept for heating and cooling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HvacUnit {
    pub mass_flow: f64,
    pub supply_temp_heat: f64,
    pub supply_temp_cool: f64,
    pub cp_air: f64,
    /// COP as a function of the supply/ambient temperature difference.
    pub cop: Table1D,
    pub shr: f64,
    pub pressure_drop: f64,
    pub fan_eff: f64,
    pub air_density: f64,
    /// Ambient temperature at or below which the unit heats.
    pub mode_threshold: f64,
}

impl HvacUnit {
    pub fn validate(&self) -> Result<()> {
        self.cop.validate()?;
        let bad = |m: &str| Err(HemError::InvalidParameter(m.into()));
        if self.cop.y.iter().any(|c| !(*c > 0.0)) {
            return bad("COP must be > 0 over the map domain");
        }
        if !(self.shr > 0.0 && self.shr <= 1.0) {
            return bad("SHR must lie in (0, 1]");
        }
        if !(self.fan_eff > 0.0 && self.fan_eff <= 1.0) {
            return bad("fan efficiency must lie in (0, 1]");
        }
        if !(self.mass_flow > 0.0 && self.cp_air > 0.0 && self.air_density > 0.0) {
            return bad("mass flow, c_p and air density must be > 0");
        }
        Ok(())
    }

    pub fn mode_for(&self, ambient: f64) -> HvacMode {
        if ambient <= self.mode_threshold {
            HvacMode::Heat
        } else {
            HvacMode::Cool
        }
    }

    pub fn supply_temp(&self, mode: HvacMode) -> f64 {
        match mode {
            HvacMode::Heat => self.supply_temp_heat,
            HvacMode::Cool => self.supply_temp_cool,
        }
    }

    /// Admissible commands: on/off when heating, off/half/full when cooling.
    pub fn levels(mode: HvacMode) -> &'static [f64] {
        match mode {
            HvacMode::Heat => &[0.0, 1.0],
            HvacMode::Cool => &[0.0, 0.5, 1.0],
        }
    }

    pub fn check_command(command: f64, mode: HvacMode) -> Result<()> {
        if Self::levels(mode).contains(&command) {
            Ok(())
        } else if command == 0.5 {
            Err(HemError::InvalidCommand {
                command,
                reason: "the fan can only be on or off in heating mode",
            })
        } else {
            Err(HemError::InvalidCommand {
                command,
                reason: "command must be one of 0, 0.5, 1",
            })
        }
    }

    pub fn fan_power(&self) -> f64 {
        self.mass_flow * self.pressure_drop / (self.fan_eff * self.air_density)
    }

    /// Electrical draw with the mode picked from the ambient temperature.
    pub fn power(&self, command: f64, ambient: f64) -> Result<HvacPower> {
        self.power_in_mode(command, self.mode_for(ambient), ambient)
    }

    pub fn power_in_mode(&self, command: f64, mode: HvacMode, ambient: f64) -> Result<HvacPower> {
        Self::check_command(command, mode)?;
        if command == 0.0 {
            return Ok(HvacPower {
                electrical: 0.0,
                thermal_supply: 0.0,
                mode,
            });
        }
        // The heat pump lifts against the outdoor temperature; a negative lift
        // (free heating/cooling) draws compressor power of zero.
        let lift = match mode {
            HvacMode::Heat => self.supply_temp_heat - ambient,
            HvacMode::Cool => ambient - self.supply_temp_cool,
        }
        .max(0.0);
        let cop = self.cop.eval_clamped(lift);
        let sensible = self.mass_flow * command * self.cp_air * lift;
        let compressor = match mode {
            HvacMode::Heat => sensible / cop,
            HvacMode::Cool => sensible / (self.shr * cop),
        };
        Ok(HvacPower {
            electrical: compressor + command * self.fan_power(),
            thermal_supply: sensible,
            mode,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn unit(cop: f64) -> HvacUnit {
        HvacUnit {
            mass_flow: 0.5,
            supply_temp_heat: 40.0,
            supply_temp_cool: 10.0,
            cp_air: 1005.0,
            cop: Table1D::new(vec![0.0, 100.0], vec![cop, cop]).unwrap(),
            shr: 0.8,
            pressure_drop: 250.0,
            fan_eff: 0.7,
            air_density: 1.2,
            mode_threshold: 20.0,
        }
    }

    #[test]
    fn off_draws_nothing() {
        let u = unit(3.0);
        assert_eq!(u.power(0.0, 30.0).unwrap().electrical, 0.0);
        assert_eq!(u.power(0.0, 0.0).unwrap().electrical, 0.0);
    }

    #[test]
    fn cooling_compressor_and_fan() {
        let u = unit(3.0);
        // ambient 25 °C against a 10 °C supply → ΔT = 15 K
        let p = u.power(1.0, 25.0).unwrap();
        assert_eq!(p.mode, HvacMode::Cool);
        let cool: f64 = 0.5 * 1.0 * 1005.0 * 15.0 / (0.8 * 3.0);
        assert!((cool - 3140.625).abs() < 1e-9);
        let fan: f64 = 0.5 * 250.0 / (0.7 * 1.2);
        assert!((fan - 148.8095238).abs() < 1e-6);
        assert!((p.electrical - (cool + fan)).abs() < 1e-9);
        let half = u.power(0.5, 25.0).unwrap();
        assert!((half.electrical - 0.5 * (cool + fan)).abs() < 1e-9);
    }

    #[test]
    fn heating_uses_supply_minus_ambient() {
        let u = unit(2.5);
        let p = u.power(1.0, 0.0).unwrap();
        assert_eq!(p.mode, HvacMode::Heat);
        let expect = 0.5 * 1005.0 * 40.0 / 2.5 + u.fan_power();
        assert!((p.electrical - expect).abs() < 1e-9);
    }

    #[test]
    fn half_load_rejected_when_heating() {
        let u = unit(3.0);
        assert!(matches!(u.power(0.5, 5.0), Err(HemError::InvalidCommand { .. })));
        assert!(u.power(0.7, 30.0).is_err());
    }

    #[test]
    fn threshold_is_heating() {
        assert_eq!(unit(3.0).mode_for(20.0), HvacMode::Heat);
        assert_eq!(unit(3.0).mode_for(20.01), HvacMode::Cool);
    }

    #[test]
    fn monotone_in_temperature_difference() {
        let u = unit(3.0);
        let mut last = 0.0;
        for amb in [21.0, 24.0, 28.0, 33.0, 40.0] {
            let p = u.power(1.0, amb).unwrap().electrical;
            assert!(p > last);
            last = p;
        }
    }
}
