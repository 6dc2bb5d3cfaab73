use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::table::Table2D;
use crate::trace::Trace;

/// Rooftop PV array. The efficiency map is indexed by (ambient °C, irradiance W/m²).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolarArray {
    pub panel_area: f64,
    pub efficiency: Table2D,
    pub irradiance: Trace,
}

impl SolarArray {
    pub fn new(panel_area: f64, efficiency: Table2D, irradiance: Trace) -> Result<Self> {
        if !(panel_area > 0.0) {
            return Err(HemError::InvalidParameter("panel area must be > 0".into()));
        }
        efficiency.validate()?;
        if efficiency.values().any(|e| !(0.0..=1.0).contains(&e)) {
            return Err(HemError::InvalidParameter(
                "PV efficiency map entries must lie in [0, 1]".into(),
            ));
        }
        if irradiance.min() < 0.0 {
            return Err(HemError::InvalidParameter("irradiance must be >= 0".into()));
        }
        Ok(Self {
            panel_area,
            efficiency,
            irradiance,
        })
    }

    /// `G · A · η(ambient, G)` for a given irradiance.
    pub fn power_from_irradiance(&self, irradiance: f64, ambient: f64) -> Result<f64> {
        if irradiance <= 0.0 {
            return Ok(0.0);
        }
        let eta = self.efficiency.eval_named("pv efficiency", ambient, irradiance)?;
        Ok((irradiance * self.panel_area * eta).max(0.0))
    }

    /// PV output at time `t` (seconds) of the irradiance trace.
    pub fn solar_power(&self, t: f64, ambient: f64) -> Result<f64> {
        let g = self.irradiance.at(t)?;
        self.power_from_irradiance(g, ambient)
    }
}
