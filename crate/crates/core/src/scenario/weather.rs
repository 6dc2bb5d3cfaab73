use serde::Deserialize;

use crate::error::{HemError, Result};
use crate::trace::Trace;

#[derive(Debug, Deserialize)]
struct Row {
    time_s: f64,
    #[serde(rename = "ambient_C")]
    ambient: f64,
    #[serde(rename = "irradiance_Wm2")]
    irradiance: f64,
}

/// Ambient temperature (°C) and global horizontal irradiance (W/m²).
#[derive(Debug, Clone)]
pub struct Weather {
    pub ambient: Trace,
    pub irradiance: Trace,
}

impl Weather {
    /// Parses a `time_s,ambient_C,irradiance_Wm2` CSV. Timestamps must be
    /// strictly increasing; any length (including leap years) is accepted.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut t = Vec::new();
        let mut a = Vec::new();
        let mut g = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row?;
            if let Some(&prev) = t.last() {
                if row.time_s <= prev {
                    return Err(HemError::Config(format!(
                        "weather row {}: timestamp {} does not follow {prev}",
                        i + 1,
                        row.time_s
                    )));
                }
            }
            if row.irradiance < 0.0 {
                return Err(HemError::Config(format!("weather row {}: negative irradiance", i + 1)));
            }
            t.push(row.time_s);
            a.push(row.ambient);
            g.push(row.irradiance);
        }
        if t.len() < 2 {
            return Err(HemError::Config("weather trace needs at least two rows".into()));
        }
        Ok(Self {
            ambient: Trace::new(t.clone(), a)?,
            irradiance: Trace::new(t, g)?,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HemError::Config(format!("{}: {e}", path.display())))?;
        Self::from_csv(&text)
    }

    /// Samples both traces at `start + k·dt` for `n` steps (linear interpolation).
    pub fn resample(&self, start: f64, dt: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut amb = Vec::with_capacity(n);
        let mut irr = Vec::with_capacity(n);
        for k in 0..n {
            let t = start + k as f64 * dt;
            amb.push(self.ambient.at(t)?);
            irr.push(self.irradiance.at(t)?);
        }
        Ok((amb, irr))
    }
}
