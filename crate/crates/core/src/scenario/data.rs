//! Component parameter files and weather traces.
//!
//! Defaults are compiled into the crate. Setting `HEMSIM_DATA_DIR` (or passing
//! a directory explicitly) makes every file be read from disk instead, with the
//! same layout as `crates/core/data/`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::plant::{CellModel, HvacUnit};
use crate::scenario::case::Location;
use crate::table::Table2D;

pub const DATA_DIR_ENV: &str = "HEMSIM_DATA_DIR";

const CELL: &str = include_str!("../../data/cell.json");
const HVAC: &str = include_str!("../../data/hvac.json");
const HOUSE: &str = include_str!("../../data/house.json");
const PV: &str = include_str!("../../data/pv.json");
const COLUMBUS: &str = include_str!("../../data/weather/columbus.csv");
const LOS_ANGELES: &str = include_str!("../../data/weather/los_angeles.csv");
const SAN_ANTONIO: &str = include_str!("../../data/weather/san_antonio.csv");
const BOSTON: &str = include_str!("../../data/weather/boston.csv");

/// Per-floor-area rules used to size the thermal zone and air handler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HouseParams {
    pub ceiling_height_m: f64,
    pub air_density: f64,
    pub cv_air: f64,
    /// Multiplier on the air mass accounting for furnishings and inner walls.
    pub effective_mass_factor: f64,
    /// Envelope conductance per floor area (W/K/m²).
    pub ua_per_floor_m2: f64,
    pub hvac_mass_flow_per_1000_ft2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvParams {
    /// Panel efficiency over (ambient °C, irradiance W/m²).
    pub efficiency: Table2D,
}

#[derive(Debug, Clone)]
pub struct DataSet {
    pub cell: Arc<CellModel>,
    pub hvac: HvacUnit,
    pub house: HouseParams,
    pub pv: PvParams,
    source: Option<PathBuf>,
}

impl DataSet {
    pub fn embedded() -> Result<Self> {
        Self::parse(CELL, HVAC, HOUSE, PV, None)
    }

    pub fn from_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| HemError::Config(format!("{}: {e}", p.display())))
        };
        Self::parse(
            &read("cell.json")?,
            &read("hvac.json")?,
            &read("house.json")?,
            &read("pv.json")?,
            Some(dir.to_path_buf()),
        )
    }

    /// Embedded data unless `HEMSIM_DATA_DIR` points somewhere else.
    pub fn load() -> Result<Self> {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::from_dir(Path::new(&dir)),
            _ => Self::embedded(),
        }
    }

    fn parse(cell: &str, hvac: &str, house: &str, pv: &str, source: Option<PathBuf>) -> Result<Self> {
        let named = |file: &'static str| move |e: serde_json::Error| HemError::Config(format!("{file}: {e}"));
        let cell: CellModel = serde_json::from_str(cell).map_err(named("cell.json"))?;
        let hvac: HvacUnit = serde_json::from_str(hvac).map_err(named("hvac.json"))?;
        let house: HouseParams = serde_json::from_str(house).map_err(named("house.json"))?;
        let pv: PvParams = serde_json::from_str(pv).map_err(named("pv.json"))?;
        cell.validate()?;
        hvac.validate()?;
        pv.efficiency.validate()?;
        Ok(Self {
            cell: Arc::new(cell),
            hvac,
            house,
            pv,
            source,
        })
    }

    /// Raw CSV text of the bundled (or overriding) weather trace for a location.
    pub fn weather_csv(&self, location: Location) -> Result<String> {
        match &self.source {
            Some(dir) => {
                let p = dir.join("weather").join(format!("{}.csv", location.file_stem()));
                std::fs::read_to_string(&p).map_err(|e| HemError::Config(format!("{}: {e}", p.display())))
            }
            None => Ok(match location {
                Location::Columbus => COLUMBUS,
                Location::LosAngeles => LOS_ANGELES,
                Location::SanAntonio => SAN_ANTONIO,
                Location::Boston => BOSTON,
            }
            .to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_data_parses() {
        let d = DataSet::embedded().unwrap();
        assert_eq!(d.cell.nominal_voltage, 3.2);
        assert_eq!(d.hvac.mode_threshold, 20.0);
        for loc in Location::ALL {
            assert!(d.weather_csv(loc).unwrap().starts_with("time_s,ambient_C,irradiance_Wm2"));
        }
    }

    #[test]
    fn directory_override_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        for f in ["cell.json", "hvac.json", "house.json", "pv.json"] {
            std::fs::copy(src.join(f), dir.path().join(f)).unwrap();
        }
        let d = DataSet::from_dir(dir.path()).unwrap();
        assert_eq!(d.house, DataSet::embedded().unwrap().house);
        assert!(matches!(d.weather_csv(Location::Boston), Err(HemError::Config(_))));
    }

    #[test]
    fn malformed_file_names_itself() {
        let dir = tempfile::tempdir().unwrap();
        let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        for f in ["cell.json", "house.json", "pv.json"] {
            std::fs::copy(src.join(f), dir.path().join(f)).unwrap();
        }
        std::fs::write(dir.path().join("hvac.json"), "{\"mass_flow\": 1}").unwrap();
        let err = DataSet::from_dir(dir.path()).unwrap_err().to_string();
        assert!(err.contains("hvac.json"), "{err}");
    }
}
