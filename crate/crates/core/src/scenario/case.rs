use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Columbus,
    LosAngeles,
    SanAntonio,
    Boston,
}

impl Location {
    pub const ALL: [Location; 4] = [
        Location::Columbus,
        Location::LosAngeles,
        Location::SanAntonio,
        Location::Boston,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            Location::Columbus => "columbus",
            Location::LosAngeles => "los_angeles",
            Location::SanAntonio => "san_antonio",
            Location::Boston => "boston",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub id: u32,
    pub location: Location,
    /// Floor area range (ft²); the realized size is drawn uniformly from it.
    pub house_area_ft2: (f64, f64),
    pub xev_capacity_kwh: f64,
    pub es_capacity_kwh: f64,
    /// Stationary pack kept indoors (follows the indoor temperature) or outdoors.
    pub es_temp_controlled: bool,
}

pub fn load_case(id: u32) -> Result<CaseStudy> {
    use Location::*;
    let (location, area, xev, es, controlled) = match id {
        1 => (Columbus, (1500.0, 2500.0), 60.0, 14.0, true),
        2 => (Columbus, (500.0, 1500.0), 60.0, 14.0, true),
        3 => (Columbus, (2500.0, 3500.0), 60.0, 14.0, true),
        4 => (Columbus, (3500.0, 4500.0), 60.0, 28.0, true),
        5 => (LosAngeles, (1500.0, 2500.0), 60.0, 14.0, true),
        6 => (SanAntonio, (1500.0, 2500.0), 60.0, 14.0, true),
        7 => (Boston, (1500.0, 2500.0), 60.0, 14.0, true),
        8 => (Columbus, (1500.0, 2500.0), 25.0, 14.0, true),
        9 => (Columbus, (1500.0, 2500.0), 100.0, 14.0, true),
        10 => (Columbus, (2500.0, 3500.0), 60.0, 28.0, true),
        11 => (Columbus, (3500.0, 4500.0), 60.0, 14.0, true),
        12 => (Columbus, (1500.0, 2500.0), 60.0, 14.0, false),
        other => return Err(HemError::UnknownCase(other)),
    };
    Ok(CaseStudy {
        id,
        location,
        house_area_ft2: area,
        xev_capacity_kwh: xev,
        es_capacity_kwh: es,
        es_temp_controlled: controlled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let c = load_case(1).unwrap();
        assert_eq!(c.location, Location::Columbus);
        assert_eq!(c.house_area_ft2, (1500.0, 2500.0));
        assert_eq!(
            (c.xev_capacity_kwh, c.es_capacity_kwh, c.es_temp_controlled),
            (60.0, 14.0, true)
        );
        assert_eq!(load_case(9).unwrap().xev_capacity_kwh, 100.0);
        assert!(!load_case(12).unwrap().es_temp_controlled);
        assert_eq!(load_case(4).unwrap().es_capacity_kwh, 28.0);
        assert_eq!(load_case(7).unwrap().location, Location::Boston);
    }

    #[test]
    fn unknown_ids() {
        assert!(matches!(load_case(0), Err(HemError::UnknownCase(0))));
        assert!(matches!(load_case(13), Err(HemError::UnknownCase(13))));
        assert!((1..=12).all(|i| load_case(i).is_ok()));
    }
}
