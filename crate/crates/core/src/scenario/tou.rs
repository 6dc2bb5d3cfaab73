use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};

const DAY_S: f64 = 86_400.0;

/// One price level over `[start_h, end_h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouSegment {
    pub start_h: f64,
    pub end_h: f64,
    /// $/kWh.
    pub price: f64,
}

/// Daily piecewise-constant tariff. Simulation day 0 is a Monday; days 5 and 6
/// of every week use the weekend segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TouSchedule {
    pub weekday: Vec<TouSegment>,
    pub weekend: Vec<TouSegment>,
}

impl Default for TouSchedule {
    fn default() -> Self {
        let seg = |start_h, end_h, price| TouSegment { start_h, end_h, price };
        Self {
            weekday: vec![
                seg(0.0, 7.0, 0.08),
                seg(7.0, 14.0, 0.13),
                seg(14.0, 20.0, 0.26),
                seg(20.0, 22.0, 0.13),
                seg(22.0, 24.0, 0.08),
            ],
            weekend: vec![seg(0.0, 7.0, 0.08), seg(7.0, 22.0, 0.13), seg(22.0, 24.0, 0.08)],
        }
    }
}

impl TouSchedule {
    pub fn flat(price: f64) -> Self {
        let day = vec![TouSegment {
            start_h: 0.0,
            end_h: 24.0,
            price,
        }];
        Self {
            weekday: day.clone(),
            weekend: day,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, segs) in [("weekday", &self.weekday), ("weekend", &self.weekend)] {
            let mut at = 0.0;
            for s in segs {
                if s.start_h != at || !(s.end_h > s.start_h) {
                    return Err(HemError::Config(format!(
                        "TOU {name} segments must tile [0, 24) in order; found [{}, {}) after hour {at}",
                        s.start_h, s.end_h
                    )));
                }
                if !(s.price > 0.0) {
                    return Err(HemError::Config(format!("TOU {name} price must be > 0, got {}", s.price)));
                }
                at = s.end_h;
            }
            if at != 24.0 {
                return Err(HemError::Config(format!("TOU {name} segments end at hour {at}, not 24")));
            }
        }
        Ok(())
    }

    /// Price ($/kWh) in force at `t` seconds from simulation day 0. Segments are
    /// left-closed, so a boundary instant takes the price of the segment it opens.
    pub fn price(&self, t: f64) -> f64 {
        let day = (t / DAY_S).floor();
        let hour = (t - day * DAY_S) / 3600.0;
        let segs = if (day as i64).rem_euclid(7) >= 5 {
            &self.weekend
        } else {
            &self.weekday
        };
        segs.iter()
            .find(|s| hour >= s.start_h && hour < s.end_h)
            .or(segs.last())
            .map(|s| s.price)
            .unwrap_or(0.0)
    }
}
