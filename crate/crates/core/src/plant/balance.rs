use serde::{Deserialize, Serialize};

/// Household loads for one step (W).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Loads {
    pub hvac: f64,
    pub xev: f64,
    pub deferrable: f64,
    pub non_deferrable: f64,
}

impl Loads {
    pub fn total(&self) -> f64 {
        self.hvac + self.xev + self.deferrable + self.non_deferrable
    }
}

/// Power flows for one step. `storage` > 0 is discharging; `solar` is the PV
/// power actually used, `curtailed` the remainder that had nowhere to go.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerSnapshot {
    pub grid: f64,
    pub solar: f64,
    pub curtailed: f64,
    pub storage: f64,
    pub hvac: f64,
    pub xev: f64,
    pub deferrable: f64,
    pub non_deferrable: f64,
}

impl PowerSnapshot {
    pub fn residual(&self) -> f64 {
        self.grid + self.solar + self.storage - self.hvac - self.xev - self.deferrable - self.non_deferrable
    }

    pub fn magnitude(&self) -> f64 {
        [
            self.grid,
            self.solar,
            self.storage,
            self.hvac,
            self.xev,
            self.deferrable,
            self.non_deferrable,
        ]
        .iter()
        .map(|v| v.abs())
        .sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.residual().abs() <= 1e-6 * self.magnitude().max(1.0)
    }

    pub fn household(&self) -> f64 {
        self.hvac + self.xev + self.deferrable + self.non_deferrable
    }
}

/// Closes the balance with the grid as the free term. PV that would otherwise
/// be exported is curtailed; the home never sells to the grid.
pub fn balance_close(loads: &Loads, solar_available: f64, storage: f64) -> PowerSnapshot {
    let mut grid = loads.total() - solar_available - storage;
    let mut solar = solar_available;
    let mut curtailed = 0.0;
    if grid < 0.0 {
        curtailed = (-grid).min(solar);
        solar -= curtailed;
        grid += curtailed;
    }
    PowerSnapshot {
        grid,
        solar,
        curtailed,
        storage,
        hvac: loads.hvac,
        xev: loads.xev,
        deferrable: loads.deferrable,
        non_deferrable: loads.non_deferrable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn idle_home() {
        let s = balance_close(&Loads::default(), 0.0, 0.0);
        assert_eq!(s.grid, 0.0);
        assert!(s.is_balanced());
    }

    #[test]
    fn discharge_offsets_grid() {
        let loads = Loads {
            non_deferrable: 5000.0,
            ..Default::default()
        };
        let s = balance_close(&loads, 2000.0, 1000.0);
        assert!((s.grid - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn charging_sign_convention() {
        let loads = Loads {
            non_deferrable: 1000.0,
            ..Default::default()
        };
        let s = balance_close(&loads, 3000.0, -2000.0);
        assert!(s.grid.abs() < 1e-9);
        assert_eq!(s.curtailed, 0.0);
    }

    #[test]
    fn surplus_is_curtailed() {
        let loads = Loads {
            non_deferrable: 1000.0,
            ..Default::default()
        };
        let s = balance_close(&loads, 4000.0, 0.0);
        assert_eq!((s.grid, s.solar, s.curtailed), (0.0, 1000.0, 3000.0));
        assert!(s.is_balanced());
    }

    proptest! {
        #[test]
        fn always_balanced(h in 0.0f64..8000.0, x in 0.0f64..7560.0, d in 0.0f64..5000.0,
                           nd in 0.0f64..4000.0, pv in 0.0f64..6000.0, es in -3000.0f64..3000.0) {
            let s = balance_close(&Loads { hvac: h, xev: x, deferrable: d, non_deferrable: nd }, pv, es);
            prop_assert!(s.is_balanced());
            prop_assert!(s.solar >= 0.0 && s.curtailed >= 0.0);
        }
    }
}
