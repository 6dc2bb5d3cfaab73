//! Physical component models of the home and the household power balance.

pub mod appliance;
pub mod balance;
pub mod battery;
pub mod hvac;
pub mod solar;
pub mod thermal;
pub mod xev;

pub use appliance::{ActivityKind, Appliance, DeferrableKind};
pub use balance::{balance_close, Loads, PowerSnapshot};
pub use battery::{BatteryPack, CellModel, Dispatch, SocStep, TemperatureSource, Terminal};
pub use hvac::{HvacMode, HvacPower, HvacUnit};
pub use solar::SolarArray;
pub use thermal::{thermal_step, ThermalHouse, ThermalResponse};
pub use xev::{charge_profile, xev_charge_step, ChargePhase, ChargeStep, Charger};
