//! Smart-home energy co-simulation: plant models, a dead-band/rule baseline
//! controller, a sequential GA-solved receding-horizon coordinator, scenario
//! generation and evaluation metrics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod error;
pub mod ga;
pub mod ledger;
pub mod metrics;
pub mod optimizer;
pub mod plant;
pub mod scenario;
pub mod sim;
pub mod table;
pub mod trace;

pub use error::{HemError, Result};
