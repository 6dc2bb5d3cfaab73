pub mod campaign;
pub mod runner;

pub use campaign::{build_campaign, CampaignFile, CampaignSpec, CliOverrides, ControllerKind, Diagnostics, RunSpec};
pub use runner::{execute, replay, run_campaign, write_summary, ReplayError, RunOutcome};
