//! Scenario configuration, the deterministic round loop, metrics and CSV
//! emission, and the experiment sweeps.

mod engine;
mod metrics;
mod scenario;
mod sweeps;

pub use engine::{run_scenario, transition_allowed, JobReport, SimError, SimResult, UavState};
pub use metrics::{emit_csv, fmt_f64, rows_to_csv, CsvRow, MetricsRow, RunSummary, UavSummary};
pub use scenario::{
    default_engine, parse_scenario, ChannelConfig, ConsensusTiming, ParseError, RewardConfig,
    Scenario,
};
pub use sweeps::{
    energy_timeline, sweep_jobs, sweep_uav_count, sweep_users_consensus, EnergyRow, JobSweepRow,
    UavSweepRow, UserSweepRow, ALL_ENGINES, DEFAULT_JOB_COUNTS, DEFAULT_UAV_COUNTS,
    DEFAULT_USER_COUNTS,
};
