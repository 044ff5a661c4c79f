//! Experiment sweeps: fleet sizing, job-load response, per-engine
//! fleet requirements, and energy timelines, each emitted as CSV.
//!
//! Sweeps average over consecutive seeds starting at the base scenario's
//! seed; the same seed list is reused across sweep points (common random
//! numbers) so curves vary only through the swept parameter.

use super::engine::{run_scenario, SimError};
use super::metrics::{fmt_f64, CsvRow};
use super::scenario::Scenario;
use crate::consensus::EngineKind;

pub const DEFAULT_UAV_COUNTS: &[u32] = &[2, 4, 6, 8, 10, 12, 14, 16, 18, 20];
pub const DEFAULT_JOB_COUNTS: &[u32] = &[5, 10, 15, 20, 25];
pub const DEFAULT_USER_COUNTS: &[u32] = &[20, 40, 60, 80, 100];
pub const ALL_ENGINES: [EngineKind; 4] = [
    EngineKind::Poc,
    EngineKind::Pow,
    EngineKind::Poid,
    EngineKind::Poa,
];

/// Fleet-size sweep: mean end-to-end delay and success rate per count.
#[derive(Debug, Clone, PartialEq)]
pub struct UavSweepRow {
    pub uav_count: u32,
    pub mean_delay_s: f64,
    pub success_rate: f64,
}

impl CsvRow for UavSweepRow {
    fn header() -> &'static str {
        "uav_count,mean_delay_s,success_rate"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{}",
            self.uav_count,
            fmt_f64(self.mean_delay_s),
            fmt_f64(self.success_rate)
        )
    }
}

pub fn sweep_uav_count(
    base: &Scenario,
    counts: &[u32],
    seeds: u32,
) -> Result<Vec<UavSweepRow>, SimError> {
    let seeds = seeds.max(1);
    let mut rows = Vec::with_capacity(counts.len());
    for &count in counts {
        let mut success_sum = 0.0;
        let mut delay_sum = 0.0;
        let mut delay_n = 0u32;
        for s in 0..seeds {
            let mut sc = base.clone();
            sc.uav_count = count;
            sc.seed = base.seed.wrapping_add(s as u64);
            let res = run_scenario(&sc)?;
            success_sum += res.success_rate();
            if let Some(d) = res.mean_completion_delay_s() {
                delay_sum += d;
                delay_n += 1;
            }
        }
        rows.push(UavSweepRow {
            uav_count: count,
            mean_delay_s: if delay_n == 0 {
                0.0
            } else {
                delay_sum / delay_n as f64
            },
            success_rate: success_sum / seeds as f64,
        });
    }
    Ok(rows)
}

/// Job-count sweep: mean estimated vs actual delivery time per count.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSweepRow {
    pub job_count: u32,
    pub mean_edt_s: f64,
    pub mean_adt_s: f64,
}

impl CsvRow for JobSweepRow {
    fn header() -> &'static str {
        "job_count,mean_edt_s,mean_adt_s"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{}",
            self.job_count,
            fmt_f64(self.mean_edt_s),
            fmt_f64(self.mean_adt_s)
        )
    }
}

/// Delivery-time measurement relaxes the deadline so late completions are
/// observed instead of censored; the sweep measures time, not the
/// service level.
pub fn sweep_jobs(
    base: &Scenario,
    job_counts: &[u32],
    seeds: u32,
) -> Result<Vec<JobSweepRow>, SimError> {
    let seeds = seeds.max(1);
    let mut rows = Vec::with_capacity(job_counts.len());
    for &count in job_counts {
        let mut edt_sum = 0.0;
        let mut adt_sum = 0.0;
        let mut n = 0u32;
        for s in 0..seeds {
            let mut sc = base.clone();
            sc.job_count = count;
            sc.deadline_s = base.deadline_s * 100.0;
            sc.seed = base.seed.wrapping_add(s as u64);
            let res = run_scenario(&sc)?;
            let adts: Vec<f64> = res.jobs.iter().filter_map(|j| j.adt_s).collect();
            if let (Some(edt), false) = (res.mean_edt_s(), adts.is_empty()) {
                edt_sum += edt;
                adt_sum += adts.iter().sum::<f64>() / adts.len() as f64;
                n += 1;
            }
        }
        rows.push(JobSweepRow {
            job_count: count,
            mean_edt_s: if n == 0 { 0.0 } else { edt_sum / n as f64 },
            mean_adt_s: if n == 0 { 0.0 } else { adt_sum / n as f64 },
        });
    }
    Ok(rows)
}

/// Fleet-sizing sweep: minimum UAV count meeting the service level per
/// (user count, engine) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSweepRow {
    pub user_count: u32,
    pub engine: EngineKind,
    pub uavs_required: u32,
    pub saturated: bool,
}

impl CsvRow for UserSweepRow {
    fn header() -> &'static str {
        "user_count,engine,uavs_required,saturated"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{}",
            self.user_count,
            self.engine.as_str(),
            self.uavs_required,
            u8::from(self.saturated)
        )
    }
}

/// Mean deadline satisfaction over the seed list for one cell.
fn satisfaction(base: &Scenario, seeds: u32) -> Result<f64, SimError> {
    let mut sum = 0.0;
    for s in 0..seeds {
        let mut sc = base.clone();
        sc.seed = base.seed.wrapping_add(s as u64);
        sum += run_scenario(&sc)?.deadline_satisfaction();
    }
    Ok(sum / seeds as f64)
}

/// Ascending search for the smallest fleet meeting the service level. One
/// job is issued per user. Search warm-starts from the previous user
/// count's answer since requirements grow with load.
pub fn sweep_users_consensus(
    base: &Scenario,
    user_counts: &[u32],
    engines: &[EngineKind],
    seeds: u32,
) -> Result<Vec<UserSweepRow>, SimError> {
    let seeds = seeds.max(1);
    let mut rows = Vec::with_capacity(user_counts.len() * engines.len());
    for &kind in engines {
        let mut floor = 0u32;
        for &users in user_counts {
            let mut cell = base.with_engine_kind(kind);
            cell.user_count = users;
            cell.job_count = users;
            let mut found: Option<u32> = None;
            for n in floor..=base.fleet_cap {
                cell.uav_count = n;
                if satisfaction(&cell, seeds)? >= base.service_level {
                    found = Some(n);
                    break;
                }
            }
            match found {
                Some(n) => {
                    floor = n;
                    rows.push(UserSweepRow {
                        user_count: users,
                        engine: kind,
                        uavs_required: n,
                        saturated: false,
                    });
                }
                None => {
                    floor = base.fleet_cap;
                    rows.push(UserSweepRow {
                        user_count: users,
                        engine: kind,
                        uavs_required: base.fleet_cap,
                        saturated: true,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Per-round energy timeline for each engine over one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub round: u64,
    pub sim_time_s: f64,
    pub engine: EngineKind,
    pub round_consensus_j: f64,
    pub cumulative_consensus_j: f64,
    pub cumulative_flight_j: f64,
    pub cumulative_total_j: f64,
}

impl CsvRow for EnergyRow {
    fn header() -> &'static str {
        "round,sim_time_s,engine,round_consensus_j,cumulative_consensus_j,cumulative_flight_j,cumulative_total_j"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.round,
            fmt_f64(self.sim_time_s),
            self.engine.as_str(),
            fmt_f64(self.round_consensus_j),
            fmt_f64(self.cumulative_consensus_j),
            fmt_f64(self.cumulative_flight_j),
            fmt_f64(self.cumulative_total_j)
        )
    }
}

pub fn energy_timeline(
    base: &Scenario,
    engines: &[EngineKind],
) -> Result<Vec<EnergyRow>, SimError> {
    let mut rows = Vec::new();
    for &kind in engines {
        let sc = base.with_engine_kind(kind);
        let res = run_scenario(&sc)?;
        let mut cumulative_consensus = 0.0;
        let mut cumulative_flight = 0.0;
        for (row, flight) in res.rows.iter().zip(res.round_flight_j.iter()) {
            cumulative_consensus += row.consensus_energy_j;
            cumulative_flight += flight;
            rows.push(EnergyRow {
                round: row.round,
                sim_time_s: row.sim_time_s,
                engine: kind,
                round_consensus_j: row.consensus_energy_j,
                cumulative_consensus_j: cumulative_consensus,
                cumulative_flight_j: cumulative_flight,
                cumulative_total_j: row.cumulative_energy_j,
            });
        }
    }
    Ok(rows)
}
