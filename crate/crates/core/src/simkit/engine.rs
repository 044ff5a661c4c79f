//! The deterministic round loop.
//!
//! Each round runs: heartbeats, proposer selection, block append (flushing
//! the previous round's delivery records and reputation updates), job
//! assignment, flight/transmission progression with energy debits, reward
//! computation, and one metrics row. One closing round at the horizon
//! commits the final round's records so every delivered job lands
//! on-chain.
//!
//! Consensus energy is accounted at the system level and never debited
//! from flight batteries, so the physical workload of a run is identical
//! across engines for a fixed seed; engines differ in proposer choice,
//! consensus energy, and the confirmation latency added to each delivery
//! record.

use std::collections::VecDeque;

use crate::airframe::{
    can_return, payload_speed, sortie_energy, EnergyState, KinematicState, SizeClass, UavSpec,
};
use crate::channel::{achievable_rate, snr, transmission_delay, Channel, DataPacket, Link};
use crate::consensus::{
    instant_reward, select_proposer, timestamp_freshness, CompetenceInputs, ConsensusError,
    EngineKind, RewardParams, RoundOutcome,
};
use crate::delivery::{
    assign_jobs, complete_delivery, estimate_delivery_time, issue_certificate, reputation_score,
    Assignment, AssignmentStatus, FleetMember, FleetStats, HistoryEntry, Job, MissionKind,
    NormBounds, PendingJob, Point2, ReputationRecord,
};
use crate::ledger::{
    register_uav, sha256, CanonicalBuf, Chain, ChainFault, LedgerError, Transaction, TxPayload,
};
use crate::rng::SplitMix64;
use thiserror::Error;

use super::metrics::{rows_to_csv, MetricsRow, RunSummary, UavSummary};
use super::scenario::Scenario;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("illegal UAV state transition {from:?} -> {to:?} (uav {uav_id}, round {round})")]
    IllegalTransition {
        uav_id: u64,
        round: u64,
        from: UavState,
        to: UavState,
    },
    #[error("ledger rejected a block: {0}")]
    Ledger(#[from] LedgerError),
    #[error("consensus failed: {0}")]
    Consensus(#[from] ConsensusError),
    #[error("final chain failed validation: {0}")]
    ChainInvalid(ChainFault),
}

/// Network-level UAV state. From `Ready` a UAV enters the active stage
/// (`Transmitting` while serving, `Queued` while holding a backlog between
/// jobs) and returns to `Ready`; `Registering` only precedes the first
/// `Ready`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavState {
    Registering,
    Ready,
    Transmitting,
    Queued,
}

/// Legal transition edges, self-loops included.
pub fn transition_allowed(from: UavState, to: UavState) -> bool {
    use UavState::*;
    match (from, to) {
        (a, b) if a == b => true,
        (Registering, Ready) => true,
        (Ready, Transmitting) | (Ready, Queued) => true,
        (Transmitting, Ready) | (Queued, Ready) => true,
        // Movement within the active stage.
        (Transmitting, Queued) | (Queued, Transmitting) => true,
        _ => false,
    }
}

/// Per-job outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct JobReport {
    pub job_id: u64,
    pub assigned: bool,
    pub delivered: bool,
    pub failed: bool,
    pub edt_s: Option<f64>,
    pub adt_s: Option<f64>,
    /// Realized start-to-completion delay, recorded even for late jobs.
    pub completion_delay_s: Option<f64>,
    /// Simulated time at which the delivery record was confirmed on-chain
    /// (block timestamp plus that round's consensus duration).
    pub confirmed_s: Option<f64>,
    /// Delivered and confirmed within the job deadline.
    pub met_deadline: bool,
    pub tx_delay_est_s: f64,
    pub tx_delay_actual_s: Option<f64>,
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub rows: Vec<MetricsRow>,
    /// Flight and hover energy spent in each round, aligned with `rows`.
    pub round_flight_j: Vec<f64>,
    pub chain: Chain,
    pub outcomes: Vec<RoundOutcome>,
    pub jobs: Vec<JobReport>,
    pub summary: RunSummary,
    pub csv: String,
}

impl SimResult {
    /// Fraction of requests confirmed within their deadline; vacuously 1
    /// for an empty workload.
    pub fn deadline_satisfaction(&self) -> f64 {
        if self.jobs.is_empty() {
            return 1.0;
        }
        let met = self.jobs.iter().filter(|j| j.met_deadline).count();
        met as f64 / self.jobs.len() as f64
    }

    /// Mean realized completion delay over all physically completed jobs.
    pub fn mean_completion_delay_s(&self) -> Option<f64> {
        let delays: Vec<f64> = self
            .jobs
            .iter()
            .filter_map(|j| j.completion_delay_s)
            .collect();
        if delays.is_empty() {
            None
        } else {
            Some(delays.iter().sum::<f64>() / delays.len() as f64)
        }
    }

    /// Mean estimated delivery time over all assigned jobs.
    pub fn mean_edt_s(&self) -> Option<f64> {
        let edts: Vec<f64> = self.jobs.iter().filter_map(|j| j.edt_s).collect();
        if edts.is_empty() {
            None
        } else {
            Some(edts.iter().sum::<f64>() / edts.len() as f64)
        }
    }

    /// Delivered over delivered-plus-failed after horizon accounting.
    pub fn success_rate(&self) -> f64 {
        let delivered = self.jobs.iter().filter(|j| j.delivered).count();
        let failed = self.jobs.iter().filter(|j| j.failed).count();
        if delivered + failed == 0 {
            0.0
        } else {
            delivered as f64 / (delivered + failed) as f64
        }
    }
}

// Fleet composition table: 40% small, 30% medium, 30% large, cycling by
// index. Rated travel distance and the per-meter flight cost follow from
// draining the battery over one hour at the class's max-payload speed.
fn class_row(index: u32) -> (SizeClass, f64, f64, f64) {
    match index % 10 {
        0..=3 => (SizeClass::Small, 5.0, 4.0, 1.2e6),
        4..=6 => (SizeClass::Medium, 10.0, 8.0, 1.8e6),
        _ => (SizeClass::Large, 15.0, 12.0, 2.4e6),
    }
}

const RATED_FLIGHT_DURATION_S: f64 = 3600.0;

fn build_spec(index: u32) -> UavSpec {
    let (size_class, capacity, empty, battery) = class_row(index);
    let spec = UavSpec {
        node_id: index as u64 + 1,
        size_class,
        empty_weight_kg: empty,
        payload_capacity_kg: capacity,
        battery_capacity_j: battery,
        rated_flight_duration_s: RATED_FLIGHT_DURATION_S,
        rated_travel_distance_m: 1.0, // placeholder until speed is known
    };
    let max_payload_speed = payload_speed(&spec, capacity).expect("capacity payload fits");
    UavSpec {
        rated_travel_distance_m: RATED_FLIGHT_DURATION_S * max_payload_speed,
        ..spec
    }
}

fn gain_at(distance_m: f64, ref_m: f64) -> f64 {
    1.0 / (1.0 + (distance_m / ref_m) * (distance_m / ref_m))
}

#[derive(Debug, Clone)]
struct QueuedJob {
    job_id: u64,
    service_est_s: f64,
    energy_est_j: f64,
}

#[derive(Debug, Clone)]
enum Phase {
    Flying {
        start: Point2,
        total_m: f64,
        traveled_m: f64,
        speed_mps: f64,
    },
    Transmit {
        remaining_s: f64,
    },
}

#[derive(Debug, Clone)]
struct ActiveFlight {
    job_id: u64,
    phase: Phase,
}

#[derive(Debug)]
struct UavSim {
    spec: UavSpec,
    kin: KinematicState,
    energy: EnergyState,
    rep: ReputationRecord,
    state: UavState,
    alive: bool,
    last_heartbeat_s: f64,
    queue: VecDeque<QueuedJob>,
    active: Option<ActiveFlight>,
    delivered_count: u64,
}

impl UavSim {
    fn pos2(&self) -> Point2 {
        Point2 {
            x: self.kin.position_m[0],
            y: self.kin.position_m[1],
        }
    }

    fn backlog_s(&self, jobs: &[JobSim]) -> f64 {
        let active = match &self.active {
            None => 0.0,
            Some(f) => match &f.phase {
                Phase::Flying {
                    total_m,
                    traveled_m,
                    speed_mps,
                    ..
                } => (total_m - traveled_m) / speed_mps + jobs[f.job_id as usize].tx_delay_est_s,
                Phase::Transmit { remaining_s } => *remaining_s,
            },
        };
        active + self.queue.iter().map(|q| q.service_est_s).sum::<f64>()
    }

    fn committed_energy_j(&self, jobs: &[JobSim]) -> f64 {
        let active = match &self.active {
            None => 0.0,
            Some(f) => match &f.phase {
                Phase::Flying {
                    total_m,
                    traveled_m,
                    ..
                } => {
                    (total_m - traveled_m) * self.energy.flight_energy_per_meter_j
                        + self.energy.hover_power_w * jobs[f.job_id as usize].tx_delay_est_s
                }
                Phase::Transmit { remaining_s } => self.energy.hover_power_w * remaining_s,
            },
        };
        active + self.queue.iter().map(|q| q.energy_est_j).sum::<f64>()
    }
}

#[derive(Debug)]
struct JobSim {
    job: Job,
    arrival_s: f64,
    pending: bool,
    assignment: Option<Assignment>,
    delivered: bool,
    failed: bool,
    completion_s: Option<f64>,
    confirmed_s: Option<f64>,
    met_deadline: bool,
    tx_delay_est_s: f64,
    tx_delay_actual_s: Option<f64>,
    owner_pos: Point2,
}

/// Runs one scenario to completion.
pub fn run_scenario(scenario: &Scenario) -> Result<SimResult, SimError> {
    let cfg = scenario;
    let dt = cfg.round_duration_s;
    let n_rounds = cfg.rounds();
    let engine = &cfg.engine;
    let channel = Channel {
        channel_id: 0,
        bandwidth_hz: cfg.channels.bandwidth_hz,
        noise_power_w: cfg.channels.noise_w,
    };

    // --- world generation, one stream per subsystem ---
    let mut wp_rng = SplitMix64::stream(cfg.seed, "waypoints");
    let waypoints: Vec<Point2> = (0..cfg.waypoint_count.max(2))
        .map(|_| Point2 {
            x: wp_rng.range_f64(0.0, cfg.region_side_m),
            y: wp_rng.range_f64(0.0, cfg.region_side_m),
        })
        .collect();

    let mut user_rng = SplitMix64::stream(cfg.seed, "users");
    let users: Vec<Point2> = (0..cfg.user_count)
        .map(|_| Point2 {
            x: user_rng.range_f64(0.0, cfg.region_side_m),
            y: user_rng.range_f64(0.0, cfg.region_side_m),
        })
        .collect();

    let mut fleet_rng = SplitMix64::stream(cfg.seed, "fleet");
    let mut uavs: Vec<UavSim> = (0..cfg.uav_count)
        .map(|i| {
            let spec = build_spec(i);
            let max_speed =
                payload_speed(&spec, spec.payload_capacity_kg).expect("capacity payload fits");
            let per_meter = spec.battery_capacity_j / (RATED_FLIGHT_DURATION_S * max_speed);
            let energy = EnergyState::new(
                spec.battery_capacity_j,
                cfg.energy_threshold_frac * spec.battery_capacity_j,
                per_meter,
                cfg.hover_power_w,
                cfg.hover_unit_energy_w,
            );
            let position = [
                fleet_rng.range_f64(0.0, cfg.region_side_m),
                fleet_rng.range_f64(0.0, cfg.region_side_m),
                0.0,
            ];
            let rep = ReputationRecord::new(spec.node_id);
            UavSim {
                spec,
                kin: KinematicState {
                    position_m: position,
                    velocity_mps: [0.0; 3],
                    flight_elapsed_s: 0.0,
                },
                energy,
                rep,
                state: UavState::Registering,
                alive: true,
                last_heartbeat_s: 0.0,
                queue: VecDeque::new(),
                active: None,
                delivered_count: 0,
            }
        })
        .collect();

    let mut job_rng = SplitMix64::stream(cfg.seed, "jobs");
    let mut arrival_rng = SplitMix64::stream(cfg.seed, "arrivals");
    let mut arrivals: Vec<f64> = (0..cfg.job_count)
        .map(|_| {
            if cfg.arrival_window_s > 0.0 {
                arrival_rng.range_f64(0.0, cfg.arrival_window_s)
            } else {
                0.0
            }
        })
        .collect();
    arrivals.sort_by(|a, b| a.partial_cmp(b).expect("arrival times are finite"));
    let missions = [
        MissionKind::Delivery,
        MissionKind::ECommerce,
        MissionKind::EmergencyComm,
        MissionKind::Healthcare,
    ];
    let mut jobs: Vec<JobSim> = (0..cfg.job_count)
        .map(|j| {
            let oi = job_rng.below(waypoints.len() as u64) as usize;
            let mut di = job_rng.below(waypoints.len() as u64) as usize;
            while di == oi {
                di = job_rng.below(waypoints.len() as u64) as usize;
            }
            // Parcel mix skews light: u^1.5 maps uniform draws onto the
            // 1-15 kg capacity range with ~25% needing a large airframe.
            let u = job_rng.next_f64();
            let payload = 1.0 + 14.0 * (u * u.sqrt());
            let size_bits = job_rng.range_f64(1.0e6, 8.0e6);
            let cost = job_rng.range_f64(5.0, 50.0);
            let owner = if users.is_empty() {
                0
            } else {
                (j as u64) % users.len() as u64
            };
            let destination = waypoints[di];
            let owner_pos = users.get(owner as usize).copied().unwrap_or(destination);
            let job = Job {
                job_id: j as u64,
                origin: waypoints[oi],
                destination,
                payload_kg: payload,
                data_packet: DataPacket {
                    packet_id: j as u64,
                    owner,
                    size_bits,
                    deadline_s: cfg.deadline_s,
                },
                deadline_s: cfg.deadline_s,
                cost,
                mission: missions[j as usize % missions.len()],
            };
            job.validate().expect("generated jobs satisfy invariants");
            // Interference-free transmission estimate from the hover point.
            let d_link = link_distance(destination, owner_pos, cfg.channels.altitude_m);
            let own = Link {
                user_id: owner,
                uav_id: 0,
                channel_id: (owner % cfg.channels.count as u64) as u32,
                tx_power_w: cfg.channels.tx_power_w,
                channel_gain: gain_at(d_link, cfg.channels.gain_ref_m),
            };
            let rate = achievable_rate(channel.bandwidth_hz, snr(&own, &[], &channel));
            let tx_delay_est_s = transmission_delay(&job.data_packet, rate)
                .expect("positive tx power gives a positive rate");
            JobSim {
                job,
                arrival_s: arrivals[j as usize],
                pending: true,
                assignment: None,
                delivered: false,
                failed: false,
                completion_s: None,
                confirmed_s: None,
                met_deadline: false,
                tx_delay_est_s,
                tx_delay_actual_s: None,
                owner_pos,
            }
        })
        .collect();

    // --- ledger state ---
    let mut chain = Chain::genesis();
    let mut next_tx_id: u64 = 1;
    let mut registered: Vec<u64> = Vec::new();
    let mut buffered_txs: Vec<Transaction> = Vec::new();
    let mut buffered_confirm_jobs: Vec<u64> = Vec::new();

    let mut rows: Vec<MetricsRow> = Vec::with_capacity(n_rounds as usize + 2);
    let mut round_flight_j: Vec<f64> = Vec::with_capacity(n_rounds as usize + 2);
    let mut outcomes: Vec<RoundOutcome> = Vec::new();
    let mut cumulative_energy_j = 0.0;
    let mut consensus_energy_total_j = 0.0;
    let mut delivered_total: u64 = 0;
    let mut failed_total: u64 = 0;

    // Rounds 0..n_rounds progress the world; round n_rounds only commits
    // the final records.
    for round in 0..=n_rounds {
        let t0 = round as f64 * dt;
        let ts = t0 as u64;
        let closing = round == n_rounds;
        let mut round_energy_j = 0.0;
        let mut heartbeats: Vec<Transaction> = Vec::new();

        if round == 0 {
            // Registration phase: the trusted authority commits every
            // UAV's registration in the first block.
            let mut txs = Vec::new();
            for uav in &uavs {
                let tx = register_uav(&chain, &uav.spec, ts, next_tx_id)?;
                next_tx_id += 1;
                registered.push(uav.spec.node_id);
                txs.push(tx);
            }
            if !txs.is_empty() {
                chain.append_block(txs, 0, ts, 0, 0)?;
            }
            for uav in &mut uavs {
                advance_state(uav, UavState::Ready, round)?;
            }
            rows.push(make_row(
                round,
                t0,
                engine.kind(),
                0.0,
                cumulative_energy_j,
                &jobs,
                &uavs,
                delivered_total,
                failed_total,
            ));
            round_flight_j.push(0.0);
            continue;
        }

        // --- heartbeats ---
        for uav in &mut uavs {
            if uav.alive {
                heartbeats.push(Transaction::new(
                    next_tx_id,
                    TxPayload::Heartbeat {
                        uav_id: uav.spec.node_id,
                        timestamp_s: ts,
                    },
                ));
                next_tx_id += 1;
                uav.last_heartbeat_s = t0;
            }
        }

        // --- consensus ---
        let candidates = competence_inputs(&uavs, &jobs, &registered, t0, cfg);
        let selection = match select_proposer(engine, &candidates, round, cfg.seed) {
            Ok(outcome) => Some(outcome),
            Err(ConsensusError::NoEligibleCandidate) => None,
            Err(other) => return Err(other.into()),
        };
        let eligible_count = candidates.iter().filter(|c| c.poi_valid).count();
        let duration_s = match (&selection, engine.kind()) {
            (None, _) => 0.0,
            (Some(_), EngineKind::Poc) => cfg.timing.poc_round_s,
            (Some(outcome), EngineKind::Pow) => outcome.attempts as f64 / cfg.timing.hash_rate_hps,
            (Some(_), EngineKind::Poid) | (Some(_), EngineKind::Poa) => {
                cfg.timing.verify_per_node_s * eligible_count as f64
            }
        };
        let consensus_energy_j = selection
            .as_ref()
            .map(|o| o.consensus_energy_j)
            .unwrap_or(0.0);

        // --- block append: flush last round's records ---
        let mut confirmed_this_round: u64 = 0;
        if let Some(outcome) = &selection {
            let mut txs = heartbeats;
            txs.append(&mut buffered_txs);
            let confirm: Vec<u64> = std::mem::take(&mut buffered_confirm_jobs);
            if !txs.is_empty() {
                chain.append_block(txs, outcome.proposer, ts, 0, 0)?;
                for job_id in confirm {
                    let job = &mut jobs[job_id as usize];
                    job.confirmed_s = Some(t0 + duration_s);
                    job.met_deadline =
                        job.delivered && t0 + duration_s <= job.arrival_s + job.job.deadline_s;
                    confirmed_this_round += 1;
                }
            }
        }
        // With no proposer this round, heartbeats are dropped and records
        // stay buffered for the next successful round.

        if !closing {
            // --- expire unassigned jobs past their deadline ---
            for job in jobs.iter_mut() {
                if job.pending && t0 > job.arrival_s + job.job.deadline_s {
                    job.pending = false;
                    job.failed = true;
                    failed_total += 1;
                }
            }

            // --- job assignment ---
            let members: Vec<FleetMember> = uavs
                .iter()
                .filter(|u| u.alive)
                .map(|u| {
                    let committed = u.committed_energy_j(&jobs);
                    FleetMember {
                        spec: u.spec.clone(),
                        position_m: u.kin.position_m,
                        reputation: u.rep.score,
                        poi_valid: registered.contains(&u.spec.node_id),
                        timestamp_freshness: timestamp_freshness(
                            t0 - u.last_heartbeat_s,
                            cfg.staleness_window_s,
                        ),
                        resource_score: resource_score(u),
                        backlog_s: u.backlog_s(&jobs),
                        available_energy_j: (u.energy.remaining_j
                            - u.energy.threshold_j
                            - committed)
                            .max(0.0),
                        flight_energy_per_meter_j: u.energy.flight_energy_per_meter_j,
                        hover_power_w: u.energy.hover_power_w,
                    }
                })
                .collect();
            let pending: Vec<PendingJob> = jobs
                .iter()
                .filter(|j| j.pending && j.arrival_s <= t0)
                .map(|j| PendingJob {
                    job: j.job.clone(),
                    tx_delay_est_s: j.tx_delay_est_s,
                })
                .collect();
            let assignments = assign_jobs(&pending, &members, engine, t0);
            for a in assignments {
                let uav = uavs
                    .iter_mut()
                    .find(|u| u.spec.node_id == a.uav_id)
                    .expect("assignment targets a fleet member");
                let job = &mut jobs[a.job_id as usize];
                let service_est_s = estimate_delivery_time(
                    &job.job,
                    &uav.spec,
                    uav.kin.position_m,
                    0.0,
                    job.tx_delay_est_s,
                )
                .expect("assign_jobs verified capacity");
                let flight_s = service_est_s - job.tx_delay_est_s;
                let speed = payload_speed(&uav.spec, job.job.payload_kg)
                    .expect("assign_jobs verified capacity");
                let energy_est_j = sortie_energy(
                    flight_s * speed * uav.energy.flight_energy_per_meter_j,
                    uav.energy.hover_power_w,
                    job.tx_delay_est_s,
                );
                uav.queue.push_back(QueuedJob {
                    job_id: a.job_id,
                    service_est_s,
                    energy_est_j,
                });
                job.pending = false;
                job.assignment = Some(a);
            }

            // --- progression ---
            let transmit_snapshot: Vec<(u64, Point2, u32)> = uavs
                .iter()
                .filter(|u| u.alive)
                .filter_map(|u| match &u.active {
                    Some(ActiveFlight {
                        job_id,
                        phase: Phase::Transmit { .. },
                    }) => {
                        let owner = jobs[*job_id as usize].job.data_packet.owner;
                        Some((
                            u.spec.node_id,
                            u.pos2(),
                            (owner % cfg.channels.count as u64) as u32,
                        ))
                    }
                    _ => None,
                })
                .collect();
            let window_end = t0 + dt;
            let mut delivered_events: Vec<u64> = Vec::new();
            for ui in 0..uavs.len() {
                if !uavs[ui].alive {
                    continue;
                }
                let died = progress_uav(
                    ui,
                    &mut uavs,
                    &mut jobs,
                    t0,
                    window_end,
                    cfg,
                    &channel,
                    &transmit_snapshot,
                    &mut next_tx_id,
                    &mut buffered_txs,
                    &mut buffered_confirm_jobs,
                    &mut delivered_events,
                    &mut delivered_total,
                    &mut failed_total,
                    &mut round_energy_j,
                )?;
                if died {
                    requeue_orphans(&mut uavs[ui], &mut jobs);
                }
            }

            // --- reputation refresh ---
            let stats = fleet_stats(&uavs);
            let mut update_ids: Vec<u64> = delivered_events;
            update_ids.sort_unstable();
            update_ids.dedup();
            for uav in uavs.iter_mut().filter(|u| u.alive) {
                uav.rep.score = reputation_score(&uav.rep, uav.spec.payload_capacity_kg, &stats);
                if issue_certificate(&mut uav.rep, cfg.certificate_threshold).is_some() {
                    uav.rep.score =
                        reputation_score(&uav.rep, uav.spec.payload_capacity_kg, &stats);
                    if !update_ids.contains(&uav.spec.node_id) {
                        update_ids.push(uav.spec.node_id);
                    }
                }
            }
            update_ids.sort_unstable();
            for id in update_ids {
                if let Some(uav) = uavs.iter().find(|u| u.spec.node_id == id) {
                    buffered_txs.push(Transaction::new(
                        next_tx_id,
                        TxPayload::ReputationUpdate {
                            uav_id: id,
                            score: uav.rep.score,
                        },
                    ));
                    next_tx_id += 1;
                }
            }

            // --- state machine ---
            for uav in uavs.iter_mut().filter(|u| u.alive) {
                let next = if uav.active.is_some() {
                    UavState::Transmitting
                } else if !uav.queue.is_empty() {
                    UavState::Queued
                } else {
                    UavState::Ready
                };
                advance_state(uav, next, round)?;
            }
        }

        // --- reward ---
        let mut outcome = selection;
        if let Some(o) = &mut outcome {
            o.within_limit = duration_s <= cfg.reward.time_limit_s;
            if confirmed_this_round > 0 {
                let alive: Vec<&UavSim> = uavs.iter().filter(|u| u.alive).collect();
                let fleet_avg = if alive.is_empty() {
                    0.0
                } else {
                    alive.iter().map(|u| u.energy.remaining_j).sum::<f64>() / alive.len() as f64
                };
                let proposer_remaining = uavs
                    .iter()
                    .find(|u| u.spec.node_id == o.proposer)
                    .map(|u| u.energy.remaining_j)
                    .unwrap_or(fleet_avg);
                o.reward = instant_reward(&RewardParams {
                    success_reward: cfg.reward.success_reward,
                    cost_weight: cfg.reward.cost_weight,
                    system_cost_j: round_energy_j + consensus_energy_j,
                    users_served: confirmed_this_round,
                    penalty_index: cfg.reward.penalty_index,
                    time_limit_s: cfg.reward.time_limit_s,
                    consensus_duration_s: duration_s,
                    fleet_avg_energy_j: fleet_avg,
                    remaining_energy_j: proposer_remaining,
                    hover_unit_energy_w: cfg.hover_unit_energy_w,
                })?;
            }
            outcomes.push(o.clone());
        }

        cumulative_energy_j += round_energy_j + consensus_energy_j;
        consensus_energy_total_j += consensus_energy_j;
        round_flight_j.push(round_energy_j);
        rows.push(make_row(
            round,
            t0,
            engine.kind(),
            consensus_energy_j,
            cumulative_energy_j,
            &jobs,
            &uavs,
            delivered_total,
            failed_total,
        ));
    }

    // Horizon accounting: anything unfinished whose deadline has passed is
    // a failure; jobs with open deadlines at the horizon stay unresolved.
    let horizon = n_rounds as f64 * dt;
    for job in jobs.iter_mut() {
        if !job.delivered && !job.failed && horizon > job.arrival_s + job.job.deadline_s {
            job.failed = true;
            failed_total += 1;
        }
    }

    chain.validate().map_err(SimError::ChainInvalid)?;

    let flight_energy_j: f64 = uavs
        .iter()
        .map(|u| u.energy.capacity_j - u.energy.remaining_j)
        .sum();
    let success_rate = if delivered_total + failed_total == 0 {
        0.0
    } else {
        delivered_total as f64 / (delivered_total + failed_total) as f64
    };
    let met = jobs.iter().filter(|j| j.met_deadline).count();
    let deadline_satisfaction = if jobs.is_empty() {
        1.0
    } else {
        met as f64 / jobs.len() as f64
    };
    let summary = RunSummary {
        engine: engine.kind().as_str().to_string(),
        seed: cfg.seed,
        rounds: n_rounds,
        blocks: chain.len() as u64,
        delivered: delivered_total,
        failed: failed_total,
        success_rate,
        deadline_satisfaction,
        flight_energy_j,
        consensus_energy_j: consensus_energy_total_j,
        total_energy_j: flight_energy_j + consensus_energy_total_j,
        chain_digest: chain.digest().to_hex(),
        per_uav: uavs
            .iter()
            .map(|u| UavSummary {
                uav_id: u.spec.node_id,
                reputation: u.rep.score,
                certificate: u.rep.certificate_value > 0.0,
                remaining_j: u.energy.remaining_j,
                delivered: u.delivered_count,
            })
            .collect(),
    };

    let job_reports: Vec<JobReport> = jobs
        .iter()
        .map(|j| JobReport {
            job_id: j.job.job_id,
            assigned: j.assignment.is_some(),
            delivered: j.delivered,
            failed: j.failed,
            edt_s: j.assignment.as_ref().map(|a| a.edt_s),
            adt_s: j.assignment.as_ref().and_then(|a| a.adt_s),
            completion_delay_s: j
                .completion_s
                .and_then(|c| j.assignment.as_ref().map(|a| c - a.start_time_s)),
            confirmed_s: j.confirmed_s,
            met_deadline: j.met_deadline,
            tx_delay_est_s: j.tx_delay_est_s,
            tx_delay_actual_s: j.tx_delay_actual_s,
        })
        .collect();

    let csv = rows_to_csv(&rows);
    Ok(SimResult {
        rows,
        round_flight_j,
        chain,
        outcomes,
        jobs: job_reports,
        summary,
        csv,
    })
}

fn link_distance(hover: Point2, user: Point2, altitude_m: f64) -> f64 {
    let ground = hover.dist(&user);
    (ground * ground + altitude_m * altitude_m).sqrt()
}

fn resource_score(uav: &UavSim) -> f64 {
    let energy_frac = uav.energy.remaining_j / uav.energy.capacity_j;
    let bandwidth_free = if uav.active.is_some() { 0.0 } else { 1.0 };
    0.5 * energy_frac + 0.5 * bandwidth_free
}

fn competence_inputs(
    uavs: &[UavSim],
    jobs: &[JobSim],
    registered: &[u64],
    now_s: f64,
    cfg: &Scenario,
) -> Vec<CompetenceInputs> {
    let alive: Vec<&UavSim> = uavs.iter().filter(|u| u.alive).collect();
    let backlogs: Vec<f64> = alive.iter().map(|u| u.backlog_s(jobs)).collect();
    let lo = backlogs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = backlogs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bounds = NormBounds { min: lo, max: hi };
    alive
        .iter()
        .zip(backlogs.iter())
        .map(|(u, backlog)| CompetenceInputs {
            uav_id: u.spec.node_id,
            timestamp_freshness: timestamp_freshness(
                now_s - u.last_heartbeat_s,
                cfg.staleness_window_s,
            ),
            poi_valid: registered.contains(&u.spec.node_id) && can_return(&u.energy),
            resource_score: resource_score(u),
            delivery_score: 1.0 - bounds.normalize(*backlog),
        })
        .collect()
}

fn fleet_stats(uavs: &[UavSim]) -> FleetStats {
    let mut adt = (f64::INFINITY, f64::NEG_INFINITY);
    let mut cost = (f64::INFINITY, f64::NEG_INFINITY);
    let mut cap = (f64::INFINITY, f64::NEG_INFINITY);
    for u in uavs.iter().filter(|u| u.alive) {
        cap.0 = cap.0.min(u.spec.payload_capacity_kg);
        cap.1 = cap.1.max(u.spec.payload_capacity_kg);
        if let (Some(a), Some(c)) = (u.rep.mean_adt_s(), u.rep.mean_cost()) {
            adt.0 = adt.0.min(a);
            adt.1 = adt.1.max(a);
            cost.0 = cost.0.min(c);
            cost.1 = cost.1.max(c);
        }
    }
    let bounds = |pair: (f64, f64)| {
        if pair.0.is_finite() {
            NormBounds {
                min: pair.0,
                max: pair.1,
            }
        } else {
            NormBounds { min: 0.0, max: 0.0 }
        }
    };
    FleetStats {
        adt: bounds(adt),
        cost: bounds(cost),
        capacity: bounds(cap),
    }
}

fn advance_state(uav: &mut UavSim, next: UavState, round: u64) -> Result<(), SimError> {
    if !transition_allowed(uav.state, next) {
        return Err(SimError::IllegalTransition {
            uav_id: uav.spec.node_id,
            round,
            from: uav.state,
            to: next,
        });
    }
    uav.state = next;
    Ok(())
}

/// Returns orphaned jobs of a dead UAV to the pending pool.
fn requeue_orphans(uav: &mut UavSim, jobs: &mut [JobSim]) {
    let mut orphans: Vec<u64> = uav.queue.drain(..).map(|q| q.job_id).collect();
    if let Some(active) = uav.active.take() {
        orphans.push(active.job_id);
    }
    for id in orphans {
        let job = &mut jobs[id as usize];
        if !job.delivered && !job.failed {
            job.pending = true;
            job.assignment = None;
        }
    }
}

/// Advances one UAV through the round window. Returns true when the UAV
/// exhausted its battery and died.
#[allow(clippy::too_many_arguments)]
fn progress_uav(
    ui: usize,
    uavs: &mut [UavSim],
    jobs: &mut [JobSim],
    t0: f64,
    window_end: f64,
    cfg: &Scenario,
    channel: &Channel,
    transmit_snapshot: &[(u64, Point2, u32)],
    next_tx_id: &mut u64,
    buffered_txs: &mut Vec<Transaction>,
    buffered_confirm_jobs: &mut Vec<u64>,
    delivered_events: &mut Vec<u64>,
    delivered_total: &mut u64,
    failed_total: &mut u64,
    round_energy_j: &mut f64,
) -> Result<bool, SimError> {
    let mut t = t0;

    // Job starts happen only at the window open; a UAV finishing mid-round
    // turns around in the queued state until the next round.
    if uavs[ui].active.is_none() {
        if let Some(next) = uavs[ui].queue.pop_front() {
            let ji = next.job_id as usize;
            let payload = jobs[ji].job.payload_kg;
            let origin = jobs[ji].job.origin;
            let destination = jobs[ji].job.destination;
            let speed = payload_speed(&uavs[ui].spec, payload)
                .expect("queued jobs passed the capacity gate");
            let start = uavs[ui].pos2();
            let total_m = dist2(start, origin) + origin.dist(&destination);
            uavs[ui].active = Some(ActiveFlight {
                job_id: next.job_id,
                phase: Phase::Flying {
                    start,
                    total_m,
                    traveled_m: 0.0,
                    speed_mps: speed,
                },
            });
            if let Some(a) = jobs[ji].assignment.as_mut() {
                a.status = AssignmentStatus::Enroute;
            }
        }
    }

    while uavs[ui].active.is_some() && t < window_end {
        let flight = uavs[ui].active.clone().expect("loop condition");
        let ji = flight.job_id as usize;
        match flight.phase {
            Phase::Flying {
                start,
                total_m,
                traveled_m,
                speed_mps,
            } => {
                let reachable_m = speed_mps * (window_end - t);
                let remaining_m = total_m - traveled_m;
                let per_meter = uavs[ui].energy.flight_energy_per_meter_j;
                if remaining_m <= reachable_m {
                    // Arrive and switch to the hover/transmit phase.
                    let fly_s = remaining_m / speed_mps;
                    if debit(&mut uavs[ui], remaining_m * per_meter, round_energy_j) {
                        return Ok(true);
                    }
                    t += fly_s;
                    let dest = jobs[ji].job.destination;
                    let owner = jobs[ji].job.data_packet.owner;
                    let owner_pos = jobs[ji].owner_pos;
                    let packet = jobs[ji].job.data_packet;
                    let node_id = uavs[ui].spec.node_id;
                    {
                        let uav = &mut uavs[ui];
                        uav.kin.position_m = [dest.x, dest.y, 0.0];
                        uav.kin.velocity_mps = [0.0; 3];
                        uav.kin.flight_elapsed_s += fly_s;
                    }
                    // Interference: other UAVs transmitting on this
                    // packet's channel at the round open, received at this
                    // job's user.
                    let ch = (owner % cfg.channels.count as u64) as u32;
                    let own = Link {
                        user_id: owner,
                        uav_id: node_id,
                        channel_id: ch,
                        tx_power_w: cfg.channels.tx_power_w,
                        channel_gain: gain_at(
                            link_distance(dest, owner_pos, cfg.channels.altitude_m),
                            cfg.channels.gain_ref_m,
                        ),
                    };
                    let interferers: Vec<Link> = transmit_snapshot
                        .iter()
                        .filter(|(id, _, c)| *id != node_id && *c == ch)
                        .map(|(id, pos, c)| Link {
                            user_id: owner,
                            uav_id: *id,
                            channel_id: *c,
                            tx_power_w: cfg.channels.tx_power_w,
                            channel_gain: gain_at(
                                link_distance(*pos, owner_pos, cfg.channels.altitude_m),
                                cfg.channels.gain_ref_m,
                            ),
                        })
                        .collect();
                    let rate =
                        achievable_rate(channel.bandwidth_hz, snr(&own, &interferers, channel));
                    let tx_s = transmission_delay(&packet, rate)
                        .expect("positive tx power gives a positive rate");
                    jobs[ji].tx_delay_actual_s = Some(tx_s);
                    if let Some(a) = jobs[ji].assignment.as_mut() {
                        a.status = AssignmentStatus::Transmitting;
                    }
                    uavs[ui].active = Some(ActiveFlight {
                        job_id: flight.job_id,
                        phase: Phase::Transmit { remaining_s: tx_s },
                    });
                } else {
                    if debit(&mut uavs[ui], reachable_m * per_meter, round_energy_j) {
                        return Ok(true);
                    }
                    let traveled = traveled_m + reachable_m;
                    let origin = jobs[ji].job.origin;
                    let destination = jobs[ji].job.destination;
                    let (pos, dir) = route_position(start, origin, destination, traveled);
                    let uav = &mut uavs[ui];
                    uav.kin.position_m = [pos.x, pos.y, 0.0];
                    uav.kin.velocity_mps = [dir.x * speed_mps, dir.y * speed_mps, 0.0];
                    uav.kin.flight_elapsed_s += window_end - t;
                    uav.active = Some(ActiveFlight {
                        job_id: flight.job_id,
                        phase: Phase::Flying {
                            start,
                            total_m,
                            traveled_m: traveled,
                            speed_mps,
                        },
                    });
                    t = window_end;
                }
            }
            Phase::Transmit { remaining_s } => {
                let dt_avail = window_end - t;
                let hover_w = uavs[ui].energy.hover_power_w;
                if remaining_s <= dt_avail {
                    if debit(&mut uavs[ui], hover_w * remaining_s, round_energy_j) {
                        return Ok(true);
                    }
                    t += remaining_s;
                    let assignment = jobs[ji]
                        .assignment
                        .clone()
                        .expect("active jobs carry an assignment");
                    let (updated, record) =
                        complete_delivery(&assignment, &jobs[ji].job, t, *next_tx_id)
                            .expect("status is transmitting");
                    jobs[ji].completion_s = Some(t);
                    if updated.status == AssignmentStatus::Delivered {
                        *next_tx_id += 1;
                        jobs[ji].delivered = true;
                        *delivered_total += 1;
                        buffered_txs.push(record.expect("delivered jobs emit a record"));
                        buffered_confirm_jobs.push(flight.job_id);
                        let adt = updated.adt_s.expect("delivered jobs carry an adt");
                        let cost = jobs[ji].job.cost;
                        uavs[ui].rep.history.push(HistoryEntry {
                            job_id: flight.job_id,
                            adt_s: adt,
                            cost,
                        });
                        uavs[ui].delivered_count += 1;
                        delivered_events.push(uavs[ui].spec.node_id);
                    } else {
                        jobs[ji].failed = true;
                        *failed_total += 1;
                    }
                    jobs[ji].assignment = Some(updated);
                    uavs[ui].active = None;
                } else {
                    if debit(&mut uavs[ui], hover_w * dt_avail, round_energy_j) {
                        return Ok(true);
                    }
                    uavs[ui].active = Some(ActiveFlight {
                        job_id: flight.job_id,
                        phase: Phase::Transmit {
                            remaining_s: remaining_s - dt_avail,
                        },
                    });
                    t = window_end;
                }
            }
        }
    }
    Ok(false)
}

/// Debits round energy; on exhaustion marks the UAV dead and returns true.
fn debit(uav: &mut UavSim, joules: f64, round_energy_j: &mut f64) -> bool {
    match uav.energy.debit(joules) {
        Ok(()) => {
            *round_energy_j += joules;
            false
        }
        Err(_) => {
            // Spend whatever is left, then ground the UAV.
            let rest = uav.energy.remaining_j;
            let _ = uav.energy.debit(rest);
            *round_energy_j += rest;
            uav.alive = false;
            true
        }
    }
}

fn dist2(a: Point2, b: Point2) -> f64 {
    a.dist(&b)
}

/// Position and unit direction along the two-leg route after traveling
/// `traveled_m`.
fn route_position(
    start: Point2,
    origin: Point2,
    dest: Point2,
    traveled_m: f64,
) -> (Point2, Point2) {
    let d1 = start.dist(&origin);
    let (from, to, along) = if traveled_m < d1 {
        (start, origin, traveled_m)
    } else {
        (origin, dest, traveled_m - d1)
    };
    let len = from.dist(&to);
    if len == 0.0 {
        return (to, Point2 { x: 0.0, y: 0.0 });
    }
    let dir = Point2 {
        x: (to.x - from.x) / len,
        y: (to.y - from.y) / len,
    };
    let clamped = along.min(len);
    (
        Point2 {
            x: from.x + dir.x * clamped,
            y: from.y + dir.y * clamped,
        },
        dir,
    )
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    round: u64,
    sim_time_s: f64,
    engine: EngineKind,
    consensus_energy_j: f64,
    cumulative_energy_j: f64,
    jobs: &[JobSim],
    uavs: &[UavSim],
    delivered: u64,
    failed: u64,
) -> MetricsRow {
    let queued = jobs.iter().filter(|j| !j.delivered && !j.failed).count() as u64;
    let edts: Vec<f64> = jobs
        .iter()
        .filter_map(|j| j.assignment.as_ref().map(|a| a.edt_s))
        .collect();
    let adts: Vec<f64> = jobs
        .iter()
        .filter_map(|j| j.assignment.as_ref().and_then(|a| a.adt_s))
        .collect();
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let success_rate = if delivered + failed == 0 {
        0.0
    } else {
        delivered as f64 / (delivered + failed) as f64
    };
    // Reputation snapshot reference: a short digest of (id, score) pairs.
    let mut buf = CanonicalBuf::new();
    for u in uavs {
        buf.put_u64(u.spec.node_id);
        buf.put_f64(u.rep.score);
    }
    let reputation_ref = sha256(buf.as_slice()).to_hex()[..8].to_string();
    MetricsRow {
        round,
        sim_time_s,
        engine,
        consensus_energy_j,
        cumulative_energy_j,
        delivered,
        failed,
        queued,
        mean_edt_s: mean(&edts),
        mean_adt_s: mean(&adts),
        success_rate,
        active_uavs: uavs.iter().filter(|u| u.alive).count() as u32,
        reputation_ref,
    }
}
