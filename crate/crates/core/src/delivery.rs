//! Delivery workflow: jobs, competence-ranked assignment, estimated and
//! actual delivery time, reputation scoring, and certificate issuance.

use crate::airframe::{payload_speed, UavSpec};
use crate::channel::DataPacket;
use crate::consensus::{competence_score, CompetenceInputs, ConsensusEngine, PocWeights};
use crate::ledger::{Transaction, TxPayload};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DeliveryError {
    #[error("payload {payload_kg} kg overloads UAV {uav_id} (capacity {capacity_kg} kg)")]
    Overload {
        uav_id: u64,
        payload_kg: f64,
        capacity_kg: f64,
    },
    #[error("assignment for job {job_id} is {actual:?}, expected {expected:?}")]
    WrongStatus {
        job_id: u64,
        expected: AssignmentStatus,
        actual: AssignmentStatus,
    },
    #[error("invalid job {job_id}: {reason}")]
    InvalidJob { job_id: u64, reason: &'static str },
}

/// Ground-plane waypoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn dist(&self, other: &Point2) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Mission category, recorded but not used by any scoring rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissionKind {
    Delivery,
    ECommerce,
    EmergencyComm,
    Healthcare,
}

/// One delivery request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: u64,
    pub origin: Point2,
    pub destination: Point2,
    pub payload_kg: f64,
    pub data_packet: DataPacket,
    pub deadline_s: f64,
    pub cost: f64,
    pub mission: MissionKind,
}

impl Job {
    pub fn validate(&self) -> Result<(), DeliveryError> {
        let fail = |reason| {
            Err(DeliveryError::InvalidJob {
                job_id: self.job_id,
                reason,
            })
        };
        if !(self.payload_kg > 0.0) {
            return fail("payload must be positive");
        }
        if self.origin == self.destination {
            return fail("origin and destination must differ");
        }
        if !(self.deadline_s > 0.0) {
            return fail("deadline must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssignmentStatus {
    Queued,
    Enroute,
    Transmitting,
    Delivered,
    Failed,
}

/// A job bound to a UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub job_id: u64,
    pub uav_id: u64,
    pub edt_s: f64,
    pub start_time_s: f64,
    /// Set exactly when the job is delivered.
    pub adt_s: Option<f64>,
    pub status: AssignmentStatus,
}

/// Credential granted once a UAV's reputation crosses the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub uav_id: u64,
    pub score_at_issue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub job_id: u64,
    pub adt_s: f64,
    pub cost: f64,
}

/// Per-UAV reputation state. Unverified UAVs start at score zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReputationRecord {
    pub uav_id: u64,
    pub score: f64,
    /// 1.0 once the finalist certificate is held, else 0.0.
    pub certificate_value: f64,
    pub history: Vec<HistoryEntry>,
}

impl ReputationRecord {
    pub fn new(uav_id: u64) -> Self {
        Self {
            uav_id,
            score: 0.0,
            certificate_value: 0.0,
            history: Vec::new(),
        }
    }

    pub fn mean_adt_s(&self) -> Option<f64> {
        if self.history.is_empty() {
            return None;
        }
        Some(self.history.iter().map(|h| h.adt_s).sum::<f64>() / self.history.len() as f64)
    }

    pub fn mean_cost(&self) -> Option<f64> {
        if self.history.is_empty() {
            return None;
        }
        Some(self.history.iter().map(|h| h.cost).sum::<f64>() / self.history.len() as f64)
    }
}

/// Min-max normalization bounds for one reputation term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub min: f64,
    pub max: f64,
}

impl NormBounds {
    /// Position of `v` inside the bounds; a degenerate interval maps to
    /// the midpoint 0.5.
    pub fn normalize(&self, v: f64) -> f64 {
        if self.max <= self.min {
            return 0.5;
        }
        ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }
}

/// Fleet-level normalization bounds for the reputation terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetStats {
    pub adt: NormBounds,
    pub cost: NormBounds,
    pub capacity: NormBounds,
}

/// Reputation of one UAV: inverted normalized mean delivery time, the
/// certificate value, inverted normalized mean cost, and normalized
/// carrying capacity, each in [0, 1] so the score lives in [0, 4]. A UAV
/// without delivery history scores zero.
pub fn reputation_score(record: &ReputationRecord, capacity_kg: f64, stats: &FleetStats) -> f64 {
    let (Some(mean_adt), Some(mean_cost)) = (record.mean_adt_s(), record.mean_cost()) else {
        return 0.0;
    };
    (1.0 - stats.adt.normalize(mean_adt))
        + record.certificate_value
        + (1.0 - stats.cost.normalize(mean_cost))
        + stats.capacity.normalize(capacity_kg)
}

/// Estimated delivery time: flight from the UAV's position through the
/// origin to the destination at the payload's speed, plus the queue wait
/// already committed on that UAV, plus the packet transmission delay.
pub fn estimate_delivery_time(
    job: &Job,
    spec: &UavSpec,
    position_m: [f64; 3],
    queue_wait_s: f64,
    tx_delay_s: f64,
) -> Result<f64, DeliveryError> {
    let speed = payload_speed(spec, job.payload_kg).map_err(|_| DeliveryError::Overload {
        uav_id: spec.node_id,
        payload_kg: job.payload_kg,
        capacity_kg: spec.payload_capacity_kg,
    })?;
    let dx = position_m[0] - job.origin.x;
    let dy = position_m[1] - job.origin.y;
    let dz = position_m[2];
    let approach = (dx * dx + dy * dy + dz * dz).sqrt();
    let leg = job.origin.dist(&job.destination);
    Ok((approach + leg) / speed + queue_wait_s + tx_delay_s)
}

/// A job waiting for assignment, with its interference-free transmission
/// estimate already computed by the channel model.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingJob {
    pub job: Job,
    pub tx_delay_est_s: f64,
}

/// Assignment-time snapshot of one UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetMember {
    pub spec: UavSpec,
    pub position_m: [f64; 3],
    pub reputation: f64,
    pub poi_valid: bool,
    pub timestamp_freshness: f64,
    pub resource_score: f64,
    /// Estimated busy time already committed (active job plus queue).
    pub backlog_s: f64,
    /// Energy still spendable on new jobs (remaining minus the return
    /// threshold minus commitments).
    pub available_energy_j: f64,
    pub flight_energy_per_meter_j: f64,
    pub hover_power_w: f64,
}

/// Greedily binds each pending job, in arrival order, to the eligible UAV
/// with the best (competence, reputation) rank and sufficient capacity and
/// energy. Jobs no UAV can serve are skipped and stay pending. The
/// returned assignments are deterministic for a fixed input.
pub fn assign_jobs(
    pending: &[PendingJob],
    fleet: &[FleetMember],
    engine: &ConsensusEngine,
    now_s: f64,
) -> Vec<Assignment> {
    let weights = match engine {
        ConsensusEngine::Poc { weights, .. } => *weights,
        _ => PocWeights::default(),
    };

    struct Working {
        backlog_s: f64,
        available_j: f64,
    }
    let mut working: Vec<Working> = fleet
        .iter()
        .map(|m| Working {
            backlog_s: m.backlog_s,
            available_j: m.available_energy_j,
        })
        .collect();

    let mut assignments = Vec::new();
    for pj in pending {
        // Feasible candidates with their estimated delivery time and
        // energy need.
        struct Candidate {
            idx: usize,
            edt_s: f64,
            service_s: f64,
            energy_j: f64,
        }
        let mut candidates = Vec::new();
        for (idx, member) in fleet.iter().enumerate() {
            if !member.poi_valid || pj.job.payload_kg > member.spec.payload_capacity_kg {
                continue;
            }
            let Ok(edt) = estimate_delivery_time(
                &pj.job,
                &member.spec,
                member.position_m,
                working[idx].backlog_s,
                pj.tx_delay_est_s,
            ) else {
                continue;
            };
            let service_s = edt - working[idx].backlog_s;
            let flight_s = service_s - pj.tx_delay_est_s;
            let speed =
                payload_speed(&member.spec, pj.job.payload_kg).expect("capacity checked above");
            let energy_j = flight_s * speed * member.flight_energy_per_meter_j
                + member.hover_power_w * pj.tx_delay_est_s;
            if energy_j > working[idx].available_j {
                continue;
            }
            candidates.push(Candidate {
                idx,
                edt_s: edt,
                service_s,
                energy_j,
            });
        }
        if candidates.is_empty() {
            continue;
        }

        // Delivery score normalizes estimated time over this job's
        // eligible set, best (lowest) time scoring 1.
        let lo = candidates
            .iter()
            .map(|c| c.edt_s)
            .fold(f64::INFINITY, f64::min);
        let hi = candidates
            .iter()
            .map(|c| c.edt_s)
            .fold(f64::NEG_INFINITY, f64::max);
        let edt_bounds = NormBounds { min: lo, max: hi };

        let mut best: Option<(f64, f64, u64, usize)> = None;
        for (ci, cand) in candidates.iter().enumerate() {
            let member = &fleet[cand.idx];
            let inputs = CompetenceInputs {
                uav_id: member.spec.node_id,
                timestamp_freshness: member.timestamp_freshness,
                poi_valid: true,
                resource_score: member.resource_score,
                delivery_score: 1.0 - edt_bounds.normalize(cand.edt_s),
            };
            let score = competence_score(&inputs, &weights).expect("poi_valid is true");
            let key = (score, member.reputation, member.spec.node_id);
            let better = match best {
                None => true,
                Some((bs, br, bid, _)) => {
                    key.0 > bs || (key.0 == bs && (key.1 > br || (key.1 == br && key.2 < bid)))
                }
            };
            if better {
                best = Some((key.0, key.1, key.2, ci));
            }
        }
        let (_, _, _, ci) = best.expect("candidates is nonempty");
        let winner = &candidates[ci];
        let idle = working[winner.idx].backlog_s == 0.0;
        assignments.push(Assignment {
            job_id: pj.job.job_id,
            uav_id: fleet[winner.idx].spec.node_id,
            edt_s: winner.edt_s,
            start_time_s: now_s,
            adt_s: None,
            status: if idle {
                AssignmentStatus::Enroute
            } else {
                AssignmentStatus::Queued
            },
        });
        working[winner.idx].backlog_s += winner.service_s;
        working[winner.idx].available_j -= winner.energy_j;
    }
    assignments
}

/// Finalizes a transmitting assignment at time `now_s`. Within the
/// deadline the job is delivered and a delivery record is emitted for the
/// next block; past it the job fails and earns no reputation credit.
pub fn complete_delivery(
    assignment: &Assignment,
    job: &Job,
    now_s: f64,
    tx_id: u64,
) -> Result<(Assignment, Option<Transaction>), DeliveryError> {
    if assignment.status != AssignmentStatus::Transmitting {
        return Err(DeliveryError::WrongStatus {
            job_id: assignment.job_id,
            expected: AssignmentStatus::Transmitting,
            actual: assignment.status,
        });
    }
    let adt_s = now_s - assignment.start_time_s;
    if adt_s > job.deadline_s {
        return Ok((
            Assignment {
                adt_s: None,
                status: AssignmentStatus::Failed,
                ..assignment.clone()
            },
            None,
        ));
    }
    let updated = Assignment {
        adt_s: Some(adt_s),
        status: AssignmentStatus::Delivered,
        ..assignment.clone()
    };
    let record = Transaction::new(
        tx_id,
        TxPayload::DeliveryRecord {
            job_id: job.job_id,
            uav_id: assignment.uav_id,
            edt_s: assignment.edt_s,
            adt_s,
            cost: job.cost,
        },
    );
    Ok((updated, Some(record)))
}

/// Grants the finalist certificate once the score reaches the threshold;
/// idempotent after the first grant.
pub fn issue_certificate(record: &mut ReputationRecord, threshold: f64) -> Option<Certificate> {
    if record.certificate_value == 0.0 && record.score >= threshold {
        record.certificate_value = 1.0;
        return Some(Certificate {
            uav_id: record.uav_id,
            score_at_issue: record.score,
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airframe::SizeClass;
    use crate::rng::SplitMix64;

    fn spec(node_id: u64, capacity: f64) -> UavSpec {
        UavSpec {
            node_id,
            size_class: SizeClass::Large,
            empty_weight_kg: 12.0,
            payload_capacity_kg: capacity,
            battery_capacity_j: 2.4e6,
            rated_flight_duration_s: 3600.0,
            rated_travel_distance_m: 1.6e5,
        }
    }

    fn job(job_id: u64, origin: Point2, dest: Point2, payload: f64) -> Job {
        Job {
            job_id,
            origin,
            destination: dest,
            payload_kg: payload,
            data_packet: DataPacket {
                packet_id: job_id,
                owner: job_id,
                size_bits: 1e6,
                deadline_s: 300.0,
            },
            deadline_s: 300.0,
            cost: 20.0,
            mission: MissionKind::Delivery,
        }
    }

    fn member(id: u64, capacity: f64, reputation: f64) -> FleetMember {
        FleetMember {
            spec: spec(id, capacity),
            position_m: [0.0, 0.0, 0.0],
            reputation,
            poi_valid: true,
            timestamp_freshness: 1.0,
            resource_score: 1.0,
            backlog_s: 0.0,
            available_energy_j: 2.0e6,
            flight_energy_per_meter_j: 10.0,
            hover_power_w: 100.0,
        }
    }

    fn poc() -> ConsensusEngine {
        ConsensusEngine::Poc {
            weights: PocWeights::default(),
            round_energy_j: 1.0,
        }
    }

    #[test]
    fn estimate_matches_hand_evaluation() {
        // Payload chosen so the interpolated speed is 100 m/s; a 1000 m
        // route at that speed takes 10 s.
        let payload = 1.0 + 14.0 * (178.8 - 100.0) / 134.1;
        let j = job(
            1,
            Point2 { x: 600.0, y: 0.0 },
            Point2 { x: 1000.0, y: 0.0 },
            payload,
        );
        let edt = estimate_delivery_time(&j, &spec(1, 15.0), [0.0, 0.0, 0.0], 0.0, 0.0).unwrap();
        assert!((edt - 10.0).abs() < 1e-9, "edt={edt}");
    }

    #[test]
    fn estimate_with_zero_flight_is_transmission_only() {
        let mut j = job(1, Point2 { x: 5.0, y: 5.0 }, Point2 { x: 5.0, y: 5.0 }, 2.0);
        j.data_packet.size_bits = 0.0;
        let edt = estimate_delivery_time(&j, &spec(1, 15.0), [5.0, 5.0, 0.0], 0.0, 2.0).unwrap();
        assert_eq!(edt, 2.0);
    }

    #[test]
    fn estimate_rejects_overload() {
        let j = job(
            1,
            Point2 { x: 0.0, y: 0.0 },
            Point2 { x: 1.0, y: 0.0 },
            20.0,
        );
        assert!(matches!(
            estimate_delivery_time(&j, &spec(1, 15.0), [0.0; 3], 0.0, 0.0),
            Err(DeliveryError::Overload { .. })
        ));
    }

    #[test]
    fn two_jobs_spread_over_top_two_of_three() {
        let fleet = vec![
            member(1, 15.0, 0.5),
            member(2, 15.0, 0.4),
            member(3, 15.0, 0.3),
        ];
        let pending = vec![
            PendingJob {
                job: job(
                    10,
                    Point2 { x: 0.0, y: 0.0 },
                    Point2 { x: 1000.0, y: 0.0 },
                    5.0,
                ),
                tx_delay_est_s: 1.0,
            },
            PendingJob {
                job: job(
                    11,
                    Point2 { x: 0.0, y: 0.0 },
                    Point2 { x: 1000.0, y: 0.0 },
                    5.0,
                ),
                tx_delay_est_s: 1.0,
            },
        ];
        let out = assign_jobs(&pending, &fleet, &poc(), 0.0);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].uav_id, 1);
        assert_eq!(out[1].uav_id, 2);
        assert!(out.iter().all(|a| a.status == AssignmentStatus::Enroute));
    }

    #[test]
    fn no_eligible_fleet_leaves_jobs_pending() {
        let mut m = member(1, 15.0, 0.5);
        m.poi_valid = false;
        let pending = vec![PendingJob {
            job: job(
                10,
                Point2 { x: 0.0, y: 0.0 },
                Point2 { x: 1000.0, y: 0.0 },
                5.0,
            ),
            tx_delay_est_s: 1.0,
        }];
        assert!(assign_jobs(&pending, &[m], &poc(), 0.0).is_empty());
    }

    #[test]
    fn single_uav_queues_fifo() {
        let fleet = vec![member(1, 15.0, 0.5)];
        let pending: Vec<PendingJob> = (0..5)
            .map(|i| PendingJob {
                job: job(
                    10 + i,
                    Point2 { x: 0.0, y: 0.0 },
                    Point2 { x: 1000.0, y: 0.0 },
                    5.0,
                ),
                tx_delay_est_s: 1.0,
            })
            .collect();
        let out = assign_jobs(&pending, &fleet, &poc(), 0.0);
        assert_eq!(out.len(), 5);
        assert_eq!(out[0].status, AssignmentStatus::Enroute);
        assert!(out[1..]
            .iter()
            .all(|a| a.status == AssignmentStatus::Queued));
        // FIFO: estimated times strictly increase down the queue.
        for pair in out.windows(2) {
            assert!(pair[0].edt_s < pair[1].edt_s);
        }
    }

    #[test]
    fn assignment_is_deterministic() {
        let fleet: Vec<FleetMember> = (1..=4).map(|i| member(i, 15.0, 0.1 * i as f64)).collect();
        let pending: Vec<PendingJob> = (0..6)
            .map(|i| PendingJob {
                job: job(
                    10 + i,
                    Point2 {
                        x: 100.0 * i as f64,
                        y: 0.0,
                    },
                    Point2 {
                        x: 0.0,
                        y: 500.0 + 100.0 * i as f64,
                    },
                    1.0 + i as f64,
                ),
                tx_delay_est_s: 0.5,
            })
            .collect();
        let a = assign_jobs(&pending, &fleet, &poc(), 0.0);
        let b = assign_jobs(&pending, &fleet, &poc(), 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn capacity_gate_skips_small_uavs() {
        let fleet = vec![member(1, 5.0, 0.9), member(2, 15.0, 0.1)];
        let pending = vec![PendingJob {
            job: job(
                10,
                Point2 { x: 0.0, y: 0.0 },
                Point2 { x: 1000.0, y: 0.0 },
                12.0,
            ),
            tx_delay_est_s: 1.0,
        }];
        let out = assign_jobs(&pending, &fleet, &poc(), 0.0);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].uav_id, 2);
    }

    #[test]
    fn reputation_hand_values() {
        let stats = FleetStats {
            adt: NormBounds { min: 0.0, max: 1.0 },
            cost: NormBounds { min: 0.0, max: 1.0 },
            capacity: NormBounds { min: 0.0, max: 1.0 },
        };
        let fresh = ReputationRecord::new(1);
        assert_eq!(reputation_score(&fresh, 0.7, &stats), 0.0);

        let mut r = ReputationRecord::new(1);
        r.certificate_value = 1.0;
        r.history.push(HistoryEntry {
            job_id: 1,
            adt_s: 0.2,
            cost: 0.5,
        });
        let score = reputation_score(&r, 0.7, &stats);
        assert!((score - 3.0).abs() < 1e-12, "score={score}");

        let mut worst = ReputationRecord::new(2);
        worst.history.push(HistoryEntry {
            job_id: 2,
            adt_s: 1.0,
            cost: 1.0,
        });
        assert_eq!(reputation_score(&worst, 0.0, &stats), 0.0);
    }

    #[test]
    fn degenerate_bounds_contribute_midpoint() {
        let stats = FleetStats {
            adt: NormBounds { min: 3.0, max: 3.0 },
            cost: NormBounds { min: 1.0, max: 2.0 },
            capacity: NormBounds { min: 0.0, max: 1.0 },
        };
        let mut r = ReputationRecord::new(1);
        r.history.push(HistoryEntry {
            job_id: 1,
            adt_s: 3.0,
            cost: 1.0,
        });
        // adt term = 1 - 0.5; cost term = 1 - 0; capacity = 1.
        let score = reputation_score(&r, 1.0, &stats);
        assert!((score - 2.5).abs() < 1e-12);
    }

    #[test]
    fn reputation_is_monotone_in_adt_and_capacity() {
        let mut rng = SplitMix64::stream(41, "delivery-reputation");
        for _ in 0..500 {
            let stats = FleetStats {
                adt: NormBounds {
                    min: 0.0,
                    max: rng.range_f64(10.0, 500.0),
                },
                cost: NormBounds {
                    min: 0.0,
                    max: rng.range_f64(10.0, 100.0),
                },
                capacity: NormBounds {
                    min: 1.0,
                    max: 15.0,
                },
            };
            let mut r = ReputationRecord::new(1);
            let adt = rng.range_f64(1.0, stats.adt.max);
            r.history.push(HistoryEntry {
                job_id: 1,
                adt_s: adt,
                cost: rng.range_f64(0.0, stats.cost.max),
            });
            let cap = rng.range_f64(1.0, 15.0);
            let base = reputation_score(&r, cap, &stats);

            let mut faster = r.clone();
            faster.history[0].adt_s = adt * rng.next_f64();
            assert!(reputation_score(&faster, cap, &stats) >= base);

            let bigger_cap = cap + rng.range_f64(0.0, 15.0 - cap);
            assert!(reputation_score(&r, bigger_cap, &stats) >= base);
        }
    }

    #[test]
    fn complete_delivery_within_deadline() {
        let j = job(
            1,
            Point2 { x: 0.0, y: 0.0 },
            Point2 { x: 1000.0, y: 0.0 },
            5.0,
        );
        let a = Assignment {
            job_id: 1,
            uav_id: 3,
            edt_s: 10.0,
            start_time_s: 0.0,
            adt_s: None,
            status: AssignmentStatus::Transmitting,
        };
        let (done, tx) = complete_delivery(&a, &j, 12.0, 99).unwrap();
        assert_eq!(done.status, AssignmentStatus::Delivered);
        assert_eq!(done.adt_s, Some(12.0));
        let tx = tx.unwrap();
        match tx.payload {
            TxPayload::DeliveryRecord {
                job_id,
                uav_id,
                adt_s,
                ..
            } => {
                assert_eq!((job_id, uav_id), (1, 3));
                assert_eq!(adt_s, 12.0);
            }
            other => panic!("expected delivery record, got {other:?}"),
        }
    }

    #[test]
    fn deadline_breach_fails_without_record() {
        let mut j = job(
            1,
            Point2 { x: 0.0, y: 0.0 },
            Point2 { x: 1000.0, y: 0.0 },
            5.0,
        );
        j.deadline_s = 20.0;
        let a = Assignment {
            job_id: 1,
            uav_id: 3,
            edt_s: 10.0,
            start_time_s: 0.0,
            adt_s: None,
            status: AssignmentStatus::Transmitting,
        };
        let (done, tx) = complete_delivery(&a, &j, 25.0, 99).unwrap();
        assert_eq!(done.status, AssignmentStatus::Failed);
        assert_eq!(done.adt_s, None);
        assert!(tx.is_none());
    }

    #[test]
    fn complete_requires_transmitting_status() {
        let j = job(
            1,
            Point2 { x: 0.0, y: 0.0 },
            Point2 { x: 1000.0, y: 0.0 },
            5.0,
        );
        let a = Assignment {
            job_id: 1,
            uav_id: 3,
            edt_s: 10.0,
            start_time_s: 0.0,
            adt_s: None,
            status: AssignmentStatus::Queued,
        };
        assert!(matches!(
            complete_delivery(&a, &j, 12.0, 99),
            Err(DeliveryError::WrongStatus { .. })
        ));
    }

    #[test]
    fn certificate_issues_once_at_threshold() {
        let mut r = ReputationRecord::new(1);
        r.score = 2.5;
        let cert = issue_certificate(&mut r, 2.0).unwrap();
        assert_eq!(cert.uav_id, 1);
        assert_eq!(r.certificate_value, 1.0);
        assert!(issue_certificate(&mut r, 2.0).is_none());

        let mut low = ReputationRecord::new(2);
        low.score = 1.0;
        assert!(issue_certificate(&mut low, 2.0).is_none());
    }
}
