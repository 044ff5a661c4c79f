//! Per-round block-proposer selection.
//!
//! Proof-of-competence (PoC) scores candidates on heartbeat freshness,
//! registered identity, remaining resources, and estimated delivery time,
//! then picks the argmax deterministically. The baselines are a seeded
//! proof-of-work hash race, registered-identity round-robin (PoID), and
//! fixed-authority round-robin (PoA). Miner energy (the efficiency chain),
//! instant rewards, and penalties are computed here as well.

use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConsensusError {
    #[error("no eligible candidate this round")]
    NoEligibleCandidate,
    #[error("degenerate energy state: {0}")]
    DegenerateEnergyState(&'static str),
    #[error("reward division is degenerate: no users served")]
    DivisionDegenerate,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Per-round consensus inputs for one UAV.
///
/// `timestamp_freshness` is 1 when the UAV heartbeated this round and
/// decays linearly to 0 over the configured staleness window.
/// `resource_score` averages normalized remaining energy with normalized
/// available bandwidth share. `delivery_score` is one minus the estimated
/// delivery time normalized over the eligible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompetenceInputs {
    pub uav_id: u64,
    pub timestamp_freshness: f64,
    pub poi_valid: bool,
    pub resource_score: f64,
    pub delivery_score: f64,
}

/// Heartbeat freshness: 1 at age zero, linearly down to 0 at the staleness
/// window.
pub fn timestamp_freshness(age_s: f64, staleness_window_s: f64) -> f64 {
    debug_assert!(staleness_window_s > 0.0);
    (1.0 - age_s / staleness_window_s).clamp(0.0, 1.0)
}

/// Convex weights of the four competence factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PocWeights {
    pub w_timestamp: f64,
    pub w_poi: f64,
    pub w_resources: f64,
    pub w_delivery: f64,
}

impl PocWeights {
    pub fn new(
        w_timestamp: f64,
        w_poi: f64,
        w_resources: f64,
        w_delivery: f64,
    ) -> Result<Self, ConsensusError> {
        let w = [w_timestamp, w_poi, w_resources, w_delivery];
        if w.iter().any(|&x| x < 0.0) {
            return Err(ConsensusError::InvalidParameter(
                "competence weights must be nonnegative",
            ));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ConsensusError::InvalidParameter(
                "competence weights must sum to 1",
            ));
        }
        Ok(Self {
            w_timestamp,
            w_poi,
            w_resources,
            w_delivery,
        })
    }
}

impl Default for PocWeights {
    fn default() -> Self {
        Self {
            w_timestamp: 0.25,
            w_poi: 0.25,
            w_resources: 0.25,
            w_delivery: 0.25,
        }
    }
}

/// Proposer-selection engine with kind-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConsensusEngine {
    /// Argmax of the weighted competence score; validation costs a flat
    /// per-round energy independent of fleet size.
    Poc {
        weights: PocWeights,
        round_energy_j: f64,
    },
    /// Seeded hash race; each attempt succeeds with probability
    /// 2^-difficulty and costs `hash_energy_j`.
    Pow {
        difficulty_bits: u32,
        hash_energy_j: f64,
    },
    /// Round-robin over registered identities; every registered node
    /// verifies the selection at `verify_energy_j` per node.
    Poid { verify_energy_j: f64 },
    /// Round-robin over the `authority_size` lowest registered node ids.
    Poa {
        authority_size: usize,
        verify_energy_j: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EngineKind {
    Poc,
    Pow,
    Poid,
    Poa,
}

impl EngineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineKind::Poc => "poc",
            EngineKind::Pow => "pow",
            EngineKind::Poid => "poid",
            EngineKind::Poa => "poa",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "poc" => Some(EngineKind::Poc),
            "pow" => Some(EngineKind::Pow),
            "poid" => Some(EngineKind::Poid),
            "poa" => Some(EngineKind::Poa),
            _ => None,
        }
    }
}

impl ConsensusEngine {
    pub fn kind(&self) -> EngineKind {
        match self {
            ConsensusEngine::Poc { .. } => EngineKind::Poc,
            ConsensusEngine::Pow { .. } => EngineKind::Pow,
            ConsensusEngine::Poid { .. } => EngineKind::Poid,
            ConsensusEngine::Poa { .. } => EngineKind::Poa,
        }
    }
}

/// Result of one consensus round. `reward` and `within_limit` start at
/// their defaults and are filled in by the round loop once the round's
/// cost and service counts are known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: u64,
    pub proposer: u64,
    pub consensus_energy_j: f64,
    /// Hash attempts for PoW; zero for the other engines.
    pub attempts: u64,
    pub reward: f64,
    pub within_limit: bool,
}

/// Weighted competence of one candidate, or `None` when its identity does
/// not resolve on the ledger (the hard eligibility gate).
pub fn competence_score(inputs: &CompetenceInputs, weights: &PocWeights) -> Option<f64> {
    if !inputs.poi_valid {
        return None;
    }
    debug_assert!((0.0..=1.0).contains(&inputs.timestamp_freshness));
    debug_assert!((0.0..=1.0).contains(&inputs.resource_score));
    debug_assert!((0.0..=1.0).contains(&inputs.delivery_score));
    Some(
        weights.w_timestamp * inputs.timestamp_freshness
            + weights.w_poi * 1.0
            + weights.w_resources * inputs.resource_score
            + weights.w_delivery * inputs.delivery_score,
    )
}

/// Selects the round's block proposer. Deterministic for a fixed
/// `(engine, candidates, round, seed)` tuple.
pub fn select_proposer(
    engine: &ConsensusEngine,
    candidates: &[CompetenceInputs],
    round: u64,
    seed: u64,
) -> Result<RoundOutcome, ConsensusError> {
    let mut eligible: Vec<&CompetenceInputs> = candidates.iter().filter(|c| c.poi_valid).collect();
    eligible.sort_by_key(|c| c.uav_id);
    if eligible.is_empty() {
        return Err(ConsensusError::NoEligibleCandidate);
    }

    let outcome = |proposer, energy, attempts| RoundOutcome {
        round,
        proposer,
        consensus_energy_j: energy,
        attempts,
        reward: 0.0,
        within_limit: true,
    };

    match engine {
        ConsensusEngine::Poc {
            weights,
            round_energy_j,
        } => {
            let mut best: Option<(f64, u64)> = None;
            for c in &eligible {
                let score = competence_score(c, weights).expect("eligible implies poi_valid");
                let better = match best {
                    None => true,
                    // Ties break toward the lowest id; the list is id-sorted.
                    Some((bs, _)) => score > bs,
                };
                if better {
                    best = Some((score, c.uav_id));
                }
            }
            let (_, proposer) = best.expect("eligible set is nonempty");
            Ok(outcome(proposer, *round_energy_j, 0))
        }
        ConsensusEngine::Pow {
            difficulty_bits,
            hash_energy_j,
        } => {
            if *difficulty_bits > 63 {
                return Err(ConsensusError::InvalidParameter(
                    "difficulty above 63 bits is not simulable",
                ));
            }
            let mut rng = SplitMix64::substream(seed, "consensus-pow", round);
            // An attempt wins when its 64-bit draw falls below the
            // difficulty threshold, i.e. with probability 2^-d. Candidates
            // take turns in id order; the first success proposes.
            let threshold = if *difficulty_bits == 0 {
                u64::MAX
            } else {
                1u64 << (64 - difficulty_bits)
            };
            let mut attempts: u64 = 0;
            let winner = 'race: loop {
                for c in &eligible {
                    attempts += 1;
                    let won = if *difficulty_bits == 0 {
                        true
                    } else {
                        rng.next_u64() < threshold
                    };
                    if won {
                        break 'race c.uav_id;
                    }
                }
            };
            Ok(outcome(winner, attempts as f64 * hash_energy_j, attempts))
        }
        ConsensusEngine::Poid { verify_energy_j } => {
            let idx = (round as usize) % eligible.len();
            let energy = eligible.len() as f64 * verify_energy_j;
            Ok(outcome(eligible[idx].uav_id, energy, 0))
        }
        ConsensusEngine::Poa {
            authority_size,
            verify_energy_j,
        } => {
            if *authority_size == 0 {
                return Err(ConsensusError::InvalidParameter(
                    "authority set must hold at least one node",
                ));
            }
            let authorities: Vec<u64> = eligible
                .iter()
                .take(*authority_size)
                .map(|c| c.uav_id)
                .collect();
            let idx = (round as usize) % authorities.len();
            let energy = eligible.len() as f64 * verify_energy_j;
            Ok(outcome(authorities[idx], energy, 0))
        }
    }
}

/// Miner efficiency: energy used over the transfer ratio.
pub fn miner_efficiency(energy_used_j: f64, transfer_ratio: f64) -> Result<f64, ConsensusError> {
    if transfer_ratio <= 0.0 {
        return Err(ConsensusError::DegenerateEnergyState(
            "transfer ratio must be positive",
        ));
    }
    Ok(energy_used_j / transfer_ratio)
}

/// Transfer ratio: total consumption over the unexhausted capacity margin.
pub fn energy_transfer_ratio(
    total_consumption_j: f64,
    capacity_j: f64,
    energy_used_j: f64,
) -> Result<f64, ConsensusError> {
    if capacity_j <= energy_used_j {
        return Err(ConsensusError::DegenerateEnergyState(
            "capacity must exceed energy used",
        ));
    }
    Ok(total_consumption_j / (capacity_j - energy_used_j))
}

/// Mining power over the headroom between peak power and transmit power.
pub fn mining_consumption(
    mining_power_w: f64,
    peak_power_w: f64,
    tx_power_w: f64,
) -> Result<f64, ConsensusError> {
    if peak_power_w <= tx_power_w {
        return Err(ConsensusError::DegenerateEnergyState(
            "peak power must exceed transmit power",
        ));
    }
    Ok(mining_power_w / (peak_power_w - tx_power_w))
}

/// Inputs of the instant-reward rule for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    /// Reward granted when consensus finishes within the time limit.
    pub success_reward: f64,
    /// Weight of the shared system cost.
    pub cost_weight: f64,
    /// Total energy spent by all UAVs this round, joules.
    pub system_cost_j: f64,
    /// Users served this round; must be positive for a reward to exist.
    pub users_served: u64,
    /// Penalty index scaling the energy-deviation penalty.
    pub penalty_index: f64,
    /// Time limit the consensus round is judged against, seconds.
    pub time_limit_s: f64,
    /// Duration of this round's consensus, seconds.
    pub consensus_duration_s: f64,
    /// Average remaining energy across the fleet, joules.
    pub fleet_avg_energy_j: f64,
    /// The rewarded UAV's remaining energy, joules.
    pub remaining_energy_j: f64,
    /// Hover energy per unit time used by the penalty, watts.
    pub hover_unit_energy_w: f64,
}

/// Penalty: `p * (fleet average - remaining) / hover unit energy`. A UAV
/// holding more than the fleet average yields a negative penalty, which
/// acts as a bonus; the formula is applied unclamped.
pub fn penalty(
    penalty_index: f64,
    fleet_avg_energy_j: f64,
    remaining_energy_j: f64,
    hover_unit_energy_w: f64,
) -> Result<f64, ConsensusError> {
    if hover_unit_energy_w <= 0.0 {
        return Err(ConsensusError::InvalidParameter(
            "hover unit energy must be positive",
        ));
    }
    Ok(penalty_index * (fleet_avg_energy_j - remaining_energy_j) / hover_unit_energy_w)
}

/// Instant reward for the round's proposer: the success reward applies
/// only when consensus met its time limit, and the per-user share of the
/// system cost plus the penalty is always deducted.
pub fn instant_reward(params: &RewardParams) -> Result<f64, ConsensusError> {
    if params.users_served == 0 {
        return Err(ConsensusError::DivisionDegenerate);
    }
    let rho = penalty(
        params.penalty_index,
        params.fleet_avg_energy_j,
        params.remaining_energy_j,
        params.hover_unit_energy_w,
    )?;
    let shared_cost = params.cost_weight * params.system_cost_j / params.users_served as f64;
    if params.consensus_duration_s <= params.time_limit_s {
        Ok(params.success_reward - shared_cost - rho)
    } else {
        Ok(-shared_cost - rho)
    }
}
