//! Scenario configuration and the `key = value` config parser.
//!
//! The format is one `key = value` per line, `#` comments, and optional
//! `[consensus]`, `[reward]`, and `[channel]` sections. Unknown keys are
//! rejected with the offending line number. An empty file yields the
//! default scenario: 20 UAVs, 80 waypoints in a 10 km square region, a
//! one-hour horizon of 10 s rounds, and the proof-of-competence engine.

use crate::consensus::{ConsensusEngine, EngineKind, PocWeights};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Nominal consensus wall-clock costs used for confirmation latency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusTiming {
    /// Fixed competence-validation time per PoC round.
    pub poc_round_s: f64,
    /// Per-registered-node verification time for PoID/PoA rounds.
    pub verify_per_node_s: f64,
    /// Fleet hash rate dividing PoW attempt counts into mining time.
    pub hash_rate_hps: f64,
}

impl Default for ConsensusTiming {
    fn default() -> Self {
        Self {
            poc_round_s: 0.5,
            verify_per_node_s: 0.05,
            hash_rate_hps: 400.0,
        }
    }
}

/// Reward-rule constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub success_reward: f64,
    pub cost_weight: f64,
    pub penalty_index: f64,
    pub time_limit_s: f64,
    /// Peak miner power (watts), the denominator headroom of the
    /// consumption ratio.
    pub peak_power_w: f64,
    /// Nominal mining power (watts) feeding the efficiency metric.
    pub mining_power_w: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            success_reward: 10.0,
            cost_weight: 1.0,
            penalty_index: 1.0,
            time_limit_s: 10.0,
            peak_power_w: 1000.0,
            mining_power_w: 500.0,
        }
    }
}

/// Shared channel pool parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub count: u32,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    pub tx_power_w: f64,
    /// Reference distance of the normalized inverse-square gain model.
    pub gain_ref_m: f64,
    /// Cruise/hover altitude entering every link distance.
    pub altitude_m: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            count: 8,
            bandwidth_hz: 1.0e6,
            noise_w: 1.0e-9,
            tx_power_w: 0.1,
            gain_ref_m: 50.0,
            altitude_m: 50.0,
        }
    }
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub uav_count: u32,
    pub user_count: u32,
    pub job_count: u32,
    pub region_side_m: f64,
    pub waypoint_count: u32,
    /// Delivery/confirmation deadline T0 applied to every job, seconds.
    pub deadline_s: f64,
    /// Jobs arrive uniformly at random over this window from the start of
    /// the run; zero means all jobs arrive at once.
    pub arrival_window_s: f64,
    pub sim_duration_s: f64,
    pub round_duration_s: f64,
    pub seed: u64,
    /// Deadline-satisfaction level the fleet-sizing sweep searches for.
    pub service_level: f64,
    /// Fleet-size cap of the ascending search.
    pub fleet_cap: u32,
    pub staleness_window_s: f64,
    pub certificate_threshold: f64,
    /// Hover power drawn while transmitting, watts.
    pub hover_power_w: f64,
    /// Hover energy per unit time used by the penalty rule, watts.
    pub hover_unit_energy_w: f64,
    /// Return threshold as a fraction of battery capacity.
    pub energy_threshold_frac: f64,
    pub engine: ConsensusEngine,
    pub timing: ConsensusTiming,
    pub reward: RewardConfig,
    pub channels: ChannelConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            uav_count: 20,
            user_count: 20,
            job_count: 20,
            region_side_m: 10_000.0,
            waypoint_count: 80,
            deadline_s: 600.0,
            arrival_window_s: 240.0,
            sim_duration_s: 3600.0,
            round_duration_s: 10.0,
            seed: 42,
            service_level: 0.95,
            fleet_cap: 64,
            staleness_window_s: 30.0,
            certificate_threshold: 2.0,
            hover_power_w: 100.0,
            hover_unit_energy_w: 100.0,
            energy_threshold_frac: 0.1,
            engine: default_engine(EngineKind::Poc, None),
            timing: ConsensusTiming::default(),
            reward: RewardConfig::default(),
            channels: ChannelConfig::default(),
        }
    }
}

impl Scenario {
    pub fn rounds(&self) -> u64 {
        (self.sim_duration_s / self.round_duration_s) as u64
    }

    /// Same scenario with another engine kind at default parameters.
    pub fn with_engine_kind(&self, kind: EngineKind) -> Scenario {
        let mut s = self.clone();
        s.engine = default_engine(kind, engine_difficulty(&self.engine));
        s
    }
}

fn engine_difficulty(engine: &ConsensusEngine) -> Option<u32> {
    match engine {
        ConsensusEngine::Pow {
            difficulty_bits, ..
        } => Some(*difficulty_bits),
        _ => None,
    }
}

/// Engine with default parameters for a kind, optionally keeping a PoW
/// difficulty override.
pub fn default_engine(kind: EngineKind, difficulty: Option<u32>) -> ConsensusEngine {
    match kind {
        EngineKind::Poc => ConsensusEngine::Poc {
            weights: PocWeights::default(),
            round_energy_j: 1.0,
        },
        EngineKind::Pow => ConsensusEngine::Pow {
            difficulty_bits: difficulty.unwrap_or(16),
            hash_energy_j: 0.008,
        },
        EngineKind::Poid => ConsensusEngine::Poid {
            verify_energy_j: 0.25,
        },
        EngineKind::Poa => ConsensusEngine::Poa {
            authority_size: 3,
            verify_energy_j: 0.25,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Consensus,
    Reward,
    Channel,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Section::Top => "top level",
            Section::Consensus => "[consensus]",
            Section::Reward => "[reward]",
            Section::Channel => "[channel]",
        };
        f.write_str(name)
    }
}

/// Parses a scenario config, filling defaults for anything unset.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut s = Scenario::default();
    let mut section = Section::Top;

    // Consensus engine parameters are collected raw and assembled once the
    // kind is known.
    let mut kind = EngineKind::Poc;
    let mut difficulty: Option<u32> = None;
    let mut hash_energy: Option<f64> = None;
    let mut round_energy: Option<f64> = None;
    let mut verify_energy: Option<f64> = None;
    let mut authority_size: Option<usize> = None;
    let mut weights = [0.25f64; 4];
    let mut weights_set = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| ParseError {
            line: line_no,
            message,
        };
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name.trim() {
                "consensus" => Section::Consensus,
                "reward" => Section::Reward,
                "channel" => Section::Channel,
                other => return Err(err(format!("unknown section `{other}`"))),
            };
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!("expected `key = value`, got `{line}`")));
        };
        let key = key.trim();
        let value = value.trim();

        let parse_f64 = |what: &str| -> Result<f64, ParseError> {
            value
                .parse::<f64>()
                .map_err(|_| err(format!("{what}: `{value}` is not a number")))
        };
        let parse_count = |what: &str| -> Result<u32, ParseError> {
            let v = value
                .parse::<i64>()
                .map_err(|_| err(format!("{what}: `{value}` is not an integer")))?;
            if !(0..=1_000_000).contains(&v) {
                return Err(err(format!("{what}: {v} is out of range [0, 1000000]")));
            }
            Ok(v as u32)
        };
        let positive = |what: &str| -> Result<f64, ParseError> {
            let v = parse_f64(what)?;
            if v <= 0.0 {
                return Err(err(format!("{what}: must be positive, got {v}")));
            }
            Ok(v)
        };
        let nonnegative = |what: &str| -> Result<f64, ParseError> {
            let v = parse_f64(what)?;
            if v < 0.0 {
                return Err(err(format!("{what}: must be nonnegative, got {v}")));
            }
            Ok(v)
        };

        match (section, key) {
            (Section::Top, "uav_count") => s.uav_count = parse_count(key)?,
            (Section::Top, "user_count") => s.user_count = parse_count(key)?,
            (Section::Top, "job_count") => s.job_count = parse_count(key)?,
            (Section::Top, "waypoint_count") => s.waypoint_count = parse_count(key)?,
            (Section::Top, "region_side_m") => s.region_side_m = positive(key)?,
            (Section::Top, "region_km2") => {
                s.region_side_m = positive(key)?.sqrt() * 1000.0;
            }
            (Section::Top, "deadline_s") => s.deadline_s = positive(key)?,
            (Section::Top, "arrival_window_s") => s.arrival_window_s = nonnegative(key)?,
            (Section::Top, "sim_duration_s") => s.sim_duration_s = positive(key)?,
            (Section::Top, "round_duration_s") => s.round_duration_s = positive(key)?,
            (Section::Top, "seed") => {
                s.seed = value
                    .parse::<u64>()
                    .map_err(|_| err(format!("seed: `{value}` is not a u64")))?;
            }
            (Section::Top, "service_level") => {
                let v = positive(key)?;
                if v > 1.0 {
                    return Err(err(format!("service_level: {v} exceeds 1")));
                }
                s.service_level = v;
            }
            (Section::Top, "fleet_cap") => {
                let v = parse_count(key)?;
                if v == 0 {
                    return Err(err("fleet_cap: must be at least 1".to_string()));
                }
                s.fleet_cap = v;
            }
            (Section::Top, "staleness_window_s") => s.staleness_window_s = positive(key)?,
            (Section::Top, "certificate_threshold") => s.certificate_threshold = nonnegative(key)?,
            (Section::Top, "hover_power_w") => s.hover_power_w = nonnegative(key)?,
            (Section::Top, "hover_unit_energy_w") => {
                let v = positive(key)?;
                s.hover_unit_energy_w = v;
            }
            (Section::Top, "energy_threshold_frac") => {
                let v = nonnegative(key)?;
                if v >= 1.0 {
                    return Err(err(format!("energy_threshold_frac: {v} must stay below 1")));
                }
                s.energy_threshold_frac = v;
            }
            // `consensus` and `difficulty` are accepted at top level as
            // shorthands for the section keys.
            (Section::Top, "consensus") | (Section::Consensus, "kind") => {
                kind = EngineKind::parse(value)
                    .ok_or_else(|| err(format!("unknown consensus kind `{value}`")))?;
            }
            (Section::Top, "difficulty") | (Section::Consensus, "difficulty") => {
                let v = parse_count(key)?;
                if v > 48 {
                    return Err(err(format!("difficulty: {v} exceeds the simulable 48")));
                }
                difficulty = Some(v);
            }
            (Section::Consensus, "hash_energy_j") => hash_energy = Some(positive(key)?),
            (Section::Consensus, "round_energy_j") => round_energy = Some(positive(key)?),
            (Section::Consensus, "verify_energy_j") => verify_energy = Some(nonnegative(key)?),
            (Section::Consensus, "authority_size") => {
                let v = parse_count(key)?;
                if v == 0 {
                    return Err(err("authority_size: must be at least 1".to_string()));
                }
                authority_size = Some(v as usize);
            }
            (Section::Consensus, "w_timestamp") => {
                weights[0] = nonnegative(key)?;
                weights_set = true;
            }
            (Section::Consensus, "w_poi") => {
                weights[1] = nonnegative(key)?;
                weights_set = true;
            }
            (Section::Consensus, "w_resources") => {
                weights[2] = nonnegative(key)?;
                weights_set = true;
            }
            (Section::Consensus, "w_delivery") => {
                weights[3] = nonnegative(key)?;
                weights_set = true;
            }
            (Section::Consensus, "poc_round_s") => s.timing.poc_round_s = nonnegative(key)?,
            (Section::Consensus, "verify_per_node_s") => {
                s.timing.verify_per_node_s = nonnegative(key)?
            }
            (Section::Consensus, "hash_rate_hps") => s.timing.hash_rate_hps = positive(key)?,
            (Section::Reward, "success_reward") => s.reward.success_reward = parse_f64(key)?,
            (Section::Reward, "cost_weight") => s.reward.cost_weight = parse_f64(key)?,
            (Section::Reward, "penalty_index") => s.reward.penalty_index = parse_f64(key)?,
            (Section::Reward, "time_limit_s") => s.reward.time_limit_s = positive(key)?,
            (Section::Reward, "peak_power_w") => s.reward.peak_power_w = positive(key)?,
            (Section::Reward, "mining_power_w") => s.reward.mining_power_w = nonnegative(key)?,
            (Section::Channel, "count") => {
                let v = parse_count(key)?;
                if v == 0 {
                    return Err(err("channel count: must be at least 1".to_string()));
                }
                s.channels.count = v;
            }
            (Section::Channel, "bandwidth_hz") => s.channels.bandwidth_hz = positive(key)?,
            (Section::Channel, "noise_w") => s.channels.noise_w = positive(key)?,
            (Section::Channel, "tx_power_w") => s.channels.tx_power_w = nonnegative(key)?,
            (Section::Channel, "gain_ref_m") => s.channels.gain_ref_m = positive(key)?,
            (Section::Channel, "altitude_m") => s.channels.altitude_m = nonnegative(key)?,
            _ => {
                return Err(err(format!("unknown key `{key}` at {section}")));
            }
        }
    }

    if s.sim_duration_s < s.round_duration_s {
        return Err(ParseError {
            line: 0,
            message: "sim_duration_s must cover at least one round".to_string(),
        });
    }

    s.engine = match kind {
        EngineKind::Poc => {
            let w = if weights_set {
                PocWeights::new(weights[0], weights[1], weights[2], weights[3]).map_err(|e| {
                    ParseError {
                        line: 0,
                        message: e.to_string(),
                    }
                })?
            } else {
                PocWeights::default()
            };
            ConsensusEngine::Poc {
                weights: w,
                round_energy_j: round_energy.unwrap_or(1.0),
            }
        }
        EngineKind::Pow => ConsensusEngine::Pow {
            difficulty_bits: difficulty.unwrap_or(16),
            hash_energy_j: hash_energy.unwrap_or(0.008),
        },
        EngineKind::Poid => ConsensusEngine::Poid {
            verify_energy_j: verify_energy.unwrap_or(0.25),
        },
        EngineKind::Poa => ConsensusEngine::Poa {
            authority_size: authority_size.unwrap_or(3),
            verify_energy_j: verify_energy.unwrap_or(0.25),
        },
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_yields_defaults() {
        let s = parse_scenario("").unwrap();
        assert_eq!(s.uav_count, 20);
        assert_eq!(s.waypoint_count, 80);
        assert_eq!(s.region_side_m, 10_000.0);
        assert_eq!(s.engine.kind(), EngineKind::Poc);
        assert_eq!(s, Scenario::default());
    }

    #[test]
    fn negative_count_is_a_range_error() {
        let err = parse_scenario("uav_count = -1").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("out of range"), "{}", err.message);
    }

    #[test]
    fn pow_shorthand_maps_to_engine() {
        let s = parse_scenario("consensus = pow\ndifficulty = 12\n").unwrap();
        assert_eq!(
            s.engine,
            ConsensusEngine::Pow {
                difficulty_bits: 12,
                hash_energy_j: 0.008
            }
        );
    }

    #[test]
    fn sections_and_comments_parse() {
        let text = "\
# scenario tweaks
uav_count = 10
[consensus]
kind = poa
authority_size = 5  # five signers
[channel]
count = 4
[reward]
success_reward = 3.5
";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.uav_count, 10);
        assert_eq!(
            s.engine,
            ConsensusEngine::Poa {
                authority_size: 5,
                verify_energy_j: 0.25
            }
        );
        assert_eq!(s.channels.count, 4);
        assert_eq!(s.reward.success_reward, 3.5);
    }

    #[test]
    fn unknown_key_names_the_line() {
        let err = parse_scenario("uav_count = 5\nbogus = 1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("bogus"));
    }

    #[test]
    fn malformed_line_is_rejected() {
        let err = parse_scenario("uav_count 5").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("key = value"));
    }

    #[test]
    fn region_km2_converts_to_side() {
        let s = parse_scenario("region_km2 = 100").unwrap();
        assert!((s.region_side_m - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn energy_knobs_parse_and_validate() {
        let s = parse_scenario(
            "hover_power_w = 50\nhover_unit_energy_w = 25\nenergy_threshold_frac = 0.2\n",
        )
        .unwrap();
        assert_eq!(s.hover_power_w, 50.0);
        assert_eq!(s.hover_unit_energy_w, 25.0);
        assert_eq!(s.energy_threshold_frac, 0.2);
        assert!(parse_scenario("energy_threshold_frac = 1.5").is_err());
    }

    #[test]
    fn custom_weights_must_sum_to_one() {
        let bad = "\
[consensus]
kind = poc
w_timestamp = 0.5
w_poi = 0.5
w_resources = 0.5
w_delivery = 0.5
";
        assert!(parse_scenario(bad).is_err());
        let good = "\
[consensus]
kind = poc
w_timestamp = 0.4
w_poi = 0.3
w_resources = 0.2
w_delivery = 0.1
";
        let s = parse_scenario(good).unwrap();
        match s.engine {
            ConsensusEngine::Poc { weights, .. } => {
                assert_eq!(weights.w_timestamp, 0.4);
                assert_eq!(weights.w_delivery, 0.1);
            }
            other => panic!("expected poc, got {other:?}"),
        }
    }
}
