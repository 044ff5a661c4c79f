//! Blockchain-coordinated UAV delivery simulation.
//!
//! The crate models a fleet of delivery UAVs coordinated through a
//! lightweight permissioned blockchain. Block proposers are chosen by a
//! pluggable consensus engine: proof-of-competence (a deterministic
//! credibility score built from heartbeat freshness, registered identity,
//! remaining resources, and delivery time), or one of three baselines
//! (proof-of-work, proof-of-identity, proof-of-authority). A deterministic
//! discrete-event runner advances the fleet in fixed rounds, tracks flight
//! and hover energy, assigns delivery jobs by competence rank, commits
//! delivery records on-chain, and emits per-round metrics as CSV.
//!
//! Module map:
//! - [`airframe`] — UAV registration attributes, payload-dependent speed,
//!   3-D kinematics, flight/hover energy bookkeeping.
//! - [`channel`] — air-to-ground SNR, Shannon rate, transmission delay,
//!   deadline feasibility, coverage load.
//! - [`ledger`] — Merkle-rooted, hash-chained blocks and the registration
//!   registry.
//! - [`consensus`] — proposer selection engines plus miner-energy and
//!   reward/penalty accounting.
//! - [`delivery`] — jobs, assignments, reputation scores, certificates.
//! - [`simkit`] — scenario config, the round loop, metric emission, and
//!   experiment sweeps.

pub mod airframe;
pub mod channel;
pub mod consensus;
pub mod delivery;
pub mod ledger;
pub mod rng;
pub mod simkit;

pub use airframe::{EnergyState, KinematicState, SizeClass, UavSpec};
pub use channel::{Channel, DataPacket, Link};
pub use consensus::{CompetenceInputs, ConsensusEngine, EngineKind, RewardParams, RoundOutcome};
pub use delivery::{Assignment, AssignmentStatus, Job, ReputationRecord};
pub use ledger::{Block, BlockHeader, Chain, Digest, Transaction, TxPayload};
pub use simkit::{run_scenario, Scenario, SimResult};
