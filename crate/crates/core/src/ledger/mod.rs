//! Lightweight permissioned blockchain: identified, timestamped,
//! Merkle-rooted, hash-chained blocks carrying variable-size transaction
//! lists, plus the UAV registration registry.
//!
//! The simulated network is synchronous with one proposer per round, so
//! there is a single chain and no fork choice. JSON export serializes
//! blocks with header fields in declaration order and digests as lowercase
//! hex.

mod codec;
mod merkle;

pub use codec::{sha256, CanonicalBuf, Digest};
pub use merkle::merkle_root;

use crate::airframe::{AirframeError, UavSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("blocks must carry at least one transaction")]
    EmptyBlock,
    #[error("stale timestamp {timestamp_s} behind tip {tip_timestamp_s}")]
    StaleTimestamp {
        timestamp_s: u64,
        tip_timestamp_s: u64,
    },
    #[error("nonce does not satisfy difficulty {difficulty}")]
    InvalidNonce { difficulty: u32 },
    #[error("node {node_id} is already registered")]
    AlreadyRegistered { node_id: u64 },
    #[error("malformed registration: {0}")]
    MalformedRegistration(AirframeError),
}

/// First invariant violation found while validating a chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainFault {
    pub block_id: u64,
    pub reason: FaultReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultReason {
    EmptyChain,
    BadGenesis,
    IdNotConsecutive,
    PrevHashMismatch,
    TimestampRegression,
    MerkleMismatch,
    HeaderHashMismatch,
    TxCountMismatch,
    NoTransactions,
    DifficultyNotMet,
    DuplicateRegistration { node_id: u64 },
}

impl fmt::Display for ChainFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "block {}: {:?}", self.block_id, self.reason)
    }
}

/// Transaction payload variants; sizes differ by kind, which is what makes
/// block sizes variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TxPayload {
    /// Synthetic bootstrap transaction carried only by the genesis block.
    Genesis,
    Registration {
        spec: UavSpec,
        registered_at_s: u64,
    },
    DeliveryRecord {
        job_id: u64,
        uav_id: u64,
        edt_s: f64,
        adt_s: f64,
        cost: f64,
    },
    ReputationUpdate {
        uav_id: u64,
        score: f64,
    },
    Heartbeat {
        uav_id: u64,
        timestamp_s: u64,
    },
}

impl TxPayload {
    fn kind_tag(&self) -> u8 {
        match self {
            TxPayload::Genesis => 0,
            TxPayload::Registration { .. } => 1,
            TxPayload::DeliveryRecord { .. } => 2,
            TxPayload::ReputationUpdate { .. } => 3,
            TxPayload::Heartbeat { .. } => 4,
        }
    }

    fn encode(&self, buf: &mut CanonicalBuf) {
        match self {
            TxPayload::Genesis => {}
            TxPayload::Registration {
                spec,
                registered_at_s,
            } => {
                buf.put_u64(spec.node_id);
                buf.put_u8(match spec.size_class {
                    crate::airframe::SizeClass::Small => 0,
                    crate::airframe::SizeClass::Medium => 1,
                    crate::airframe::SizeClass::Large => 2,
                });
                buf.put_f64(spec.empty_weight_kg);
                buf.put_f64(spec.payload_capacity_kg);
                buf.put_f64(spec.battery_capacity_j);
                buf.put_f64(spec.rated_flight_duration_s);
                buf.put_f64(spec.rated_travel_distance_m);
                buf.put_u64(*registered_at_s);
            }
            TxPayload::DeliveryRecord {
                job_id,
                uav_id,
                edt_s,
                adt_s,
                cost,
            } => {
                buf.put_u64(*job_id);
                buf.put_u64(*uav_id);
                buf.put_f64(*edt_s);
                buf.put_f64(*adt_s);
                buf.put_f64(*cost);
            }
            TxPayload::ReputationUpdate { uav_id, score } => {
                buf.put_u64(*uav_id);
                buf.put_f64(*score);
            }
            TxPayload::Heartbeat {
                uav_id,
                timestamp_s,
            } => {
                buf.put_u64(*uav_id);
                buf.put_u64(*timestamp_s);
            }
        }
    }
}

/// One ledger transaction. `byte_size` is the canonical payload length and
/// is itself part of the hashed bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_id: u64,
    pub payload: TxPayload,
    pub byte_size: u64,
}

impl Transaction {
    pub fn new(tx_id: u64, payload: TxPayload) -> Self {
        let mut body = CanonicalBuf::new();
        payload.encode(&mut body);
        // Tag and tx id always take 9 bytes; payload length varies by kind.
        let byte_size = 9 + body.len() as u64;
        Self {
            tx_id,
            payload,
            byte_size,
        }
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut buf = CanonicalBuf::new();
        buf.put_u8(self.payload.kind_tag());
        buf.put_u64(self.tx_id);
        buf.put_u64(self.byte_size);
        self.payload.encode(&mut buf);
        buf.as_slice().to_vec()
    }

    pub fn hash(&self) -> Digest {
        sha256(&self.canonical_bytes())
    }
}

/// Block header; hashed to form the chain links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub block_id: u64,
    pub prev_hash: Digest,
    pub merkle_root: Digest,
    pub timestamp_s: u64,
    pub difficulty: u32,
    pub nonce: u64,
    pub tx_count: u32,
    pub proposer: u64,
}

impl BlockHeader {
    pub fn hash(&self) -> Digest {
        let mut buf = CanonicalBuf::new();
        buf.put_u64(self.block_id);
        buf.put_digest(&self.prev_hash);
        buf.put_digest(&self.merkle_root);
        buf.put_u64(self.timestamp_s);
        buf.put_u32(self.difficulty);
        buf.put_u64(self.nonce);
        buf.put_u32(self.tx_count);
        buf.put_u64(self.proposer);
        buf.digest()
    }
}

/// A block with its cached header hash. Validation recomputes the hash, so
/// any stored bit flipped after append is detected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub hash: Digest,
    pub transactions: Vec<Transaction>,
}

/// The single chain, genesis first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub blocks: Vec<Block>,
}

impl Chain {
    /// A fresh chain holding only the genesis block: id 0, all-zero parent
    /// hash, one synthetic transaction, timestamp 0, proposer 0.
    pub fn genesis() -> Self {
        let txs = vec![Transaction::new(0, TxPayload::Genesis)];
        let header = BlockHeader {
            block_id: 0,
            prev_hash: Digest::ZERO,
            merkle_root: merkle_root(&txs).expect("genesis carries one transaction"),
            timestamp_s: 0,
            difficulty: 0,
            nonce: 0,
            tx_count: 1,
            proposer: 0,
        };
        let hash = header.hash();
        Chain {
            blocks: vec![Block {
                header,
                hash,
                transactions: txs,
            }],
        }
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Digest identifying the whole chain (the tip hash, which commits to
    /// every ancestor through the hash links).
    pub fn digest(&self) -> Digest {
        self.tip().hash
    }

    /// Appends a block. The timestamp must not regress and, when
    /// `difficulty` is nonzero, the header hash under `nonce` must carry
    /// that many leading zero bits.
    pub fn append_block(
        &mut self,
        transactions: Vec<Transaction>,
        proposer: u64,
        timestamp_s: u64,
        difficulty: u32,
        nonce: u64,
    ) -> Result<&Block, LedgerError> {
        if transactions.is_empty() {
            return Err(LedgerError::EmptyBlock);
        }
        let tip = self.tip();
        if timestamp_s < tip.header.timestamp_s {
            return Err(LedgerError::StaleTimestamp {
                timestamp_s,
                tip_timestamp_s: tip.header.timestamp_s,
            });
        }
        let header = BlockHeader {
            block_id: tip.header.block_id + 1,
            prev_hash: tip.hash,
            merkle_root: merkle_root(&transactions)?,
            timestamp_s,
            difficulty,
            nonce,
            tx_count: transactions.len() as u32,
            proposer,
        };
        let hash = header.hash();
        if hash.leading_zero_bits() < difficulty {
            return Err(LedgerError::InvalidNonce { difficulty });
        }
        self.blocks.push(Block {
            header,
            hash,
            transactions,
        });
        Ok(self.tip())
    }

    /// Checks every chain invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), ChainFault> {
        let fault = |block_id, reason| Err(ChainFault { block_id, reason });
        let Some(genesis) = self.blocks.first() else {
            return fault(0, FaultReason::EmptyChain);
        };
        if genesis.header.block_id != 0 || genesis.header.prev_hash != Digest::ZERO {
            return fault(genesis.header.block_id, FaultReason::BadGenesis);
        }
        let mut registered = BTreeSet::new();
        for (i, block) in self.blocks.iter().enumerate() {
            let id = block.header.block_id;
            if block.transactions.is_empty() {
                return fault(id, FaultReason::NoTransactions);
            }
            if block.header.tx_count as usize != block.transactions.len() {
                return fault(id, FaultReason::TxCountMismatch);
            }
            match merkle_root(&block.transactions) {
                Ok(root) if root == block.header.merkle_root => {}
                _ => return fault(id, FaultReason::MerkleMismatch),
            }
            if block.header.hash() != block.hash {
                return fault(id, FaultReason::HeaderHashMismatch);
            }
            if block.hash.leading_zero_bits() < block.header.difficulty {
                return fault(id, FaultReason::DifficultyNotMet);
            }
            if i > 0 {
                let parent = &self.blocks[i - 1];
                if id != parent.header.block_id + 1 {
                    return fault(id, FaultReason::IdNotConsecutive);
                }
                if block.header.prev_hash != parent.hash {
                    return fault(id, FaultReason::PrevHashMismatch);
                }
                if block.header.timestamp_s < parent.header.timestamp_s {
                    return fault(id, FaultReason::TimestampRegression);
                }
            }
            for tx in &block.transactions {
                if let TxPayload::Registration { spec, .. } = &tx.payload {
                    if !registered.insert(spec.node_id) {
                        return fault(
                            id,
                            FaultReason::DuplicateRegistration {
                                node_id: spec.node_id,
                            },
                        );
                    }
                }
            }
        }
        Ok(())
    }

    /// Most recent registration payload for `node_id`, if any.
    pub fn lookup_identity(&self, node_id: u64) -> Option<&UavSpec> {
        self.blocks
            .iter()
            .rev()
            .flat_map(|b| b.transactions.iter().rev())
            .find_map(|tx| match &tx.payload {
                TxPayload::Registration { spec, .. } if spec.node_id == node_id => Some(spec),
                _ => None,
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain serializes")
    }
}

/// True when every chain invariant holds.
pub fn validate_chain(chain: &Chain) -> bool {
    chain.validate().is_ok()
}

/// Builds a registration transaction for a UAV that is not yet on the
/// chain. Malformed specs and duplicate node ids are rejected.
pub fn register_uav(
    chain: &Chain,
    spec: &UavSpec,
    timestamp_s: u64,
    tx_id: u64,
) -> Result<Transaction, LedgerError> {
    spec.validate()
        .map_err(LedgerError::MalformedRegistration)?;
    if chain.lookup_identity(spec.node_id).is_some() {
        return Err(LedgerError::AlreadyRegistered {
            node_id: spec.node_id,
        });
    }
    Ok(Transaction::new(
        tx_id,
        TxPayload::Registration {
            spec: spec.clone(),
            registered_at_s: timestamp_s,
        },
    ))
}

/// Searches nonces until the header hash satisfies `difficulty`. Returns
/// the winning nonce, or `None` if `max_attempts` runs out.
pub fn mine_nonce(header: &BlockHeader, difficulty: u32, max_attempts: u64) -> Option<u64> {
    let mut candidate = header.clone();
    candidate.difficulty = difficulty;
    for nonce in 0..max_attempts {
        candidate.nonce = nonce;
        if candidate.hash().leading_zero_bits() >= difficulty {
            return Some(nonce);
        }
    }
    None
}
