//! Merkle root over a block's transaction list.
//!
//! Leaves are SHA-256 of each transaction's canonical bytes, internal nodes
//! hash the concatenation of their children, and a level with an odd node
//! count duplicates its last node.

use super::codec::{sha256, Digest};
use super::{LedgerError, Transaction};

/// Root digest of a nonempty transaction list.
pub fn merkle_root(transactions: &[Transaction]) -> Result<Digest, LedgerError> {
    if transactions.is_empty() {
        return Err(LedgerError::EmptyBlock);
    }
    let mut level: Vec<Digest> = transactions.iter().map(Transaction::hash).collect();
    while level.len() > 1 {
        if level.len() % 2 == 1 {
            level.push(*level.last().expect("level is nonempty"));
        }
        level = level
            .chunks_exact(2)
            .map(|pair| combine(&pair[0], &pair[1]))
            .collect();
    }
    Ok(level[0])
}

fn combine(left: &Digest, right: &Digest) -> Digest {
    let mut joined = [0u8; 64];
    joined[..32].copy_from_slice(&left.0);
    joined[32..].copy_from_slice(&right.0);
    sha256(&joined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::TxPayload;

    fn heartbeat(tx_id: u64) -> Transaction {
        Transaction::new(
            tx_id,
            TxPayload::Heartbeat {
                uav_id: tx_id,
                timestamp_s: 10 * tx_id,
            },
        )
    }

    #[test]
    fn single_leaf_is_its_own_root() {
        let tx = heartbeat(1);
        assert_eq!(merkle_root(std::slice::from_ref(&tx)).unwrap(), tx.hash());
    }

    #[test]
    fn two_leaves_hash_together() {
        let (a, b) = (heartbeat(1), heartbeat(2));
        let expected = combine(&a.hash(), &b.hash());
        assert_eq!(merkle_root(&[a, b]).unwrap(), expected);
    }

    #[test]
    fn odd_level_duplicates_last_leaf() {
        let (a, b, c) = (heartbeat(1), heartbeat(2), heartbeat(3));
        let left = combine(&a.hash(), &b.hash());
        let right = combine(&c.hash(), &c.hash());
        let expected = combine(&left, &right);
        assert_eq!(merkle_root(&[a, b, c]).unwrap(), expected);
    }

    #[test]
    fn empty_list_is_rejected() {
        assert!(matches!(merkle_root(&[]), Err(LedgerError::EmptyBlock)));
    }

    #[test]
    fn swapping_leaves_changes_the_root() {
        let (a, b, c) = (heartbeat(1), heartbeat(2), heartbeat(3));
        let r1 = merkle_root(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let r2 = merkle_root(&[b, a, c]).unwrap();
        assert_ne!(r1, r2);
    }
}
