//! Canonical byte encoding and SHA-256 digests.
//!
//! Digests must be bit-exact across implementations, so every hashed
//! structure is serialized through this fixed little-endian layout:
//! scalars are written raw at fixed width (f64 as IEEE-754 bits), byte
//! strings carry a u64 length prefix, and fields always appear in
//! declaration order.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use std::fmt;

/// 32-byte SHA-256 digest, hex-encoded lowercase in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Number of leading zero bits, most significant byte first. Used by
    /// the proof-of-work difficulty check.
    pub fn leading_zero_bits(&self) -> u32 {
        let mut bits = 0;
        for &byte in &self.0 {
            if byte == 0 {
                bits += 8;
            } else {
                bits += byte.leading_zeros();
                break;
            }
        }
        bits
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))?;
        Ok(Digest(arr))
    }
}

pub fn sha256(bytes: &[u8]) -> Digest {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    Digest(hasher.finalize().into())
}

/// Accumulates the canonical encoding of one structure.
#[derive(Default)]
pub struct CanonicalBuf {
    buf: Vec<u8>,
}

impl CanonicalBuf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    pub fn put_digest(&mut self, d: &Digest) {
        self.buf.extend_from_slice(&d.0);
    }

    pub fn put_bytes(&mut self, bytes: &[u8]) {
        self.put_u64(bytes.len() as u64);
        self.buf.extend_from_slice(bytes);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }

    pub fn digest(&self) -> Digest {
        sha256(&self.buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_hex_roundtrip() {
        let d = sha256(b"abc");
        assert_eq!(
            d.to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn leading_zero_bits_counts_msb_first() {
        let mut raw = [0u8; 32];
        raw[0] = 0b0000_1000;
        assert_eq!(Digest(raw).leading_zero_bits(), 4);
        assert_eq!(Digest::ZERO.leading_zero_bits(), 256);
        raw[0] = 0xFF;
        assert_eq!(Digest(raw).leading_zero_bits(), 0);
    }

    #[test]
    fn encoding_is_order_sensitive() {
        let mut a = CanonicalBuf::new();
        a.put_u64(1);
        a.put_u64(2);
        let mut b = CanonicalBuf::new();
        b.put_u64(2);
        b.put_u64(1);
        assert_ne!(a.digest(), b.digest());
    }
}
