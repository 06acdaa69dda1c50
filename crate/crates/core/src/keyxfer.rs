//! Key transfer: Bob sends random bits instead of a message, and on success
//! both sides compress their copies with a seeded Toeplitz hash.

use std::fmt;
use std::ops::BitXor;

use rand::{Rng, SeedableRng};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::protocol::{random_message, run_session_with_message, ProtocolConfig, ProtocolError};
use crate::seed::Stream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KeyError {
    #[error("invalid key session: {0}")]
    InvalidSession(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// A string of bits, one `bool` per bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    pub fn from_u8_bits(bits: &[u8]) -> Self {
        BitString(bits.iter().map(|&b| b & 1 == 1).collect())
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        BitString((0..len).map(|_| rng.random()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Packs bits most-significant first; a partial last byte is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i))))
            .collect()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }
}

impl BitXor for &BitString {
    type Output = BitString;

    fn bitxor(self, rhs: &BitString) -> BitString {
        assert_eq!(self.len(), rhs.len(), "xor of bit strings with different lengths");
        BitString(self.0.iter().zip(&rhs.0).map(|(a, b)| a ^ b).collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// An `M × N` binary Toeplitz matrix, stored by its `M + N - 1` diagonals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzHash {
    rows: usize,
    cols: usize,
    diagonals: Vec<bool>,
}

impl ToeplitzHash {
    /// Draws the first row and first column from a stream seeded by `seed`.
    pub fn from_seed(seed: u64, rows: usize, cols: usize) -> Result<Self, KeyError> {
        if rows == 0 || rows > cols {
            return Err(KeyError::InvalidSession(format!(
                "output length {rows} must be between 1 and the input length {cols}"
            )));
        }
        let mut rng = Stream::seed_from_u64(seed);
        let diagonals = (0..rows + cols - 1).map(|_| rng.random()).collect();
        Ok(ToeplitzHash { rows, cols, diagonals })
    }

    /// Entry `T[i][j]`; constant along each diagonal.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.diagonals[i + self.cols - 1 - j]
    }

    /// `T · raw` over GF(2).
    pub fn apply(&self, raw: &BitString) -> BitString {
        assert_eq!(raw.len(), self.cols, "input length does not match the hash");
        BitString(
            (0..self.rows)
                .map(|i| raw.0.iter().enumerate().fold(false, |acc, (j, &bit)| acc ^ (bit & self.entry(i, j))))
                .collect(),
        )
    }
}

/// Compresses `raw` to `final_bits` bits with the Toeplitz hash seeded by `toeplitz_seed`.
pub fn privacy_amplify(raw: &BitString, toeplitz_seed: u64, final_bits: usize) -> Result<BitString, KeyError> {
    if final_bits > raw.len() {
        return Err(KeyError::InvalidSession(format!(
            "cannot amplify {} raw bits into {final_bits} bits",
            raw.len()
        )));
    }
    Ok(ToeplitzHash::from_seed(toeplitz_seed, final_bits, raw.len())?.apply(raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KeySession {
    /// N: random bits Bob sends.
    pub raw_bits: usize,
    /// M: length of the distilled key.
    pub final_bits: usize,
    pub toeplitz_seed: u64,
}

impl KeySession {
    pub fn new(raw_bits: usize, final_bits: usize, toeplitz_seed: u64) -> Result<Self, KeyError> {
        let session = KeySession { raw_bits, final_bits, toeplitz_seed };
        session.validate()?;
        Ok(session)
    }

    pub fn validate(&self) -> Result<(), KeyError> {
        if self.raw_bits == 0 || self.final_bits == 0 {
            return Err(KeyError::InvalidSession("raw and final key lengths must be at least 1".into()));
        }
        if self.final_bits > self.raw_bits {
            return Err(KeyError::InvalidSession(format!(
                "final bits ({}) cannot exceed raw bits ({})",
                self.final_bits, self.raw_bits
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyStatus {
    Established,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyOutcome {
    pub status: KeyStatus,
    pub alice_key: Option<BitString>,
    pub bob_key: Option<BitString>,
    /// Protocol rounds spent, including the aborting one.
    pub rounds: u64,
}

impl KeyOutcome {
    pub fn keys_match(&self) -> bool {
        matches!((&self.alice_key, &self.bob_key), (Some(a), Some(b)) if a == b)
    }
}

/// Sends `session.raw_bits` random bits over the protocol and distills keys.
///
/// Bob's bits come from the session's source stream. A detection at any
/// point discards everything: an aborted outcome carries no key material.
pub fn run_key_transfer(config: &ProtocolConfig, session: &KeySession) -> Result<KeyOutcome, KeyError> {
    session.validate()?;
    let bob_raw = random_message(config.master_seed, session.raw_bits);
    let result = run_session_with_message(config, &bob_raw)?;
    if result.aborted {
        return Ok(KeyOutcome {
            status: KeyStatus::Aborted,
            alice_key: None,
            bob_key: None,
            rounds: result.qubits_used,
        });
    }
    let alice_raw = BitString::from_u8_bits(&result.alice_bits());
    let bob_raw = BitString::from_u8_bits(&bob_raw);
    Ok(KeyOutcome {
        status: KeyStatus::Established,
        alice_key: Some(privacy_amplify(&alice_raw, session.toeplitz_seed, session.final_bits)?),
        bob_key: Some(privacy_amplify(&bob_raw, session.toeplitz_seed, session.final_bits)?),
        rounds: result.qubits_used,
    })
}
