//! States and their canonical digests.

use std::fmt;

use sha2::{Digest as _, Sha256};

use super::system::AbstractSystem;
use super::value::Value;

/// Values of the system variables, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(pub Vec<Value>);

/// SHA-256 of [`State::encode`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", hex::encode(&self.0[..8]))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl State {
    pub fn get(&self, index: usize) -> &Value {
        &self.0[index]
    }

    /// Injective byte encoding: variable count as `u32be`, then each value
    /// in declaration order.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(&(self.0.len() as u32).to_be_bytes());
        for v in &self.0 {
            v.encode(&mut out);
        }
        out
    }

    pub fn digest(&self) -> Digest {
        let hash = Sha256::digest(self.encode());
        let mut out = [0u8; 32];
        out.copy_from_slice(&hash);
        Digest(out)
    }

    /// `name = value` lines for display.
    pub fn render(&self, system: &AbstractSystem) -> Vec<(String, String)> {
        system
            .variables
            .iter()
            .zip(&self.0)
            .map(|(v, val)| (v.name.to_string(), val.to_string()))
            .collect()
    }
}

/// Digest of a state; equal states have equal digests.
pub fn canonical_digest(s: &State) -> Digest {
    s.digest()
}
