//! State-preparation and measurement noise.
//!
//! Preparation noise is per-qubit depolarizing, realized stochastically by
//! inserting a uniformly random Pauli with probability `p` on each qubit.
//! Readout noise flips each classical bit independently. By default the
//! diamond-norm budget `eps_spam` is split in half between the two phases and
//! then evenly across qubits (resp. bits).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::QuantumState;
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliString};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpamModel {
    pub eps_spam: f64,
    /// Overrides the per-qubit depolarizing rate derived from `eps_spam`.
    #[serde(default)]
    pub prep_flip: Option<f64>,
    /// Overrides the per-bit flip rate derived from `eps_spam`.
    #[serde(default)]
    pub meas_flip: Option<f64>,
}

/// What a SPAM channel acts on.
pub enum SpamObject<'a> {
    /// Freshly prepared state: preparation noise.
    State(&'a mut QuantumState),
    /// Raw readout: measurement noise.
    Bits(&'a mut [u8]),
}

impl SpamModel {
    pub fn noiseless() -> Self {
        SpamModel::default()
    }

    pub fn new(eps_spam: f64) -> Result<Self> {
        let m = SpamModel { eps_spam, prep_flip: None, meas_flip: None };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.eps_spam) {
            return Err(Error::Config(format!("eps_spam must lie in [0, 1], got {}", self.eps_spam)));
        }
        for (name, v) in [("prep_flip", self.prep_flip), ("meas_flip", self.meas_flip)] {
            if let Some(v) = v {
                if !in_unit(v) {
                    return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.prep_rate(1) == 0.0 && self.meas_rate(1) == 0.0
    }

    /// Per-qubit depolarizing probability when `qubits` are prepared.
    pub fn prep_rate(&self, qubits: usize) -> f64 {
        self.prep_flip.unwrap_or(self.eps_spam / (2 * qubits.max(1)) as f64)
    }

    /// Per-bit flip probability when `bits` are read out.
    pub fn meas_rate(&self, bits: usize) -> f64 {
        self.meas_flip.unwrap_or(self.eps_spam / (2 * bits.max(1)) as f64)
    }

    /// Draw the Pauli error inserted after preparing `k` qubits.
    pub fn prep_pattern<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> PauliString {
        let p = self.prep_rate(k);
        let mut pattern = PauliString::identity(k);
        if p == 0.0 {
            return pattern;
        }
        for q in 0..k {
            if rng.gen::<f64>() < p {
                pattern.set(q, Letter::ALL[rng.gen_range(0..4)]);
            }
        }
        pattern
    }

    /// Apply preparation noise in place; returns the inserted Pauli.
    pub fn apply_prep<R: Rng + ?Sized>(&self, state: &mut QuantumState, rng: &mut R) -> PauliString {
        let pattern = self.prep_pattern(state.k(), rng);
        if !pattern.is_identity() {
            state.apply_pauli(&pattern, 0);
        }
        pattern
    }

    pub fn apply_meas<R: Rng + ?Sized>(&self, bits: &mut [u8], rng: &mut R) {
        let q = self.meas_rate(bits.len());
        if q == 0.0 {
            return;
        }
        for b in bits.iter_mut() {
            if rng.gen::<f64>() < q {
                *b ^= 1;
            }
        }
    }
}

pub fn apply_spam<R: Rng + ?Sized>(model: &SpamModel, object: SpamObject<'_>, rng: &mut R) {
    match object {
        SpamObject::State(s) => {
            model.apply_prep(s, rng);
        }
        SpamObject::Bits(b) => model.apply_meas(b, rng),
    }
}
