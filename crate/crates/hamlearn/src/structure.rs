//! Two-copy structure learning: which Pauli strings carry the residual `H - Ĥ`.
//!
//! Each shot prepares `n` Bell pairs, runs the Trotter-cancelled evolution on
//! the system half and measures in the Bell basis. An outcome decodes to a
//! Pauli string; for short times a term `μ_s P_s` of the residual shows up with
//! probability about `sin²(μ_s τ)`. Every non-identity outcome is returned with
//! its count and false positives are left to coefficient learning.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::pauli::{bell_outcome_to_pauli, PauliString};
use crate::sim::state::{bell_distribution, outcome_bits, prepare_bell_pairs, Cdf};
use crate::sim::{EvolutionOracle, SpamModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    /// Smallest coefficient magnitude the pass must detect.
    pub mu_m: f64,
    /// Estimated number of terms.
    pub m_est: usize,
    pub shots: u64,
    /// Safety constant in the time and step rules.
    pub c: f64,
    /// Overrides the Trotter step rule.
    #[serde(default)]
    pub r1: Option<u64>,
    /// Overrides the per-shot evolution time rule.
    #[serde(default)]
    pub tau: Option<f64>,
}

impl Default for StructureConfig {
    fn default() -> Self {
        StructureConfig { mu_m: 0.5, m_est: 8, shots: 2000, c: 4.0, r1: None, tau: None }
    }
}

impl StructureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_m > 0.0 && self.mu_m <= 1.0) {
            return Err(Error::Config(format!("mu_m must lie in (0, 1], got {}", self.mu_m)));
        }
        if self.m_est == 0 {
            return Err(Error::Config("m_est must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(Error::Config("structure learning needs at least one shot".into()));
        }
        if !(self.c >= 2.0) {
            return Err(Error::Config(format!("C must be at least 2, got {}", self.c)));
        }
        if self.r1 == Some(0) {
            return Err(Error::Config("r1 must be at least 1".into()));
        }
        if let Some(t) = self.tau {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tau must be a finite non-negative time, got {t}")));
            }
        }
        Ok(())
    }
}

/// Observed non-identity strings with their counts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SupportSet {
    counts: BTreeMap<PauliString, u64>,
}

impl SupportSet {
    pub fn new() -> Self {
        SupportSet::default()
    }

    /// Record one observation; identity outcomes are ignored.
    pub fn observe(&mut self, p: PauliString) {
        if !p.is_identity() {
            *self.counts.entry(p).or_insert(0) += 1;
        }
    }

    pub fn candidates(&self) -> impl Iterator<Item = &PauliString> + '_ {
        self.counts.keys()
    }

    pub fn counts(&self) -> &BTreeMap<PauliString, u64> {
        &self.counts
    }

    pub fn count(&self, p: &PauliString) -> u64 {
        self.counts.get(p).copied().unwrap_or(0)
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.counts.contains_key(p)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

impl FromIterator<PauliString> for SupportSet {
    fn from_iter<I: IntoIterator<Item = PauliString>>(iter: I) -> Self {
        let mut s = SupportSet::new();
        iter.into_iter().for_each(|p| s.observe(p));
        s
    }
}

/// `τ = 1/(C M μ_m)` and `r1 = ⌈C M² / μ_m²⌉`, unless overridden.
pub fn choose_tau_r1(cfg: &StructureConfig) -> (f64, u64) {
    let m = cfg.m_est as f64;
    let tau = cfg.tau.unwrap_or(1.0 / (cfg.c * m * cfg.mu_m));
    let r1 = cfg.r1.unwrap_or_else(|| (cfg.c * m * m / (cfg.mu_m * cfg.mu_m)).ceil().max(1.0) as u64);
    (tau, r1)
}

/// Shots after which every term at the threshold has been seen once with
/// probability `1 - δ`: `⌈C² M² ln(M/δ)⌉`.
pub fn theoretical_shots(m_est: usize, c: f64, delta: f64) -> u64 {
    let m = m_est.max(1) as f64;
    (c * c * m * m * (m / delta).ln().max(1.0)).ceil() as u64
}

pub fn structure_learn_two_copy<R: Rng + ?Sized>(
    oracle: &EvolutionOracle,
    hat_h: &SparseHamiltonian,
    cfg: &StructureConfig,
    spam: &SpamModel,
    rng: &mut R,
) -> Result<SupportSet> {
    cfg.validate()?;
    check_dim(oracle.n(), hat_h.n())?;
    let n = oracle.n();
    let (tau, r1) = choose_tau_r1(cfg);
    let evo = oracle.cancelled(hat_h, tau, r1)?;
    // The evolution is deterministic, so the outcome law depends only on the
    // preparation error; compute it once per distinct error pattern.
    let mut laws: HashMap<PauliString, Cdf> = HashMap::new();
    let mut support = SupportSet::new();
    for _ in 0..cfg.shots {
        let pattern = spam.prep_pattern(2 * n, rng);
        let law = match laws.get(&pattern) {
            Some(l) => l,
            None => {
                let mut state = prepare_bell_pairs(n);
                state.apply_pauli(&pattern, 0);
                evo.apply(&mut state);
                laws.entry(pattern).or_insert(Cdf::new(&bell_distribution(&state)?))
            }
        };
        let mut bits = outcome_bits(law.sample(rng), n);
        spam.apply_meas(&mut bits, rng);
        support.observe(bell_outcome_to_pauli(&bits)?);
    }
    evo.charge(cfg.shots);
    Ok(support)
}
