//! Single-copy structure learning through Pauli twirling.
//!
//! Sandwiching the Trotter-cancelled evolution between a random Pauli and its
//! inverse turns it into a Pauli channel whose error rates are the squared
//! Pauli amplitudes of the unitary. Feeding random six-state product inputs
//! and measuring every qubit on a random axis gives samples from which the
//! sparse rate vector is recovered by a branch-and-prune walk over prefixes.
//!
//! Per qubit, a sample with input axis `a`, measured on the same axis and seen
//! to flip `f`, contributes `(1 + 9 (-1)^f χ(ℓ, a)) / 4` to the estimate for
//! letter `ℓ` (`χ = +1` when `ℓ` commutes with `a`); a mismatched axis
//! contributes `1/4`. The product over qubits is an unbiased estimator of the
//! rate of a string, and each factor sums to one over the four letters, so a
//! product over a prefix estimates the prefix marginal.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::pauli::{all_paulis, Letter, PauliString};
use crate::rng::SeedStream;
use crate::sim::oracle::CancelledEvolution;
use crate::sim::state::{eigenstate, sample_basis, HADAMARD, Y_TO_Z};
use crate::sim::{unitary, EvolutionOracle, QuantumState, SpamModel};
use crate::structure::{choose_tau_r1, StructureConfig, SupportSet};

/// Exact rates are computed by brute force up to this size.
pub const EXACT_RATES_LIMIT: usize = 6;
/// Failure probability used when sizing the single-copy sample budget.
pub const DEFAULT_DELTA: f64 = 0.05;
/// Refuse single-copy runs needing more samples than this.
pub const MAX_TWIRL_SAMPLES: u64 = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn letter(self) -> Letter {
        match self {
            Axis::X => Letter::X,
            Axis::Y => Letter::Y,
            Axis::Z => Letter::Z,
        }
    }
}

/// One of the six single-qubit stabilizer states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SixState {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+i")]
    PlusI,
    #[serde(rename = "-i")]
    MinusI,
}

impl SixState {
    pub const ALL: [SixState; 6] =
        [SixState::Zero, SixState::One, SixState::Plus, SixState::Minus, SixState::PlusI, SixState::MinusI];

    pub fn axis(self) -> Axis {
        match self {
            SixState::Zero | SixState::One => Axis::Z,
            SixState::Plus | SixState::Minus => Axis::X,
            SixState::PlusI | SixState::MinusI => Axis::Y,
        }
    }

    /// Whether this is the `-1` eigenstate of its axis.
    pub fn is_minus(self) -> bool {
        matches!(self, SixState::One | SixState::Minus | SixState::MinusI)
    }

    pub fn amplitudes(self) -> [Complex64; 2] {
        eigenstate(self.axis().letter(), self.is_minus())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwirlSample {
    #[serde(rename = "bases")]
    pub input_bases: Vec<SixState>,
    #[serde(rename = "axes")]
    pub meas_bases: Vec<Axis>,
    #[serde(rename = "bits")]
    pub outcomes: Vec<u8>,
}

impl TwirlSample {
    pub fn n(&self) -> usize {
        self.input_bases.len()
    }

    fn is_well_formed(&self) -> bool {
        self.meas_bases.len() == self.n() && self.outcomes.len() == self.n() && self.outcomes.iter().all(|&b| b <= 1)
    }

    /// Per-qubit code: 0 for mismatched axes, else `1 + 2·axis + flip`.
    fn code(&self, q: usize) -> u8 {
        let input = self.input_bases[q];
        if input.axis() != self.meas_bases[q] {
            return 0;
        }
        let axis = Axis::ALL.iter().position(|&a| a == input.axis()).unwrap() as u8;
        1 + 2 * axis + (self.outcomes[q] ^ input.is_minus() as u8)
    }
}

/// Value of the single-qubit estimator for letter `l` given a sample code.
fn code_weight(code: u8, l: Letter) -> f64 {
    if code == 0 {
        return 0.25;
    }
    let axis = Axis::ALL[((code - 1) / 2) as usize];
    let flip = (code - 1) % 2 == 1;
    let chi = if l.commutes_with(axis.letter()) { 1.0 } else { -1.0 };
    let sign = if flip { -1.0 } else { 1.0 };
    (1.0 + 9.0 * sign * chi) / 4.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PauliRateVector {
    pub rates: BTreeMap<PauliString, f64>,
}

impl PauliRateVector {
    pub fn get(&self, p: &PauliString) -> f64 {
        self.rates.get(p).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.rates.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, f64)> + '_ {
        self.rates.iter().map(|(p, &r)| (p, r))
    }

    /// `max_k |self(k) - other(k)|` over the union of listed strings.
    pub fn linf_distance(&self, other: &PauliRateVector) -> f64 {
        self.rates.keys().chain(other.rates.keys()).map(|p| (self.get(p) - other.get(p)).abs()).fold(0.0, f64::max)
    }
}

/// `p(k) = |Tr(P_k U)/2^n|²` for `U = e^{-iHt}`.
pub fn pauli_error_rates_exact(h: &SparseHamiltonian, t: f64) -> Result<PauliRateVector> {
    let n = h.n();
    if n > EXACT_RATES_LIMIT {
        return Err(Error::TooLarge { what: "exact Pauli error rates", n, limit: EXACT_RATES_LIMIT });
    }
    let u = unitary(h, t);
    let dim = 1usize << n;
    let mut rates = BTreeMap::new();
    for p in all_paulis(n) {
        // Tr(P U) = Σ_c <c|P U|c> = Σ_c phase(c ^ x) U_{c ^ x, c}.
        let x = p.x_bits() as usize;
        let y = p.y_phase();
        let tr: Complex64 = (0..dim).map(|c| p.column_phase(c ^ x, y) * u[(c ^ x, c)]).sum();
        let r = (tr / dim as f64).norm_sqr();
        if r > 0.0 {
            rates.insert(p, r);
        }
    }
    Ok(PauliRateVector { rates })
}

fn random_pauli<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliString {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    PauliString::from_bits(n, rng.gen::<u64>() & mask, rng.gen::<u64>() & mask).expect("masked bits fit")
}

fn random_inputs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Vec<SixState>, Vec<Axis>) {
    let inputs = (0..n).map(|_| SixState::ALL[rng.gen_range(0..6)]).collect();
    let axes = (0..n).map(|_| Axis::ALL[rng.gen_range(0..3)]).collect();
    (inputs, axes)
}

/// A twirled, Trotter-cancelled evolution ready to be sampled.
pub struct TwirlExperiment<'a> {
    n: usize,
    evo: CancelledEvolution<'a>,
}

impl<'a> TwirlExperiment<'a> {
    pub fn new(oracle: &'a EvolutionOracle, hat_h: &SparseHamiltonian, tau: f64, r1: u64) -> Result<Self> {
        check_dim(oracle.n(), hat_h.n())?;
        Ok(TwirlExperiment { n: oracle.n(), evo: oracle.cancelled(hat_h, tau, r1)? })
    }

    /// One uncharged sample.
    fn draw<R: Rng + ?Sized>(&self, spam: &SpamModel, rng: &mut R) -> TwirlSample {
        let n = self.n;
        let sigma = random_pauli(n, rng);
        let (inputs, axes) = random_inputs(n, rng);
        let amps: Vec<[Complex64; 2]> = inputs.iter().map(|s| s.amplitudes()).collect();
        let mut state = QuantumState::product(&amps);
        spam.apply_prep(&mut state, rng);
        state.apply_pauli(&sigma, 0);
        self.evo.apply(&mut state);
        state.apply_pauli(&sigma, 0);
        for (q, axis) in axes.iter().enumerate() {
            match axis {
                Axis::X => state.apply_gate(q, &HADAMARD),
                Axis::Y => state.apply_gate(q, &Y_TO_Z),
                Axis::Z => {}
            }
        }
        let index = sample_basis(&state, rng);
        let mut outcomes: Vec<u8> = (0..n).map(|q| (index >> q & 1) as u8).collect();
        spam.apply_meas(&mut outcomes, rng);
        TwirlSample { input_bases: inputs, meas_bases: axes, outcomes }
    }

    /// `count` charged samples, drawn in parallel from substreams of `stream`.
    pub fn collect(&self, count: u64, spam: &SpamModel, stream: SeedStream) -> Vec<TwirlSample> {
        const CHUNK: u64 = 1 << 14;
        let chunks = count.div_ceil(CHUNK);
        let out: Vec<TwirlSample> = (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = stream.child(c).rng();
                let len = CHUNK.min(count - c * CHUNK);
                (0..len).map(move |_| self.draw(spam, &mut rng)).collect::<Vec<_>>()
            })
            .collect();
        self.evo.charge(count);
        out
    }
}

/// One charged twirl sample of the cancelled evolution for time `tau` in `r1` steps.
pub fn twirled_channel_sample<R: Rng + ?Sized>(
    oracle: &EvolutionOracle,
    tau: f64,
    hat_h: &SparseHamiltonian,
    r1: u64,
    spam: &SpamModel,
    rng: &mut R,
) -> Result<TwirlSample> {
    let exp = TwirlExperiment::new(oracle, hat_h, tau, r1)?;
    let s = exp.draw(spam, rng);
    exp.evo.charge(1);
    Ok(s)
}

/// Classical samples from a known Pauli channel, for testing recovery in isolation.
pub fn sample_pauli_channel<R: Rng + ?Sized>(rates: &PauliRateVector, n: usize, rng: &mut R) -> Result<TwirlSample> {
    let list: Vec<(&PauliString, f64)> = rates.iter().collect();
    let total: f64 = list.iter().map(|(_, r)| r).sum();
    let mut u = rng.gen::<f64>() * total;
    let mut err = PauliString::identity(n);
    for (p, r) in &list {
        check_dim(n, p.n())?;
        err = **p;
        if u < *r {
            break;
        }
        u -= r;
    }
    let (inputs, axes) = random_inputs(n, rng);
    let outcomes = (0..n)
        .map(|q| {
            if inputs[q].axis() == axes[q] {
                let flipped = !err.letter(q).commutes_with(axes[q].letter());
                (inputs[q].is_minus() ^ flipped) as u8
            } else {
                rng.gen_range(0..2)
            }
        })
        .collect();
    Ok(TwirlSample { input_bases: inputs, meas_bases: axes, outcomes })
}

/// `⌈2 (17/8)^n ln(2n/(ε₁δ)) / ε₁²⌉`; `17/8` bounds the per-qubit second moment
/// of the estimator.
pub fn required_samples(n: usize, eps1: f64, delta: f64) -> u64 {
    let n_f = n.max(1) as f64;
    (2.0 * (17.0f64 / 8.0).powi(n as i32) * (2.0 * n_f / (eps1 * delta)).ln() / (eps1 * eps1)).ceil() as u64
}

/// Branch-and-prune recovery of a sparse Pauli rate vector.
pub fn population_recover(samples: &[TwirlSample], eps1: f64, delta: f64) -> Result<PauliRateVector> {
    if !(eps1 > 0.0 && eps1 < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("need eps1, delta in (0, 1), got {eps1}, {delta}")));
    }
    let n = samples.first().map(|s| s.n()).ok_or(Error::InsufficientSamples { have: 0, need: 1 })?;
    if samples.iter().any(|s| s.n() != n || !s.is_well_formed()) {
        return Err(Error::Format("twirl samples have inconsistent lengths".into()));
    }
    let need = required_samples(n, eps1, delta);
    if (samples.len() as u64) < need {
        return Err(Error::InsufficientSamples { have: samples.len(), need: need as usize });
    }
    let m = samples.len() as f64;
    let codes: Vec<Vec<u8>> = samples.iter().map(|s| (0..n).map(|q| s.code(q)).collect()).collect();

    let mut survivors: Vec<(Vec<Letter>, f64)> = vec![(Vec::new(), 1.0)];
    for len in 1..=n {
        // Samples only matter through their codes on the prefix.
        let mut groups: HashMap<&[u8], u64> = HashMap::new();
        for c in &codes {
            *groups.entry(&c[..len]).or_insert(0) += 1;
        }
        let groups: Vec<(&[u8], u64)> = groups.into_iter().collect();
        let children: Vec<Vec<Letter>> = survivors
            .iter()
            .flat_map(|(prefix, _)| {
                Letter::ALL.iter().map(move |&l| {
                    let mut p = prefix.clone();
                    p.push(l);
                    p
                })
            })
            .collect();
        survivors = children
            .into_par_iter()
            .map(|prefix| {
                let est = groups
                    .iter()
                    .map(|(code, count)| {
                        *count as f64 * code.iter().zip(&prefix).map(|(&c, &l)| code_weight(c, l)).product::<f64>()
                    })
                    .sum::<f64>()
                    / m;
                (prefix, est)
            })
            .filter(|(_, est)| *est >= eps1 / 2.0)
            .collect();
    }
    survivors.sort_by(|a, b| b.1.total_cmp(&a.1));
    survivors.truncate((4.0 / eps1).floor() as usize);
    let rates = survivors.into_iter().map(|(letters, est)| (PauliString::from_letters(&letters), est)).collect();
    Ok(PauliRateVector { rates })
}

/// `γ = sin²(μ_m τ)/2` and the recovery accuracy `ε₁ = γ/2`, which is also the
/// acceptance threshold.
pub fn single_copy_threshold(cfg: &StructureConfig) -> (f64, f64) {
    let (tau, _) = choose_tau_r1(cfg);
    let gamma = 0.5 * (cfg.mu_m * tau).sin().powi(2);
    (gamma, gamma / 2.0)
}

pub fn structure_learn_single_copy<R: Rng + ?Sized>(
    oracle: &EvolutionOracle,
    hat_h: &SparseHamiltonian,
    cfg: &StructureConfig,
    spam: &SpamModel,
    rng: &mut R,
) -> Result<SupportSet> {
    cfg.validate()?;
    let n = oracle.n();
    let (tau, r1) = choose_tau_r1(cfg);
    let (_, eps1) = single_copy_threshold(cfg);
    let count = required_samples(n, eps1, DEFAULT_DELTA).max(cfg.shots);
    if count > MAX_TWIRL_SAMPLES {
        return Err(Error::Config(format!(
            "single-copy route needs {count} samples at eps1 = {eps1:.3e}, above the limit {MAX_TWIRL_SAMPLES}"
        )));
    }
    let exp = TwirlExperiment::new(oracle, hat_h, tau, r1)?;
    let samples = exp.collect(count, spam, SeedStream::new(rng.gen()));
    let rates = population_recover(&samples, eps1, DEFAULT_DELTA)?;
    Ok(rates.iter().filter(|(p, r)| !p.is_identity() && *r > eps1).map(|(p, _)| *p).collect())
}
