//! Coefficient learning: Hamiltonian reshaping plus robust frequency estimation.
//!
//! Conjugating every short step by a random element of the commutant of `P_s`
//! averages away all other terms, leaving `e^{-i μ_s P_s t}`. Started from a
//! product state that mixes the two eigenvalues of `P_s` on one site, two
//! single-qubit observables at that site read out `cos(2μ_s t)` and
//! `sin(2μ_s t)`. Frequency estimation then narrows an interval for
//! `θ = 2μ_s` by a factor 2/3 per round at times `t = π/(b - a)`, so the total
//! evolution time scales as `1/ε`.
//!
//! Learned terms `Ĥ` are cancelled inside every step, so the estimate is of the
//! residual coefficient; [`learn_coefficients`] adds it back.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::pauli::{all_paulis, Letter, PauliString};
use crate::rng::SeedStream;
use crate::sim::oracle::ReshapedChannel;
use crate::sim::state::eigenstate;
use crate::sim::{EvolutionOracle, OracleMode, QuantumState, SpamModel};
use crate::structure::SupportSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReshapeConfig {
    /// Constant `c` in `r2 = ⌈c M² t²⌉`.
    #[serde(default = "default_reshape_c")]
    pub c: f64,
    pub m_est: usize,
}

fn default_reshape_c() -> f64 {
    48.0
}

impl Default for ReshapeConfig {
    fn default() -> Self {
        ReshapeConfig { c: default_reshape_c(), m_est: 8 }
    }
}

impl ReshapeConfig {
    pub fn r2(&self, t: f64) -> u64 {
        let m = self.m_est as f64;
        (self.c * m * m * t * t).ceil().max(1.0) as u64
    }

    /// `(t, τ, r2)` actually run for a requested time `t`. A fixed-step black box
    /// rounds `t` to the nearest nonzero multiple `kθ` and uses `r2 = k`, `τ = θ`.
    pub fn schedule(&self, mode: OracleMode, t: f64) -> (f64, f64, u64) {
        match mode {
            OracleMode::Continuous => {
                let r2 = self.r2(t);
                (t, t / r2 as f64, r2)
            }
            OracleMode::FixedStep { theta } => {
                let k = (t / theta).round() as u64;
                if k == 0 {
                    (0.0, 0.0, 1)
                } else {
                    (k as f64 * theta, theta, k)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfeConfig {
    /// Shots averaged per batch.
    #[serde(default = "default_batch_size")]
    pub batch_size: u64,
    /// Batches per median (odd).
    #[serde(default = "default_median_batches")]
    pub median_batches: u64,
    /// Total shots per coefficient; overrides the two knobs above by spreading
    /// the budget evenly over rounds and both observables, one batch each.
    #[serde(default)]
    pub shot_budget: Option<u64>,
    /// Target failure probability (reported; the knobs above set the actual sampling).
    #[serde(default = "default_failure_prob")]
    pub failure_prob: f64,
}

fn default_batch_size() -> u64 {
    54
}
fn default_median_batches() -> u64 {
    3
}
fn default_failure_prob() -> f64 {
    0.01
}

impl Default for RfeConfig {
    fn default() -> Self {
        RfeConfig {
            batch_size: default_batch_size(),
            median_batches: default_median_batches(),
            shot_budget: None,
            failure_prob: default_failure_prob(),
        }
    }
}

/// Bound `A` on `|θ|`, `θ = 2μ`.
pub const THETA_BOUND: f64 = 2.0;

impl RfeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.median_batches % 2 == 0 {
            return Err(Error::Config("batch_size must be positive and median_batches odd".into()));
        }
        if self.shot_budget == Some(0) {
            return Err(Error::Config("shot_budget must be positive".into()));
        }
        if !(self.failure_prob > 0.0 && self.failure_prob < 1.0) {
            return Err(Error::Config(format!("failure_prob must lie in (0, 1), got {}", self.failure_prob)));
        }
        Ok(())
    }

    /// `⌈log_{3/2}(A/λ)⌉` with `λ = 2ε/3`.
    pub fn rounds(eps: f64) -> u32 {
        let lambda = 2.0 * eps / 3.0;
        ((THETA_BOUND / lambda).ln() / 1.5f64.ln()).ceil().max(1.0) as u32
    }

    /// `(batches, batch_size)` per observable per round.
    pub fn sampling(&self, rounds: u32) -> (u64, u64) {
        match self.shot_budget {
            Some(b) => (1, (b / (2 * rounds as u64)).max(1)),
            None => (self.median_batches, self.batch_size),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffConfig {
    #[serde(default)]
    pub reshape: ReshapeConfig,
    #[serde(default)]
    pub rfe: RfeConfig,
}

/// Interval state for `θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfeState {
    pub a: f64,
    pub b: f64,
    pub round: u32,
    /// `(t, Ŝ(t))` per round.
    pub history: Vec<(f64, Complex64)>,
}

impl RfeState {
    pub fn new(bound: f64) -> Self {
        RfeState { a: -bound, b: bound, round: 0, history: Vec::new() }
    }

    /// Time of the next round, `π/(b - a)`.
    pub fn next_time(&self) -> f64 {
        std::f64::consts::PI / (self.b - self.a)
    }

    pub fn update(&mut self, s: Complex64) {
        self.update_at(self.next_time(), s);
    }

    /// Keep the lower or upper two thirds depending on which side of the
    /// midpoint the demodulated signal points to.
    pub fn update_at(&mut self, t: f64, s: Complex64) {
        let mid = (self.a + self.b) / 2.0;
        let rotated = Complex64::from_polar(1.0, -mid * t) * s;
        if rotated.im <= 0.0 {
            self.b = (self.a + 2.0 * self.b) / 3.0;
        } else {
            self.a = (2.0 * self.a + self.b) / 3.0;
        }
        self.round += 1;
        self.history.push((t, s));
    }

    /// Estimate of `μ = θ/2`.
    pub fn mu_hat(&self) -> f64 {
        (self.a + self.b) / 4.0
    }

    /// Half-width of the `μ` interval.
    pub fn half_width(&self) -> f64 {
        (self.b - self.a) / 4.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEstimate {
    pub pauli: PauliString,
    /// Coefficient estimate (cancelled prior plus estimated residual).
    pub mu_hat: f64,
    /// Half-width of the final interval.
    pub stderr: f64,
    /// Value of this term in `Ĥ` before the run.
    pub prior: f64,
    pub eps_target: f64,
    pub evolution_time_spent: f64,
    pub rounds: u32,
    pub accepted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    /// Reads `cos(2μt)`.
    Plus,
    /// Reads `sin(2μt)`.
    Minus,
}

/// Single-qubit observables `(Q+, Q-)` for a site whose letter is `letter`,
/// as `(Pauli, negated)`. In the two-level space spanned by the `±1`
/// eigenstates of `letter`, `Q+` acts as `X` and `Q-` as `Y`.
pub fn flip_observables(letter: Letter) -> Result<[(Letter, bool); 2]> {
    match letter {
        Letter::Z => Ok([(Letter::X, false), (Letter::Y, false)]),
        Letter::X => Ok([(Letter::Z, false), (Letter::Y, true)]),
        Letter::Y => Ok([(Letter::Z, false), (Letter::X, false)]),
        Letter::I => Err(Error::InvalidTarget("the identity has no flip observables".into())),
    }
}

fn check_site(p: &PauliString, jstar: usize) -> Result<Letter> {
    if jstar >= p.n() || p.letter(jstar) == Letter::I {
        return Err(Error::InvalidSite { site: jstar, pauli: p.to_string() });
    }
    Ok(p.letter(jstar))
}

/// `(O, negated)` for the requested signal of target `p` at site `jstar`.
pub fn pm_observable(p: &PauliString, jstar: usize, which: Which) -> Result<(PauliString, bool)> {
    let letter = check_site(p, jstar)?;
    let (l, neg) = flip_observables(letter)?[which as usize];
    Ok((PauliString::single(p.n(), jstar, l), neg))
}

/// `+1` eigenstates of each letter of `p`, `|0>` on identity sites, and the
/// equal superposition of both eigenvalues at `jstar`.
pub fn prepare_product_eigenstate(p: &PauliString, jstar: usize) -> Result<QuantumState> {
    if p.is_identity() {
        return Err(Error::InvalidTarget("the identity has no eigenbasis to prepare".into()));
    }
    check_site(p, jstar)?;
    let qubits: Vec<[Complex64; 2]> = (0..p.n())
        .map(|q| match p.letter(q) {
            Letter::I => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            l if q == jstar => {
                let (up, down) = (eigenstate(l, false), eigenstate(l, true));
                let s = std::f64::consts::FRAC_1_SQRT_2;
                [(up[0] + down[0]) * s, (up[1] + down[1]) * s]
            }
            l => eigenstate(l, false),
        })
        .collect();
    Ok(QuantumState::product(&qubits))
}

/// One Born-rule sample of `Q±` at `jstar`, as `±1`.
pub fn measure_pm_observable<R: Rng + ?Sized>(
    state: &QuantumState,
    p: &PauliString,
    jstar: usize,
    which: Which,
    rng: &mut R,
) -> Result<i8> {
    check_dim(p.n(), state.k())?;
    let (o, neg) = pm_observable(p, jstar, which)?;
    let e = if neg { -state.expectation(&o) } else { state.expectation(&o) };
    Ok(if rng.gen::<f64>() < (1.0 + e) / 2.0 { 1 } else { -1 })
}

/// Average of `Q P Q` over the commutant of `target`, as the factor multiplying `P`.
/// Enumerates all commuting strings exactly.
pub fn commutant_average_factor(target: &PauliString, p: &PauliString) -> Result<f64> {
    check_dim(target.n(), p.n())?;
    if target.is_identity() {
        return Err(Error::InvalidTarget("the identity has no proper commutant".into()));
    }
    let (mut size, mut sum) = (0i64, 0i64);
    for q in all_paulis(target.n()).filter(|q| crate::pauli::commutes(q, target).unwrap()) {
        size += 1;
        sum += if crate::pauli::commutes(&q, p).unwrap() { 1 } else { -1 };
    }
    Ok(sum as f64 / size as f64)
}

/// One draw of the reshaped evolution for time `t`, charged to `oracle`.
pub fn reshaped_evolve<R: Rng + ?Sized>(
    state: &mut QuantumState,
    oracle: &EvolutionOracle,
    target: &PauliString,
    hat_h: &SparseHamiltonian,
    t: f64,
    cfg: &ReshapeConfig,
    rng: &mut R,
) -> Result<()> {
    check_dim(oracle.n(), state.k())?;
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let (_, tau, r2) = cfg.schedule(oracle.mode(), t);
    let ch = oracle.reshaped(target, hat_h, tau, r2)?;
    ch.apply_sample(state, rng);
    ch.charge(1);
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

fn median_signal<R: Rng + ?Sized>(
    ch: &ReshapedChannel<'_>,
    psi: &QuantumState,
    observable: (PauliString, bool),
    (batches, batch_size): (u64, u64),
    spam: &SpamModel,
    rng: &mut R,
) -> Result<f64> {
    let means = (0..batches)
        .map(|_| {
            let plus = ch.sample_pm(psi, &observable.0, observable.1, spam, batch_size, rng)?;
            Ok(2.0 * plus as f64 / batch_size as f64 - 1.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(median(means))
}

/// Median of `batches` batch means of `Q±` after reshaped evolution for `t`.
#[allow(clippy::too_many_arguments)]
pub fn rfe_signal<R: Rng + ?Sized>(
    oracle: &EvolutionOracle,
    target: &PauliString,
    hat_h: &SparseHamiltonian,
    jstar: usize,
    t: f64,
    which: Which,
    sampling: (u64, u64),
    cfg: &ReshapeConfig,
    spam: &SpamModel,
    rng: &mut R,
) -> Result<f64> {
    if sampling.0 % 2 == 0 || sampling.1 == 0 {
        return Err(Error::Config("median needs an odd number of non-empty batches".into()));
    }
    let psi = prepare_product_eigenstate(target, jstar)?;
    let obs = pm_observable(target, jstar, which)?;
    let (_, tau, r2) = cfg.schedule(oracle.mode(), t);
    let ch = oracle.reshaped(target, hat_h, tau, r2)?;
    median_signal(&ch, &psi, obs, sampling, spam, rng)
}

/// Estimate the residual coefficient of `target` in `H - Ĥ` to accuracy `eps`.
pub fn robust_frequency_estimate<R: Rng + ?Sized>(
    oracle: &EvolutionOracle,
    target: &PauliString,
    hat_h: &SparseHamiltonian,
    eps: f64,
    cfg: &CoeffConfig,
    spam: &SpamModel,
    rng: &mut R,
) -> Result<CoefficientEstimate> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    cfg.rfe.validate()?;
    let jstar =
        target.first_site().ok_or_else(|| Error::InvalidTarget("the identity carries no coefficient".into()))?;
    let psi = prepare_product_eigenstate(target, jstar)?;
    let plus = pm_observable(target, jstar, Which::Plus)?;
    let minus = pm_observable(target, jstar, Which::Minus)?;
    let rounds = RfeConfig::rounds(eps);
    let sampling = cfg.rfe.sampling(rounds);
    let start = oracle.total_time();
    let mut state = RfeState::new(THETA_BOUND);
    for _ in 0..rounds {
        let (t, tau, r2) = cfg.reshape.schedule(oracle.mode(), state.next_time());
        let ch = oracle.reshaped(target, hat_h, tau, r2)?;
        let x = median_signal(&ch, &psi, plus, sampling, spam, rng)?;
        let y = median_signal(&ch, &psi, minus, sampling, spam, rng)?;
        state.update_at(t, Complex64::new(x, y));
    }
    let prior = hat_h.get(target);
    Ok(CoefficientEstimate {
        pauli: *target,
        mu_hat: prior + state.mu_hat(),
        stderr: state.half_width(),
        prior,
        eps_target: eps,
        evolution_time_spent: oracle.total_time() - start,
        rounds,
        accepted: true,
    })
}

/// Estimate every candidate concurrently and flag those below `mu_m / 2`.
/// Each candidate runs on its own oracle fork and random substream; ledger
/// shards are merged back in candidate order.
#[allow(clippy::too_many_arguments)]
pub fn learn_coefficients(
    oracle: &EvolutionOracle,
    candidates: &SupportSet,
    hat_h: &SparseHamiltonian,
    eps: f64,
    mu_m: f64,
    cfg: &CoeffConfig,
    spam: &SpamModel,
    stream: SeedStream,
) -> Result<Vec<CoefficientEstimate>> {
    check_dim(oracle.n(), hat_h.n())?;
    let list: Vec<PauliString> = candidates.candidates().copied().collect();
    let runs: Vec<(Result<CoefficientEstimate>, EvolutionOracle)> = list
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let fork = oracle.fork();
            let mut rng = stream.child(i as u64).rng();
            let est = robust_frequency_estimate(&fork, p, hat_h, eps, cfg, spam, &mut rng);
            (est, fork)
        })
        .collect();
    let mut out = Vec::with_capacity(runs.len());
    for (est, fork) in runs {
        oracle.absorb(fork);
        let mut est = est?;
        est.accepted = est.mu_hat.abs() >= mu_m / 2.0;
        out.push(est);
    }
    Ok(out)
}
