//! Black-box access to `e^{-iHt}` for a hidden Hamiltonian.
//!
//! Learners only ever hand states to the oracle and get states (or sampled
//! outcomes) back; the hidden coefficients are never exposed. Every forward
//! query is charged to the oracle's [`TimeLedger`].
//!
//! Two composite experiments have exact fast paths, both used only when the
//! system has at most [`DENSE_LIMIT`] qubits:
//!
//! * [`CancelledEvolution`]: the Trotter-cancelled product is deterministic, so
//!   its `r` steps collapse to one dense matrix power.
//! * [`ReshapedChannel`]: a shot with fresh random conjugations per step samples
//!   from the commutant-averaged channel. That channel is block diagonal in the
//!   Pauli-transfer basis with 2×2 blocks `{O, O·P_s}`, so the expectation of a
//!   Pauli observable after `r2` steps is an entry of a 2×2 matrix power.
//!
//! Above the limit both fall back to literal step-by-step evolution.

use std::sync::Mutex;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::Rng;

use super::expm::{expm_dense, matrix_power, PauliOperator};
use super::ledger::{ChargeTag, LedgerEntry, TimeLedger};
use super::spam::SpamModel;
use super::state::{QuantumState, ZERO};
use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::pauli::{CommutantSampler, PauliString};

/// Largest system for which dense `2^n × 2^n` step unitaries are formed.
pub const DENSE_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OracleMode {
    Continuous,
    /// Only integer powers of `e^{-iHθ}` are available.
    FixedStep {
        theta: f64,
    },
}

pub struct EvolutionOracle {
    hidden: SparseHamiltonian,
    op: PauliOperator,
    mode: OracleMode,
    ledger: Mutex<TimeLedger>,
    tag: Mutex<ChargeTag>,
}

impl std::fmt::Debug for EvolutionOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Deliberately omits the hidden Hamiltonian.
        f.debug_struct("EvolutionOracle").field("n", &self.n()).field("mode", &self.mode).finish_non_exhaustive()
    }
}

impl EvolutionOracle {
    pub fn new(hidden: SparseHamiltonian) -> Self {
        Self::with_mode(hidden, OracleMode::Continuous)
    }

    pub fn fixed_step(hidden: SparseHamiltonian, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Config(format!("fixed step must be positive, got {theta}")));
        }
        Ok(Self::with_mode(hidden, OracleMode::FixedStep { theta }))
    }

    fn with_mode(hidden: SparseHamiltonian, mode: OracleMode) -> Self {
        let op = PauliOperator::new(&hidden);
        EvolutionOracle {
            hidden,
            op,
            mode,
            ledger: Mutex::new(TimeLedger::new()),
            tag: Mutex::new(ChargeTag::default()),
        }
    }

    pub fn n(&self) -> usize {
        self.hidden.n()
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    /// Label subsequent charges (set by the driver per phase and level).
    pub fn set_tag(&self, tag: ChargeTag) {
        *self.tag.lock().unwrap() = tag;
    }

    pub fn tag(&self) -> ChargeTag {
        *self.tag.lock().unwrap()
    }

    /// Snapshot of the ledger.
    pub fn ledger(&self) -> TimeLedger {
        self.ledger.lock().unwrap().clone()
    }

    pub fn total_time(&self) -> f64 {
        self.ledger.lock().unwrap().total()
    }

    /// Same black box with an empty ledger shard, for concurrent workers.
    pub fn fork(&self) -> EvolutionOracle {
        let o = Self::with_mode(self.hidden.clone(), self.mode);
        o.set_tag(self.tag());
        o
    }

    /// Append a fork's ledger entries to this ledger.
    pub fn absorb(&self, fork: EvolutionOracle) {
        let shard = fork.ledger.into_inner().unwrap();
        self.ledger.lock().unwrap().merge(&shard);
    }

    /// Reject durations the black box cannot realize.
    pub fn check_step(&self, t: f64) -> Result<()> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        if let OracleMode::FixedStep { theta } = self.mode {
            let k = (t / theta).round();
            if (t - k * theta).abs() > f64::max(1e-12, 4.0 * f64::EPSILON * t) {
                return Err(Error::Granularity { t, theta });
            }
        }
        Ok(())
    }

    pub(crate) fn charge(&self, step: f64, queries_per_experiment: u64, experiments: u64) {
        let tag = self.tag();
        self.ledger.lock().unwrap().record(LedgerEntry {
            phase: tag.phase,
            level: tag.level,
            step,
            queries_per_experiment,
            experiments,
        });
    }

    fn check_register(&self, state: &QuantumState) -> Result<()> {
        let n = self.n();
        if state.k() != n && state.k() != 2 * n {
            return Err(Error::Dimension { expected: n, found: state.k() });
        }
        Ok(())
    }

    /// Uncharged `e^{-iHt}` on the system qubits.
    pub(crate) fn apply_hidden(&self, state: &mut QuantumState, t: f64) {
        self.op.expm_apply(t, state.amplitudes_mut());
    }

    /// One forward query of duration `t` on the system qubits of `state`.
    pub fn evolve(&self, state: &mut QuantumState, t: f64) -> Result<()> {
        self.check_register(state)?;
        self.check_step(t)?;
        self.apply_hidden(state, t);
        self.charge(t, 1, 1);
        Ok(())
    }

    /// Prepare the experiment `(e^{-iH t/r} e^{iĤ t/r})^r`.
    pub fn cancelled(&self, hat_h: &SparseHamiltonian, t: f64, r: u64) -> Result<CancelledEvolution<'_>> {
        check_dim(self.n(), hat_h.n())?;
        if r == 0 {
            return Err(Error::Config("Trotter step count must be at least 1".into()));
        }
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let step = t / r as f64;
        self.check_step(step)?;
        let hat = PauliOperator::new(hat_h);
        let kind = if self.n() <= DENSE_LIMIT {
            let v = expm_dense(&self.op.dense(), step) * expm_dense(&hat.dense(), -step);
            CancelKind::Dense(matrix_power(&v, r))
        } else {
            CancelKind::Stepwise(hat)
        };
        Ok(CancelledEvolution { oracle: self, step, r, kind })
    }

    /// Prepare the reshaped evolution isolating `target`, with `r2` steps of `tau`.
    /// Terms of `hat_h` are cancelled inside every step.
    pub fn reshaped(
        &self,
        target: &PauliString,
        hat_h: &SparseHamiltonian,
        tau: f64,
        r2: u64,
    ) -> Result<ReshapedChannel<'_>> {
        check_dim(self.n(), target.n())?;
        check_dim(self.n(), hat_h.n())?;
        let sampler = CommutantSampler::new(*target)?;
        if r2 == 0 {
            return Err(Error::Config("reshaping step count must be at least 1".into()));
        }
        self.check_step(tau)?;
        let hat = PauliOperator::new(hat_h);
        let step =
            (self.n() <= DENSE_LIMIT).then(|| expm_dense(&self.op.dense(), tau) * expm_dense(&hat.dense(), -tau));
        Ok(ReshapedChannel { oracle: self, sampler, tau, r2, step, hat })
    }
}

enum CancelKind {
    /// `V^r` precomputed.
    Dense(DMatrix<Complex64>),
    /// Local simulation of `Ĥ` between literal queries.
    Stepwise(PauliOperator),
}

/// A Trotter-cancelled evolution bound to its oracle.
pub struct CancelledEvolution<'a> {
    oracle: &'a EvolutionOracle,
    step: f64,
    r: u64,
    kind: CancelKind,
}

impl CancelledEvolution<'_> {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    /// Evolution time charged per experiment.
    pub fn time_per_experiment(&self) -> f64 {
        self.step * self.r as f64
    }

    /// Apply without charging; callers charge whole batches via [`Self::charge`].
    pub(crate) fn apply(&self, state: &mut QuantumState) {
        match &self.kind {
            CancelKind::Dense(m) => state.apply_system_matrix(m),
            CancelKind::Stepwise(hat) => {
                for _ in 0..self.r {
                    hat.expm_apply(-self.step, state.amplitudes_mut());
                    self.oracle.apply_hidden(state, self.step);
                }
            }
        }
    }

    pub(crate) fn charge(&self, experiments: u64) {
        self.oracle.charge(self.step, self.r, experiments);
    }

    /// One charged experiment.
    pub fn run(&self, state: &mut QuantumState) -> Result<()> {
        self.oracle.check_register(state)?;
        self.apply(state);
        self.charge(1);
        Ok(())
    }
}

/// Apply `(e^{-iH t/r} · e^{iĤ t/r})^r` through the oracle.
pub fn evolve_trotter_cancel(
    state: &mut QuantumState,
    oracle: &EvolutionOracle,
    hat_h: &SparseHamiltonian,
    t: f64,
    r: u64,
) -> Result<()> {
    oracle.cancelled(hat_h, t, r)?.run(state)
}

/// The randomly conjugated evolution `Q_r V Q_r ⋯ Q_1 V Q_1` bound to its oracle.
pub struct ReshapedChannel<'a> {
    oracle: &'a EvolutionOracle,
    sampler: CommutantSampler,
    tau: f64,
    r2: u64,
    step: Option<DMatrix<Complex64>>,
    hat: PauliOperator,
}

impl ReshapedChannel<'_> {
    pub fn target(&self) -> &PauliString {
        self.sampler.target()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn r2(&self) -> u64 {
        self.r2
    }

    /// One draw of the random step sequence, uncharged.
    pub(crate) fn apply_sample<R: Rng + ?Sized>(&self, state: &mut QuantumState, rng: &mut R) {
        for _ in 0..self.r2 {
            let q = self.sampler.sample(rng);
            state.apply_pauli(&q, 0);
            match &self.step {
                Some(v) => state.apply_system_matrix(v),
                None => {
                    self.hat.expm_apply(-self.tau, state.amplitudes_mut());
                    self.oracle.apply_hidden(state, self.tau);
                }
            }
            state.apply_pauli(&q, 0);
        }
    }

    pub(crate) fn charge(&self, experiments: u64) {
        self.oracle.charge(self.tau, self.r2, experiments);
    }

    /// Exact `<O>` after the averaged channel, with per-qubit depolarizing
    /// preparation noise of rate `prep_rate` on `state`. Needs the dense path.
    pub fn expectation(&self, state: &QuantumState, observable: &PauliString, prep_rate: f64) -> Result<f64> {
        let n = self.oracle.n();
        check_dim(n, state.k())?;
        check_dim(n, observable.n())?;
        let v =
            self.step.as_ref().ok_or(Error::TooLarge { what: "averaged reshaping channel", n, limit: DENSE_LIMIT })?;
        let s = self.target();
        let partner = PauliString::from_bits(n, observable.x_bits() ^ s.x_bits(), observable.z_bits() ^ s.z_bits())?;
        let basis = [*observable, partner];
        let mut block = Matrix2::<f64>::zeros();
        for (j, b) in basis.iter().enumerate() {
            let w = v * pauli_matrix(b) * v.adjoint();
            for (i, a) in basis.iter().enumerate() {
                block[(i, j)] = trace_with_pauli(a, &w) / (1usize << n) as f64;
            }
        }
        let power = matrix_power_2x2(&block, self.r2);
        let bloch = |p: &PauliString| state.expectation(p) * (1.0 - prep_rate).powi(p.weight() as i32);
        Ok(power[(0, 0)] * bloch(observable) + power[(0, 1)] * bloch(&partner))
    }

    /// Run `shots` charged experiments measuring `±O` (sign `-` when `negate`),
    /// read out from one bit; returns how many gave `+1`.
    pub fn sample_pm<R: Rng + ?Sized>(
        &self,
        state: &QuantumState,
        observable: &PauliString,
        negate: bool,
        spam: &SpamModel,
        shots: u64,
        rng: &mut R,
    ) -> Result<u64> {
        let n = self.oracle.n();
        check_dim(n, state.k())?;
        let flip = spam.meas_rate(n);
        let sign = if negate { -1.0 } else { 1.0 };
        let mut plus = 0;
        if self.step.is_some() {
            let e = sign * (1.0 - 2.0 * flip) * self.expectation(state, observable, spam.prep_rate(n))?;
            let p_plus = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
            plus = (0..shots).filter(|_| rng.gen::<f64>() < p_plus).count() as u64;
        } else {
            for _ in 0..shots {
                let mut s = state.clone();
                spam.apply_prep(&mut s, rng);
                self.apply_sample(&mut s, rng);
                let e = sign * s.expectation(observable);
                let mut up = rng.gen::<f64>() < (1.0 + e) / 2.0;
                if rng.gen::<f64>() < flip {
                    up = !up;
                }
                plus += up as u64;
            }
        }
        self.charge(shots);
        Ok(plus)
    }
}

fn pauli_matrix(p: &PauliString) -> DMatrix<Complex64> {
    let dim = 1usize << p.n();
    let y = p.y_phase();
    let x = p.x_bits() as usize;
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for c in 0..dim {
        m[(c ^ x, c)] = p.column_phase(c, y);
    }
    m
}

/// `Re Tr(P W)` without forming `P`.
fn trace_with_pauli(p: &PauliString, w: &DMatrix<Complex64>) -> f64 {
    let y = p.y_phase();
    let x = p.x_bits() as usize;
    // (P W)_{cc} = Σ_d P_{c,d} W_{d,c}, and P_{c,d} is nonzero only for d = c ^ x.
    (0..w.nrows()).map(|c| (p.column_phase(c ^ x, y) * w[(c ^ x, c)]).re).sum()
}

fn matrix_power_2x2(m: &Matrix2<f64>, mut r: u64) -> Matrix2<f64> {
    let mut result = Matrix2::identity();
    let mut base = *m;
    while r > 0 {
        if r & 1 == 1 {
            result *= base;
        }
        r >>= 1;
        if r > 0 {
            base = base * base;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::expm::{evolve_exact, unitary};
    use crate::sim::ledger::Phase;
    use crate::sim::state::{eigenstate, prepare_bell_pairs};
    use crate::Letter;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn h(terms: &[(&str, f64)]) -> SparseHamiltonian {
        SparseHamiltonian::parse(terms).unwrap()
    }

    fn trace_distance(a: &QuantumState, b: &QuantumState) -> f64 {
        (1.0 - a.inner(b).norm_sqr()).max(0.0).sqrt()
    }

    #[test]
    fn perfect_cancellation_is_identity() {
        let hid = h(&[("XY", 0.7), ("ZI", -0.4)]);
        let oracle = EvolutionOracle::new(hid.clone());
        let mut s = prepare_bell_pairs(2);
        let before = s.clone();
        evolve_trotter_cancel(&mut s, &oracle, &hid, 3.0, 10).unwrap();
        assert!(trace_distance(&s, &before) < 1e-7);
        assert!((oracle.total_time() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_cancellation_equals_exact_evolution() {
        let hid = h(&[("XX", 0.9), ("ZI", 0.4)]);
        let oracle = EvolutionOracle::new(hid.clone());
        let mut a = prepare_bell_pairs(2);
        let mut b = a.clone();
        evolve_trotter_cancel(&mut a, &oracle, &SparseHamiltonian::new(2), 0.5, 7).unwrap();
        evolve_exact(&mut b, &hid, 0.5).unwrap();
        assert!(trace_distance(&a, &b) < 1e-10);
    }

    #[test]
    fn trotter_error_shrinks_inversely_with_steps() {
        let hid = h(&[("XX", 0.9), ("ZI", 0.4)]);
        let hat = h(&[("XX", 0.9)]);
        let residual = h(&[("ZI", 0.4)]);
        let oracle = EvolutionOracle::new(hid);
        let mut target = prepare_bell_pairs(2);
        evolve_exact(&mut target, &residual, 0.5).unwrap();
        let dist: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&r| {
                let mut s = prepare_bell_pairs(2);
                evolve_trotter_cancel(&mut s, &oracle, &hat, 0.5, r).unwrap();
                trace_distance(&s, &target)
            })
            .collect();
        assert!(dist[0] < 0.02, "{dist:?}");
        for w in dist.windows(2) {
            assert!((w[0] / w[1] - 2.0).abs() < 0.1, "{dist:?}");
        }
    }

    #[test]
    fn ledger_is_monotone_and_exact() {
        let oracle = EvolutionOracle::new(h(&[("X", 0.3)]));
        let mut s = QuantumState::zero(1);
        let mut prev = 0.0;
        for t in [0.1, 0.0, 2.5, 0.125] {
            oracle.evolve(&mut s, t).unwrap();
            assert_eq!(oracle.total_time(), prev + t);
            prev = oracle.total_time();
        }
        assert!(oracle.evolve(&mut s, -0.1).is_err());
        assert_eq!(oracle.total_time(), prev);
    }

    #[test]
    fn forks_merge_in_order() {
        let oracle = EvolutionOracle::new(h(&[("X", 0.3)]));
        oracle.set_tag(ChargeTag { phase: Phase::Coefficient, level: Some(2) });
        let fork = oracle.fork();
        fork.evolve(&mut QuantumState::zero(1), 0.5).unwrap();
        assert_eq!(oracle.total_time(), 0.0);
        oracle.absorb(fork);
        assert_eq!(oracle.total_time(), 0.5);
        assert_eq!(oracle.ledger().per_phase()["coefficient/j=2"].experiments, 1);
    }

    #[test]
    fn fixed_step_granularity() {
        let oracle = EvolutionOracle::fixed_step(h(&[("ZXZ", 1.0)]), 0.1).unwrap();
        let mut s = QuantumState::zero(3);
        oracle.evolve(&mut s, 0.3).unwrap();
        oracle.evolve(&mut s, 7.0).unwrap();
        assert!(matches!(oracle.evolve(&mut s, 0.15), Err(Error::Granularity { .. })));
        assert!(oracle.cancelled(&SparseHamiltonian::new(3), 1.0, 3).is_err());
        assert!(oracle.cancelled(&SparseHamiltonian::new(3), 1.0, 5).is_ok());
    }

    #[test]
    fn single_term_reshaping_matches_exact_signal() {
        // With only P_s present every conjugation leaves the dynamics untouched.
        let oracle = EvolutionOracle::new(h(&[("IZZX", 0.3)]));
        let target: PauliString = "IZZX".parse().unwrap();
        let psi = QuantumState::product(&[
            eigenstate(Letter::Z, false),
            eigenstate(Letter::X, false),
            eigenstate(Letter::Z, false),
            eigenstate(Letter::X, false),
        ]);
        let ch = oracle.reshaped(&target, &SparseHamiltonian::new(4), 0.01, 100).unwrap();
        let obs: PauliString = "IXII".parse().unwrap();
        let e = ch.expectation(&psi, &obs, 0.0).unwrap();
        assert!((e - 0.6f64.cos()).abs() < 1e-10, "{e}");
    }

    #[test]
    fn averaged_channel_matches_literal_sampling() {
        let hid = h(&[("XX", 0.3), ("ZI", 0.4), ("YZ", -0.5)]);
        let oracle = EvolutionOracle::new(hid);
        let target: PauliString = "XX".parse().unwrap();
        let ch = oracle.reshaped(&target, &SparseHamiltonian::new(2), 0.1, 8).unwrap();
        let psi = QuantumState::product(&[eigenstate(Letter::Z, false), eigenstate(Letter::Y, false)]);
        let obs: PauliString = "ZI".parse().unwrap();
        let exact = ch.expectation(&psi, &obs, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 40_000;
        let mean = (0..trials)
            .map(|_| {
                let mut s = psi.clone();
                ch.apply_sample(&mut s, &mut rng);
                s.expectation(&obs)
            })
            .sum::<f64>()
            / trials as f64;
        assert!((mean - exact).abs() < 0.01, "{mean} vs {exact}");
    }

    #[test]
    fn dense_step_unitary_is_consistent() {
        let hid = h(&[("XY", 0.2)]);
        let u = unitary(&hid, 0.3);
        let psi = QuantumState::zero(2);
        let mut a = psi.clone();
        a.apply_system_matrix(&u);
        let mut b = psi;
        evolve_exact(&mut b, &hid, 0.3).unwrap();
        assert!(trace_distance(&a, &b) < 1e-10);
    }
}
