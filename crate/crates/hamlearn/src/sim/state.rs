//! Dense statevectors.
//!
//! Qubit `q` is bit `q` of the amplitude index. On a `2n`-qubit register the
//! system occupies qubits `0..n` and the ancilla of system qubit `i` is qubit
//! `n + i`, so a system operator acts on contiguous blocks of `2^n` amplitudes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliString};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);
const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A 2×2 matrix in row-major order.
pub type Gate = [[Complex64; 2]; 2];

pub const HADAMARD: Gate = [
    [Complex64::new(SQRT_HALF, 0.0), Complex64::new(SQRT_HALF, 0.0)],
    [Complex64::new(SQRT_HALF, 0.0), Complex64::new(-SQRT_HALF, 0.0)],
];

/// `H·S†`: maps the `y` eigenbasis onto the computational basis.
pub const Y_TO_Z: Gate = [
    [Complex64::new(SQRT_HALF, 0.0), Complex64::new(0.0, -SQRT_HALF)],
    [Complex64::new(SQRT_HALF, 0.0), Complex64::new(0.0, SQRT_HALF)],
];

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    k: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// `|0…0>` on `k` qubits.
    pub fn zero(k: usize) -> Self {
        Self::basis(k, 0)
    }

    pub fn basis(k: usize, index: usize) -> Self {
        assert!(k <= 30, "statevector of {k} qubits is out of reach");
        let mut amps = vec![ZERO; 1 << k];
        amps[index] = ONE;
        QuantumState { k, amps }
    }

    /// Takes ownership of amplitudes whose norm must already be 1.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::Format(format!("{} amplitudes is not a power of two", amps.len())));
        }
        let s = QuantumState { k: amps.len().trailing_zeros() as usize, amps };
        if (s.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Format(format!("state norm {} differs from 1", s.norm())));
        }
        Ok(s)
    }

    /// Tensor product of single-qubit states, qubit 0 first.
    pub fn product(qubits: &[[Complex64; 2]]) -> Self {
        let mut amps = vec![ONE];
        for q in qubits {
            let mut next = Vec::with_capacity(amps.len() * 2);
            next.extend(amps.iter().map(|a| a * q[0]));
            next.extend(amps.iter().map(|a| a * q[1]));
            amps = next;
        }
        QuantumState { k: qubits.len(), amps }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Apply `p` to qubits `offset .. offset + p.n()`.
    pub fn apply_pauli(&mut self, p: &PauliString, offset: usize) {
        assert!(offset + p.n() <= self.k, "Pauli string exceeds the register");
        let x = (p.x_bits() << offset) as usize;
        let z = (p.z_bits() << offset) as usize;
        let y_phase = p.y_phase();
        let phase = |c: usize| if (c & z).count_ones() & 1 == 1 { -y_phase } else { y_phase };
        if x == 0 {
            for (c, a) in self.amps.iter_mut().enumerate() {
                *a *= phase(c);
            }
            return;
        }
        for c in 0..self.amps.len() {
            let d = c ^ x;
            if c < d {
                let (ac, ad) = (self.amps[c], self.amps[d]);
                self.amps[d] = phase(c) * ac;
                self.amps[c] = phase(d) * ad;
            }
        }
    }

    pub fn apply_gate(&mut self, q: usize, g: &Gate) {
        assert!(q < self.k);
        let bit = 1usize << q;
        for c in 0..self.amps.len() {
            if c & bit == 0 {
                let (a0, a1) = (self.amps[c], self.amps[c | bit]);
                self.amps[c] = g[0][0] * a0 + g[0][1] * a1;
                self.amps[c | bit] = g[1][0] * a0 + g[1][1] * a1;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        assert!(control < self.k && target < self.k && control != target);
        let (cb, tb) = (1usize << control, 1usize << target);
        for c in 0..self.amps.len() {
            if c & cb != 0 && c & tb == 0 {
                self.amps.swap(c, c | tb);
            }
        }
    }

    /// Apply a `2^n × 2^n` matrix to the low `n` qubits.
    pub fn apply_system_matrix(&mut self, u: &DMatrix<Complex64>) {
        let dim = u.nrows();
        assert!(dim == u.ncols() && dim.is_power_of_two() && dim <= self.amps.len());
        let mut buf = vec![ZERO; dim];
        for block in self.amps.chunks_exact_mut(dim) {
            for (r, out) in buf.iter_mut().enumerate() {
                *out = ZERO;
                for (c, a) in block.iter().enumerate() {
                    *out += u[(r, c)] * a;
                }
            }
            block.copy_from_slice(&buf);
        }
    }

    /// `<ψ|P|ψ>` for `P` on the low `p.n()` qubits.
    pub fn expectation(&self, p: &PauliString) -> f64 {
        let mut other = self.clone();
        other.apply_pauli(p, 0);
        self.inner(&other).re
    }

    pub fn renormalize(&mut self) {
        let norm = self.norm();
        self.amps.iter_mut().for_each(|a| *a /= norm);
    }
}

/// Single-qubit eigenstate of `letter` (X, Y or Z) with eigenvalue `(-1)^minus`.
pub fn eigenstate(letter: Letter, minus: bool) -> [Complex64; 2] {
    let h = Complex64::new(SQRT_HALF, 0.0);
    let s = if minus { -1.0 } else { 1.0 };
    match letter {
        Letter::Z => {
            if minus {
                [ZERO, ONE]
            } else {
                [ONE, ZERO]
            }
        }
        Letter::X => [h, h * s],
        Letter::Y => [h, I * h * s],
        Letter::I => panic!("the identity has no preferred eigenbasis"),
    }
}

/// Inverse-CDF sampler over a fixed discrete distribution.
#[derive(Clone, Debug)]
pub struct Cdf {
    cumulative: Vec<f64>,
}

impl Cdf {
    pub fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p.max(0.0);
                acc
            })
            .collect();
        Cdf { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("empty distribution");
        let u = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

pub fn sample_basis<R: Rng + ?Sized>(state: &QuantumState, rng: &mut R) -> usize {
    Cdf::new(&state.probabilities()).sample(rng)
}

/// `|Φ+>^{⊗n}` on `2n` qubits; pair `i` is (system `i`, ancilla `n + i`).
pub fn prepare_bell_pairs(n: usize) -> QuantumState {
    let mut s = QuantumState { k: 2 * n, amps: vec![ZERO; 1 << (2 * n)] };
    let amp = Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
    for c in 0..1usize << n {
        s.amps[c | c << n] = amp;
    }
    s
}

/// Born distribution over Bell outcomes. Entry `x | z << n` is the probability
/// of the outcome decoding to the Pauli with masks `(x, z)`.
pub fn bell_distribution(state: &QuantumState) -> Result<Vec<f64>> {
    if state.k % 2 == 1 {
        return Err(Error::Format(format!("Bell measurement needs an even register, got {} qubits", state.k)));
    }
    let n = state.k / 2;
    let mut s = state.clone();
    for q in 0..n {
        // Parity onto the system qubit, phase onto the ancilla.
        s.apply_cnot(n + q, q);
        s.apply_gate(n + q, &HADAMARD);
    }
    Ok(s.probabilities())
}

/// One destructive Bell-basis measurement, returned as `(system, ancilla)` bit pairs.
pub fn measure_bell_basis<R: Rng + ?Sized>(state: &QuantumState, rng: &mut R) -> Result<Vec<u8>> {
    let probs = bell_distribution(state)?;
    let n = state.k / 2;
    Ok(outcome_bits(Cdf::new(&probs).sample(rng), n))
}

pub(crate) fn outcome_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).flat_map(|q| [(index >> q & 1) as u8, (index >> (n + q) & 1) as u8]).collect()
}
