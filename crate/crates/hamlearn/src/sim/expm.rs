//! Exact time evolution under sparse Pauli Hamiltonians.
//!
//! Statevectors are propagated with a truncated Taylor series on the sparse
//! Pauli action, split into substeps of unit `‖H‖₁ t`. Dense `2^n × 2^n`
//! unitaries (used for short Trotter steps of small systems) come from
//! Taylor scaling and squaring.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::{QuantumState, ZERO};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;

/// Relative size of the last Taylor term kept.
const TAYLOR_TOL: f64 = 1e-17;
const MAX_TAYLOR_ORDER: usize = 60;

/// `H` as a list of `(x, z, μ·i^{#Y})` acting on the low qubits of any register.
#[derive(Clone, Debug)]
pub(crate) struct PauliOperator {
    n: usize,
    terms: Vec<(usize, usize, Complex64)>,
    one_norm: f64,
}

impl PauliOperator {
    pub fn new(h: &SparseHamiltonian) -> Self {
        let terms = h.iter().map(|(p, c)| (p.x_bits() as usize, p.z_bits() as usize, p.y_phase() * c)).collect();
        PauliOperator { n: h.n(), terms, one_norm: h.one_norm() }
    }

    /// `dst += scale · H src`.
    fn apply_add(&self, src: &[Complex64], dst: &mut [Complex64], scale: Complex64) {
        for &(x, z, c) in &self.terms {
            let c = c * scale;
            for (i, a) in src.iter().enumerate() {
                let v = if (i & z).count_ones() & 1 == 1 { -c * a } else { c * a };
                dst[i ^ x] += v;
            }
        }
    }

    /// `v ← e^{-iHt} v` for `t` of either sign.
    pub fn expm_apply(&self, t: f64, v: &mut [Complex64]) {
        if self.terms.is_empty() || t == 0.0 {
            return;
        }
        let steps = (self.one_norm * t.abs()).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let mut term = vec![ZERO; v.len()];
        let mut next = vec![ZERO; v.len()];
        for _ in 0..steps {
            let v_norm = norm(v);
            term.copy_from_slice(v);
            for k in 1..=MAX_TAYLOR_ORDER {
                next.iter_mut().for_each(|a| *a = ZERO);
                self.apply_add(&term, &mut next, Complex64::new(0.0, -dt / k as f64));
                std::mem::swap(&mut term, &mut next);
                v.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
                if norm(&term) <= TAYLOR_TOL * v_norm {
                    break;
                }
            }
        }
    }

    pub fn dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for &(x, z, c) in &self.terms {
            for col in 0..dim {
                let v = if (col & z).count_ones() & 1 == 1 { -c } else { c };
                m[(col ^ x, col)] += v;
            }
        }
        m
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `state ← (e^{-iHt} ⊗ I) state`, with `H` on the low `H.n()` qubits.
pub fn evolve_exact(state: &mut QuantumState, h: &SparseHamiltonian, t: f64) -> Result<()> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if h.n() != state.k() && 2 * h.n() != state.k() {
        return Err(Error::Dimension { expected: h.n(), found: state.k() });
    }
    PauliOperator::new(h).expm_apply(t, state.amplitudes_mut());
    Ok(())
}

/// Dense `e^{-iHt}`, `t` of either sign.
pub fn unitary(h: &SparseHamiltonian, t: f64) -> DMatrix<Complex64> {
    expm_dense(&PauliOperator::new(h).dense(), t)
}

/// `e^{-iAt}` for a dense Hermitian `A` by Taylor scaling and squaring.
pub(crate) fn expm_dense(a: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let dim = a.nrows();
    let bound = a.column_iter().map(|c| c.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max) * t.abs();
    let squarings = if bound > 0.5 { (bound / 0.5).log2().ceil() as u32 } else { 0 };
    let b = a * Complex64::new(0.0, -t / f64::powi(2.0, squarings as i32));
    let mut result = DMatrix::<Complex64>::identity(dim, dim);
    let mut term = DMatrix::<Complex64>::identity(dim, dim);
    for k in 1..=MAX_TAYLOR_ORDER {
        term = &term * &b / Complex64::new(k as f64, 0.0);
        result += &term;
        if term.norm() <= TAYLOR_TOL * (dim as f64).sqrt() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `m^r` by binary powering.
pub(crate) fn matrix_power(m: &DMatrix<Complex64>, mut r: u64) -> DMatrix<Complex64> {
    let dim = m.nrows();
    let mut result = DMatrix::<Complex64>::identity(dim, dim);
    let mut base = m.clone();
    while r > 0 {
        if r & 1 == 1 {
            result = &result * &base;
        }
        r >>= 1;
        if r > 0 {
            base = &base * &base;
        }
    }
    result
}
