//! Ansatz-free Hamiltonian learning with Heisenberg-limited total evolution time.
//!
//! The crate simulates black-box access to an unknown sparse Pauli Hamiltonian
//! `H = Σ_s μ_s P_s` and implements the learner that recovers it:
//!
//! * [`pauli`] and [`hamiltonian`]: symplectic Pauli algebra and sparse Hamiltonians.
//! * [`sim`]: dense statevector simulation, the evolution oracle and its time ledger.
//! * [`structure`]: support discovery by Bell sampling with Trotterized cancellation.
//! * [`coeff`]: Hamiltonian reshaping and robust frequency estimation.
//! * [`twirl`]: the ancilla-free route through Pauli twirling and population recovery.
//! * [`hierarchy`]: the level-by-level driver and its time accounting.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeff;
pub mod error;
pub mod hamiltonian;
pub mod hierarchy;
pub mod pauli;
pub mod rng;
pub mod sim;
pub mod structure;
pub mod twirl;

pub use error::{Error, Result};
pub use hamiltonian::SparseHamiltonian;
pub use pauli::{Letter, PauliPhase, PauliString};
