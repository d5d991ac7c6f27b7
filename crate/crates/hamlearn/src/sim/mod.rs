//! Statevector simulation and the simulated black box.

pub mod expm;
pub mod ledger;
pub mod oracle;
pub mod spam;
pub mod state;

pub use expm::{evolve_exact, unitary};
pub use ledger::{ChargeTag, LedgerEntry, Phase, PhaseTally, TimeLedger};
pub use oracle::{
    evolve_trotter_cancel, CancelledEvolution, EvolutionOracle, OracleMode, ReshapedChannel, DENSE_LIMIT,
};
pub use spam::{apply_spam, SpamModel, SpamObject};
pub use state::{
    bell_distribution, eigenstate, measure_bell_basis, prepare_bell_pairs, sample_basis, Cdf, Gate, QuantumState,
    HADAMARD, Y_TO_Z,
};
