//! Experiment harness for `hamlearn`: model builders, config files, runners and report files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod models;
pub mod run;

pub use config::{ExperimentConfig, Model, ModelSpec, Overrides};
pub use error::HarnessError;
pub use models::{build_disordered_xy, build_rydberg_chain, build_zxz_hamiltonian, RydbergParams, XyCrosstalk};
pub use run::{learn, oracle_audit, run_experiment, scaling_sweep, ExperimentReport};

use hamlearn::sim::EvolutionOracle;

/// Fixed-step black box exposing only `e^{-iθ H_eff}` and its powers.
pub fn build_zxz_blackbox(n: usize, theta: f64, perturbation: f64, seed: u64) -> hamlearn::Result<EvolutionOracle> {
    EvolutionOracle::fixed_step(build_zxz_hamiltonian(n, perturbation, seed)?, theta)
}
