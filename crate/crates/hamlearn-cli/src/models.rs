//! Physical model builders.
//!
//! All builders return Hamiltonians in their physical units; [`normalize`]
//! rescales to the learner's `|μ| <= 1` convention and returns the factor.

use std::f64::consts::TAU;

use hamlearn::{Error, PauliString, Result, SparseHamiltonian};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn default_atoms() -> usize {
    5
}
fn default_spacing() -> f64 {
    10.0
}
fn default_c6() -> f64 {
    862_690.0
}
fn default_omega() -> f64 {
    1.5
}
fn default_detuning() -> f64 {
    -4.0
}

/// A 1D chain of Rydberg atoms with uniform spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RydbergParams {
    #[serde(default = "default_atoms")]
    pub atom_count: usize,
    /// Spacing in μm.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Van der Waals constant in MHz·μm⁶; multiplied by 2π internally.
    #[serde(default = "default_c6")]
    pub c6: f64,
    /// Rabi frequency in rad/μs.
    #[serde(default = "default_omega")]
    pub omega: f64,
    /// Detuning in rad/μs.
    #[serde(default = "default_detuning")]
    pub detuning: f64,
}

impl Default for RydbergParams {
    fn default() -> Self {
        RydbergParams {
            atom_count: default_atoms(),
            spacing: default_spacing(),
            c6: default_c6(),
            omega: default_omega(),
            detuning: default_detuning(),
        }
    }
}

impl RydbergParams {
    pub fn validate(&self) -> Result<()> {
        if self.atom_count == 0 || self.atom_count > 64 {
            return Err(Error::Config(format!("atom_count must lie in 1..=64, got {}", self.atom_count)));
        }
        if !(self.spacing > 0.0) || !(self.c6 > 0.0) {
            return Err(Error::Config("spacing and C6 must be positive".into()));
        }
        Ok(())
    }

    /// `V_jl = 2π C6 / |x_j - x_l|⁶` in rad/μs.
    pub fn interaction(&self, j: usize, l: usize) -> f64 {
        let r = self.spacing * j.abs_diff(l) as f64;
        TAU * self.c6 / r.powi(6)
    }
}

fn single(n: usize, sites: &[(usize, char)]) -> PauliString {
    let mut s = vec!['I'; n];
    for &(q, c) in sites {
        s[q] = c;
    }
    s.into_iter().collect::<String>().parse().expect("valid Pauli letters")
}

/// Pauli expansion of the static Rydberg Hamiltonian: `X` with `Ω/2`, `Z_j`
/// with `-Δ/2 - Σ_l V_jl/4`, `Z_j Z_l` with `V_jl/4`; the identity is dropped.
pub fn build_rydberg_chain(p: &RydbergParams) -> Result<SparseHamiltonian> {
    p.validate()?;
    let n = p.atom_count;
    let mut h = SparseHamiltonian::new(n);
    for j in 0..n {
        h.add(single(n, &[(j, 'X')]), p.omega / 2.0)?;
        let field: f64 = (0..n).filter(|&l| l != j).map(|l| p.interaction(j, l) / 4.0).sum();
        h.add(single(n, &[(j, 'Z')]), -p.detuning / 2.0 - field)?;
        for l in j + 1..n {
            h.add(single(n, &[(j, 'Z'), (l, 'Z')]), p.interaction(j, l) / 4.0)?;
        }
    }
    Ok(h)
}

/// Extra couplings beyond the nearest-neighbor XY chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XyCrosstalk {
    /// Sites coupled by an extra `Z_i Z_j` term.
    #[serde(default)]
    pub pairs: Vec<(usize, usize)>,
    /// Add one `X⊗…⊗X` term on every qubit.
    #[serde(default)]
    pub all_to_all: bool,
}

impl XyCrosstalk {
    pub fn off() -> Self {
        XyCrosstalk { pairs: Vec::new(), all_to_all: false }
    }

    /// One long-range pair between the first and the second-to-last site plus the global term.
    pub fn default_for(n: usize) -> Self {
        XyCrosstalk { pairs: vec![(0, n - 2)], all_to_all: true }
    }
}

fn random_coefficient(rng: &mut ChaCha8Rng) -> f64 {
    let mag = rng.gen_range(0.55..=1.0);
    if rng.gen() {
        mag
    } else {
        -mag
    }
}

/// Disordered XY chain: `J_i^x X_i X_{i+1} + J_i^y Y_i Y_{i+1}` with seeded
/// magnitudes in `[0.55, 1]` and random signs, plus the configured crosstalk.
pub fn build_disordered_xy(n: usize, seed: u64, crosstalk: &XyCrosstalk) -> Result<SparseHamiltonian> {
    if !(3..=64).contains(&n) {
        return Err(Error::Config(format!("the XY chain needs 3..=64 sites, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = SparseHamiltonian::new(n);
    for i in 0..n - 1 {
        h.add(single(n, &[(i, 'X'), (i + 1, 'X')]), random_coefficient(&mut rng))?;
        h.add(single(n, &[(i, 'Y'), (i + 1, 'Y')]), random_coefficient(&mut rng))?;
    }
    for &(a, b) in &crosstalk.pairs {
        if a >= n || b >= n || a.abs_diff(b) < 2 {
            return Err(Error::Config(format!("crosstalk pair ({a}, {b}) must join two non-adjacent sites of {n}")));
        }
        h.set(single(n, &[(a, 'Z'), (b, 'Z')]), random_coefficient(&mut rng))?;
    }
    if crosstalk.all_to_all {
        let all: Vec<(usize, char)> = (0..n).map(|q| (q, 'X')).collect();
        h.set(single(n, &all), random_coefficient(&mut rng))?;
    }
    Ok(h)
}

/// Effective Hamiltonian `Σ Z_i X_{i+1} Z_{i+2}` plus seeded single-site `X`
/// and `Z` perturbations with magnitudes up to `perturbation`.
pub fn build_zxz_hamiltonian(n: usize, perturbation: f64, seed: u64) -> Result<SparseHamiltonian> {
    if !(3..=64).contains(&n) {
        return Err(Error::Config(format!("the ZXZ model needs 3..=64 sites, got {n}")));
    }
    if !(perturbation >= 0.0) {
        return Err(Error::Config(format!("perturbation must be non-negative, got {perturbation}")));
    }
    let mut h = SparseHamiltonian::new(n);
    for i in 0..n - 2 {
        h.add(single(n, &[(i, 'Z'), (i + 1, 'X'), (i + 2, 'Z')]), 1.0)?;
    }
    if perturbation > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for q in 0..n {
            for c in ['X', 'Z'] {
                let mag = perturbation * rng.gen_range(0.5..=1.0);
                h.add(single(n, &[(q, c)]), if rng.gen() { mag } else { -mag })?;
            }
        }
    }
    Ok(h)
}

/// `|μ| <= 1` rescaling; returns the normalized Hamiltonian and the factor
/// that converts learner coefficients back to physical units.
pub fn normalize(h: &SparseHamiltonian) -> (SparseHamiltonian, f64) {
    h.normalized()
}
