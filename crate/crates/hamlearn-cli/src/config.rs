//! Experiment configuration files.
//!
//! A config is a TOML document with a `[model]` table naming a builder, a
//! `[learner]` table with hierarchy settings in the model's physical units,
//! and optional `[output]` and `[sweep]` tables. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use hamlearn::hierarchy::{HierarchyConfig, LevelOverride, Route};
use hamlearn::sim::{EvolutionOracle, SpamModel};
use hamlearn::{PauliString, SparseHamiltonian};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::models::{
    build_disordered_xy, build_rydberg_chain, build_zxz_hamiltonian, normalize, RydbergParams, XyCrosstalk,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XySpec {
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to one long-range pair plus the all-qubit term.
    #[serde(default)]
    pub crosstalk: Option<XyCrosstalk>,
}

fn default_theta() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZxzSpec {
    pub n: usize,
    /// Duration of the one available unitary.
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub pauli: PauliString,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSpec {
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case")]
pub enum ModelSpec {
    Rydberg(RydbergParams),
    DisorderedXy(XySpec),
    Zxz(ZxzSpec),
    Explicit(ExplicitSpec),
}

/// A built model: the physical Hamiltonian and the learner's normalized view.
#[derive(Clone, Debug)]
pub struct Model {
    pub physical: SparseHamiltonian,
    pub normalized: SparseHamiltonian,
    /// Physical coefficient = learner coefficient × scale.
    pub scale: f64,
    /// Fixed unitary duration in physical time, if only one step is available.
    pub theta: Option<f64>,
}

impl Model {
    pub fn oracle(&self) -> Result<EvolutionOracle, HarnessError> {
        match self.theta {
            None => Ok(EvolutionOracle::new(self.normalized.clone())),
            // e^{-iθH} = e^{-i(θ s)(H/s)}
            Some(theta) => Ok(EvolutionOracle::fixed_step(self.normalized.clone(), theta * self.scale)?),
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model, HarnessError> {
        let (physical, theta) = match self {
            ModelSpec::Rydberg(p) => (build_rydberg_chain(p).map_err(HarnessError::schema)?, None),
            ModelSpec::DisorderedXy(s) => {
                let ct = s.crosstalk.clone().unwrap_or_else(|| XyCrosstalk::default_for(s.n.max(3)));
                (build_disordered_xy(s.n, s.seed, &ct).map_err(HarnessError::schema)?, None)
            }
            ModelSpec::Zxz(s) => {
                if !(s.theta > 0.0 && s.theta.is_finite()) {
                    return Err(HarnessError::Schema(format!("theta must be positive, got {}", s.theta)));
                }
                (build_zxz_hamiltonian(s.n, s.perturbation, s.seed).map_err(HarnessError::schema)?, Some(s.theta))
            }
            ModelSpec::Explicit(s) => {
                let n = s
                    .terms
                    .first()
                    .map(|t| t.pauli.n())
                    .ok_or_else(|| HarnessError::Schema("an explicit model needs at least one term".into()))?;
                let mut h = SparseHamiltonian::new(n);
                for t in &s.terms {
                    if h.contains(&t.pauli) {
                        return Err(HarnessError::Schema(format!("duplicate term {}", t.pauli)));
                    }
                    h.add(t.pauli, t.coeff).map_err(HarnessError::schema)?;
                }
                (h, None)
            }
        };
        let (normalized, scale) = normalize(&physical);
        Ok(Model { physical, normalized, scale, theta })
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_report() -> String {
    "report.json".into()
}
fn default_table() -> String {
    "coefficients.csv".into()
}
fn default_sweep_file() -> String {
    "sweep.csv".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_table")]
    pub table: String,
    #[serde(default = "default_sweep_file")]
    pub sweep: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_out_dir(),
            report: default_report(),
            table: default_table(),
            sweep: default_sweep_file(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// One robust frequency estimation run on a single term per accuracy.
    #[default]
    SingleTerm,
    /// The full hierarchy per accuracy.
    Hierarchy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Accuracies in physical units.
    pub eps: Vec<f64>,
    #[serde(default)]
    pub mode: SweepMode,
    /// Term to estimate in single-term mode; defaults to the largest.
    #[serde(default)]
    pub target: Option<PauliString>,
    /// Shots per observable per round in single-term mode; `None` keeps the
    /// per-round median-of-batches sampling so each round costs the same.
    #[serde(default)]
    pub shot_budget: Option<u64>,
}

/// The `[learner]` table: hierarchy settings in the model's physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub eps: f64,
    pub m_est: usize,
    #[serde(default)]
    pub route: Route,
    #[serde(default = "default_shots_structure")]
    pub shots_structure: u64,
    #[serde(default = "default_shots_coeff")]
    pub shots_coeff: Option<u64>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_reshape_c")]
    pub reshape_c: f64,
    /// Total SPAM error; 0 is noiseless.
    #[serde(default)]
    pub spam: f64,
    #[serde(default)]
    pub levels: Option<u32>,
    #[serde(default)]
    pub overrides: Vec<LevelOverride>,
    #[serde(default = "default_trotter_step")]
    pub trotter_step: f64,
}

fn default_shots_structure() -> u64 {
    2000
}
fn default_shots_coeff() -> Option<u64> {
    Some(1000)
}
fn default_c() -> f64 {
    4.0
}
fn default_reshape_c() -> f64 {
    48.0
}
fn default_trotter_step() -> f64 {
    0.001
}

impl LearnerSpec {
    /// Translate to learner units: times multiply by `scale`, accuracies divide by it.
    pub fn to_hierarchy(&self, scale: f64, seed: u64) -> Result<HierarchyConfig, HarnessError> {
        let spam = SpamModel::new(self.spam).map_err(HarnessError::schema)?;
        let cfg = HierarchyConfig {
            eps: self.eps / scale,
            m_est: self.m_est,
            route: self.route,
            shots_structure: self.shots_structure,
            shots_coeff: self.shots_coeff,
            c: self.c,
            reshape_c: self.reshape_c,
            spam,
            seed,
            levels: self.levels,
            overrides: self
                .overrides
                .iter()
                .map(|o| LevelOverride { level: o.level, t: o.t * scale, eps: o.eps / scale })
                .collect(),
            trotter_step: self.trotter_step * scale,
        };
        cfg.validate().map_err(HarnessError::schema)?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    pub learner: LearnerSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

/// Command-line adjustments applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub route: Option<Route>,
    pub spam: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Schema(m) => HarnessError::Schema(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, ov: &Overrides) -> Result<(), HarnessError> {
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(d) = &ov.out_dir {
            self.output.dir = d.clone();
        }
        if let Some(r) = ov.route {
            self.learner.route = r;
        }
        if let Some(e) = ov.spam {
            self.learner.spam = e;
        }
        self.check()
    }

    /// Schema-level validation: everything that can fail before simulation starts.
    pub fn check(&self) -> Result<(), HarnessError> {
        let model = self.model.build()?;
        self.learner.to_hierarchy(model.scale, self.seed)?;
        if let Some(s) = &self.sweep {
            if s.eps.iter().any(|&e| !(e > 0.0)) || s.eps.is_empty() {
                return Err(HarnessError::Schema("sweep accuracies must be positive and non-empty".into()));
            }
            if let Some(t) = &s.target {
                if t.n() != model.physical.n() || t.is_identity() {
                    return Err(HarnessError::Schema(format!("sweep target {t} does not fit the model")));
                }
            }
            if s.shot_budget == Some(0) {
                return Err(HarnessError::Schema("sweep shot budget must be positive".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: &str = r#"
        seed = 4
        [model]
        builder = "disordered-xy"
        n = 4
        seed = 2
        [learner]
        eps = 0.01
        m_est = 8
    "#;

    #[test]
    fn parses_and_defaults() {
        let cfg = ExperimentConfig::parse(XY).unwrap();
        assert_eq!(cfg.learner.shots_structure, 2000);
        assert_eq!(cfg.learner.shots_coeff, Some(1000));
        assert_eq!(cfg.output, OutputSpec::default());
        assert!(matches!(cfg.model, ModelSpec::DisorderedXy(XySpec { n: 4, seed: 2, crosstalk: None })));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(matches!(ExperimentConfig::parse(&format!("{XY}\nbogus = 1")), Err(HarnessError::Schema(_))));
        let bad_model = XY.replace("n = 4", "n = 4\nwidth = 3");
        assert!(matches!(ExperimentConfig::parse(&bad_model), Err(HarnessError::Schema(_))));
        let bad_builder = XY.replace("disordered-xy", "heisenberg");
        assert!(matches!(ExperimentConfig::parse(&bad_builder), Err(HarnessError::Schema(_))));
        assert!(matches!(ExperimentConfig::parse(&XY.replace("0.01", "2.0")), Err(HarnessError::Schema(_))));
    }

    #[test]
    fn converts_to_learner_units() {
        let text = r#"
            [model]
            builder = "explicit"
            terms = [{ pauli = "XZ", coeff = 2.0 }, { pauli = "IY", coeff = -0.5 }]
            [learner]
            eps = 0.01
            m_est = 2
            levels = 2
            overrides = [{ level = 1, t = 3.0, eps = 0.001 }]
        "#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let model = cfg.model.build().unwrap();
        assert_eq!(model.scale, 2.0);
        let h = cfg.learner.to_hierarchy(model.scale, 0).unwrap();
        assert_eq!(h.eps, 0.005);
        assert_eq!(h.overrides[0].t, 6.0);
        assert_eq!(h.overrides[0].eps, 0.0005);
    }
}
