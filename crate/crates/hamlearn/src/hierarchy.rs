//! The level-by-level learner.
//!
//! Level `j` looks for residual terms of magnitude about `2^{-(j+1)}`: it runs
//! structure learning with everything learned so far cancelled and per-shot
//! evolution time lengthened by `2^j`, estimates the candidates' coefficients,
//! and folds the accepted ones into `Ĥ`. Levels run strictly in order.

use serde::{Deserialize, Serialize};

use crate::coeff::{learn_coefficients, CoeffConfig, CoefficientEstimate, ReshapeConfig, RfeConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::rng::SeedStream;
use crate::sim::{ChargeTag, EvolutionOracle, OracleMode, Phase, SpamModel, TimeLedger};
use crate::structure::{choose_tau_r1, structure_learn_two_copy, StructureConfig, SupportSet};
use crate::twirl::structure_learn_single_copy;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    #[default]
    TwoCopy,
    SingleCopy,
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-copy" => Ok(Route::TwoCopy),
            "single-copy" => Ok(Route::SingleCopy),
            _ => Err(Error::Config(format!("unknown route {s:?}; expected two-copy or single-copy"))),
        }
    }
}

/// Explicit schedule for one level: structure evolution time and coefficient accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelOverride {
    /// Zero-based level index.
    pub level: u32,
    /// Per-shot structure evolution time `T_j`.
    pub t: f64,
    /// Coefficient accuracy `ε_j`.
    pub eps: f64,
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

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    /// Target accuracy on every coefficient.
    pub eps: f64,
    /// Estimated number of terms.
    pub m_est: usize,
    #[serde(default)]
    pub route: Route,
    #[serde(default = "default_shots_structure")]
    pub shots_structure: u64,
    /// Shot budget per coefficient; `None` uses median-of-batches sampling.
    #[serde(default = "default_shots_coeff")]
    pub shots_coeff: Option<u64>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_reshape_c")]
    pub reshape_c: f64,
    #[serde(default)]
    pub spam: SpamModel,
    #[serde(default)]
    pub seed: u64,
    /// Number of levels; defaults to `⌈log2(1/eps)⌉`.
    #[serde(default)]
    pub levels: Option<u32>,
    #[serde(default)]
    pub overrides: Vec<LevelOverride>,
    /// Largest Trotter step used for scheduled structure times.
    #[serde(default = "default_trotter_step")]
    pub trotter_step: f64,
}

impl HierarchyConfig {
    pub fn new(eps: f64, m_est: usize) -> Self {
        HierarchyConfig {
            eps,
            m_est,
            route: Route::TwoCopy,
            shots_structure: default_shots_structure(),
            shots_coeff: default_shots_coeff(),
            c: default_c(),
            reshape_c: default_reshape_c(),
            spam: SpamModel::noiseless(),
            seed: 0,
            levels: None,
            overrides: Vec::new(),
            trotter_step: default_trotter_step(),
        }
    }

    pub fn num_levels(&self) -> u32 {
        self.levels.unwrap_or_else(|| (1.0 / self.eps).log2().ceil().max(1.0) as u32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Config(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.m_est == 0 || self.shots_structure == 0 || self.shots_coeff == Some(0) {
            return Err(Error::Config("m_est and shot counts must be positive".into()));
        }
        if !(self.c >= 2.0) || !(self.reshape_c > 0.0) || !(self.trotter_step > 0.0) {
            return Err(Error::Config("C must be at least 2; reshape_c and trotter_step positive".into()));
        }
        if self.levels == Some(0) {
            return Err(Error::Config("at least one level is needed".into()));
        }
        self.spam.validate()?;
        let j_max = self.num_levels();
        for o in &self.overrides {
            if o.level >= j_max || !(o.t > 0.0 && o.t.is_finite()) || !(o.eps > 0.0) {
                return Err(Error::Config(format!("bad override for level {}: t = {}, eps = {}", o.level, o.t, o.eps)));
            }
            if self.overrides.iter().filter(|p| p.level == o.level).count() > 1 {
                return Err(Error::Config(format!("level {} is overridden twice", o.level)));
            }
        }
        Ok(())
    }

    /// Structure settings, acceptance threshold `μ_m` and accuracy for level `j`.
    pub fn level_plan(&self, j: u32) -> (StructureConfig, f64) {
        let base = StructureConfig {
            mu_m: 0.5f64.powi(j as i32 + 1),
            m_est: self.m_est,
            shots: self.shots_structure,
            c: self.c,
            r1: None,
            tau: None,
        };
        match self.overrides.iter().find(|o| o.level == j) {
            None => (base, self.eps),
            Some(o) => {
                // Invert τ = 1/(C M μ_m) so the threshold matches the scheduled time.
                let mu_m = (1.0 / (self.c * self.m_est as f64 * o.t)).min(1.0);
                let mut cfg = StructureConfig { mu_m, tau: Some(o.t), ..base };
                let (_, rule) = choose_tau_r1(&cfg);
                cfg.r1 = Some(rule.max((o.t / self.trotter_step).ceil() as u64));
                (cfg, o.eps)
            }
        }
    }

    pub fn coeff_config(&self) -> CoeffConfig {
        CoeffConfig {
            reshape: ReshapeConfig { c: self.reshape_c, m_est: self.m_est },
            rfe: RfeConfig { shot_budget: self.shots_coeff, ..Default::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelReport {
    pub j: u32,
    pub mu_m: f64,
    pub eps: f64,
    pub tau: f64,
    pub r1: u64,
    pub candidates: SupportSet,
    pub estimates: Vec<CoefficientEstimate>,
    pub structure_time: f64,
    pub coefficient_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnReport {
    pub learned: SparseHamiltonian,
    pub per_level: Vec<LevelReport>,
    pub ledger: TimeLedger,
    pub seed: u64,
}

/// A fixed-step black box only runs whole steps: round the shot time to the
/// nearest nonzero multiple of the step and use one query per step.
pub fn snap_to_oracle(cfg: &mut StructureConfig, mode: OracleMode) {
    if let OracleMode::FixedStep { theta } = mode {
        let (tau, _) = choose_tau_r1(cfg);
        let k = (tau / theta).round().max(1.0);
        cfg.tau = Some(k * theta);
        cfg.r1 = Some(k as u64);
    }
}

pub fn hierarchical_learn(oracle: &EvolutionOracle, cfg: &HierarchyConfig) -> Result<LearnReport> {
    cfg.validate()?;
    let n = oracle.n();
    let stream = SeedStream::new(cfg.seed);
    let coeff_cfg = cfg.coeff_config();
    let start = oracle.ledger();
    let mut hat = SparseHamiltonian::new(n);
    let mut per_level = Vec::new();
    for j in 0..cfg.num_levels() {
        let level_stream = stream.child(j as u64);
        let (mut scfg, eps_j) = cfg.level_plan(j);
        snap_to_oracle(&mut scfg, oracle.mode());
        let (tau, r1) = choose_tau_r1(&scfg);

        let tag = ChargeTag { phase: Phase::Structure, level: Some(j) };
        oracle.set_tag(tag);
        let t0 = oracle.total_time();
        let mut rng = level_stream.child(0).rng();
        let candidates = match cfg.route {
            Route::TwoCopy => structure_learn_two_copy(oracle, &hat, &scfg, &cfg.spam, &mut rng)?,
            Route::SingleCopy => structure_learn_single_copy(oracle, &hat, &scfg, &cfg.spam, &mut rng)?,
        };
        let structure_time = oracle.total_time() - t0;

        oracle.set_tag(ChargeTag { phase: Phase::Coefficient, level: Some(j) });
        let t1 = oracle.total_time();
        let estimates = learn_coefficients(
            oracle,
            &candidates,
            &hat,
            eps_j,
            scfg.mu_m,
            &coeff_cfg,
            &cfg.spam,
            level_stream.child(1),
        )?;
        let coefficient_time = oracle.total_time() - t1;
        for e in estimates.iter().filter(|e| e.accepted) {
            hat.set(e.pauli, e.mu_hat)?;
        }
        per_level.push(LevelReport {
            j,
            mu_m: scfg.mu_m,
            eps: eps_j,
            tau,
            r1,
            candidates,
            estimates,
            structure_time,
            coefficient_time,
        });
    }
    oracle.set_tag(ChargeTag::default());
    let full = oracle.ledger();
    let mut ledger = TimeLedger::new();
    for e in &full.entries()[start.entries().len()..] {
        ledger.record(*e);
    }
    Ok(LearnReport { learned: hat, per_level, ledger, seed: cfg.seed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub j: u32,
    /// Structure time `T₁ʲ`.
    pub t1: f64,
    /// Coefficient time `T₂ʲ`.
    pub t2: f64,
    /// Structure experiments.
    pub l1: u64,
    /// Coefficient experiments.
    pub l2: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerBreakdown {
    pub rows: Vec<BreakdownRow>,
    /// `Σ_j (T₁ʲ + T₂ʲ)`.
    pub total: f64,
}

pub fn ledger_breakdown(report: &LearnReport) -> LedgerBreakdown {
    let rows: Vec<BreakdownRow> = report
        .per_level
        .iter()
        .map(|l| {
            let s = ChargeTag { phase: Phase::Structure, level: Some(l.j) };
            let c = ChargeTag { phase: Phase::Coefficient, level: Some(l.j) };
            BreakdownRow {
                j: l.j,
                t1: report.ledger.time_for(s),
                t2: report.ledger.time_for(c),
                l1: report.ledger.experiments_for(s),
                l2: report.ledger.experiments_for(c),
            }
        })
        .collect();
    let total = rows.iter().map(|r| r.t1 + r.t2).sum();
    LedgerBreakdown { rows, total }
}

/// Least-squares slope of `log T` against `log ε`.
pub fn heisenberg_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 4 {
        return Err(Error::Degenerate(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|&(e, t)| !(e > 0.0 && t > 0.0)) {
        return Err(Error::Degenerate("accuracies and times must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    if (hi - lo) / std::f64::consts::LN_10 < 2.0 - 1e-9 {
        return Err(Error::Degenerate("accuracies must span at least two decades".into()));
    }
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
