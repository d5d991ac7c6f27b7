//! Experiment drivers and report emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use hamlearn::coeff::{robust_frequency_estimate, CoefficientEstimate};
use hamlearn::hierarchy::{
    heisenberg_fit, hierarchical_learn, ledger_breakdown, snap_to_oracle, HierarchyConfig, LearnReport,
    LedgerBreakdown, Route,
};
use hamlearn::rng::SeedStream;
use hamlearn::sim::{ChargeTag, Phase};
use hamlearn::structure::{choose_tau_r1, structure_learn_two_copy, SupportSet};
use hamlearn::twirl::structure_learn_single_copy;
use hamlearn::{PauliString, SparseHamiltonian};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Model, ModelSpec, SweepMode};
use crate::error::HarnessError;

/// Everything a `learn` run produces. Coefficients and times inside `report`
/// are in learner units; `learned` and `total_time` are physical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub model: ModelSpec,
    pub scale: f64,
    pub truth: SparseHamiltonian,
    pub learned: SparseHamiltonian,
    pub total_time: f64,
    pub learner: HierarchyConfig,
    pub breakdown: LedgerBreakdown,
    pub report: LearnReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub pauli: PauliString,
    pub coeff: f64,
    pub stderr: f64,
    pub level: u32,
    pub accepted: bool,
}

impl ExperimentReport {
    /// One row per estimate, in physical units.
    pub fn rows(&self) -> Vec<CoefficientRow> {
        self.report
            .per_level
            .iter()
            .flat_map(|l| {
                l.estimates.iter().map(move |e| CoefficientRow {
                    pauli: e.pauli,
                    coeff: e.mu_hat * self.scale,
                    stderr: e.stderr * self.scale,
                    level: l.j,
                    accepted: e.accepted,
                })
            })
            .collect()
    }
}

pub fn learn(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let model = cfg.model.build()?;
    let learner = cfg.learner.to_hierarchy(model.scale, cfg.seed)?;
    learn_with(cfg.model.clone(), &model, learner)
}

fn learn_with(spec: ModelSpec, model: &Model, learner: HierarchyConfig) -> Result<ExperimentReport, HarnessError> {
    let oracle = model.oracle()?;
    let report = hierarchical_learn(&oracle, &learner)?;
    let breakdown = ledger_breakdown(&report);
    Ok(ExperimentReport {
        model: spec,
        scale: model.scale,
        truth: model.physical.clone(),
        learned: report.learned.scaled(model.scale),
        total_time: report.ledger.total() / model.scale,
        learner,
        breakdown,
        report,
    })
}

/// Write `bytes` next to `path` and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = std::fs::File::create(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("reports serialize");
    v.push(b'\n');
    v
}

pub fn coefficient_csv(rows: &[CoefficientRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pauli", "coeff", "stderr", "level", "accepted"]).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.pauli.to_string(),
            r.coeff.to_string(),
            r.stderr.to_string(),
            r.level.to_string(),
            r.accepted.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub struct LearnOutcome {
    pub report: ExperimentReport,
    pub report_path: PathBuf,
    pub table_path: PathBuf,
}

/// `learn` end to end: run, then write the report document and the coefficient table.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<LearnOutcome, HarnessError> {
    let report = learn(cfg)?;
    let report_path = cfg.output.dir.join(&cfg.output.report);
    let table_path = cfg.output.dir.join(&cfg.output.table);
    write_atomic(&report_path, &json(&report))?;
    write_atomic(&table_path, &coefficient_csv(&report.rows()))?;
    Ok(LearnOutcome { report, report_path, table_path })
}

pub fn read_report(path: &Path) -> Result<ExperimentReport, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Schema(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureOutcome {
    pub level: u32,
    pub route: Route,
    pub tau: f64,
    pub r1: u64,
    pub mu_m: f64,
    pub candidates: SupportSet,
    /// Physical time.
    pub time: f64,
}

/// One structure pass at level `level` with nothing cancelled.
pub fn run_structure(cfg: &ExperimentConfig, level: u32) -> Result<StructureOutcome, HarnessError> {
    let model = cfg.model.build()?;
    let learner = cfg.learner.to_hierarchy(model.scale, cfg.seed)?;
    if level >= learner.num_levels() {
        return Err(HarnessError::Schema(format!(
            "level {level} is beyond the {} configured levels",
            learner.num_levels()
        )));
    }
    let oracle = model.oracle()?;
    let (mut scfg, _) = learner.level_plan(level);
    snap_to_oracle(&mut scfg, oracle.mode());
    let (tau, r1) = choose_tau_r1(&scfg);
    oracle.set_tag(ChargeTag { phase: Phase::Structure, level: Some(level) });
    let hat = SparseHamiltonian::new(model.physical.n());
    let mut rng = SeedStream::new(cfg.seed).child(level as u64).child(0).rng();
    let candidates = match learner.route {
        Route::TwoCopy => structure_learn_two_copy(&oracle, &hat, &scfg, &learner.spam, &mut rng)?,
        Route::SingleCopy => structure_learn_single_copy(&oracle, &hat, &scfg, &learner.spam, &mut rng)?,
    };
    Ok(StructureOutcome {
        level,
        route: learner.route,
        tau: tau / model.scale,
        r1,
        mu_m: scfg.mu_m * model.scale,
        candidates,
        time: oracle.total_time() / model.scale,
    })
}

/// One robust frequency estimation run on `target` at the learner accuracy,
/// returned in physical units.
pub fn run_coeff(cfg: &ExperimentConfig, target: &PauliString) -> Result<CoefficientEstimate, HarnessError> {
    let model = cfg.model.build()?;
    if target.n() != model.physical.n() || target.is_identity() {
        return Err(HarnessError::Schema(format!("target {target} does not fit the model")));
    }
    let learner = cfg.learner.to_hierarchy(model.scale, cfg.seed)?;
    let oracle = model.oracle()?;
    oracle.set_tag(ChargeTag { phase: Phase::Coefficient, level: Some(0) });
    let mut rng = SeedStream::new(cfg.seed).rng();
    let hat = SparseHamiltonian::new(model.physical.n());
    let mut est = robust_frequency_estimate(
        &oracle,
        target,
        &hat,
        learner.eps,
        &learner.coeff_config(),
        &learner.spam,
        &mut rng,
    )?;
    let s = model.scale;
    est.mu_hat *= s;
    est.stderr *= s;
    est.prior *= s;
    est.eps_target *= s;
    est.evolution_time_spent /= s;
    Ok(est)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub total_time: f64,
    /// Largest coefficient error against the planted model.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub slope: Option<f64>,
    pub csv_path: PathBuf,
}

pub fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, HarnessError> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| HarnessError::Schema("the config has no [sweep] table".into()))?;
    let model = cfg.model.build()?;
    let stream = SeedStream::new(cfg.seed);
    let mut rows = Vec::with_capacity(spec.eps.len());
    for (i, &eps) in spec.eps.iter().enumerate() {
        let mut learner_spec = cfg.learner.clone();
        learner_spec.eps = eps;
        let row_seed: u64 = stream.child(i as u64).rng().gen();
        match spec.mode {
            SweepMode::SingleTerm => {
                let target = spec.target.unwrap_or_else(|| largest_term(&model.physical));
                let mut learner = learner_spec.to_hierarchy(model.scale, row_seed)?;
                learner.shots_coeff = spec.shot_budget;
                let oracle = model.oracle()?;
                let hat = SparseHamiltonian::new(model.physical.n());
                let mut rng = SeedStream::new(row_seed).rng();
                let est = robust_frequency_estimate(
                    &oracle,
                    &target,
                    &hat,
                    learner.eps,
                    &learner.coeff_config(),
                    &learner.spam,
                    &mut rng,
                )?;
                rows.push(SweepRow {
                    eps,
                    total_time: oracle.total_time() / model.scale,
                    error: (est.mu_hat * model.scale - model.physical.get(&target)).abs(),
                });
            }
            SweepMode::Hierarchy => {
                learner_spec.levels = None;
                learner_spec.overrides.clear();
                let learner = learner_spec.to_hierarchy(model.scale, row_seed)?;
                let r = learn_with(cfg.model.clone(), &model, learner)?;
                rows.push(SweepRow { eps, total_time: r.total_time, error: r.learned.linf_distance(&r.truth) });
            }
        }
    }
    Ok(rows)
}

fn largest_term(h: &SparseHamiltonian) -> PauliString {
    let mut best: Option<(PauliString, f64)> = None;
    for (p, c) in h.iter() {
        if best.map_or(true, |(_, b)| c.abs() > b) {
            best = Some((*p, c.abs()));
        }
    }
    best.map(|b| b.0).unwrap_or_else(|| PauliString::identity(h.n()))
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eps", "total_time", "error"]).expect("in-memory write");
    for r in rows {
        w.write_record([r.eps.to_string(), r.total_time.to_string(), r.error.to_string()]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Run the sweep, write the CSV and fit the log-log slope when the points allow it.
pub fn scaling_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome, HarnessError> {
    let rows = sweep_rows(cfg)?;
    let csv_path = cfg.output.dir.join(&cfg.output.sweep);
    write_atomic(&csv_path, &sweep_csv(&rows))?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.total_time)).collect();
    Ok(SweepOutcome { slope: heisenberg_fit(&points).ok(), rows, csv_path })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditOutcome {
    pub entries: usize,
    pub reported: f64,
    pub replayed: f64,
    pub breakdown_total: f64,
    pub consistent: bool,
}

/// Re-sum a report's per-call log and compare with its recorded totals.
pub fn oracle_audit(report: &ExperimentReport) -> AuditOutcome {
    let ledger = &report.report.ledger;
    let replayed = ledger.replay_total();
    let recomputed = ledger_breakdown(&report.report);
    let consistent = replayed == ledger.total()
        && recomputed == report.breakdown
        && (recomputed.total - replayed).abs() <= 1e-9 * replayed.max(1.0);
    AuditOutcome {
        entries: ledger.entries().len(),
        reported: ledger.total(),
        replayed,
        breakdown_total: recomputed.total,
        consistent,
    }
}
