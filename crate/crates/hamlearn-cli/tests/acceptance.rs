//! Acceptance suite. Each criterion prints one PASS/FAIL line on stderr; the
//! test fails if any criterion fails.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use hamlearn::coeff::{robust_frequency_estimate, CoeffConfig, RfeState, THETA_BOUND};
use hamlearn::hamiltonian::ham_combine;
use hamlearn::hierarchy::Route;
use hamlearn::pauli::{all_paulis, commutes, pauli_mul};
use hamlearn::sim::{unitary, EvolutionOracle, SpamModel};
use hamlearn::structure::{structure_learn_two_copy, StructureConfig};
use hamlearn::twirl::{population_recover, required_samples, sample_pauli_channel, PauliRateVector};
use hamlearn::{Letter, PauliString, SparseHamiltonian};
use harness::run::AuditOutcome;
use harness::{learn, oracle_audit, scaling_sweep, ExperimentConfig, ExperimentReport, ModelSpec, Overrides};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap()
}

fn p(s: &str) -> PauliString {
    s.parse().unwrap()
}

fn letter_matrix(l: Letter) -> DMatrix<C> {
    let (o, z, i) = (C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0));
    match l {
        Letter::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Letter::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Letter::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Letter::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Dense matrix with qubit 0 on the least significant index bit.
fn dense(q: &PauliString) -> DMatrix<C> {
    (0..q.n()).fold(DMatrix::from_element(1, 1, C::new(1.0, 0.0)), |m, k| letter_matrix(q.letter(k)).kronecker(&m))
}

fn random_pauli(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
    loop {
        let q = PauliString::from_bits(n, rng.gen_range(0..1u64 << n), rng.gen_range(0..1u64 << n)).unwrap();
        if !q.is_identity() {
            return q;
        }
    }
}

fn exact_algebra() -> Outcome {
    let mut checked = 0usize;
    for n in 1..=3 {
        let paulis: Vec<PauliString> = all_paulis(n).collect();
        let mats: Vec<DMatrix<C>> = paulis.iter().map(dense).collect();
        for (a, ma) in paulis.iter().zip(&mats).filter(|(a, _)| !a.is_identity()) {
            let commutant: Vec<&DMatrix<C>> = mats.iter().filter(|mq| *mq * ma == ma * *mq).collect();
            for (q, mq) in paulis.iter().zip(&mats) {
                let sum = commutant.iter().fold(DMatrix::zeros(1 << n, 1 << n), |acc, k| acc + *k * mq * *k);
                let avg = sum / C::new(commutant.len() as f64, 0.0);
                let expect = if q.is_identity() || q == a { mq.clone() } else { DMatrix::zeros(1 << n, 1 << n) };
                if avg != expect {
                    return outcome(false, format!("commutant average of {q} under {a} is not exact"));
                }
                checked += 1;
            }
        }
    }
    for n in 1..=2 {
        let paulis: Vec<PauliString> = all_paulis(n).collect();
        for a in &paulis {
            for b in &paulis {
                let (phase, prod) = pauli_mul(a, b).unwrap();
                let (da, db) = (dense(a), dense(b));
                if &da * &db != dense(&prod) * phase.to_complex() {
                    return outcome(false, format!("{a}·{b} disagrees with the dense product"));
                }
                if commutes(a, b).unwrap() != (&da * &db == &db * &da) {
                    return outcome(false, format!("commutation of {a}, {b} disagrees"));
                }
                checked += 1;
            }
        }
    }
    outcome(true, format!("{checked} identities checked bit-exactly"))
}

fn bell_distribution_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..25u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let n = rng.gen_range(1..=3);
        let mut h = SparseHamiltonian::new(n);
        let terms = rng.gen_range(1..=4usize.min((1 << (2 * n)) - 1));
        while h.len() < terms {
            h.set(random_pauli(&mut rng, n), rng.gen_range(-1.0..1.0)).unwrap();
        }
        let mut hat = SparseHamiltonian::new(n);
        for (q, c) in h.iter() {
            if rng.gen_bool(0.6) {
                hat.set(*q, c + rng.gen_range(-0.3..0.3)).unwrap();
            }
        }
        if rng.gen_bool(0.5) {
            hat.add(random_pauli(&mut rng, n), rng.gen_range(-0.3..0.3)).unwrap();
        }
        let tau = rng.gen_range(0.3..1.5);
        let cfg = StructureConfig { tau: Some(tau), r1: Some(10_000), shots: 100_000, ..Default::default() };
        let oracle = EvolutionOracle::new(h.clone());
        let support = structure_learn_two_copy(&oracle, &hat, &cfg, &SpamModel::noiseless(), &mut rng).unwrap();

        let u = unitary(&ham_combine(&h, &hat, -1.0).unwrap(), tau);
        let shots = cfg.shots as f64;
        let seen: u64 = support.counts().values().sum();
        let mut tv = 0.0;
        for q in all_paulis(n) {
            let exact = ((dense(&q) * &u).trace() / (1u64 << n) as f64).norm_sqr();
            let count = if q.is_identity() { cfg.shots - seen } else { support.count(&q) };
            tv += (exact - count as f64 / shots).abs();
        }
        worst = worst.max(tv / 2.0);
    }
    outcome(worst <= 0.02, format!("worst TV {worst:.4} over 25 instances"))
}

fn rfe_planted_values() -> Outcome {
    let mut good = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let n = rng.gen_range(1..=3);
        let target = random_pauli(&mut rng, n);
        let mu = rng.gen_range(0.05..1.0) * if rng.gen() { 1.0 } else { -1.0 };
        let oracle = EvolutionOracle::new(SparseHamiltonian::from_terms(n, [(target, mu)]).unwrap());
        let est = robust_frequency_estimate(
            &oracle,
            &target,
            &SparseHamiltonian::new(n),
            1e-3,
            &CoeffConfig::default(),
            &SpamModel::noiseless(),
            &mut rng,
        )
        .unwrap();
        good += ((est.mu_hat - mu).abs() <= 1e-3) as usize;
    }
    let mut contained = true;
    for i in 0..=400 {
        let theta = -THETA_BOUND + i as f64 * 0.01;
        let mut st = RfeState::new(THETA_BOUND);
        for _ in 0..40 {
            let t = st.next_time();
            st.update(C::from_polar(1.0, theta * t));
            contained &= st.a <= theta && theta <= st.b;
        }
    }
    outcome(good >= 95 && contained, format!("{good}/100 within 1e-3; containment held: {contained}"))
}

fn heisenberg_scaling() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("sweep.toml");
    cfg.output.dir = dir.path().to_path_buf();
    let out = scaling_sweep(&cfg).unwrap();
    let times: Vec<String> = out.rows.iter().map(|r| format!("{:.3e}", r.total_time)).collect();
    match out.slope {
        Some(s) => outcome((-1.1..=-0.85).contains(&s), format!("slope {s:.3}; times {}", times.join(", "))),
        None => outcome(false, "slope could not be fitted"),
    }
}

fn xy_run(seed: u64, spam: f64) -> ExperimentReport {
    let mut cfg = config("xy.toml");
    if let ModelSpec::DisorderedXy(x) = &mut cfg.model {
        x.seed = 1000 + seed;
    }
    cfg.apply(&Overrides { seed: Some(seed), spam: Some(spam), ..Default::default() }).unwrap();
    learn(&cfg).unwrap()
}

/// Every planted term above 1/2 accepted within 0.015 and nothing else accepted.
fn xy_pass(r: &ExperimentReport) -> bool {
    let planted_ok = r
        .truth
        .iter()
        .filter(|(_, c)| c.abs() > 0.5)
        .all(|(q, c)| r.learned.contains(q) && (r.learned.get(q) - c).abs() <= 0.015);
    planted_ok && r.learned.paulis().all(|q| r.truth.contains(q))
}

fn xy_end_to_end(audits: &mut Vec<(String, AuditOutcome)>) -> Outcome {
    let mut good = 0;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let r = xy_run(seed, 0.0);
        good += xy_pass(&r) as usize;
        worst = worst.max(r.truth.linf_distance(&r.learned));
        audits.push((format!("xy seed {seed}"), oracle_audit(&r)));
    }
    outcome(good >= 18, format!("{good}/20 seeds pass; worst coefficient error {worst:.4}"))
}

fn rydberg_table(audits: &mut Vec<(String, AuditOutcome)>) -> Outcome {
    let r = learn(&config("rydberg.toml")).unwrap();
    audits.push(("rydberg".into(), oracle_audit(&r)));
    let accepted = |j: u32, q: &str| {
        r.report.per_level[j as usize]
            .estimates
            .iter()
            .find(|e| e.accepted && e.pauli == p(q))
            .map(|e| e.mu_hat * r.scale)
    };
    let within = |j, q, target: f64, tol: f64| accepted(j, q).is_some_and(|c| (c - target).abs() <= tol);
    let zz = ["ZZIII", "IZZII", "IIZZI", "IIIZZ"].iter().all(|q| within(0, q, 1.355, 0.10));
    let x = ["XIIII", "IXIII", "IIXII", "IIIXI", "IIIIX"].iter().all(|q| within(0, q, 0.750, 0.05));
    let nnn = ["ZIZII", "IZIZI", "IIZIZ"].iter().all(|q| within(2, q, 0.0212, 0.005));
    let fmt = |v: Option<f64>| v.map_or("absent".to_string(), |c| format!("{c:.5}"));
    let last = r.report.per_level.len() as u32 - 1;
    outcome(
        zz && x && nnn,
        format!(
            "level 1 ZZIII {} XIIII {} ZIIII {}; level 3 ZIZII {}; level {} ZIIIZ {}",
            fmt(accepted(0, "ZZIII")),
            fmt(accepted(0, "XIIII")),
            fmt(accepted(0, "ZIIII")),
            fmt(accepted(2, "ZIZII")),
            last + 1,
            fmt(accepted(last, "ZIIIZ")),
        ),
    )
}

fn single_copy_route(audits: &mut Vec<(String, AuditOutcome)>) -> Outcome {
    let (n, eps1, delta) = (4, 0.02, 0.05);
    let count = required_samples(n, eps1, delta);
    let mut good = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let mut planted = PauliRateVector::default();
        while planted.len() < 3 {
            planted.rates.insert(random_pauli(&mut rng, n), rng.gen_range(0.02..0.1));
        }
        let rest = 1.0 - planted.total();
        planted.rates.insert(PauliString::identity(n), rest);
        let samples: Vec<_> = (0..count).map(|_| sample_pauli_channel(&planted, n, &mut rng).unwrap()).collect();
        let recovered = population_recover(&samples, eps1, delta).unwrap();
        good += (recovered.linf_distance(&planted) <= eps1) as usize;
    }

    let base = ExperimentConfig::parse(
        r#"
        seed = 5
        [model]
        builder = "explicit"
        terms = [{ pauli = "XZI", coeff = 0.8 }, { pauli = "IYY", coeff = -0.6 }]
        [learner]
        eps = 0.05
        m_est = 2
        c = 2.0
        "#,
    )
    .unwrap();
    let mut supports = Vec::new();
    for route in [Route::TwoCopy, Route::SingleCopy] {
        let mut cfg = base.clone();
        cfg.apply(&Overrides { route: Some(route), ..Default::default() }).unwrap();
        let r = learn(&cfg).unwrap();
        audits.push((format!("shared instance {route:?}"), oracle_audit(&r)));
        supports.push(r.learned.paulis().copied().collect::<Vec<_>>());
    }
    let same = supports[0] == supports[1];
    outcome(
        good >= 18 && same,
        format!("{good}/20 recoveries within eps1 ({count} samples each); routes agree: {same}"),
    )
}

fn spam_robustness(audits: &mut Vec<(String, AuditOutcome)>) -> Outcome {
    let (mut detected, mut full) = (0, 0);
    for seed in 0..20 {
        let r = xy_run(seed, 0.05);
        let candidates = &r.report.per_level[0].candidates;
        detected += r.truth.paulis().all(|q| candidates.contains(q)) as usize;
        full += xy_pass(&r) as usize;
        audits.push((format!("xy spam seed {seed}"), oracle_audit(&r)));
    }
    outcome(
        detected >= 18,
        format!("structure stage detects every term in {detected}/20 seeds; full criterion {full}/20"),
    )
}

fn ledger_audit(audits: &[(String, AuditOutcome)]) -> Outcome {
    let bad: Vec<&str> = audits.iter().filter(|(_, a)| !a.consistent).map(|(name, _)| name.as_str()).collect();
    if audits.is_empty() {
        return outcome(false, "no end-to-end runs were audited");
    }
    outcome(bad.is_empty(), format!("{} runs audited; inconsistent: {:?}", audits.len(), bad))
}

fn run(id: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
    });
    let line = format!(
        "criterion {id} {name}: {} ({}; {:.1} s)\n",
        if out.pass { "PASS" } else { "FAIL" },
        out.detail,
        start.elapsed().as_secs_f64()
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    out.pass
}

#[test]
fn acceptance() {
    let mut audits = Vec::new();
    let results = [
        run(1, "exact algebra", exact_algebra),
        run(2, "Bell distribution equivalence", bell_distribution_equivalence),
        run(3, "RFE planted values", rfe_planted_values),
        run(4, "Heisenberg scaling", heisenberg_scaling),
        run(5, "disordered XY end to end", || xy_end_to_end(&mut audits)),
        run(6, "Rydberg hierarchy", || rydberg_table(&mut audits)),
        run(7, "single-copy route", || single_copy_route(&mut audits)),
        run(8, "SPAM robustness", || spam_robustness(&mut audits)),
        run(9, "ledger audit", || ledger_audit(&audits)),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
