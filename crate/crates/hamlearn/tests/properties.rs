use hamlearn::coeff::{RfeState, THETA_BOUND};
use hamlearn::hamiltonian::ham_combine;
use hamlearn::sim::{evolve_exact, prepare_bell_pairs, EvolutionOracle, LedgerEntry, Phase, QuantumState, TimeLedger};
use hamlearn::{PauliString, SparseHamiltonian};
use num_complex::Complex64;
use proptest::prelude::*;

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    (0..1u64 << n, 0..1u64 << n)
        .prop_filter("non-identity", |(x, z)| x | z != 0)
        .prop_map(move |(x, z)| PauliString::from_bits(n, x, z).unwrap())
}

fn hamiltonian(n: usize) -> impl Strategy<Value = SparseHamiltonian> {
    prop::collection::vec((pauli(n), -1.0f64..1.0), 0..5).prop_map(move |terms| {
        let mut h = SparseHamiltonian::new(n);
        for (p, c) in terms {
            h.set(p, c).unwrap();
        }
        h
    })
}

fn entry() -> impl Strategy<Value = LedgerEntry> {
    (0u8..3, prop::option::of(0u32..6), 0.0f64..10.0, 1u64..100, 1u64..5000).prop_map(|(ph, level, step, q, e)| {
        LedgerEntry {
            phase: [Phase::Structure, Phase::Coefficient, Phase::Direct][ph as usize],
            level,
            step,
            queries_per_experiment: q,
            experiments: e,
        }
    })
}

proptest! {
    #[test]
    fn ledger_replay_is_exact(entries in prop::collection::vec(entry(), 0..60), split in 0usize..60) {
        let mut whole = TimeLedger::new();
        entries.iter().for_each(|e| whole.record(*e));
        prop_assert_eq!(whole.replay_total(), whole.total());

        // Shards merged in order reproduce the single log bit for bit.
        let cut = split.min(entries.len());
        let (mut a, mut b) = (TimeLedger::new(), TimeLedger::new());
        entries[..cut].iter().for_each(|e| a.record(*e));
        entries[cut..].iter().for_each(|e| b.record(*e));
        a.merge(&b);
        prop_assert_eq!(&a, &whole);

        let by_phase: f64 = whole.per_phase().values().map(|t| t.time).sum();
        prop_assert!((by_phase - whole.total()).abs() <= 1e-9 * whole.total().max(1.0));
    }

    #[test]
    fn noiseless_rfe_interval_contains_theta(theta in -THETA_BOUND..THETA_BOUND, rounds in 1usize..45) {
        let mut st = RfeState::new(THETA_BOUND);
        for _ in 0..rounds {
            let t = st.next_time();
            st.update(Complex64::from_polar(1.0, theta * t));
            prop_assert!(st.a <= theta && theta <= st.b);
        }
        prop_assert!((st.b - st.a - 2.0 * THETA_BOUND * (2.0f64 / 3.0).powi(rounds as i32)).abs() < 1e-9);
    }

    #[test]
    fn perfect_cancellation_is_the_identity(h in hamiltonian(2), t in 0.0f64..3.0, r in 1u64..2000) {
        let oracle = EvolutionOracle::new(h.clone());
        let mut state = prepare_bell_pairs(2);
        let before = state.clone();
        oracle.cancelled(&h, t, r).unwrap().run(&mut state).unwrap();
        prop_assert!((state.inner(&before).norm() - 1.0).abs() < 1e-9);
        prop_assert!((oracle.total_time() - t).abs() <= 1e-9 * t.max(1.0));
    }

    #[test]
    fn exact_evolution_composes(h in hamiltonian(3), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let mut once = QuantumState::basis(3, 5);
        evolve_exact(&mut once, &h, s + t).unwrap();
        let mut twice = QuantumState::basis(3, 5);
        evolve_exact(&mut twice, &h, s).unwrap();
        evolve_exact(&mut twice, &h, t).unwrap();
        prop_assert!((once.inner(&twice).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn combining_with_a_negation_cancels(a in hamiltonian(3), b in hamiltonian(3)) {
        let sum = ham_combine(&a, &b, 1.0).unwrap();
        let back = ham_combine(&sum, &b, -1.0).unwrap();
        prop_assert!(back.linf_distance(&a) < 1e-12);
        prop_assert!(ham_combine(&a, &a, -1.0).unwrap().is_empty());
    }
}
