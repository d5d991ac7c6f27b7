use std::f64::consts::TAU;

use hamlearn::hierarchy::{hierarchical_learn, HierarchyConfig};
use hamlearn::{PauliString, SparseHamiltonian};
use harness::{build_rydberg_chain, build_zxz_blackbox, RydbergParams};
use proptest::prelude::*;

fn site(n: usize, sites: &[(usize, char)]) -> PauliString {
    let mut s = vec!['I'; n];
    for &(q, c) in sites {
        s[q] = c;
    }
    s.into_iter().collect::<String>().parse().unwrap()
}

fn zxz_cfg() -> HierarchyConfig {
    let mut cfg = HierarchyConfig::new(0.01, 8);
    cfg.shots_structure = 1000;
    cfg.seed = 4;
    cfg
}

#[test]
fn zxz_leading_interaction() {
    let oracle = build_zxz_blackbox(3, 0.1, 0.0, 0).unwrap();
    let report = hierarchical_learn(&oracle, &zxz_cfg()).unwrap();
    let (lead, c) = report.learned.iter().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
    assert_eq!(lead.to_string(), "ZXZ");
    assert!((c - 1.0).abs() <= 0.01);
    for e in report.ledger.entries() {
        let k = e.step / 0.1;
        assert!(e.step == 0.0 || (k - k.round()).abs() < 1e-9);
    }
}

#[test]
fn zxz_support_grows_with_the_chain() {
    let three = hierarchical_learn(&build_zxz_blackbox(3, 0.1, 0.05, 1).unwrap(), &zxz_cfg()).unwrap();
    let five = hierarchical_learn(&build_zxz_blackbox(5, 0.1, 0.05, 1).unwrap(), &zxz_cfg()).unwrap();
    assert!(five.learned.len() > three.learned.len());
    let zxz = ["ZXZII", "IZXZI", "IIZXZ"];
    assert!(zxz.iter().all(|s| five.learned.contains(&s.parse().unwrap())));
}

#[test]
fn fixed_step_oracle_rejects_fractional_durations() {
    let oracle = build_zxz_blackbox(3, 0.1, 0.0, 0).unwrap();
    assert!(oracle.check_step(0.3).is_ok());
    assert!(oracle.check_step(0.15).is_err());
    assert!(oracle.cancelled(&SparseHamiltonian::new(3), 0.25, 1).is_err());
}

proptest! {
    #[test]
    fn rydberg_matches_closed_forms(
        atoms in 2usize..=7,
        spacing in 4.0f64..15.0,
        omega in -3.0f64..3.0,
        detuning in -6.0f64..6.0,
    ) {
        let params = RydbergParams { atom_count: atoms, spacing, omega, detuning, ..Default::default() };
        let h = build_rydberg_chain(&params).unwrap();
        let v = |j: usize, l: usize| TAU * 862_690.0 / (spacing * j.abs_diff(l) as f64).powi(6);
        for j in 0..atoms {
            prop_assert!((h.get(&site(atoms, &[(j, 'X')])) - omega / 2.0).abs() < 1e-12);
            let field: f64 = (0..atoms).filter(|&l| l != j).map(|l| v(j, l)).sum::<f64>() / 4.0;
            let z = h.get(&site(atoms, &[(j, 'Z')]));
            prop_assert!((z - (-detuning / 2.0 - field)).abs() < 1e-12 * field.max(1.0));
            for l in j + 1..atoms {
                let zz = h.get(&site(atoms, &[(j, 'Z'), (l, 'Z')]));
                prop_assert!((zz - v(j, l) / 4.0).abs() < 1e-12 * zz.max(1.0));
                if l + 1 < atoms {
                    prop_assert!(zz > h.get(&site(atoms, &[(j, 'Z'), (l + 1, 'Z')])));
                }
            }
        }
        prop_assert_eq!(h.len(), 2 * atoms + atoms * (atoms - 1) / 2);
    }
}
