//! Sparse Pauli Hamiltonians `H = Σ_s μ_s P_s`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::pauli::PauliString;

/// Terms are kept in letter order so iteration and serialization are deterministic.
/// Identity terms and exact zeros are never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HamiltonianRecord", into = "HamiltonianRecord")]
pub struct SparseHamiltonian {
    n: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl SparseHamiltonian {
    pub fn new(n: usize) -> Self {
        SparseHamiltonian { n, terms: BTreeMap::new() }
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut h = SparseHamiltonian::new(n);
        for (p, c) in terms {
            h.add(p, c)?;
        }
        Ok(h)
    }

    /// Parse `[("XX", 0.5), ...]` style literals; convenient for tests and configs.
    pub fn parse(terms: &[(&str, f64)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Format("no terms to infer n from".into()))?;
        let n = first.0.len();
        Self::from_terms(n, terms.iter().map(|(s, c)| Ok::<_, Error>((s.parse()?, *c))).collect::<Result<Vec<_>>>()?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.terms.contains_key(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, f64)> + '_ {
        self.terms.iter().map(|(p, &c)| (p, c))
    }

    pub fn paulis(&self) -> impl Iterator<Item = &PauliString> + '_ {
        self.terms.keys()
    }

    /// Add `c` to the coefficient of `p`, dropping the entry if it cancels to zero.
    pub fn add(&mut self, p: PauliString, c: f64) -> Result<()> {
        check_dim(self.n, p.n())?;
        if p.is_identity() {
            return Err(Error::InvalidTarget("identity terms carry no dynamics and are not stored".into()));
        }
        if !c.is_finite() {
            return Err(Error::Format(format!("non-finite coefficient for {p}")));
        }
        let entry = self.terms.entry(p).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&p);
        }
        Ok(())
    }

    /// Overwrite the coefficient of `p`.
    pub fn set(&mut self, p: PauliString, c: f64) -> Result<()> {
        self.terms.remove(&p);
        self.add(p, c)
    }

    pub fn remove(&mut self, p: &PauliString) -> Option<f64> {
        self.terms.remove(p)
    }

    pub fn scaled(&self, s: f64) -> SparseHamiltonian {
        let terms = self.terms.iter().map(|(p, c)| (*p, c * s)).filter(|(_, c)| *c != 0.0).collect();
        SparseHamiltonian { n: self.n, terms }
    }

    /// `Σ |μ_s|`, an upper bound on the operator norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Divide by the largest magnitude so every `|μ| <= 1`; returns the scale that undoes it.
    pub fn normalized(&self) -> (SparseHamiltonian, f64) {
        let scale = self.max_abs();
        if scale == 0.0 {
            return (self.clone(), 1.0);
        }
        (self.scaled(1.0 / scale), scale)
    }

    /// Largest coefficient difference over the union of supports.
    pub fn linf_distance(&self, other: &SparseHamiltonian) -> f64 {
        self.paulis().chain(other.paulis()).map(|p| (self.get(p) - other.get(p)).abs()).fold(0.0, f64::max)
    }
}

/// `a + scale_b · b`, pruning cancelled entries.
pub fn ham_combine(a: &SparseHamiltonian, b: &SparseHamiltonian, scale_b: f64) -> Result<SparseHamiltonian> {
    check_dim(a.n, b.n)?;
    let mut out = a.clone();
    for (p, c) in b.iter() {
        out.add(*p, scale_b * c)?;
    }
    Ok(out)
}

/// Serialized shape: `{ n, terms: [{ pauli, coeff }] }`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HamiltonianRecord {
    n: usize,
    terms: Vec<TermRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub pauli: PauliString,
    pub coeff: f64,
}

impl From<SparseHamiltonian> for HamiltonianRecord {
    fn from(h: SparseHamiltonian) -> Self {
        let terms = h.terms.into_iter().map(|(pauli, coeff)| TermRecord { pauli, coeff }).collect();
        HamiltonianRecord { n: h.n, terms }
    }
}

impl TryFrom<HamiltonianRecord> for SparseHamiltonian {
    type Error = Error;

    fn try_from(r: HamiltonianRecord) -> Result<Self> {
        let mut h = SparseHamiltonian::new(r.n);
        for t in r.terms {
            if h.contains(&t.pauli) {
                return Err(Error::Format(format!("duplicate term {}", t.pauli)));
            }
            h.add(t.pauli, t.coeff)?;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(terms: &[(&str, f64)]) -> SparseHamiltonian {
        SparseHamiltonian::parse(terms).unwrap()
    }

    #[test]
    fn combine_examples() {
        let a = h(&[("XZ", 0.5), ("YY", -0.2)]);
        assert!(ham_combine(&a, &a, -1.0).unwrap().is_empty());
        let sum = ham_combine(&h(&[("Z", 0.5)]), &h(&[("X", 0.25)]), 2.0).unwrap();
        assert_eq!(sum, h(&[("Z", 0.5), ("X", 0.5)]));
        let pruned = ham_combine(&h(&[("Z", 0.5), ("X", 0.3)]), &h(&[("Z", 0.5)]), -1.0).unwrap();
        assert_eq!(pruned, h(&[("X", 0.3)]));
        assert!(matches!(ham_combine(&h(&[("Z", 0.5)]), &h(&[("ZZ", 0.5)]), 1.0), Err(Error::Dimension { .. })));
    }

    #[test]
    fn identity_and_zero_terms_are_not_stored() {
        let mut a = SparseHamiltonian::new(2);
        assert!(a.add("II".parse().unwrap(), 1.0).is_err());
        a.add("XI".parse().unwrap(), 0.0).unwrap();
        assert!(a.is_empty());
    }

    #[test]
    fn normalization_records_scale() {
        let a = h(&[("ZZ", 1.3552), ("XI", 0.75)]);
        let (b, s) = a.normalized();
        assert_eq!(s, 1.3552);
        assert!(b.max_abs() <= 1.0);
        assert!(b.scaled(s).linf_distance(&a) < 1e-15);
    }

    #[test]
    fn json_round_trip_and_schema() {
        let a = h(&[("IIIZZ", 0.0212), ("XIIII", -0.75)]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"n":5,"terms":[{"pauli":"IIIZZ","coeff":0.0212},{"pauli":"XIIII","coeff":-0.75}]}"#);
        assert_eq!(serde_json::from_str::<SparseHamiltonian>(&s).unwrap(), a);
        let dup = r#"{"n":1,"terms":[{"pauli":"X","coeff":1.0},{"pauli":"X","coeff":1.0}]}"#;
        assert!(serde_json::from_str::<SparseHamiltonian>(dup).is_err());
        let extra = r#"{"n":1,"terms":[],"scale":2.0}"#;
        assert!(serde_json::from_str::<SparseHamiltonian>(extra).is_err());
    }
}
