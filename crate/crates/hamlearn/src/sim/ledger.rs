//! Accounting of black-box evolution time.
//!
//! Every oracle call appends one entry: a batch of `experiments`, each issuing
//! `queries_per_experiment` forward queries of duration `step`. The running
//! total is accumulated in log order, so replaying the log reproduces it
//! bit for bit.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Bell sampling or twirl sampling.
    Structure,
    /// Reshaped evolutions for frequency estimation.
    Coefficient,
    /// Calls made outside the learning pipeline.
    Direct,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Structure => "structure",
            Phase::Coefficient => "coefficient",
            Phase::Direct => "direct",
        }
    }
}

/// Label attached to the entries an oracle records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeTag {
    pub phase: Phase,
    pub level: Option<u32>,
}

impl Default for ChargeTag {
    fn default() -> Self {
        ChargeTag { phase: Phase::Direct, level: None }
    }
}

impl fmt::Display for ChargeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            Some(j) => write!(f, "{}/j={j}", self.phase.as_str()),
            None => f.write_str(self.phase.as_str()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    pub phase: Phase,
    pub level: Option<u32>,
    pub step: f64,
    pub queries_per_experiment: u64,
    pub experiments: u64,
}

impl LedgerEntry {
    pub fn tag(&self) -> ChargeTag {
        ChargeTag { phase: self.phase, level: self.level }
    }

    pub fn duration(&self) -> f64 {
        self.step * self.queries_per_experiment.saturating_mul(self.experiments) as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTally {
    pub experiments: u64,
    pub time: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeLedger {
    total_evolution_time: f64,
    entries: Vec<LedgerEntry>,
}

impl TimeLedger {
    pub fn new() -> Self {
        TimeLedger::default()
    }

    pub fn record(&mut self, entry: LedgerEntry) {
        self.total_evolution_time += entry.duration();
        self.entries.push(entry);
    }

    /// Append another shard's log after this one's.
    pub fn merge(&mut self, other: &TimeLedger) {
        for e in &other.entries {
            self.record(*e);
        }
    }

    pub fn total(&self) -> f64 {
        self.total_evolution_time
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Re-sum every entry from scratch in log order.
    pub fn replay_total(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, e| acc + e.duration())
    }

    /// Per-label `(experiments, time)`, labels like `structure/j=0`.
    pub fn per_phase(&self) -> BTreeMap<String, PhaseTally> {
        let mut out: BTreeMap<String, PhaseTally> = BTreeMap::new();
        for e in &self.entries {
            let t = out.entry(e.tag().to_string()).or_default();
            t.experiments += e.experiments;
            t.time += e.duration();
        }
        out
    }

    /// Time charged under exactly this tag.
    pub fn time_for(&self, tag: ChargeTag) -> f64 {
        self.entries.iter().filter(|e| e.tag() == tag).fold(0.0, |acc, e| acc + e.duration())
    }

    pub fn experiments_for(&self, tag: ChargeTag) -> u64 {
        self.entries.iter().filter(|e| e.tag() == tag).map(|e| e.experiments).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(phase: Phase, level: Option<u32>, step: f64, q: u64, e: u64) -> LedgerEntry {
        LedgerEntry { phase, level, step, queries_per_experiment: q, experiments: e }
    }

    #[test]
    fn replay_matches_total_exactly() {
        let mut l = TimeLedger::new();
        let mut prev = 0.0;
        for i in 0..1000u64 {
            l.record(entry(Phase::Coefficient, Some((i % 3) as u32), 0.1 / (i + 1) as f64, i % 7 + 1, i % 5 + 1));
            assert!(l.total() >= prev);
            prev = l.total();
        }
        assert_eq!(l.replay_total(), l.total());
        let by_phase: f64 = l.per_phase().values().map(|t| t.time).sum();
        assert!((by_phase - l.total()).abs() <= 1e-12 * l.total());
    }

    #[test]
    fn single_query_adds_its_duration() {
        let mut l = TimeLedger::new();
        l.record(entry(Phase::Direct, None, 0.25, 1, 1));
        assert_eq!(l.total(), 0.25);
        l.record(entry(Phase::Structure, Some(0), 0.001, 64, 2000));
        assert_eq!(l.per_phase()["structure/j=0"].experiments, 2000);
        assert_eq!(l.time_for(ChargeTag { phase: Phase::Structure, level: Some(0) }), 0.001 * 128000.0);
    }

    #[test]
    fn merge_appends_in_order() {
        let mut a = TimeLedger::new();
        a.record(entry(Phase::Structure, Some(0), 0.5, 2, 3));
        let mut b = TimeLedger::new();
        b.record(entry(Phase::Coefficient, Some(0), 0.1, 1, 10));
        a.merge(&b);
        assert_eq!(a.entries().len(), 2);
        assert_eq!(a.total(), a.replay_total());
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<TimeLedger>(&json).unwrap(), a);
    }
}
