//! Bundled benchmark contracts: a vulnerable and a fixed contract for each
//! plugin, a correct contract that looks like a fake-transfer victim, and a
//! contract whose payout sits behind byte-wise guards.

use std::sync::Arc;

use crate::mcb::{assemble, ContractModule};

/// A vulnerable contract and its fixed counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkCase {
    pub id: &'static str,
    pub plugin: &'static str,
    pub vulnerable: &'static str,
    pub safe: &'static str,
    /// Findings the vulnerable contract must produce within the default
    /// budget. The safe one must produce none.
    pub expected: usize,
}

/// One bundled contract with the findings its plugin should report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundledContract {
    pub id: String,
    pub plugin: &'static str,
    pub source: &'static str,
    pub expected: usize,
}

impl BundledContract {
    pub fn module(&self) -> Arc<ContractModule> {
        Arc::new(assemble(self.source).unwrap_or_else(|e| panic!("bundled contract {} assembles: {e}", self.id)))
    }
}

macro_rules! corpus_file {
    ($file:literal) => {
        include_str!(concat!("../corpus/", $file))
    };
}

pub const CASES: [BenchmarkCase; 6] = [
    BenchmarkCase {
        id: "fake_eos",
        plugin: "p1",
        vulnerable: corpus_file!("fake_eos_vuln.mcb"),
        safe: corpus_file!("fake_eos_safe.mcb"),
        expected: 1,
    },
    BenchmarkCase {
        id: "fake_notif",
        plugin: "p2",
        vulnerable: corpus_file!("fake_notif_vuln.mcb"),
        safe: corpus_file!("fake_notif_safe.mcb"),
        expected: 1,
    },
    BenchmarkCase {
        id: "block_dep",
        plugin: "p3",
        vulnerable: corpus_file!("block_dep_vuln.mcb"),
        safe: corpus_file!("block_dep_safe.mcb"),
        expected: 1,
    },
    BenchmarkCase {
        id: "perm",
        plugin: "p4",
        vulnerable: corpus_file!("perm_vuln.mcb"),
        safe: corpus_file!("perm_safe.mcb"),
        expected: 1,
    },
    BenchmarkCase {
        id: "rollback",
        plugin: "p5",
        vulnerable: corpus_file!("rollback_vuln.mcb"),
        safe: corpus_file!("rollback_safe.mcb"),
        expected: 1,
    },
    BenchmarkCase {
        id: "hijack",
        plugin: "p6",
        vulnerable: corpus_file!("hijack_vuln.mcb"),
        safe: corpus_file!("hijack_safe.mcb"),
        expected: 1,
    },
];

/// Correct contract with two transfer paths, one of them a direct call.
/// A fake-transfer detector that only looks at action names flags it.
pub const VIGOR_SOURCE: &str = corpus_file!("vigor.mcb");

/// Block-dependent payout behind two 2-byte guards, checked one byte at a
/// time. Reached with a P3 campaign.
pub const GUARDED_SOURCE: &str = corpus_file!("guarded.mcb");

/// Stores rows, pays, schedules deferred work and fails on demand. Used to
/// check transaction atomicity.
pub const LEDGER_SOURCE: &str = corpus_file!("ledger.mcb");

impl BenchmarkCase {
    pub fn vulnerable_contract(&self) -> BundledContract {
        contract(&format!("{}_vuln", self.id), self.plugin, self.vulnerable, self.expected)
    }

    pub fn safe_contract(&self) -> BundledContract {
        contract(&format!("{}_safe", self.id), self.plugin, self.safe, 0)
    }
}

fn contract(id: &str, plugin: &'static str, source: &'static str, expected: usize) -> BundledContract {
    BundledContract { id: id.to_string(), plugin, source, expected }
}

pub fn vigor() -> BundledContract {
    contract("vigor", "p1", VIGOR_SOURCE, 0)
}

pub fn guarded() -> BundledContract {
    contract("guarded", "p3", GUARDED_SOURCE, 1)
}

/// The paired contracts plus the discriminator, sorted by id.
pub fn detection_suite() -> Vec<BundledContract> {
    let mut out: Vec<BundledContract> =
        CASES.iter().flat_map(|c| [c.vulnerable_contract(), c.safe_contract()]).chain([vigor()]).collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// Looks up a bundled contract by id, the guarded one included.
pub fn bundled(id: &str) -> Option<BundledContract> {
    detection_suite().into_iter().chain([guarded()]).find(|c| c.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_contracts_assemble_and_validate() {
        for c in detection_suite().iter().chain([&guarded()]) {
            c.module().validate().unwrap();
            assert!(crate::plugins::plugin_by_id(c.plugin).is_some(), "{}", c.id);
        }
    }

    #[test]
    fn suite_layout() {
        let suite = detection_suite();
        assert_eq!(suite.len(), 13);
        assert_eq!(suite.iter().filter(|c| c.expected > 0).count(), 6);
        assert!(suite.windows(2).all(|w| w[0].id < w[1].id));
        assert_eq!(bundled("perm_safe").unwrap().source, CASES[3].safe);
        assert_eq!(bundled("guarded"), Some(guarded()));
        assert_eq!(bundled("nope"), None);
    }
}
