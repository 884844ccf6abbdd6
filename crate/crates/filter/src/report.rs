//! Tally of filtering decisions for a corpus pass.

use crate::rules::DropReason;
use serde::Serialize;
use std::collections::BTreeMap;

/// Counts of kept and dropped pairs, broken down by drop rule.
///
/// Invariant: `kept + dropped_pair_ids.len() == total()`, and the
/// per-rule counts sum to `dropped_pair_ids.len()`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct FilterReport {
    pub kept: usize,
    pub dropped_by_rule: BTreeMap<String, usize>,
    pub dropped_pair_ids: Vec<String>,
}

impl FilterReport {
    pub fn record_drop(&mut self, reason: DropReason, pair_id: &str) {
        *self
            .dropped_by_rule
            .entry(reason.as_str().to_string())
            .or_insert(0) += 1;
        self.dropped_pair_ids.push(pair_id.to_string());
    }

    pub fn dropped(&self) -> usize {
        self.dropped_pair_ids.len()
    }

    /// Total pairs examined: kept plus dropped.
    pub fn total(&self) -> usize {
        self.kept + self.dropped_pair_ids.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_reconcile() {
        let mut report = FilterReport::default();
        report.kept = 3;
        report.record_drop(DropReason::Url, "f:p0");
        report.record_drop(DropReason::Url, "f:p1");
        report.record_drop(DropReason::TooShort, "g:p0");
        assert_eq!(report.dropped(), 3);
        assert_eq!(report.total(), 6);
        let by_rule: usize = report.dropped_by_rule.values().sum();
        assert_eq!(by_rule, report.dropped());
        assert_eq!(report.dropped_by_rule["url"], 2);
        assert_eq!(report.dropped_by_rule["too-short"], 1);
    }

    #[test]
    fn serializes_with_stable_keys() {
        let mut report = FilterReport::default();
        report.kept = 1;
        report.record_drop(DropReason::SpecialTerm, "f:p0");
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(
            json,
            r#"{"kept":1,"dropped_by_rule":{"special-term":1},"dropped_pair_ids":["f:p0"]}"#
        );
    }
}
