//! Partitions and the per-segment / per-run statistics every verifier emits.

use serde::{Deserialize, Serialize};

/// A witnessed Goldbach decomposition `n = p + q`, `p <= q`, both prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    pub n: u64,
    pub p: u64,
    pub q: u64,
}

impl Partition {
    pub fn new(n: u64, p: u64) -> Self {
        Self { n, p, q: n - p }
    }
}

/// Running maximum of the minimal Goldbach prime, with the smallest `n`
/// attaining it. `p == 0` means nothing has been observed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxMinimal {
    pub p: u64,
    pub n: u64,
}

impl MaxMinimal {
    #[inline]
    pub fn observe(&mut self, n: u64, p: u64) {
        if p > self.p || (p == self.p && n < self.n) {
            self.p = p;
            self.n = n;
        }
    }

    pub fn merge(&mut self, other: MaxMinimal) {
        if other.p != 0 {
            self.observe(other.n, other.p);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.p == 0
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timings {
    pub sieve_ms: f64,
    pub check_ms: f64,
    pub total_ms: f64,
}

/// Phase statistics, present only for segmented runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTotals {
    pub segments: u64,
    pub phase1_resolved: u64,
    pub phase2_invocations: u64,
    pub phase2_resolved: u64,
    /// Bytes of one segment's odd-only table.
    pub segment_bitset_bytes: u64,
    /// Bytes of one segment's resolved-flag array.
    pub segment_flag_bytes: u64,
}

impl PhaseTotals {
    /// Fraction of checked evens resolved without the fallback, in percent.
    pub fn phase1_success_percent(&self, evens_checked: u64) -> f64 {
        if evens_checked == 0 {
            return 100.0;
        }
        100.0 * self.phase1_resolved as f64 / evens_checked as f64
    }
}

/// Aggregate result of verifying every even `n` in `[4, limit]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub verifier: String,
    pub limit: u64,
    pub evens_checked: u64,
    pub failures: u64,
    pub failing_n: Vec<u64>,
    pub max_minimal_p: u64,
    pub witness_of_max: u64,
    pub phases: Option<PhaseTotals>,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(verifier: &str, limit: u64) -> Self {
        Self {
            verifier: verifier.to_owned(),
            limit,
            evens_checked: 0,
            failures: 0,
            failing_n: Vec::new(),
            max_minimal_p: 0,
            witness_of_max: 0,
            phases: None,
            timings: Timings::default(),
        }
    }

    pub fn set_max(&mut self, max: MaxMinimal) {
        self.max_minimal_p = max.p;
        self.witness_of_max = max.n;
    }

    /// Copy with all wall-clock fields zeroed, for equality checks.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: Timings::default(),
            ..self.clone()
        }
    }

    pub fn is_success(&self) -> bool {
        self.failures == 0
    }
}

/// Statistics of one verified segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentReport {
    pub index: u64,
    pub first_even: u64,
    pub last_even: u64,
    pub evens_checked: u64,
    pub phase1_resolved: u64,
    pub phase2_invocations: u64,
    pub phase2_resolved: u64,
    pub failures: u64,
    pub failing_n: Vec<u64>,
    pub max_minimal_p: u64,
    pub witness_n: u64,
    pub sieve_ms: f64,
    pub verify_ms: f64,
}

impl SegmentReport {
    pub fn max(&self) -> MaxMinimal {
        MaxMinimal {
            p: self.max_minimal_p,
            n: self.witness_n,
        }
    }

    pub fn without_timings(&self) -> Self {
        Self {
            sieve_ms: 0.0,
            verify_ms: 0.0,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_prefers_larger_p_then_smaller_n() {
        let mut m = MaxMinimal::default();
        assert!(m.is_empty());
        m.observe(10, 3);
        m.observe(12, 5);
        m.observe(8, 5);
        m.observe(100, 3);
        assert_eq!(m, MaxMinimal { p: 5, n: 8 });
        m.merge(MaxMinimal::default());
        assert_eq!(m, MaxMinimal { p: 5, n: 8 });
        m.merge(MaxMinimal { p: 7, n: 98 });
        assert_eq!(m, MaxMinimal { p: 7, n: 98 });
    }

    #[test]
    fn phase1_percent() {
        let t = PhaseTotals {
            phase1_resolved: 3,
            ..Default::default()
        };
        assert_eq!(t.phase1_success_percent(4), 75.0);
        assert_eq!(t.phase1_success_percent(0), 100.0);
    }
}
