//! Sequential reference verifier: one table over `[3, limit]`, then an
//! ascending scan for the minimal Goldbach prime of every even `n`.
//!
//! This is the determinism oracle every parallel verifier is compared with,
//! so it stays single-threaded.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::primes::{simple_sieve, OddBitset};
use crate::report::{MaxMinimal, Partition, RunReport};

/// Minimal-`p` partition of `n`, or `None` when no partition exists.
///
/// `p = 2` is tried first through `q = n - 2`, since the table cannot hold 2;
/// odd `p` then run upward to `n / 2`. `None` is a counterexample signal.
pub fn minimal_partition(n: u64, table: &OddBitset) -> Result<Option<Partition>> {
    if n < 4 || n % 2 == 1 {
        return Err(Error::NotEvenAtLeastFour { n: n.to_string() });
    }
    if table.base() != 3 || n > table.limit().saturating_add(1) {
        return Err(Error::InvalidConfig(format!(
            "table [{}, {}] does not cover n = {n}",
            table.base(),
            table.limit()
        )));
    }
    Ok(scan(n, table).map(|p| Partition::new(n, p)))
}

/// Returns the minimal `p`. Preconditions already checked.
#[inline]
pub(crate) fn scan(n: u64, table: &OddBitset) -> Option<u64> {
    if n == 4 {
        return Some(2);
    }
    let half = n / 2;
    let mut p = 3;
    while p <= half {
        if table.get(p) && table.get(n - p) {
            return Some(p);
        }
        p += 2;
    }
    None
}

/// Verifies every even `n` in `[4, limit]`.
pub fn verify_range_baseline(limit: u64) -> Result<RunReport> {
    verify_range_baseline_with(limit, |_, _| {})
}

/// As [`verify_range_baseline`], handing each `(n, p_min)` to `sink` in
/// ascending `n`. A missing partition is passed as `p = 0`.
pub fn verify_range_baseline_with(limit: u64, mut sink: impl FnMut(u64, u64)) -> Result<RunReport> {
    if limit < 4 {
        return Err(Error::InvalidConfig(format!("limit {limit} is below 4")));
    }
    let start = Instant::now();
    let table = simple_sieve(limit)?;
    let sieved = Instant::now();

    let mut report = RunReport::new("baseline", limit);
    let mut max = MaxMinimal::default();
    let mut n = 4;
    while n <= limit {
        report.evens_checked += 1;
        match scan(n, &table) {
            Some(p) => {
                max.observe(n, p);
                sink(n, p);
            }
            None => {
                report.failures += 1;
                report.failing_n.push(n);
                sink(n, 0);
            }
        }
        n += 2;
    }
    report.set_max(max);
    let done = Instant::now();
    report.timings.sieve_ms = ms(sieved - start);
    report.timings.check_ms = ms(done - sieved);
    report.timings.total_ms = ms(done - start);
    Ok(report)
}

pub(crate) fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
