//! Whole-range verifier over a single resident table.
//!
//! The table for `[3, limit]` is built once and shared read-only by every
//! worker; each worker owns a contiguous block of even integers. The memory
//! ceiling is explicit: a limit whose table does not fit the budget is
//! refused before any allocation.

use std::thread;
use std::time::Instant;

use crate::baseline::{ms, scan};
use crate::error::{Error, Result};
use crate::primes::{bitset_bytes, parallel_sieve, simple_sieve};
use crate::report::{MaxMinimal, RunReport};

pub const MIB: u64 = 1 << 20;
pub const GIB: u64 = 1 << 30;

/// Default memory budget, sized like an 8 GiB accelerator.
pub const DEFAULT_MEM_BUDGET: u64 = 8 * GIB;

/// Fixed allowance on top of the table for everything else.
pub const OVERHEAD_ALLOWANCE: u64 = 64 * MIB;

/// Below this limit the table is sieved on one thread.
pub const PARALLEL_SIEVE_THRESHOLD: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Bytes of the resident table alone.
    pub required_bytes: u64,
    pub budget: u64,
}

pub fn check_feasibility(limit: u64, budget: u64) -> Feasibility {
    let required_bytes = bitset_bytes(limit);
    Feasibility {
        feasible: required_bytes.saturating_add(OVERHEAD_ALLOWANCE) <= budget,
        required_bytes,
        budget,
    }
}

pub fn verify_range_global(limit: u64, workers: usize, budget: u64) -> Result<RunReport> {
    verify_impl(limit, workers, budget, None::<fn(u64, u64)>)
}

/// As [`verify_range_global`], handing each `(n, p_min)` to `sink` in
/// ascending `n` once all workers have joined. A missing partition is `p = 0`.
pub fn verify_range_global_with(
    limit: u64,
    workers: usize,
    budget: u64,
    sink: impl FnMut(u64, u64),
) -> Result<RunReport> {
    verify_impl(limit, workers, budget, Some(sink))
}

struct Block {
    evens: u64,
    failing_n: Vec<u64>,
    max: MaxMinimal,
    minimal_p: Vec<u64>,
}

fn verify_impl(
    limit: u64,
    workers: usize,
    budget: u64,
    mut sink: Option<impl FnMut(u64, u64)>,
) -> Result<RunReport> {
    if limit < 4 {
        return Err(Error::InvalidConfig(format!("limit {limit} is below 4")));
    }
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be at least 1".into()));
    }
    let feasibility = check_feasibility(limit, budget);
    if !feasibility.feasible {
        return Err(Error::Infeasible {
            limit,
            required: feasibility.required_bytes + OVERHEAD_ALLOWANCE,
            budget,
        });
    }

    let start = Instant::now();
    let table = if workers > 1 && limit >= PARALLEL_SIEVE_THRESHOLD {
        parallel_sieve(limit, workers)?
    } else {
        simple_sieve(limit)?
    };
    let sieved = Instant::now();

    let total = limit / 2 - 1;
    let per_worker = total.div_ceil(workers as u64);
    let record = sink.is_some();
    let table = &table;
    let blocks: Vec<Block> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let first = 4 + 2 * w * per_worker;
                let last = (first + 2 * per_worker).saturating_sub(2).min(limit);
                scope.spawn(move || {
                    let mut block = Block {
                        evens: 0,
                        failing_n: Vec::new(),
                        max: MaxMinimal::default(),
                        minimal_p: Vec::new(),
                    };
                    let mut n = first;
                    while n <= last {
                        block.evens += 1;
                        let p = scan(n, table);
                        match p {
                            Some(p) => block.max.observe(n, p),
                            None => block.failing_n.push(n),
                        }
                        if record {
                            block.minimal_p.push(p.unwrap_or(0));
                        }
                        n += 2;
                    }
                    block
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let done = Instant::now();

    let mut report = RunReport::new("global", limit);
    let mut max = MaxMinimal::default();
    let mut n = 4;
    for block in blocks {
        report.evens_checked += block.evens;
        report.failures += block.failing_n.len() as u64;
        report.failing_n.extend(block.failing_n);
        max.merge(block.max);
        if let Some(sink) = sink.as_mut() {
            for p in block.minimal_p {
                sink(n, p);
                n += 2;
            }
        }
    }
    report.set_max(max);
    report.timings.sieve_ms = ms(sieved - start);
    report.timings.check_ms = ms(done - sieved);
    report.timings.total_ms = ms(done - start);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{verify_range_baseline, verify_range_baseline_with};
    use crate::primes::to_mib;

    #[test]
    fn feasibility_against_8_gib() {
        let f = check_feasibility(10_000_000_000, DEFAULT_MEM_BUDGET);
        assert!(f.feasible);
        assert_eq!(to_mib(f.required_bytes).round(), 596.0);
        let f = check_feasibility(1_000_000_000_000, DEFAULT_MEM_BUDGET);
        assert!(!f.feasible);
        assert_eq!(to_mib(f.required_bytes).round(), 59_605.0);
        // 5,960 MiB plus the 64 MiB allowance still fits 8 GiB
        let f = check_feasibility(100_000_000_000, DEFAULT_MEM_BUDGET);
        assert_eq!(to_mib(f.required_bytes).round(), 5_960.0);
        assert!(f.feasible);
        let edge = f.required_bytes + OVERHEAD_ALLOWANCE;
        assert!(check_feasibility(100_000_000_000, edge).feasible);
        assert!(!check_feasibility(100_000_000_000, edge - 1).feasible);
    }

    #[test]
    fn refuses_before_work() {
        let err = verify_range_global(1_000_000, 2, 64 * MIB).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
        assert!(verify_range_global(3, 1, DEFAULT_MEM_BUDGET).is_err());
        assert!(verify_range_global(100, 0, DEFAULT_MEM_BUDGET).is_err());
    }

    #[test]
    fn single_worker_equals_baseline() {
        let g = verify_range_global(1_000_000, 1, DEFAULT_MEM_BUDGET).unwrap();
        let b = verify_range_baseline(1_000_000).unwrap();
        assert_eq!(g.evens_checked, b.evens_checked);
        assert_eq!(g.failures, b.failures);
        assert_eq!(
            (g.max_minimal_p, g.witness_of_max),
            (b.max_minimal_p, b.witness_of_max)
        );
    }

    #[test]
    fn worker_count_independence() {
        let reference = verify_range_global(1_000_000, 1, DEFAULT_MEM_BUDGET)
            .unwrap()
            .without_timings();
        for workers in [2, 3, 4, 8] {
            let r = verify_range_global(1_000_000, workers, DEFAULT_MEM_BUDGET).unwrap();
            assert_eq!(r.without_timings(), reference, "workers = {workers}");
        }
        // more workers than evens
        let r = verify_range_global(10, 8, DEFAULT_MEM_BUDGET).unwrap();
        assert_eq!(r.evens_checked, 4);
    }

    #[test]
    fn per_n_stream_matches_baseline() {
        let mut base = Vec::new();
        verify_range_baseline_with(200_000, |n, p| base.push((n, p))).unwrap();
        let mut global = Vec::new();
        verify_range_global_with(200_000, 3, DEFAULT_MEM_BUDGET, |n, p| global.push((n, p)))
            .unwrap();
        assert_eq!(global, base);
    }
}
