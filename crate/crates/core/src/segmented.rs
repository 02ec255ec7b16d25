//! Constant-memory segmented verification.
//!
//! The even integers `[4, limit]` are cut into segments of `seg_size`
//! consecutive evens. Each segment gets its own odd-only table over the
//! window of complements it can produce, sieved from scratch, so memory per
//! worker does not depend on `limit`.
//!
//! For every `n` in a segment, candidate primes `p <= p_small` are tried in
//! ascending batches (phase 1). The primality of `q = n - p` comes from the
//! first applicable source in a fixed priority chain:
//!
//! 1. `q <= p_small`: the resident small-primes table,
//! 2. `odd_lo <= q <= odd_hi`: the segment table,
//! 3. `p_small < q < odd_lo`: deterministic Miller–Rabin.
//!
//! Any `n` still unresolved after the last batch falls through to phase 2, an
//! unbounded trial-division search that is complete on its own.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::ms;
use crate::error::{Error, Result};
use crate::global::DEFAULT_MEM_BUDGET;
use crate::mr64::is_prime_u64;
use crate::primes::{is_prime_trial, segmented_sieve, simple_sieve, OddBitset, PrimeList};
use crate::report::{MaxMinimal, Partition, PhaseTotals, RunReport, SegmentReport};

pub const DEFAULT_SEG_SIZE: u64 = 10_000_000;
pub const DEFAULT_P_SMALL: u64 = 1_000_000;
pub const DEFAULT_PRIME_BATCH: usize = 4_096;

/// The evens of one segment and the odd window sieved for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub index: u64,
    pub first_even: u64,
    pub last_even: u64,
    /// `first_even - 1`.
    pub odd_lo: u64,
    /// `last_even - 3`, the largest complement of an in-segment `n` with
    /// `p >= 3`; never below `odd_lo`.
    pub odd_hi: u64,
}

impl SegmentPlan {
    /// Plan number `index` of a run; `None` past the last segment.
    pub fn nth(limit: u64, seg_size: u64, index: u64) -> Option<Self> {
        let total = total_evens(limit);
        let skip = index.checked_mul(seg_size)?;
        if skip >= total {
            return None;
        }
        let count = seg_size.min(total - skip);
        let first_even = 4 + 2 * skip;
        let last_even = first_even + 2 * (count - 1);
        let odd_lo = first_even - 1;
        let odd_hi = (last_even - 3).max(odd_lo);
        Some(Self {
            index,
            first_even,
            last_even,
            odd_lo,
            odd_hi,
        })
    }

    pub fn evens(&self) -> u64 {
        (self.last_even - self.first_even) / 2 + 1
    }
}

fn total_evens(limit: u64) -> u64 {
    (limit / 2).saturating_sub(1)
}

pub fn segment_count(limit: u64, seg_size: u64) -> u64 {
    total_evens(limit).div_ceil(seg_size)
}

/// Every segment of `[4, limit]`, ascending.
pub fn plan_segments(limit: u64, seg_size: u64) -> Vec<SegmentPlan> {
    assert!(seg_size >= 1, "seg_size must be positive");
    (0..segment_count(limit, seg_size))
        .map(|i| SegmentPlan::nth(limit, seg_size, i).expect("index below count"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierConfig {
    pub limit: u64,
    /// Even integers per segment.
    pub seg_size: u64,
    pub p_small: u64,
    /// Candidate primes per phase-1 batch.
    pub prime_batch: usize,
    pub workers: usize,
    /// Static round-robin segment ownership instead of dynamic claiming.
    pub deterministic: bool,
    /// Keep the per-`n` minimal prime of every segment (debug output).
    pub record_minimal: bool,
    pub mem_budget: u64,
    pub report_path: Option<PathBuf>,
    pub checkpoint_path: Option<PathBuf>,
}

impl VerifierConfig {
    pub fn new(limit: u64) -> Self {
        Self {
            limit,
            seg_size: DEFAULT_SEG_SIZE,
            p_small: DEFAULT_P_SMALL,
            prime_batch: DEFAULT_PRIME_BATCH,
            workers: 1,
            deterministic: false,
            record_minimal: false,
            mem_budget: DEFAULT_MEM_BUDGET,
            report_path: None,
            checkpoint_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.limit < 4 {
            return bad(format!("limit {} is below 4", self.limit));
        }
        if self.p_small < 5 {
            return bad(format!("p_small {} is below 5", self.p_small));
        }
        if self.seg_size == 0 || self.prime_batch == 0 || self.workers == 0 {
            return bad("seg_size, prime_batch and workers must be positive".into());
        }
        let need = self.memory_estimate();
        if need > self.mem_budget {
            return bad(format!(
                "needs about {need} bytes, budget is {}",
                self.mem_budget
            ));
        }
        Ok(())
    }

    /// Bytes of one full segment's odd table.
    pub fn segment_bitset_bytes(&self) -> u64 {
        // the window of a full segment holds seg_size - 1 odd values
        self.seg_size.div_ceil(64) * 8
    }

    /// Bytes of one full segment's resolved flags.
    pub fn segment_flag_bytes(&self) -> u64 {
        self.seg_size.div_ceil(64) * 8
    }

    /// Resident tables plus one segment in flight per worker.
    pub fn memory_estimate(&self) -> u64 {
        let small = crate::primes::bitset_bytes(self.p_small)
            + 8 * approx_prime_count(self.p_small)
            + 8 * approx_prime_count(self.limit.isqrt() + 1);
        let per_worker = self.segment_bitset_bytes() + self.segment_flag_bytes();
        small + per_worker * self.workers as u64
    }
}

/// Upper bound on pi(x) good enough for budgeting.
fn approx_prime_count(x: u64) -> u64 {
    if x < 17 {
        return 7;
    }
    let xf = x as f64;
    (1.26 * xf / xf.ln()) as u64
}

/// Tables shared read-only by all workers of a run.
#[derive(Debug)]
pub struct SmallTables {
    pub bits: OddBitset,
    pub primes: PrimeList,
    /// Sieving primes up to `isqrt(limit) + 1`.
    pub base_primes: PrimeList,
}

impl SmallTables {
    pub fn build(p_small: u64, limit: u64) -> Result<Self> {
        let bits = simple_sieve(p_small)?;
        let primes = crate::primes::primes_list(&bits);
        let base_primes = PrimeList::up_to(limit.isqrt() + 1);
        Ok(Self {
            bits,
            primes,
            base_primes,
        })
    }

    pub fn byte_len(&self) -> usize {
        self.bits.byte_len() + self.primes.byte_len() + self.base_primes.byte_len()
    }
}

/// Which source resolves the primality of a complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleBranch {
    SmallTable,
    SegmentTable,
    MillerRabin,
}

/// Routes `q` to its oracle. `q` above `plan.odd_hi` cannot come from an
/// in-segment `n` with `p >= 3` and traps.
#[inline]
pub fn oracle_branch(q: u64, plan: &SegmentPlan, p_small: u64) -> OracleBranch {
    if q <= p_small {
        OracleBranch::SmallTable
    } else if q >= plan.odd_lo {
        assert!(
            q <= plan.odd_hi,
            "complement {q} above segment window end {}",
            plan.odd_hi
        );
        OracleBranch::SegmentTable
    } else {
        OracleBranch::MillerRabin
    }
}

/// Primality of an odd `q >= 3` through the three-way priority chain.
#[inline]
pub fn oracle_is_prime(
    q: u64,
    small: &OddBitset,
    segment: &OddBitset,
    plan: &SegmentPlan,
    p_small: u64,
) -> bool {
    match oracle_branch(q, plan, p_small) {
        OracleBranch::SmallTable => small.get(q),
        OracleBranch::SegmentTable => segment.get(q),
        OracleBranch::MillerRabin => is_prime_u64(q),
    }
}

/// Unbounded fallback: `p = 2`, then every odd `p <= n / 2`, both `p` and
/// `q` tested by trial division. `None` is a counterexample.
pub fn phase2_exhaustive(n: u64) -> Option<Partition> {
    assert!(
        n >= 4 && n.is_multiple_of(2),
        "phase 2 needs an even n >= 4, got {n}"
    );
    if n == 4 {
        return Some(Partition::new(4, 2));
    }
    let half = n / 2;
    let mut p = 3;
    while p <= half {
        if is_prime_trial(p) && is_prime_trial(n - p) {
            return Some(Partition::new(n, p));
        }
        p += 2;
    }
    None
}

/// A segment's statistics plus, when recording, its per-`n` minimal primes.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentOutput {
    pub report: SegmentReport,
    /// `p_min(n)` for every `n` of the segment in order, `0` where no
    /// partition exists. Empty unless `record_minimal` was set.
    pub minimal_p: Vec<u64>,
}

pub fn verify_segment(
    plan: &SegmentPlan,
    tables: &SmallTables,
    cfg: &VerifierConfig,
) -> Result<SegmentOutput> {
    let t0 = Instant::now();
    let segment = segmented_sieve(plan.odd_lo, plan.odd_hi, &tables.base_primes)?;
    let t1 = Instant::now();

    let count = plan.evens() as usize;
    let mut resolved = vec![0u64; count.div_ceil(64)];
    let mut unresolved = count;
    let mut minimal = if cfg.record_minimal {
        vec![0u64; count]
    } else {
        Vec::new()
    };
    let mut max = MaxMinimal::default();
    let mut phase1 = 0u64;

    let mut resolve = |i: usize, p: u64, resolved: &mut [u64], max: &mut MaxMinimal| {
        resolved[i >> 6] |= 1 << (i & 63);
        max.observe(plan.first_even + 2 * i as u64, p);
        if cfg.record_minimal {
            minimal[i] = p;
        }
    };

    // p = 2 leaves an even complement, prime only for n = 4
    if plan.first_even == 4 {
        resolve(0, 2, &mut resolved, &mut max);
        unresolved -= 1;
        phase1 += 1;
    }

    let odd_primes = &tables.primes.values()[1..];
    for batch in odd_primes.chunks(cfg.prime_batch) {
        if unresolved == 0 {
            break;
        }
        let batch_first = batch[0];
        for i in 0..count {
            if resolved[i >> 6] >> (i & 63) & 1 == 1 {
                continue;
            }
            let n = plan.first_even + 2 * i as u64;
            let half = n / 2;
            if batch_first > half {
                continue;
            }
            for &p in batch {
                if p > half {
                    break;
                }
                if oracle_is_prime(n - p, &tables.bits, &segment, plan, cfg.p_small) {
                    resolve(i, p, &mut resolved, &mut max);
                    unresolved -= 1;
                    phase1 += 1;
                    break;
                }
            }
        }
    }
    drop(segment);

    let mut report = SegmentReport {
        index: plan.index,
        first_even: plan.first_even,
        last_even: plan.last_even,
        evens_checked: count as u64,
        phase1_resolved: phase1,
        phase2_invocations: 0,
        phase2_resolved: 0,
        failures: 0,
        failing_n: Vec::new(),
        max_minimal_p: 0,
        witness_n: 0,
        sieve_ms: ms(t1 - t0),
        verify_ms: 0.0,
    };

    if unresolved > 0 {
        for i in 0..count {
            if resolved[i >> 6] >> (i & 63) & 1 == 1 {
                continue;
            }
            let n = plan.first_even + 2 * i as u64;
            report.phase2_invocations += 1;
            match phase2_exhaustive(n) {
                Some(part) => {
                    report.phase2_resolved += 1;
                    resolve(i, part.p, &mut resolved, &mut max);
                }
                None => {
                    report.failures += 1;
                    report.failing_n.push(n);
                }
            }
        }
    }

    report.max_minimal_p = max.p;
    report.witness_n = max.n;
    report.verify_ms = ms(t1.elapsed());
    Ok(SegmentOutput {
        report,
        minimal_p: minimal,
    })
}

/// Result of a possibly interrupted segmented run.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedOutcome {
    /// Aggregate over every completed segment, resumed prefix included.
    pub report: RunReport,
    /// Number of leading segments completed; the next run resumes here.
    pub completed_segments: u64,
    pub total_segments: u64,
}

impl SegmentedOutcome {
    pub fn is_complete(&self) -> bool {
        self.completed_segments == self.total_segments
    }
}

pub fn verify_range_segmented(cfg: &VerifierConfig) -> Result<RunReport> {
    Ok(run_segmented(cfg, &[], |_| ControlFlow::Continue(()))?.report)
}

/// Segmented run with resume and streaming.
///
/// `prior` holds the reports of segments `0..prior.len()` from an earlier
/// run with the same configuration; work restarts right after them. `sink`
/// receives every new segment in ascending index order, on the calling
/// thread; returning `Break` stops the run at that segment boundary.
pub fn run_segmented(
    cfg: &VerifierConfig,
    prior: &[SegmentReport],
    mut sink: impl FnMut(&SegmentOutput) -> ControlFlow<()>,
) -> Result<SegmentedOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let total_segments = segment_count(cfg.limit, cfg.seg_size);
    for (i, seg) in prior.iter().enumerate() {
        if seg.index != i as u64 || seg.index >= total_segments {
            return Err(Error::InvalidConfig(format!(
                "resumed segment {} out of sequence at position {i}",
                seg.index
            )));
        }
    }

    let tables = SmallTables::build(cfg.p_small, cfg.limit)?;
    let setup_ms = ms(start.elapsed());

    let mut report = RunReport::new("segmented", cfg.limit);
    let mut phases = PhaseTotals {
        segment_bitset_bytes: cfg.segment_bitset_bytes(),
        segment_flag_bytes: cfg.segment_flag_bytes(),
        ..PhaseTotals::default()
    };
    let mut max = MaxMinimal::default();
    let mut sieve_ms = setup_ms;
    let mut check_ms = 0.0;
    let mut absorb = |seg: &SegmentReport, report: &mut RunReport| {
        report.evens_checked += seg.evens_checked;
        report.failures += seg.failures;
        report.failing_n.extend_from_slice(&seg.failing_n);
        phases.segments += 1;
        phases.phase1_resolved += seg.phase1_resolved;
        phases.phase2_invocations += seg.phase2_invocations;
        phases.phase2_resolved += seg.phase2_resolved;
        max.merge(seg.max());
        sieve_ms += seg.sieve_ms;
        check_ms += seg.verify_ms;
    };
    for seg in prior {
        absorb(seg, &mut report);
    }

    let first = prior.len() as u64;
    let workers = cfg.workers.min((total_segments - first).max(1) as usize);
    let stop = AtomicBool::new(false);
    let next = AtomicU64::new(first);
    let mut failure: Option<Error> = None;
    let mut expected = first;

    thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(u64, Result<SegmentOutput>)>();
        for w in 0..workers as u64 {
            let tx = tx.clone();
            let (stop, next, tables) = (&stop, &next, &tables);
            scope.spawn(move || {
                let mut round = 0u64;
                loop {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    let index = if cfg.deterministic {
                        first + w + round * workers as u64
                    } else {
                        next.fetch_add(1, Ordering::Relaxed)
                    };
                    round += 1;
                    let Some(plan) = SegmentPlan::nth(cfg.limit, cfg.seg_size, index) else {
                        break;
                    };
                    let out = verify_segment(&plan, tables, cfg);
                    if tx.send((index, out)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        let mut halted = false;
        for (index, out) in rx {
            if halted {
                continue;
            }
            pending.insert(index, out);
            while let Some(out) = pending.remove(&expected) {
                match out {
                    Ok(out) => {
                        absorb(&out.report, &mut report);
                        expected += 1;
                        if sink(&out).is_break() {
                            halted = true;
                        }
                    }
                    Err(e) => {
                        failure = Some(e);
                        halted = true;
                    }
                }
                if halted {
                    stop.store(true, Ordering::Relaxed);
                    break;
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }

    report.set_max(max);
    report.phases = Some(phases);
    report.timings.sieve_ms = sieve_ms;
    report.timings.check_ms = check_ms;
    report.timings.total_ms = ms(start.elapsed());
    Ok(SegmentedOutcome {
        report,
        completed_segments: expected,
        total_segments,
    })
}
