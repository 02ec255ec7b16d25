//! Goldbach partition search for one 64-bit even integer.
//!
//! Candidate primes `p <= n / 2` come from an incremental segmented sieve in
//! batches; each batch is split across a worker pool that tests `q = n - p`
//! with deterministic Miller–Rabin. Batch boundaries are full joins.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::thread;

use crate::error::{Error, Result};
use crate::mr64::is_prime_u64;
use crate::primes::{segmented_sieve, PrimeList};
use crate::report::Partition;

pub const DEFAULT_BATCH: usize = 8_192;

/// Odd values sieved per window of the candidate stream.
const WINDOW_ODDS: u64 = 1 << 16;

/// Ascending primes `<= bound`, produced window by window.
#[derive(Debug)]
pub struct PrimeStream {
    bound: u64,
    /// Next odd value not yet sieved.
    next_lo: u64,
    emitted_two: bool,
    base: PrimeList,
    buffer: std::collections::VecDeque<u64>,
}

impl PrimeStream {
    pub fn new(bound: u64) -> Self {
        Self {
            bound,
            next_lo: 3,
            emitted_two: false,
            base: PrimeList::up_to(2),
            buffer: Default::default(),
        }
    }

    fn refill(&mut self) {
        while self.buffer.is_empty() && self.next_lo <= self.bound {
            let lo = self.next_lo;
            let hi = lo.saturating_add(2 * (WINDOW_ODDS - 1)).min(self.bound);
            let root = hi.isqrt();
            if self.base.upper_bound() < root {
                // grow geometrically so regeneration stays rare
                self.base = PrimeList::up_to(root.saturating_mul(2).max(1 << 16));
            }
            let table = segmented_sieve(lo, hi, &self.base).expect("window and base primes valid");
            self.buffer.extend(table.iter_ones());
            // lo is odd, so hi is odd unless clipped to the bound
            self.next_lo = if hi == self.bound { u64::MAX } else { hi + 2 };
        }
    }

    /// Up to `size` further primes; empty once the bound is exhausted.
    pub fn next_batch(&mut self, size: usize) -> Vec<u64> {
        let mut batch = Vec::with_capacity(size);
        if !self.emitted_two && self.bound >= 2 && size > 0 {
            self.emitted_two = true;
            batch.push(2);
        }
        while batch.len() < size {
            if self.buffer.is_empty() {
                self.refill();
                if self.buffer.is_empty() {
                    break;
                }
            }
            let take = (size - batch.len()).min(self.buffer.len());
            batch.extend(self.buffer.drain(..take));
        }
        batch
    }
}

/// Finds a partition of `n`.
///
/// Deterministic mode returns the smallest valid `p` of the first batch that
/// holds any; since earlier batches held none, that is the minimal `p`.
/// Otherwise whichever worker succeeds first wins and `p` may not be minimal.
pub fn check_single(
    n: u64,
    batch_size: usize,
    workers: usize,
    deterministic: bool,
) -> Result<Partition> {
    if n < 4 || n % 2 == 1 {
        return Err(Error::NotEvenAtLeastFour { n: n.to_string() });
    }
    if batch_size == 0 || workers == 0 {
        return Err(Error::InvalidConfig(
            "batch size and workers must be positive".into(),
        ));
    }
    let mut stream = PrimeStream::new(n / 2);
    loop {
        let batch = stream.next_batch(batch_size);
        if batch.is_empty() {
            return Err(Error::Counterexample { n: n.to_string() });
        }
        if let Some(p) = search_batch(n, &batch, workers, deterministic) {
            return Ok(Partition::new(n, p));
        }
    }
}

fn valid(n: u64, p: u64) -> bool {
    is_prime_u64(n - p)
}

fn search_batch(n: u64, batch: &[u64], workers: usize, deterministic: bool) -> Option<u64> {
    let workers = workers.min(batch.len()).max(1);
    if workers == 1 {
        return batch.iter().copied().find(|&p| valid(n, p));
    }
    const NONE: usize = usize::MAX;
    let best = AtomicUsize::new(NONE);
    if deterministic {
        // contiguous chunks, each stopping at its first hit or once a
        // smaller hit is known elsewhere
        let per = batch.len().div_ceil(workers);
        thread::scope(|scope| {
            for (c, chunk) in batch.chunks(per).enumerate() {
                let best = &best;
                scope.spawn(move || {
                    for (i, &p) in chunk.iter().enumerate() {
                        let idx = c * per + i;
                        if idx > best.load(Ordering::Relaxed) {
                            return;
                        }
                        if valid(n, p) {
                            best.fetch_min(idx, Ordering::Relaxed);
                            return;
                        }
                    }
                });
            }
        });
    } else {
        let next = AtomicUsize::new(0);
        let found = AtomicBool::new(false);
        thread::scope(|scope| {
            for _ in 0..workers {
                let (best, next, found) = (&best, &next, &found);
                scope.spawn(move || {
                    while !found.load(Ordering::Relaxed) {
                        let idx = next.fetch_add(1, Ordering::Relaxed);
                        if idx >= batch.len() {
                            return;
                        }
                        if valid(n, batch[idx])
                            && best
                                .compare_exchange(NONE, idx, Ordering::Relaxed, Ordering::Relaxed)
                                .is_ok()
                        {
                            found.store(true, Ordering::Relaxed);
                        }
                    }
                });
            }
        });
    }
    match best.into_inner() {
        NONE => None,
        idx => Some(batch[idx]),
    }
}
