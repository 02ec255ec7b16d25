//! Goldbach partition search for even integers of any size.
//!
//! Small primes `p` are tried in ascending batches. Inside a batch, workers
//! claim one prime at a time, compute `q = n - p` exactly, and run a
//! probabilistic Miller–Rabin test on it. A full barrier separates batches so
//! no worker can race ahead to large `p` while others are still busy with
//! expensive tests on earlier candidates.

use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::PrimeList;

pub const DEFAULT_BATCH: usize = 1_000;
pub const DEFAULT_ROUNDS: u32 = 25;
pub const DEFAULT_SEED: u64 = 0x5EED_1234;
/// Candidate primes are drawn from `[2, PRIME_POOL_BOUND]`.
pub const PRIME_POOL_BOUND: u64 = 10_000_000;

/// Trial divisors below 1000; a survivor below 1000^2 is prime.
const TRIAL_BOUND: u64 = 1_000;

/// An even integer `>= 4` with its canonical decimal digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigEven {
    digits: String,
    value: BigUint,
}

impl BigEven {
    pub fn new(value: BigUint) -> Result<Self> {
        if value < BigUint::from(4u32) || value.is_odd() {
            return Err(Error::NotEvenAtLeastFour {
                n: value.to_string(),
            });
        }
        Ok(Self {
            digits: value.to_str_radix(10),
            value,
        })
    }

    /// `10^k`, exactly.
    pub fn power_of_ten(k: u32) -> Result<Self> {
        Self::new(BigUint::from(10u32).pow(k))
    }

    pub fn digits(&self) -> &str {
        &self.digits
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }
}

impl FromStr for BigEven {
    type Err = Error;

    /// Accepts plain decimal digits (underscores allowed) or `10^k`.
    fn from_str(s: &str) -> Result<Self> {
        let cleaned: String = s.trim().chars().filter(|&c| c != '_').collect();
        if let Some((base, exp)) = cleaned.split_once('^') {
            let malformed = || Error::MalformedNumber(s.to_owned());
            let base: BigUint = parse_digits(base).ok_or_else(malformed)?;
            let exp: u32 = exp.parse().map_err(|_| malformed())?;
            return Self::new(base.pow(exp));
        }
        let value = parse_digits(&cleaned).ok_or_else(|| Error::MalformedNumber(s.to_owned()))?;
        Self::new(value)
    }
}

fn parse_digits(s: &str) -> Option<BigUint> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigUint::parse_bytes(s.as_bytes(), 10)
}

/// `n = p + q` with `p` a proven small prime and `q` a probable prime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigPartition {
    pub p: u64,
    /// Decimal digits of `q`.
    pub q: String,
    /// Miller–Rabin rounds `q` passed; `0` means `q` was proven prime by
    /// trial division.
    pub rounds: u32,
}

fn small_trial_primes() -> &'static [u64] {
    use std::sync::OnceLock;
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| PrimeList::up_to(TRIAL_BOUND).values().to_vec())
}

/// How a probable-prime verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Composite,
    /// Proven by trial division.
    Prime,
    ProbablePrime,
}

/// Trial division by primes below 1000, then `rounds` Miller–Rabin rounds
/// with bases uniform in `[2, q - 2]` drawn from `rng`.
///
/// A composite verdict is always correct; a composite passes all rounds with
/// probability at most `4^-rounds`.
pub fn probable_prime(q: &BigUint, rounds: u32, rng: &mut impl Rng) -> Result<bool> {
    Ok(classify(q, rounds, rng)? != Verdict::Composite)
}

pub fn classify(q: &BigUint, rounds: u32, rng: &mut impl Rng) -> Result<Verdict> {
    if *q < BigUint::from(2u32) {
        return Err(Error::InvalidConfig(format!(
            "primality of {q} is undefined"
        )));
    }
    if rounds == 0 {
        return Err(Error::InvalidConfig(
            "at least one round is required".into(),
        ));
    }
    if let Some(small) = q.to_u64() {
        if small < TRIAL_BOUND * TRIAL_BOUND {
            return Ok(if crate::primes::is_prime_trial(small) {
                Verdict::Prime
            } else {
                Verdict::Composite
            });
        }
    }
    for &d in small_trial_primes() {
        if (q % d).is_zero() {
            return Ok(Verdict::Composite);
        }
    }

    let one = BigUint::one();
    let q_minus_1 = q - &one;
    let s = q_minus_1.trailing_zeros().expect("q - 1 is nonzero");
    let d = &q_minus_1 >> s;
    let low = BigUint::from(2u32);
    let high = q - &one; // exclusive upper end: bases in [2, q - 2]
    'round: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&low, &high);
        let mut x = a.modpow(&d, q);
        if x == one || x == q_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = &x * &x % q;
            if x == q_minus_1 {
                continue 'round;
            }
        }
        return Ok(Verdict::Composite);
    }
    Ok(Verdict::ProbablePrime)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BigOptions {
    pub workers: usize,
    pub batch: usize,
    pub rounds: u32,
    pub seed: u64,
    pub deterministic: bool,
}

impl Default for BigOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            batch: DEFAULT_BATCH,
            rounds: DEFAULT_ROUNDS,
            seed: DEFAULT_SEED,
            deterministic: false,
        }
    }
}

/// Generator for the Miller–Rabin bases of the candidate `p`, so a verdict
/// depends on `(seed, p)` only and never on scheduling.
fn rng_for(seed: u64, p: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// One worker's start or end of one batch, stamped from a global sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchEvent {
    pub seq: u64,
    pub worker: usize,
    pub batch: usize,
    pub start: bool,
}

/// Ordered record of every batch start and end.
#[derive(Debug, Default)]
pub struct BatchTrace {
    pub events: Vec<BatchEvent>,
}

impl BatchTrace {
    /// True when every worker finished batch `k` before any worker started
    /// batch `k + 1`.
    pub fn barrier_respected(&self) -> bool {
        let batches = self.events.iter().map(|e| e.batch + 1).max().unwrap_or(0);
        (1..batches).all(|k| {
            let last_end = self
                .events
                .iter()
                .filter(|e| e.batch == k - 1 && !e.start)
                .map(|e| e.seq)
                .max();
            let first_start = self
                .events
                .iter()
                .filter(|e| e.batch == k && e.start)
                .map(|e| e.seq)
                .min();
            match (last_end, first_start) {
                (Some(end), Some(start)) => end < start,
                _ => true,
            }
        })
    }

    pub fn batches(&self) -> usize {
        self.events.iter().map(|e| e.batch + 1).max().unwrap_or(0)
    }
}

pub fn check_big(n: &BigEven, opts: &BigOptions) -> Result<BigPartition> {
    search(n, opts, None)
}

/// As [`check_big`], recording batch boundaries into `trace`.
pub fn check_big_traced(
    n: &BigEven,
    opts: &BigOptions,
    trace: &mut BatchTrace,
) -> Result<BigPartition> {
    search(n, opts, Some(trace))
}

fn search(n: &BigEven, opts: &BigOptions, trace: Option<&mut BatchTrace>) -> Result<BigPartition> {
    if opts.workers == 0 || opts.batch == 0 || opts.rounds == 0 {
        return Err(Error::InvalidConfig(
            "workers, batch and rounds must be positive".into(),
        ));
    }
    let half = n.value() >> 1u32;
    let pool_bound = half
        .to_u64()
        .map_or(PRIME_POOL_BOUND, |h| h.min(PRIME_POOL_BOUND));
    let pool = PrimeList::up_to(pool_bound);

    let seq = AtomicU64::new(0);
    let events = Mutex::new(Vec::new());
    let tracing = trace.is_some();

    for (batch_no, batch) in pool.values().chunks(opts.batch).enumerate() {
        if let Some(found) =
            search_batch(n, batch, batch_no, opts, tracing.then_some((&seq, &events)))
        {
            if let Some(trace) = trace {
                trace.events = events.into_inner().expect("no poisoned lock");
            }
            return Ok(found);
        }
    }
    if let Some(trace) = trace {
        trace.events = events.into_inner().expect("no poisoned lock");
    }
    if pool_bound < PRIME_POOL_BOUND {
        // every p <= n / 2 failed, and a Miller–Rabin "composite" is never wrong
        Err(Error::Counterexample {
            n: n.digits().to_owned(),
        })
    } else {
        Err(Error::Inconclusive {
            n: n.digits().to_owned(),
            bound: PRIME_POOL_BOUND,
        })
    }
}

type Tracer<'a> = (&'a AtomicU64, &'a Mutex<Vec<BatchEvent>>);

fn search_batch(
    n: &BigEven,
    batch: &[u64],
    batch_no: usize,
    opts: &BigOptions,
    tracer: Option<Tracer<'_>>,
) -> Option<BigPartition> {
    const NONE: usize = usize::MAX;
    let next = AtomicUsize::new(0);
    let found = AtomicBool::new(false);
    let best = AtomicUsize::new(NONE);
    let verdicts: Mutex<Vec<(usize, Verdict)>> = Mutex::new(Vec::new());
    let stamp = |worker: usize, start: bool| {
        if let Some((seq, events)) = tracer {
            let mut events = events.lock().expect("no poisoned lock");
            let seq = seq.fetch_add(1, Ordering::SeqCst);
            events.push(BatchEvent {
                seq,
                worker,
                batch: batch_no,
                start,
            });
        }
    };

    thread::scope(|scope| {
        for worker in 0..opts.workers {
            let (next, found, best, verdicts, stamp) = (&next, &found, &best, &verdicts, &stamp);
            scope.spawn(move || {
                stamp(worker, true);
                loop {
                    if !opts.deterministic && found.load(Ordering::Acquire) {
                        break;
                    }
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    if idx >= batch.len() || idx > best.load(Ordering::Acquire) {
                        break;
                    }
                    let p = batch[idx];
                    let q = n.value() - p;
                    let verdict = classify(&q, opts.rounds, &mut rng_for(opts.seed, p))
                        .expect("q >= 2 and rounds >= 1");
                    if verdict == Verdict::Composite {
                        continue;
                    }
                    verdicts
                        .lock()
                        .expect("no poisoned lock")
                        .push((idx, verdict));
                    if opts.deterministic {
                        best.fetch_min(idx, Ordering::AcqRel);
                    } else if best
                        .compare_exchange(NONE, idx, Ordering::AcqRel, Ordering::Acquire)
                        .is_ok()
                    {
                        found.store(true, Ordering::Release);
                    }
                }
                stamp(worker, false);
            });
        }
    });

    let idx = best.into_inner();
    if idx == NONE {
        return None;
    }
    let verdict = verdicts
        .into_inner()
        .expect("no poisoned lock")
        .into_iter()
        .find(|&(i, _)| i == idx)
        .map(|(_, v)| v)
        .expect("winning index recorded");
    let p = batch[idx];
    Some(BigPartition {
        p,
        q: (n.value() - p).to_str_radix(10),
        rounds: if verdict == Verdict::Prime {
            0
        } else {
            opts.rounds
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn parsing() {
        assert_eq!("4".parse::<BigEven>().unwrap().digits(), "4");
        assert_eq!("1_000".parse::<BigEven>().unwrap().digits(), "1000");
        assert_eq!("0010".parse::<BigEven>().unwrap().digits(), "10");
        let e = "10^50".parse::<BigEven>().unwrap();
        assert_eq!(e.digits().len(), 51);
        assert_eq!(e, BigEven::power_of_ten(50).unwrap());
        for bad in [
            "", "-4", "+4", "4.0", "abc", "10^", "^3", "7", "2", "0", "10^0",
        ] {
            assert!(bad.parse::<BigEven>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn probable_prime_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(!probable_prime(&BigUint::from(4u32), 25, &mut rng).unwrap());
        assert!(probable_prime(&BigUint::from(2u32), 25, &mut rng).unwrap());
        assert!(probable_prime(&BigUint::from((1u64 << 61) - 1), 25, &mut rng).unwrap());
        assert!(!probable_prime(&BigUint::from(3_215_031_751u64), 25, &mut rng).unwrap());
        assert!(probable_prime(&BigUint::from(1u32), 25, &mut rng).is_err());
        assert!(probable_prime(&BigUint::from(7u32), 0, &mut rng).is_err());
        // 2^127 - 1 is prime, 2^128 + 1 is not
        let m127 = (BigUint::one() << 127u32) - 1u32;
        assert!(probable_prime(&m127, 25, &mut rng).unwrap());
        let f7 = (BigUint::one() << 128u32) + 1u32;
        assert!(!probable_prime(&f7, 25, &mut rng).unwrap());
    }

    #[test]
    fn agrees_with_trial_division_below_1e6() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for q in (2..1_000_000u64).step_by(if seed == 0 { 1 } else { 7 }) {
                assert_eq!(
                    probable_prime(&BigUint::from(q), 25, &mut rng).unwrap(),
                    trial(q),
                    "q = {q}"
                );
            }
        }
    }

    #[test]
    fn rounds_reach_miller_rabin_above_trial_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for q in (1_000_001u64..1_020_000).step_by(2) {
            assert_eq!(
                probable_prime(&BigUint::from(q), 25, &mut rng).unwrap(),
                trial(q),
                "q = {q}"
            );
        }
        // Chernick Carmichael numbers with every factor above the trial bound
        for c in [9_624_742_921u64, 11_346_205_609, 13_079_177_569] {
            assert!(!probable_prime(&BigUint::from(c), 25, &mut rng).unwrap());
        }
    }

    #[test]
    fn four_short_circuits() {
        let r = check_big(&"4".parse().unwrap(), &BigOptions::default()).unwrap();
        assert_eq!(
            r,
            BigPartition {
                p: 2,
                q: "2".into(),
                rounds: 0
            }
        );
    }

    #[test]
    fn small_inputs_are_minimal() {
        let opts = BigOptions {
            deterministic: true,
            workers: 3,
            batch: 5,
            ..BigOptions::default()
        };
        for n in (4..=2_000u64).step_by(2) {
            let expect = (2..=n / 2).find(|&p| trial(p) && trial(n - p)).unwrap();
            let got = check_big(&n.to_string().parse().unwrap(), &opts).unwrap();
            assert_eq!(got.p, expect, "n = {n}");
        }
    }

    #[test]
    fn barrier_between_batches() {
        let n = BigEven::power_of_ten(60).unwrap();
        for deterministic in [true, false] {
            let opts = BigOptions {
                workers: 4,
                batch: 7,
                deterministic,
                ..BigOptions::default()
            };
            let mut trace = BatchTrace::default();
            let r = check_big_traced(&n, &opts, &mut trace).unwrap();
            assert!(trace.batches() > 1);
            assert!(trace.barrier_respected());
            assert_eq!(
                trace.events.iter().filter(|e| e.start).count(),
                4 * trace.batches()
            );
            let q: BigUint = r.q.parse().unwrap();
            assert_eq!(q + r.p, *n.value());
        }
    }

    #[test]
    fn trace_detects_violation() {
        let ev = |seq, batch, start| BatchEvent {
            seq,
            worker: 0,
            batch,
            start,
        };
        let ok = BatchTrace {
            events: vec![
                ev(0, 0, true),
                ev(1, 0, false),
                ev(2, 1, true),
                ev(3, 1, false),
            ],
        };
        assert!(ok.barrier_respected());
        let bad = BatchTrace {
            events: vec![
                ev(0, 0, true),
                ev(1, 1, true),
                ev(2, 0, false),
                ev(3, 1, false),
            ],
        };
        assert!(!bad.barrier_respected());
    }

    #[test]
    fn deterministic_independent_of_workers() {
        let n = BigEven::power_of_ten(80).unwrap();
        let ps: Vec<u64> = [1, 4, 8]
            .iter()
            .map(|&workers| {
                let opts = BigOptions {
                    workers,
                    batch: 16,
                    deterministic: true,
                    ..BigOptions::default()
                };
                check_big(&n, &opts).unwrap().p
            })
            .collect();
        assert!(ps.windows(2).all(|w| w[0] == w[1]), "{ps:?}");
    }
}
