//! Odd-only bit-packed prime tables and the sieves that fill them.
//!
//! A table stores one bit per odd integer in `[base, limit]`; the odd value
//! `n` lives at offset `(n - base) / 2`, split into a 64-bit word index and a
//! bit position. Even integers, including the prime 2, are never stored.
//! The global table, the resident small-primes table and every per-segment
//! table are all [`OddBitset`]s that differ only in their base.

use std::thread;

use crate::error::{Error, Result};

const WORD_BITS: u64 = 64;

/// Word and bit position of the odd value `n` in a table starting at `base`.
pub fn bit_index(n: u64, base: u64) -> Result<(usize, u32)> {
    if n.is_multiple_of(2) || base.is_multiple_of(2) || n < base {
        return Err(Error::NotRepresentable { n, base });
    }
    let offset = (n - base) / 2;
    Ok(((offset / WORD_BITS) as usize, (offset % WORD_BITS) as u32))
}

/// Bit-per-odd-integer primality table over `[base, limit]`.
#[derive(Clone, PartialEq, Eq)]
pub struct OddBitset {
    base: u64,
    limit: u64,
    words: Vec<u64>,
}

impl std::fmt::Debug for OddBitset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OddBitset")
            .field("base", &self.base)
            .field("limit", &self.limit)
            .field("words", &self.words.len())
            .finish()
    }
}

impl OddBitset {
    /// Table with every represented odd value marked.
    pub fn all_set(base: u64, limit: u64) -> Result<Self> {
        if base < 3 || base.is_multiple_of(2) || limit < base {
            return Err(Error::InvalidWindow {
                lo: base,
                hi: limit,
            });
        }
        let bits = bit_count(base, limit);
        let mut words = vec![u64::MAX; word_count(bits)];
        let tail = bits % WORD_BITS;
        if tail != 0 {
            *words.last_mut().expect("at least one word") = (1u64 << tail) - 1;
        }
        Ok(Self { base, limit, words })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Heap bytes held by the word array.
    pub fn byte_len(&self) -> usize {
        self.words.len() * std::mem::size_of::<u64>()
    }

    /// True when `n` is odd and inside `[base, limit]`.
    #[inline]
    pub fn covers(&self, n: u64) -> bool {
        n % 2 == 1 && n >= self.base && n <= self.limit
    }

    /// Reads the bit for `n`. The caller guarantees `self.covers(n)`.
    #[inline]
    pub fn get(&self, n: u64) -> bool {
        debug_assert!(
            self.covers(n),
            "{n} outside [{}, {}]",
            self.base,
            self.limit
        );
        let offset = (n - self.base) >> 1;
        (self.words[(offset >> 6) as usize] >> (offset & 63)) & 1 == 1
    }

    /// Reads the bit for `n`, rejecting values the table does not represent.
    pub fn try_get(&self, n: u64) -> Result<bool> {
        if !self.covers(n) {
            return Err(Error::NotRepresentable { n, base: self.base });
        }
        Ok(self.get(n))
    }

    pub fn set(&mut self, n: u64) -> Result<()> {
        let (w, b) = self.checked_index(n)?;
        self.words[w] |= 1u64 << b;
        Ok(())
    }

    pub fn clear(&mut self, n: u64) -> Result<()> {
        let (w, b) = self.checked_index(n)?;
        self.words[w] &= !(1u64 << b);
        Ok(())
    }

    fn checked_index(&self, n: u64) -> Result<(usize, u32)> {
        if n > self.limit {
            return Err(Error::NotRepresentable { n, base: self.base });
        }
        bit_index(n, self.base)
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Ascending iterator over the odd values whose bit is set.
    pub fn iter_ones(&self) -> impl Iterator<Item = u64> + '_ {
        let base = self.base;
        self.words.iter().enumerate().flat_map(move |(i, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = u64::from(w.trailing_zeros());
                w &= w - 1;
                Some(base + 2 * (i as u64 * WORD_BITS + b))
            })
        })
    }
}

fn bit_count(base: u64, limit: u64) -> u64 {
    (limit - base) / 2 + 1
}

fn word_count(bits: u64) -> usize {
    bits.div_ceil(WORD_BITS) as usize
}

/// Ascending primes up to an inclusive bound, 2 included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeList {
    values: Vec<u64>,
    upper_bound: u64,
}

impl PrimeList {
    /// All primes `<= bound`.
    pub fn up_to(bound: u64) -> Self {
        if bound < 3 {
            let values = if bound == 2 { vec![2] } else { Vec::new() };
            return Self {
                values,
                upper_bound: bound,
            };
        }
        let table = simple_sieve(bound).expect("bound >= 3");
        primes_list(&table)
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn upper_bound(&self) -> u64 {
        self.upper_bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn byte_len(&self) -> usize {
        self.values.capacity() * std::mem::size_of::<u64>()
    }
}

/// Sieve of Eratosthenes over `[3, limit]`, odd values only.
pub fn simple_sieve(limit: u64) -> Result<OddBitset> {
    if limit < 3 {
        return Err(Error::SieveLimitTooSmall { limit });
    }
    let mut table = OddBitset::all_set(3, limit)?;
    let root = limit.isqrt();
    let mut p = 3;
    while p <= root {
        if table.get(p) {
            // offsets are relative to base 3; p*p is odd and <= limit
            let mut offset = (p * p - 3) / 2;
            let last = (limit - 3) / 2;
            while offset <= last {
                table.words[(offset >> 6) as usize] &= !(1u64 << (offset & 63));
                offset += p;
            }
        }
        p += 2;
    }
    Ok(table)
}

/// Clears the composite bits of a table covering `[base, limit]`.
///
/// `words` must start with every represented bit set. `base_primes` must
/// contain every odd prime up to `isqrt(limit)`; entries of 2 or above the
/// root are ignored.
fn sieve_words(words: &mut [u64], base: u64, limit: u64, base_primes: &[u64]) {
    let root = limit.isqrt();
    let last = (limit - base) / 2;
    for &p in base_primes.iter().skip_while(|&&p| p < 3) {
        if p > root {
            break;
        }
        let square = p * p;
        let start = if square >= base {
            square
        } else {
            let mut m = base.div_ceil(p) * p;
            if m % 2 == 0 {
                m += p;
            }
            m
        };
        if start > limit {
            continue;
        }
        let mut offset = (start - base) / 2;
        while offset <= last {
            words[(offset >> 6) as usize] &= !(1u64 << (offset & 63));
            offset += p;
        }
    }
}

/// Sieve of the odd values in `[lo, hi]` using precomputed base primes.
///
/// A base-prime table that stops short of `isqrt(hi)` is rejected rather than
/// producing a table with unmarked composites.
pub fn segmented_sieve(lo: u64, hi: u64, base_primes: &PrimeList) -> Result<OddBitset> {
    if lo > hi || lo < 3 || lo.is_multiple_of(2) {
        return Err(Error::InvalidWindow { lo, hi });
    }
    let need = hi.isqrt();
    if base_primes.upper_bound() < need {
        return Err(Error::InsufficientBasePrimes {
            have: base_primes.upper_bound(),
            need,
        });
    }
    let mut table = OddBitset::all_set(lo, hi)?;
    sieve_words(&mut table.words, lo, hi, base_primes.values());
    Ok(table)
}

/// Chunk-parallel sieve of `[3, limit]`.
///
/// Each thread owns a disjoint run of whole words, so no two threads touch the
/// same word. Produces the same table as [`simple_sieve`].
pub fn parallel_sieve(limit: u64, threads: usize) -> Result<OddBitset> {
    let threads = threads.max(1);
    if threads == 1 {
        return simple_sieve(limit);
    }
    let base_primes = PrimeList::up_to(limit.isqrt().max(3));
    let mut table = OddBitset::all_set(3, limit)?;
    let per_thread = table.words.len().div_ceil(threads).max(1);
    thread::scope(|scope| {
        for (i, chunk) in table.words.chunks_mut(per_thread).enumerate() {
            let base_primes = base_primes.values();
            let chunk_base = 3 + 2 * WORD_BITS * (i * per_thread) as u64;
            let chunk_bits = chunk.len() as u64 * WORD_BITS;
            let chunk_limit = (chunk_base + 2 * (chunk_bits - 1)).min(limit);
            scope.spawn(move || sieve_words(chunk, chunk_base, chunk_limit, base_primes));
        }
    });
    Ok(table)
}

/// Materializes a base-3 table as an ascending prime list with 2 prepended.
pub fn primes_list(table: &OddBitset) -> PrimeList {
    assert_eq!(table.base(), 3, "prime lists are built from base-3 tables");
    let mut values = Vec::with_capacity(table.count_ones() as usize + 1);
    values.push(2);
    values.extend(table.iter_ones());
    PrimeList {
        values,
        upper_bound: table.limit(),
    }
}

/// Bytes of a base-3 odd-only table covering `[3, limit]`.
pub fn bitset_bytes(limit: u64) -> u64 {
    if limit < 3 {
        return 0;
    }
    word_count(bit_count(3, limit)) as u64 * 8
}

/// Bytes of a one-byte-per-integer table covering `[0, limit)`.
pub fn byte_array_bytes(limit: u64) -> u64 {
    limit
}

/// Bytes expressed in binary mebibytes.
pub fn to_mib(bytes: u64) -> f64 {
    bytes as f64 / (1u64 << 20) as f64
}

/// Trial-division primality, independent of the Miller–Rabin path.
pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d <= n / d {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}
