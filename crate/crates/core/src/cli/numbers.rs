//! Numeric argument parsing: plain integers, `_` separators, `b^k` powers and
//! binary size suffixes.

/// Parses `1000000`, `1_000_000` or `10^6` into an exact `u64`.
pub fn parse_u64(s: &str) -> Result<u64, String> {
    let cleaned: String = s.trim().chars().filter(|&c| c != '_').collect();
    let err = || format!("invalid integer {s:?}");
    if let Some((base, exp)) = cleaned.split_once('^') {
        let base: u64 = digits(base).ok_or_else(err)?;
        let exp: u32 = digits(exp)
            .and_then(|e| u32::try_from(e).ok())
            .ok_or_else(err)?;
        return base
            .checked_pow(exp)
            .ok_or_else(|| format!("{s:?} overflows 64 bits"));
    }
    digits(&cleaned).ok_or_else(err)
}

fn digits(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Like [`parse_u64`], also accepting `KiB`, `MiB` and `GiB` suffixes.
pub fn parse_bytes(s: &str) -> Result<u64, String> {
    let t = s.trim();
    for (suffix, scale) in [("KiB", 1u64 << 10), ("MiB", 1 << 20), ("GiB", 1 << 30)] {
        if let Some(num) = t.strip_suffix(suffix) {
            return parse_u64(num)?
                .checked_mul(scale)
                .ok_or_else(|| format!("{s:?} overflows 64 bits"));
        }
    }
    parse_u64(t)
}

/// Worker count; `-1` means every logical CPU.
pub fn parse_workers(s: &str) -> Result<usize, String> {
    if s.trim() == "-1" {
        return Ok(std::thread::available_parallelism().map_or(1, |n| n.get()));
    }
    match parse_u64(s)? {
        0 => Err("workers must be at least 1, or -1 for all CPUs".into()),
        n => usize::try_from(n).map_err(|e| e.to_string()),
    }
}
