//! Base-2 log-space arithmetic, exact and log-gamma binomials, and the two
//! entropy functions every bound is written in.

use std::cmp::Ordering;
use std::f64::consts::{LN_2, LOG2_E, PI};
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest `n` for which [`log_binomial`] takes the exact integer path.
pub const EXACT_BINOMIAL_MAX_N: u64 = 60;

/// A nonnegative quantity stored as its base-2 logarithm.
///
/// Zero is `-inf`. Multiplication is exact addition of exponents; addition
/// goes through a shifted log-sum-exp so values like `2^(-10^5)` never
/// underflow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogProb {
    log2_value: f64,
}

impl LogProb {
    pub const ZERO: LogProb = LogProb {
        log2_value: f64::NEG_INFINITY,
    };
    pub const ONE: LogProb = LogProb { log2_value: 0.0 };

    /// Wraps a base-2 logarithm. NaN is rejected.
    pub fn from_log2(log2_value: f64) -> Result<Self> {
        if log2_value.is_nan() || log2_value == f64::INFINITY {
            return Err(Error::domain("LogProb", format!("log2 value {log2_value}")));
        }
        Ok(LogProb { log2_value })
    }

    /// Unchecked constructor for internal arithmetic that cannot produce NaN.
    pub(crate) const fn raw(log2_value: f64) -> Self {
        LogProb { log2_value }
    }

    pub fn from_linear(value: f64) -> Result<Self> {
        if !(value >= 0.0) || value.is_infinite() {
            return Err(Error::domain("LogProb", format!("linear value {value}")));
        }
        Ok(LogProb {
            log2_value: value.log2(),
        })
    }

    pub fn from_ln(ln_value: f64) -> Result<Self> {
        Self::from_log2(ln_value * LOG2_E)
    }

    pub fn log2(self) -> f64 {
        self.log2_value
    }

    pub fn ln(self) -> f64 {
        self.log2_value * LN_2
    }

    /// Linear value; underflows to 0 below roughly `2^-1074`.
    pub fn linear(self) -> f64 {
        self.log2_value.exp2()
    }

    pub fn is_zero(self) -> bool {
        self.log2_value == f64::NEG_INFINITY
    }

    /// `self^exponent` for a nonnegative real exponent. `0^0 = 1`.
    pub fn powf(self, exponent: f64) -> LogProb {
        if exponent == 0.0 {
            return LogProb::ONE;
        }
        LogProb::raw(self.log2_value * exponent)
    }

    /// `1 - self` for values in `[0, 1]`, clamped at zero.
    pub fn complement(self) -> LogProb {
        if self.log2_value >= 0.0 {
            return LogProb::ZERO;
        }
        // 1 - 2^x = -expm1(x ln 2)
        let c = -(self.log2_value * LN_2).exp_m1();
        LogProb::raw(c.log2())
    }
}

impl Add for LogProb {
    type Output = LogProb;

    fn add(self, rhs: LogProb) -> LogProb {
        let (hi, lo) = if self.log2_value >= rhs.log2_value {
            (self.log2_value, rhs.log2_value)
        } else {
            (rhs.log2_value, self.log2_value)
        };
        if hi == f64::NEG_INFINITY {
            return LogProb::ZERO;
        }
        let d = lo - hi;
        LogProb::raw(hi + (d.exp2()).ln_1p() * LOG2_E)
    }
}

impl Mul for LogProb {
    type Output = LogProb;

    fn mul(self, rhs: LogProb) -> LogProb {
        // -inf absorbs; -inf + finite stays -inf, which is what we want.
        LogProb::raw(self.log2_value + rhs.log2_value)
    }
}

impl PartialOrd for LogProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.log2_value.partial_cmp(&other.log2_value)
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^({})", self.log2_value)
    }
}

impl std::iter::Sum for LogProb {
    fn sum<I: Iterator<Item = LogProb>>(iter: I) -> LogProb {
        log2_sum_exp(iter.map(LogProb::log2))
    }
}

/// `log2(Σ 2^xᵢ)` computed against the running maximum, with compensated
/// summation of the shifted terms.
pub fn log2_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> LogProb {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogProb::ZERO;
    }
    let mut acc = KahanSum::default();
    for t in &terms {
        acc.add((t - max).exp2());
    }
    LogProb::raw(max + acc.total().log2())
}

/// Neumaier-compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `x · log2(y)` with the convention `0 · log2(0) = 0`.
pub fn xlog2y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.log2()
    }
}

/// Entropy in bits of a thermal state with mean photon number `x`:
/// `g(x) = (x+1) log2(x+1) - x log2 x`, with `g(0) = 0`.
pub fn g_entropy(x: f64) -> Result<f64> {
    if !(x >= 0.0) || x.is_infinite() {
        return Err(Error::domain("g_entropy", format!("mean photon number {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // g(x) = log2(x+1) + x log2(1 + 1/x); the ln_1p form avoids the
    // cancellation in (x+1)/x once x is large.
    let tail = if x < 1e4 {
        x * ((x + 1.0) / x).log2()
    } else {
        x * (1.0 / x).ln_1p() * LOG2_E
    };
    Ok((x + 1.0).log2() + tail)
}

/// Binary entropy `h₂(p)` in bits. Endpoints return exactly zero.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("binary_entropy", format!("probability {p}")));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    let (a, b) = if p <= 0.5 { (p, 1.0 - p) } else { (1.0 - p, p) };
    Ok(-xlog2y(a, a) - xlog2y(b, b))
}

/// Exact binomial coefficient in arbitrary precision.
pub fn binomial_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c *= n - i;
        c /= i + 1;
    }
    c
}

/// `log2` of an arbitrary-precision integer, accurate to f64 rounding.
pub fn log2_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().map_or(f64::NAN, |v| (v as f64).log2());
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).log2() + shift as f64
}

/// `log2 C(n, k)`.
///
/// Exact integer arithmetic for `n ≤ 60`; a log-product for small
/// `min(k, n-k)`; otherwise the Stirling form with the exact error series,
/// which keeps every term positive so no large log-gamma values cancel.
pub fn log_binomial(n: u64, k: u64) -> Result<LogProb> {
    if k > n {
        return Err(Error::domain("log_binomial", format!("k = {k} > n = {n}")));
    }
    let j = k.min(n - k);
    if j == 0 {
        return Ok(LogProb::ONE);
    }
    if n <= EXACT_BINOMIAL_MAX_N {
        let mut c: u128 = 1;
        for i in 0..j {
            c = c * u128::from(n - i) / u128::from(i + 1);
        }
        return Ok(LogProb::raw((c as f64).log2()));
    }
    if j <= 64 {
        let ln: KahanSum = (1..=j)
            .map(|i| ((n - j + i) as f64 / i as f64).ln())
            .collect();
        return Ok(LogProb::raw(ln.total() * LOG2_E));
    }
    let (nf, kf, mf) = (n as f64, k as f64, (n - k) as f64);
    let ln = stirling_error(nf) - stirling_error(kf) - stirling_error(mf)
        + 0.5 * (nf / (2.0 * PI * kf * mf)).ln()
        + kf * (mf / kf).ln_1p()
        + mf * (kf / mf).ln_1p();
    Ok(LogProb::raw(ln * LOG2_E))
}

/// `ln n! - [(n + 1/2) ln n - n + ln √(2π)]` for `n ≥ 16`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nn = n * n;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}
