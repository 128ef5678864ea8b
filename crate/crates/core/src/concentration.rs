//! Exact tails and their bounds for the three families the converse and the
//! code-existence argument use: binomial photon transmission (with the
//! Hoeffding bound), sums of geometric photon numbers (with the optimized
//! exponential-moment constant), and a seeded Monte Carlo cross-check.
//!
//! Conventions: tails are `Pr{Σ ≥ T}` and shadows `Pr{Σ ≤ L}`, so
//! `tail(T) = 1 - shadow(T - 1)`.

use rand::RngCore;
use rand_distr::{Binomial, Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock::PhotonDistribution;
use crate::numerics::{log2_sum_exp, log_binomial, xlog2y, LogProb};
use crate::rng::{keyed_rng, open_unit, Domain};
use crate::{Error, Result};

/// `K ~ Binomial(S, η)`: how many of `S` photons survive a beamsplitter of
/// transmissivity `η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialTransmission {
    pub trials: u64,
    pub success_prob: f64,
}

impl BinomialTransmission {
    pub fn new(trials: u64, success_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&success_prob) {
            return Err(Error::domain("BinomialTransmission", format!("probability {success_prob}")));
        }
        Ok(BinomialTransmission { trials, success_prob })
    }

    pub fn log_pmf(&self, k: u64) -> LogProb {
        if k > self.trials {
            return LogProb::ZERO;
        }
        let eta = self.success_prob;
        let Ok(c) = log_binomial(self.trials, k) else {
            return LogProb::ZERO;
        };
        let log2 = c.log2() + xlog2y(k as f64, eta) + xlog2y((self.trials - k) as f64, 1.0 - eta);
        if log2.is_nan() {
            LogProb::ZERO
        } else {
            LogProb::raw(log2)
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.log_pmf(k).linear()
    }

    pub fn distribution(&self) -> PhotonDistribution {
        let pmf = (0..=self.trials).map(|k| self.log_pmf(k).log2()).collect();
        PhotonDistribution::from_log2_pmf(pmf, 0.0).expect("binomial pmf is a distribution")
    }

    pub fn mean(&self) -> f64 {
        self.trials as f64 * self.success_prob
    }
}

/// Exact `Pr{K ≤ threshold}`.
pub fn binomial_tail_below(dist: BinomialTransmission, threshold: u64) -> f64 {
    log_binomial_tail_below(dist, threshold).linear().min(1.0)
}

/// As [`binomial_tail_below`] in log space. Sums whichever side of the
/// threshold is shorter and takes the complement when that is the upper side.
pub fn log_binomial_tail_below(dist: BinomialTransmission, threshold: u64) -> LogProb {
    if threshold >= dist.trials {
        return LogProb::ONE;
    }
    let lower_terms = threshold + 1;
    let upper_terms = dist.trials - threshold;
    if lower_terms <= upper_terms || (threshold as f64) < dist.mean() {
        log2_sum_exp((0..=threshold).map(|k| dist.log_pmf(k).log2()))
    } else {
        let upper = log2_sum_exp((threshold + 1..=dist.trials).map(|k| dist.log_pmf(k).log2()));
        upper.complement()
    }
}

/// Hoeffding: `Pr{K ≤ S(η + δ₃)} ≥ 1 - exp(-2 δ₃² S)` for any `η`.
pub fn hoeffding_lower_bound(trials: u64, delta3: f64) -> Result<f64> {
    if !(delta3 > 0.0) {
        return Err(Error::domain("hoeffding_lower_bound", format!("delta3 {delta3}")));
    }
    Ok(-(-2.0 * delta3 * delta3 * trials as f64).exp_m1())
}

/// The integer threshold `⌈S(η + δ₃)⌉` the Hoeffding bound is compared at.
pub fn hoeffding_threshold(trials: u64, eta: f64, delta3: f64) -> u64 {
    (trials as f64 * (eta + delta3)).ceil() as u64
}

/// Geometric photon number `Pr{Z = k} = pᵏ(1 - p)` with mean `μ = p/(1-p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricLaw {
    param: f64,
    mean: f64,
}

impl GeometricLaw {
    pub fn new(param: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&param) {
            return Err(Error::domain("GeometricLaw", format!("param {param}")));
        }
        Ok(GeometricLaw {
            param,
            mean: param / (1.0 - param),
        })
    }

    /// The law of a thermal state's photon number. The mean is stored as
    /// given so thresholds `n(μ + δ)` are not perturbed by a round trip.
    pub fn from_mean(mean: f64) -> Result<Self> {
        if !(mean >= 0.0) || mean.is_infinite() {
            return Err(Error::domain("GeometricLaw", format!("mean {mean}")));
        }
        Ok(GeometricLaw {
            param: mean / (mean + 1.0),
            mean,
        })
    }

    pub fn param(&self) -> f64 {
        self.param
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Pmf of the sum of `n` independent copies (negative binomial).
    pub fn sum_log_pmf(&self, n: u64, k: u64) -> LogProb {
        if n == 0 {
            return if k == 0 { LogProb::ONE } else { LogProb::ZERO };
        }
        let p = self.param;
        let c = log_binomial(k + n - 1, n - 1).expect("k + n - 1 >= n - 1");
        let log2 = c.log2() + xlog2y(k as f64, p) + n as f64 * (1.0 - p).log2();
        if log2.is_nan() {
            LogProb::ZERO
        } else {
            LogProb::raw(log2)
        }
    }
}

/// Exact `Pr{Z₁ + … + Zₙ ≥ threshold}`.
pub fn geometric_sum_tail_at_least(law: GeometricLaw, n: u64, threshold: u64) -> LogProb {
    if threshold == 0 {
        return LogProb::ONE;
    }
    if law.param == 0.0 || n == 0 {
        return LogProb::ZERO;
    }
    let mean = n as f64 * law.mean;
    if (threshold as f64) <= mean {
        let lower = log2_sum_exp((0..threshold).map(|k| law.sum_log_pmf(n, k).log2()));
        return lower.complement();
    }
    // Beyond the mean the terms decrease monotonically; sum until they stop
    // contributing.
    let mut terms = Vec::new();
    let mut running = LogProb::ZERO;
    let mut k = threshold;
    loop {
        let t = law.sum_log_pmf(n, k);
        terms.push(t.log2());
        running = running + t;
        if t.is_zero() || t.log2() < running.log2() - 60.0 {
            break;
        }
        k += 1;
    }
    log2_sum_exp(terms)
}

/// Exact `Pr{(1/n) Σ Zᵢ ≥ μ + δ}`, i.e. the tail at `⌈n(μ + δ)⌉`.
pub fn geometric_sum_tail_above(law: GeometricLaw, n: u64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("geometric_sum_tail_above", "n must be positive"));
    }
    if !(delta > 0.0) {
        return Err(Error::domain("geometric_sum_tail_above", format!("delta {delta}")));
    }
    let threshold = (n as f64 * (law.mean + delta)).ceil() as u64;
    Ok(geometric_sum_tail_at_least(law, n, threshold).linear().min(1.0))
}

/// Minimizer of the exponential-moment ratio over the tilt `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernoffOptimum {
    pub t_star: f64,
    pub x_star: f64,
    /// `C(δ, p) = E{e^{tZ}} / e^{t(μ+δ)}` at the optimum.
    pub constant: f64,
    /// `ln C`, for forming `Cⁿ` without underflow.
    pub ln_constant: f64,
    /// `d/dx ln f` at `x_star`; zero at an interior stationary point.
    pub gradient: f64,
    /// True when the optimum sits on the edge of the search bracket.
    pub at_boundary: bool,
}

impl ChernoffOptimum {
    /// The tail bound `Cⁿ`.
    pub fn tail_bound(&self, n: u64) -> LogProb {
        LogProb::raw(self.ln_constant * n as f64 * std::f64::consts::LOG2_E)
    }
}

const BRACKET_MARGIN: f64 = 1e-9;
const GOLDEN_TOL: f64 = 1e-12;

/// `ln f(x)` with `f(x) = [(1-p)/(1-px)] · x^{-(μ+δ)}`, `x = eᵗ`.
fn log_moment_ratio(x: f64, p: f64, a: f64) -> f64 {
    (1.0 - p).ln() - (-p * x).ln_1p() - a * x.ln()
}

fn log_moment_ratio_gradient(x: f64, p: f64, a: f64) -> f64 {
    p / (1.0 - p * x) - a / x
}

/// `C(δ, p) = inf_{t>0} E{e^{tZ}} / e^{t(μ+δ)}` for a geometric `Z`, by
/// golden-section search on `x = eᵗ ∈ (1, 1/p)`.
pub fn chernoff_constant(delta: f64, p: f64) -> Result<ChernoffOptimum> {
    if !(delta > 0.0) || delta.is_infinite() {
        return Err(Error::domain("chernoff_constant", format!("delta {delta}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("chernoff_constant", format!("p {p}")));
    }
    let a = p / (1.0 - p) + delta;
    let f = |x: f64| log_moment_ratio(x, p, a);
    let (lo0, hi0) = (1.0 + BRACKET_MARGIN, 1.0 / p - BRACKET_MARGIN);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (lo0, hi0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > GOLDEN_TOL * hi.max(1.0) {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mut x_star = 0.5 * (lo + hi);
    // Value comparisons stall near √ε relative width. ln f is convex, so
    // the sign of the derivative brackets the minimizer down to round-off.
    let grad = |x: f64| log_moment_ratio_gradient(x, p, a);
    let w = 1e-6 * x_star;
    let (mut gl, mut gh) = ((x_star - w).max(lo0), (x_star + w).min(hi0));
    if !(grad(gl) < 0.0 && grad(gh) > 0.0) {
        (gl, gh) = (lo0, hi0);
    }
    if grad(gl) < 0.0 && grad(gh) > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (gl + gh);
            if mid <= gl || mid >= gh {
                break;
            }
            if grad(mid) < 0.0 {
                gl = mid;
            } else {
                gh = mid;
            }
        }
        x_star = 0.5 * (gl + gh);
    }
    let ln_constant = f(x_star);
    let at_boundary = x_star - lo0 < 10.0 * GOLDEN_TOL || hi0 - x_star < 10.0 * GOLDEN_TOL;
    Ok(ChernoffOptimum {
        t_star: x_star.ln(),
        x_star,
        constant: ln_constant.exp(),
        ln_constant,
        gradient: log_moment_ratio_gradient(x_star, p, a),
        at_boundary,
    })
}

/// What to estimate by sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailQuery {
    /// `Pr{K ≤ threshold}` for `K ~ Binomial(trials, η)`.
    BinomialBelow { dist: BinomialTransmission, threshold: u64 },
    /// `Pr{Z₁ + … + Zₙ ≥ threshold}`.
    GeometricSumAtLeast { law: GeometricLaw, n: u64, threshold: u64 },
}

impl TailQuery {
    pub fn exact(&self) -> f64 {
        match *self {
            TailQuery::BinomialBelow { dist, threshold } => binomial_tail_below(dist, threshold),
            TailQuery::GeometricSumAtLeast { law, n, threshold } => {
                geometric_sum_tail_at_least(law, n, threshold).linear().min(1.0)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub estimate: f64,
    /// Binomial standard error `√(p̂(1-p̂)/samples)`.
    pub stderr: f64,
    pub samples: u64,
}

/// Samples per keyed batch. Each batch owns one stream of the counter space.
pub const MC_BATCH: u64 = 4096;

/// Frequency estimate of a tail probability. Batches are keyed by index and
/// their hit counts are integers, so the estimate is identical for any
/// thread count.
pub fn monte_carlo_tail(query: TailQuery, samples: u64, seed: u64) -> Result<TailEstimate> {
    if samples == 0 {
        return Err(Error::domain("monte_carlo_tail", "samples must be positive"));
    }
    let batches = samples.div_ceil(MC_BATCH);
    let sampler = Sampler::new(query)?;
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = keyed_rng(seed, Domain::MonteCarlo, b);
            let count = MC_BATCH.min(samples - b * MC_BATCH);
            (0..count).filter(|_| sampler.hit(&mut rng)).count() as u64
        })
        .sum();
    let estimate = hits as f64 / samples as f64;
    Ok(TailEstimate {
        estimate,
        stderr: (estimate * (1.0 - estimate) / samples as f64).sqrt(),
        samples,
    })
}

enum Sampler {
    Always(bool),
    Binomial { dist: Binomial, threshold: u64 },
    Geometric { dist: Geometric, n: u64, threshold: u64 },
}

impl Sampler {
    fn new(query: TailQuery) -> Result<Self> {
        Ok(match query {
            TailQuery::BinomialBelow { dist, threshold } => {
                if threshold >= dist.trials {
                    Sampler::Always(true)
                } else {
                    let b = Binomial::new(dist.trials, dist.success_prob)
                        .map_err(|e| Error::domain("monte_carlo_tail", e.to_string()))?;
                    Sampler::Binomial { dist: b, threshold }
                }
            }
            TailQuery::GeometricSumAtLeast { law, n, threshold } => {
                if threshold == 0 {
                    Sampler::Always(true)
                } else if law.param == 0.0 || n == 0 {
                    Sampler::Always(false)
                } else {
                    // rand_distr counts failures before a success of prob 1-p.
                    let g = Geometric::new(1.0 - law.param)
                        .map_err(|e| Error::domain("monte_carlo_tail", e.to_string()))?;
                    Sampler::Geometric { dist: g, n, threshold }
                }
            }
        })
    }

    fn hit(&self, rng: &mut impl RngCore) -> bool {
        match self {
            Sampler::Always(v) => {
                // keep keystream consumption uniform across query kinds
                let _ = open_unit(rng);
                *v
            }
            Sampler::Binomial { dist, threshold } => dist.sample(rng) <= *threshold,
            Sampler::Geometric { dist, n, threshold } => {
                let mut total = 0u64;
                for _ in 0..*n {
                    total += dist.sample(rng);
                    if total >= *threshold {
                        return true;
                    }
                }
                false
            }
        }
    }
}
