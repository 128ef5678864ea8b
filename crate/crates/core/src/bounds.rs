//! Closed-form rate and success-probability bounds, each reported term by
//! term so it can be compared against exact quantities.

use std::collections::BTreeMap;
use std::f64::consts::LOG2_E;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::channel::{delta3_upper, ChannelParams};
use crate::concentration::chernoff_constant;
use crate::fock::projector_rank;
use crate::numerics::{binary_entropy, g_entropy, log2_biguint, LogProb};
use crate::{Error, Result};

/// Slack parameters of the converse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConverseSlack {
    /// Dimension-bound slack `δ` in bits. `None` derives the minimal value
    /// from `(n, ηN_S + δ₂)`.
    pub delta: Option<f64>,
    /// Input shadow deficit `δ₁(n)`.
    pub delta1: f64,
    /// Output cutoff slack `δ₂`.
    pub delta2: f64,
    /// Hoeffding slack `δ₃`.
    pub delta3: f64,
}

impl ConverseSlack {
    /// `δ₁(n) = C(δ, N′)^{n/2}`, the deficit a Gaussian codebook of variance
    /// `N′` attains against the cutoff `⌈n(N′ + δ)⌉`.
    pub fn delta1_preset(n: usize, delta: f64, thermal_mean: f64) -> Result<f64> {
        let opt = chernoff_constant(delta, thermal_mean / (thermal_mean + 1.0))?;
        Ok((opt.ln_constant * n as f64 / 2.0).exp())
    }

    /// The largest admissible `δ₃` for the given context.
    pub fn max_delta3(params: &ChannelParams, delta2: f64) -> f64 {
        delta3_upper(params, delta2)
    }
}

/// Code parameters: rate `R = log₂(M)/n`, target error, and the vacuum-mixture
/// construction's weight `p` and pre-mixing mean photon number `P`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub rate: f64,
    pub messages: Option<u64>,
    pub epsilon: f64,
    pub mix_weight: f64,
    pub pre_mix_mean: f64,
}

impl CodeParams {
    pub fn with_rate(rate: f64) -> Self {
        CodeParams {
            rate,
            messages: None,
            epsilon: 0.0,
            mix_weight: 0.0,
            pre_mix_mean: 0.0,
        }
    }

    pub fn from_messages(messages: u64, n_modes: usize) -> Result<Self> {
        if messages == 0 || n_modes == 0 {
            return Err(Error::domain("CodeParams", "messages and n must be positive"));
        }
        Ok(CodeParams {
            messages: Some(messages),
            ..Self::with_rate((messages as f64).log2() / n_modes as f64)
        })
    }

    /// Sets the mixture weight so that `(1 - p) P = N_S`.
    pub fn with_mixture(mut self, photon_budget: f64, pre_mix_mean: f64) -> Result<Self> {
        if !(pre_mix_mean >= photon_budget && pre_mix_mean > 0.0) {
            return Err(Error::domain(
                "CodeParams::with_mixture",
                format!("need P >= N_S > 0, got P = {pre_mix_mean}, N_S = {photon_budget}"),
            ));
        }
        self.pre_mix_mean = pre_mix_mean;
        self.mix_weight = 1.0 - photon_budget / pre_mix_mean;
        Ok(self)
    }
}

/// Term-by-term record of one bound evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub channel: ChannelParams,
    pub code: CodeParams,
    pub slack: ConverseSlack,
    pub g_eta_ns: f64,
    pub h2_eps: f64,
    pub bound_terms: BTreeMap<String, f64>,
    /// Clamped into `[0, 1]`.
    pub success_upper: f64,
    /// Whether `R > g(ηN_S) + δ₂ + δ`, where the bound decays exponentially.
    pub exponential_regime: bool,
}

fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(what, format!("probability {p}")))
    }
}

/// `R ≤ [g(ηN_S) + h₂(ε)] / (1 - ε)`.
pub fn weak_converse_rate_bound(epsilon: f64, params: &ChannelParams) -> Result<f64> {
    check_probability("weak_converse_rate_bound", epsilon)?;
    if epsilon == 1.0 {
        return Err(Error::Divergence {
            what: "weak_converse_rate_bound",
            detail: "epsilon = 1".into(),
        });
    }
    Ok((g_entropy(params.output_budget())? + binary_entropy(epsilon)?) / (1.0 - epsilon))
}

/// Success probability of `M = 2^{nR}` messages through `n` noiseless qubits:
/// at most `2^{-n(R-1)}`.
pub fn qubit_strong_converse(rate: f64, n: usize) -> Result<f64> {
    if !(rate >= 0.0) || n == 0 {
        return Err(Error::domain("qubit_strong_converse", format!("R = {rate}, n = {n}")));
    }
    Ok((-(n as f64) * (rate - 1.0)).exp2().min(1.0))
}

/// Exact rank of `Π_{⌈nN_S⌉}` against `2^{n(g(N_S) + δ)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankBound {
    pub exact_rank: BigUint,
    pub log2_rank: f64,
    pub minimal_delta: f64,
    pub bound: LogProb,
    /// `(⌈nN_S⌉ + n) h₂(n / (⌈nN_S⌉ + n))`, the intermediate entropy bound.
    pub log2_entropy_bound: f64,
}

impl RankBound {
    /// `log₂ bound - log₂ rank`; nonnegative.
    pub fn margin_bits(&self) -> f64 {
        self.bound.log2() - self.log2_rank
    }
}

/// `δ ≥ (log₂e + log₂(1 + 1/N_S))/n`.
pub fn minimal_delta(n: usize, photon_budget: f64) -> Result<f64> {
    if n == 0 || !(photon_budget > 0.0) {
        return Err(Error::domain("minimal_delta", format!("n = {n}, N_S = {photon_budget}")));
    }
    Ok((LOG2_E + (1.0 + 1.0 / photon_budget).log2()) / n as f64)
}

pub fn lemma1_rank_bound(n: usize, photon_budget: f64) -> Result<RankBound> {
    let minimal_delta = minimal_delta(n, photon_budget)?;
    let cutoff = (n as f64 * photon_budget).ceil() as u64;
    let exact_rank = projector_rank(n, cutoff)?;
    let log2_rank = log2_biguint(&exact_rank);
    let g = g_entropy(photon_budget)?;
    let bound = LogProb::raw(n as f64 * (g + minimal_delta));
    let m = cutoff as f64 + n as f64;
    let log2_entropy_bound = m * binary_entropy(n as f64 / m)?;
    // A small absolute slack absorbs the rounding of log2_rank.
    if log2_rank > bound.log2() + 1e-9 {
        return Err(Error::TheoremViolation {
            what: "lemma1_rank_bound",
            detail: format!("log2 rank {log2_rank} > bound {} (n={n}, N_S={photon_budget})", bound.log2()),
        });
    }
    Ok(RankBound {
        exact_rank,
        log2_rank,
        minimal_delta,
        bound,
        log2_entropy_bound,
    })
}

/// Success-probability bound for any code whose average input shadow at
/// `⌈nN_S⌉` is at least `1 - δ₁`:
///
/// `2^{-n(R - g(ηN_S) - δ₂ - δ)} + 2√(δ₁ + e^{-2δ₃²ηN_S n} + 2√δ₁)`.
pub fn strong_converse_success_bound(
    code: &CodeParams,
    params: &ChannelParams,
    slack: &ConverseSlack,
) -> Result<BoundReport> {
    check_probability("strong_converse_success_bound", slack.delta1)?;
    if !(slack.delta2 > 0.0) {
        return Err(Error::domain("strong_converse_success_bound", format!("delta2 {}", slack.delta2)));
    }
    let d3_max = delta3_upper(params, slack.delta2);
    if !(slack.delta3 > 0.0 && slack.delta3 <= d3_max) {
        return Err(Error::Precondition {
            what: "strong_converse_success_bound",
            detail: format!("delta3 = {}", slack.delta3),
            admissible: format!("(0, {d3_max}]"),
        });
    }
    let n = params.n_modes;
    let nf = n as f64;
    let g_eta_ns = g_entropy(params.output_budget())?;
    let h2_eps = binary_entropy(code.epsilon.clamp(0.0, 1.0))?;
    let shifted_budget = params.output_budget() + slack.delta2;
    let delta_shifted = minimal_delta(n, shifted_budget)?;
    let delta_plain = if params.output_budget() > 0.0 {
        minimal_delta(n, params.output_budget())?
    } else {
        f64::INFINITY
    };
    let delta = slack.delta.unwrap_or(delta_shifted);
    let gap = code.rate - g_eta_ns - slack.delta2 - delta;
    let dimension_term = (-nf * gap).exp2();
    let hoeffding = (-2.0 * slack.delta3 * slack.delta3 * params.output_budget() * nf).exp();
    let gentle_term = 2.0 * (slack.delta1 + hoeffding + 2.0 * slack.delta1.sqrt()).sqrt();

    // M⁻¹ rank Π_{⌈n(ηN_S+δ₂)⌉} with the exact rank, before the entropy bound.
    let out_cut = params.output_cutoff(slack.delta2);
    let log2_rank = log2_biguint(&projector_rank(n, out_cut)?);
    let exact_rank_term = (log2_rank - nf * code.rate).exp2();

    let raw = dimension_term + gentle_term;
    let mut terms = BTreeMap::new();
    terms.insert("dimension_term".to_string(), dimension_term);
    terms.insert("gentle_term".to_string(), gentle_term);
    terms.insert("hoeffding_exp".to_string(), hoeffding);
    terms.insert("raw_sum".to_string(), raw);
    terms.insert("delta".to_string(), delta);
    terms.insert("delta_at_eta_ns_plus_delta2".to_string(), delta_shifted);
    terms.insert("delta_at_eta_ns".to_string(), delta_plain);
    terms.insert("rate_gap".to_string(), gap);
    terms.insert("exact_rank_term".to_string(), exact_rank_term);
    terms.insert("log2_rank_output_cutoff".to_string(), log2_rank);
    terms.insert("output_cutoff".to_string(), out_cut as f64);
    terms.insert("delta3_max".to_string(), d3_max);

    Ok(BoundReport {
        channel: *params,
        code: *code,
        slack: *slack,
        g_eta_ns,
        h2_eps,
        bound_terms: terms,
        success_upper: raw.clamp(0.0, 1.0),
        exponential_regime: gap > 0.0,
    })
}

/// The achievable `(g(ηN_S/(1-p)), p)` point of the vacuum-mixture codes.
pub fn tradeoff_point(p: f64, params: &ChannelParams) -> Result<(f64, f64)> {
    check_probability("tradeoff_point", p)?;
    if p == 1.0 {
        return Err(Error::Divergence {
            what: "tradeoff_point",
            detail: "p = 1".into(),
        });
    }
    Ok((g_entropy(params.output_budget() / (1.0 - p))?, p))
}

/// Qubits per mode needed to simulate the channel on inputs within the
/// photon budget: `g(ηN_S)`.
pub fn simulation_rate(params: &ChannelParams) -> Result<f64> {
    g_entropy(params.output_budget())
}
