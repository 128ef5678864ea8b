//! Coherent-state codebooks and the two photon-number-diluting codeword
//! constructions built on them.
//!
//! A product of coherent states has a Poisson total photon count with mean
//! `Σ|αᵢ|²`, so every shadow here is an exact Poisson CDF; no Fock tensors are
//! materialized.

use std::f64::consts::LOG2_E;

use num_complex::Complex64;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::apply_to_coherent;
use crate::numerics::{log2_sum_exp, KahanSum, LogProb};
use crate::rng::{keyed_complex_gaussian, keyed_rng, Domain};
use crate::{Error, Result};

/// `log₂ Pr{Poisson(mean) ≤ cutoff}`.
pub fn log_poisson_cdf(mean: f64, cutoff: u64) -> LogProb {
    if mean == 0.0 {
        return LogProb::ONE;
    }
    let log2_mean = mean.log2();
    let mut log2_term = -mean * LOG2_E;
    let mut terms = Vec::with_capacity(cutoff.min(1 << 20) as usize + 1);
    terms.push(log2_term);
    let mut peak = log2_term;
    for k in 1..=cutoff {
        log2_term += log2_mean - (k as f64).log2();
        terms.push(log2_term);
        peak = peak.max(log2_term);
        // Past the mode the terms only shrink; stop when they no longer matter.
        if k as f64 > mean && log2_term < peak - 80.0 {
            break;
        }
    }
    log2_sum_exp(terms)
}

pub fn poisson_cdf(mean: f64, cutoff: u64) -> f64 {
    log_poisson_cdf(mean, cutoff).linear().min(1.0)
}

/// Circularly symmetric complex Gaussian amplitudes with `E|α|² = variance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnsemble {
    pub variance: f64,
    pub n_modes: usize,
    pub seed: u64,
}

impl GaussianEnsemble {
    pub fn new(variance: f64, n_modes: usize, seed: u64) -> Result<Self> {
        if !(variance >= 0.0) || variance.is_infinite() {
            return Err(Error::domain("GaussianEnsemble", format!("variance {variance}")));
        }
        if n_modes == 0 {
            return Err(Error::domain("GaussianEnsemble", "n_modes must be positive"));
        }
        Ok(GaussianEnsemble {
            variance,
            n_modes,
            seed,
        })
    }

    /// The amplitude of mode `mode` in codeword `message`, keyed by position.
    pub fn amplitude(&self, message: u64, mode: u64) -> Complex64 {
        keyed_complex_gaussian(self.seed, Domain::Codebook, message, mode, self.variance)
    }

    pub fn codeword(&self, message: u64) -> CoherentCodeword {
        CoherentCodeword {
            amplitudes: (0..self.n_modes as u64).map(|i| self.amplitude(message, i)).collect(),
        }
    }
}

/// `|α₁(m)⟩ ⊗ … ⊗ |αₙ(m)⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentCodeword {
    pub amplitudes: Vec<Complex64>,
}

impl CoherentCodeword {
    pub fn vacuum(n_modes: usize) -> Self {
        CoherentCodeword {
            amplitudes: vec![Complex64::new(0.0, 0.0); n_modes],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.amplitudes.len()
    }

    /// `Σ|αᵢ|²`.
    pub fn total_mean_photons(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect::<KahanSum>().total()
    }

    pub fn mean_photon_per_mode(&self) -> f64 {
        self.total_mean_photons() / self.n_modes().max(1) as f64
    }

    /// Channel output `|√η α₁⟩ ⊗ … ⊗ |√η αₙ⟩`.
    pub fn through_channel(&self, eta: f64) -> CoherentCodeword {
        CoherentCodeword {
            amplitudes: self.amplitudes.iter().map(|&a| apply_to_coherent(a, eta)).collect(),
        }
    }

    /// `⟨0…0|α₁…αₙ⟩ = e^{-Σ|αᵢ|²/2}`.
    pub fn vacuum_overlap(&self) -> f64 {
        (-self.total_mean_photons() / 2.0).exp()
    }
}

/// `ρ(m) = (1-p)|αⁿ(m)⟩⟨αⁿ(m)| + p |0⟩⟨0|^{⊗n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureCodeword {
    pub base: CoherentCodeword,
    pub vacuum_weight: f64,
}

impl MixtureCodeword {
    pub fn new(base: CoherentCodeword, vacuum_weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&vacuum_weight) {
            return Err(Error::domain("MixtureCodeword", format!("weight {vacuum_weight}")));
        }
        Ok(MixtureCodeword { base, vacuum_weight })
    }

    pub fn mean_photon_per_mode(&self) -> f64 {
        mixture_mean_photon(self.vacuum_weight, self.base.mean_photon_per_mode())
    }
}

/// `|γ_p(m)⟩ = √(1-p)|αⁿ(m)⟩|0⟩ + √p|0⟩^{⊗n}|1⟩`, with one extra flag mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionCodeword {
    pub base: CoherentCodeword,
    pub weight: f64,
}

impl SuperpositionCodeword {
    pub fn new(base: CoherentCodeword, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain("SuperpositionCodeword", format!("weight {weight}")));
        }
        Ok(SuperpositionCodeword { base, weight })
    }

    /// `⟨γ|γ⟩`, keeping the signal-mode overlap `⟨0ⁿ|αⁿ⟩` in the cross terms.
    /// The flag overlap `⟨0|1⟩ = 0` removes them, so this is 1 up to rounding.
    pub fn norm_squared(&self) -> f64 {
        let p = self.weight;
        let flag_overlap = 0.0;
        let cross = 2.0 * ((1.0 - p) * p).sqrt() * self.base.vacuum_overlap() * flag_overlap;
        (1.0 - p) + p + cross
    }

    /// Mean photon number per mode over all `n + 1` modes.
    pub fn mean_photon_per_mode(&self) -> f64 {
        let p = self.weight;
        let n = self.base.n_modes() as f64;
        // Number operators are diagonal, so cross terms carry ⟨0|1⟩ = 0 on the flag.
        let signal = (1.0 - p) * self.base.total_mean_photons();
        let flag = p * 1.0;
        (signal + flag) / (n + 1.0)
    }
}

/// `(1 - p) P`.
pub fn mixture_mean_photon(p: f64, pre_mix_mean: f64) -> f64 {
    (1.0 - p) * pre_mix_mean
}

/// `[(1 - p) n P + p] / (n + 1)`.
pub fn superposition_mean_photon(p: f64, pre_mix_mean: f64, n: usize) -> f64 {
    let nf = n as f64;
    ((1.0 - p) * nf * pre_mix_mean + p) / (nf + 1.0)
}

/// The weight `p` for which the superposition codeword meets `target` photons
/// per mode.
pub fn solve_superposition_weight(target: f64, pre_mix_mean: f64, n: usize) -> Result<f64> {
    let at0 = superposition_mean_photon(0.0, pre_mix_mean, n);
    let at1 = superposition_mean_photon(1.0, pre_mix_mean, n);
    let (lo, hi) = (at0.min(at1), at0.max(at1));
    if !(target >= lo && target <= hi) {
        return Err(Error::NoSolution {
            what: "superposition weight",
            target,
            lo,
            hi,
        });
    }
    if at0 == at1 {
        return Ok(0.0);
    }
    Ok(((target - at0) / (at1 - at0)).clamp(0.0, 1.0))
}

/// `M` codewords of `n` modes, identical for a given seed regardless of the
/// thread pool.
pub fn sample_codebook(messages: usize, ensemble: &GaussianEnsemble) -> Result<Vec<CoherentCodeword>> {
    if messages == 0 {
        return Err(Error::domain("sample_codebook", "need at least one message"));
    }
    Ok((0..messages as u64)
        .into_par_iter()
        .map(|m| ensemble.codeword(m))
        .collect())
}

/// Exact `Tr{Π_L ρ}` of a codeword.
pub trait CodewordShadow {
    fn shadow(&self, cutoff: u64) -> f64;
    fn mean_photon_per_mode(&self) -> f64;
}

impl CodewordShadow for CoherentCodeword {
    fn shadow(&self, cutoff: u64) -> f64 {
        poisson_cdf(self.total_mean_photons(), cutoff)
    }

    fn mean_photon_per_mode(&self) -> f64 {
        CoherentCodeword::mean_photon_per_mode(self)
    }
}

impl CodewordShadow for MixtureCodeword {
    fn shadow(&self, cutoff: u64) -> f64 {
        let p = self.vacuum_weight;
        (1.0 - p) * self.base.shadow(cutoff) + p
    }

    fn mean_photon_per_mode(&self) -> f64 {
        MixtureCodeword::mean_photon_per_mode(self)
    }
}

pub fn codeword_shadow(codeword: &impl CodewordShadow, cutoff: u64) -> f64 {
    codeword.shadow(cutoff)
}

/// Result of checking `(1/M) Σ_m Tr{Π_L ρ_m} ≥ 1 - δ₁`, together with the
/// per-codeword mean-photon constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E1Audit {
    pub passed: bool,
    pub average_shadow: f64,
    /// `1 - average_shadow`.
    pub deficit: f64,
    pub threshold: f64,
    pub worst_shadow: f64,
    pub worst_index: usize,
    /// Codewords whose mean photon number per mode exceeds the budget.
    pub budget_violations: Vec<usize>,
}

pub fn audit_constraint_e1<C: CodewordShadow + Sync>(
    codebook: &[C],
    cutoff: u64,
    delta1: f64,
    photon_budget: Option<f64>,
) -> E1Audit {
    let shadows: Vec<f64> = codebook.par_iter().map(|c| c.shadow(cutoff)).collect();
    let average_shadow = if shadows.is_empty() {
        1.0
    } else {
        shadows.iter().copied().collect::<KahanSum>().total() / shadows.len() as f64
    };
    let (worst_index, worst_shadow) = shadows
        .iter()
        .copied()
        .enumerate()
        .fold((0, 1.0), |best, (i, s)| if s < best.1 { (i, s) } else { best });
    let budget_violations = photon_budget.map_or_else(Vec::new, |b| {
        codebook
            .iter()
            .enumerate()
            .filter(|(_, c)| c.mean_photon_per_mode() > b)
            .map(|(i, _)| i)
            .collect()
    });
    // 1 - average computed from the deficits keeps precision when shadows ≈ 1.
    let deficit = if shadows.is_empty() {
        0.0
    } else {
        shadows.iter().map(|s| 1.0 - s).collect::<KahanSum>().total() / shadows.len() as f64
    };
    E1Audit {
        passed: average_shadow >= 1.0 - delta1,
        average_shadow,
        deficit,
        threshold: 1.0 - delta1,
        worst_shadow,
        worst_index,
        budget_violations,
    }
}

/// Drops codewords whose mean photon number per mode exceeds the budget.
pub fn expurgate(codebook: Vec<CoherentCodeword>, photon_budget: f64) -> Vec<CoherentCodeword> {
    codebook
        .into_iter()
        .filter(|c| c.mean_photon_per_mode() <= photon_budget)
        .collect()
}

/// One photon-number measurement of codeword `message`: a draw of its
/// Poisson total count, keyed by `(seed, message)`.
pub fn sample_total_photons(codeword: &CoherentCodeword, seed: u64, message: u64) -> u64 {
    let mean = codeword.total_mean_photons();
    if mean == 0.0 {
        return 0;
    }
    let mut rng = keyed_rng(seed, Domain::PhotonSampling, message);
    Poisson::new(mean).map_or(0, |d| d.sample(&mut rng) as u64)
}

/// How many codewords, measured once each, show more than `cutoff` photons.
/// Over a random codebook each count is a Bernoulli trial whose success
/// probability is the thermal tail `1 - Tr{Π_L θ(N')^{⊗n}}`.
pub fn sampled_cutoff_exceedances(codebook: &[CoherentCodeword], cutoff: u64, seed: u64) -> u64 {
    codebook
        .par_iter()
        .enumerate()
        .filter(|(m, c)| sample_total_photons(c, seed, *m as u64) > cutoff)
        .count() as u64
}

/// Columnar rows `(message_index, mode_index, re_alpha, im_alpha)`.
pub fn codebook_rows(codebook: &[CoherentCodeword]) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
    codebook.iter().enumerate().flat_map(|(m, c)| {
        c.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, a)| (m, i, a.re, a.im))
    })
}
