//! The pure-loss bosonic channel of transmissivity `η`.
//!
//! On a coherent state it scales the amplitude by `√η`. On a number state
//! `|a⟩` each photon independently survives with probability `η`, so on
//! number-diagonal inputs the whole channel acts on the distribution of the
//! total photon count by binomial thinning.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::concentration::{binomial_tail_below, BinomialTransmission};
use crate::fock::{PhotonDistribution, SingleModeState};
use crate::numerics::{binomial_exact, KahanSum};
use crate::{Error, Result};

/// Transmissivity, mode count and per-mode photon budget of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub eta: f64,
    pub n_modes: usize,
    pub photon_budget: f64,
}

impl ChannelParams {
    pub fn new(eta: f64, n_modes: usize, photon_budget: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain("ChannelParams", format!("eta {eta} not in [0, 1]")));
        }
        if n_modes == 0 {
            return Err(Error::domain("ChannelParams", "n_modes must be positive"));
        }
        if !(photon_budget >= 0.0) || photon_budget.is_infinite() {
            return Err(Error::domain("ChannelParams", format!("photon budget {photon_budget}")));
        }
        Ok(ChannelParams {
            eta,
            n_modes,
            photon_budget,
        })
    }

    /// Mean output photon number per mode, `η N_S`.
    pub fn output_budget(&self) -> f64 {
        self.eta * self.photon_budget
    }

    /// Input cutoff `⌈n N_S⌉`.
    pub fn input_cutoff(&self) -> u64 {
        (self.n_modes as f64 * self.photon_budget).ceil() as u64
    }

    /// Output cutoff `⌈n(η N_S + δ₂)⌉`.
    pub fn output_cutoff(&self, delta2: f64) -> u64 {
        (self.n_modes as f64 * (self.output_budget() + delta2)).ceil() as u64
    }
}

/// Which factor of the per-photon weight goes with the surviving count.
///
/// `Transmitted` is the physical reading (each photon survives with
/// probability `η`). `IndexSwapped` gives the survivors weight `1 - η`, as a
/// literal reading of the exponents in the expanded trace does; it exists
/// only so the two can be tabulated side by side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossConvention {
    #[default]
    Transmitted,
    IndexSwapped,
}

impl LossConvention {
    pub fn survival_probability(self, eta: f64) -> f64 {
        match self {
            LossConvention::Transmitted => eta,
            LossConvention::IndexSwapped => 1.0 - eta,
        }
    }
}

/// `U|a⟩_A|0⟩_E = Σ_k √C(a,k) (√η)^k (√(1-η))^(a-k) |k⟩_A|a-k⟩_E`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamsplitterExpansion {
    input_photons: u64,
    amplitudes: Vec<f64>,
}

impl BeamsplitterExpansion {
    pub fn new(input_photons: u64, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain("BeamsplitterExpansion", format!("eta {eta}")));
        }
        let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
        let amplitudes = (0..=input_photons)
            .map(|k| {
                let c = num_traits::ToPrimitive::to_f64(&binomial_exact(input_photons, k)).unwrap_or(f64::INFINITY);
                c.sqrt() * t.powi(k as i32) * r.powi((input_photons - k) as i32)
            })
            .collect();
        Ok(BeamsplitterExpansion {
            input_photons,
            amplitudes,
        })
    }

    pub fn input_photons(&self) -> u64 {
        self.input_photons
    }

    /// Amplitude on `|k⟩_A |a-k⟩_E`.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).collect::<KahanSum>().total()
    }
}

/// Output amplitude of a coherent state: `|α⟩ ↦ |√η α⟩`.
pub fn apply_to_coherent(alpha: Complex64, eta: f64) -> Complex64 {
    alpha * eta.sqrt()
}

/// Photon-number distribution of `N(|a⟩⟨a|)`: `Binomial(a, η)`.
pub fn fock_loss_distribution(input_photons: u64, eta: f64) -> Result<PhotonDistribution> {
    fock_loss_distribution_with(input_photons, eta, LossConvention::Transmitted)
}

pub fn fock_loss_distribution_with(
    input_photons: u64,
    eta: f64,
    convention: LossConvention,
) -> Result<PhotonDistribution> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain("fock_loss_distribution", format!("eta {eta}")));
    }
    Ok(BinomialTransmission::new(input_photons, convention.survival_probability(eta))?.distribution())
}

/// A number-diagonal input to the `n`-mode channel.
#[derive(Clone, Debug)]
pub enum DiagonalInput<'a> {
    /// Distribution of the total photon count over all modes.
    Total(&'a PhotonDistribution),
    /// Independent per-mode distributions; convolved to the total.
    Modes(&'a [PhotonDistribution]),
    /// Dense single-mode matrices, one per mode (a product state). Rejected
    /// unless every matrix is diagonal.
    Dense(&'a [SingleModeState]),
}

impl DiagonalInput<'_> {
    fn total(&self) -> Result<PhotonDistribution> {
        match self {
            DiagonalInput::Total(d) => Ok((*d).clone()),
            DiagonalInput::Modes(modes) => Ok(convolve_all(modes.iter())),
            DiagonalInput::Dense(states) => {
                for s in states.iter() {
                    let m = s.matrix();
                    for i in 0..m.nrows() {
                        for j in 0..m.ncols() {
                            if i != j && m[(i, j)].norm() > SingleModeState::HERMITIAN_TOL {
                                return Err(Error::UnsupportedRepresentation(
                                    "off-diagonal number-basis coherences; use the oracle module's \
                                     dense simulation"
                                        .into(),
                                ));
                            }
                        }
                    }
                }
                let dists: Vec<PhotonDistribution> = states.iter().map(SingleModeState::photon_distribution).collect();
                Ok(convolve_all(dists.iter()))
            }
        }
    }
}

fn convolve_all<'a>(mut it: impl Iterator<Item = &'a PhotonDistribution>) -> PhotonDistribution {
    let first = it.next().cloned().unwrap_or_else(PhotonDistribution::vacuum);
    it.fold(first, |acc, d| acc.convolve(d))
}

/// Exact `Tr{Π_{L_out} N^{⊗n}(ρ)}` for number-diagonal `ρ`:
/// `Σ_S Pr_in(S) · Pr{Binomial(S, η) ≤ L_out}`.
pub fn output_shadow_exact(input: &DiagonalInput<'_>, eta: f64, output_cutoff: u64) -> Result<f64> {
    output_shadow_exact_with(input, eta, output_cutoff, LossConvention::Transmitted)
}

pub fn output_shadow_exact_with(
    input: &DiagonalInput<'_>,
    eta: f64,
    output_cutoff: u64,
    convention: LossConvention,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain("output_shadow_exact", format!("eta {eta}")));
    }
    let total = input.total()?;
    Ok(output_shadow_of_total(&total, eta, output_cutoff, convention))
}

fn output_shadow_of_total(total: &PhotonDistribution, eta: f64, output_cutoff: u64, convention: LossConvention) -> f64 {
    let q = convention.survival_probability(eta);
    let acc: KahanSum = total
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(s, p)| {
            let cdf = if s as u64 <= output_cutoff {
                1.0
            } else {
                binomial_tail_below(BinomialTransmission { trials: s as u64, success_prob: q }, output_cutoff)
            };
            p * cdf
        })
        .collect();
    acc.total().min(1.0)
}

/// Output shadow of a coherent product codeword: thinning a Poisson count of
/// mean `Σ|αᵢ|²` gives a Poisson count of mean `η Σ|αᵢ|²`.
pub fn coherent_output_shadow(total_mean_photons: f64, eta: f64, output_cutoff: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain("coherent_output_shadow", format!("eta {eta}")));
    }
    Ok(crate::codebook::poisson_cdf(eta * total_mean_photons, output_cutoff))
}

/// The certified lower bound on the output shadow and the cutoffs it uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputShadowBound {
    /// `max(0, raw)`.
    pub bound: f64,
    /// `1 - 2√δ₁ - δ₁ - exp(-2δ₃² η N_S n)`, unclamped.
    pub raw: f64,
    pub input_cutoff: u64,
    pub output_cutoff: u64,
    /// Largest admissible `δ₃`, `(nδ₂ - η)/⌈nN_S⌉`.
    pub delta3_max: f64,
}

/// Largest `δ₃` the Hoeffding step allows: `(nδ₂ - η)/⌈nN_S⌉`, or `+∞` when
/// the input cutoff is zero and `nδ₂ ≥ η`.
pub fn delta3_upper(params: &ChannelParams, delta2: f64) -> f64 {
    let numer = params.n_modes as f64 * delta2 - params.eta;
    let l = params.input_cutoff();
    if l == 0 {
        if numer >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        numer / l as f64
    }
}

/// Lower bound on the output shadow at `⌈n(ηN_S + δ₂)⌉` for any input whose
/// shadow at `⌈nN_S⌉` is at least `1 - δ₁`.
pub fn lemma2_output_shadow_bound(
    delta1: f64,
    delta2: f64,
    delta3: f64,
    params: &ChannelParams,
) -> Result<OutputShadowBound> {
    if !(0.0..=1.0).contains(&delta1) {
        return Err(Error::domain("output shadow bound", format!("delta1 {delta1}")));
    }
    if !(delta2 > 0.0) {
        return Err(Error::domain("output shadow bound", format!("delta2 {delta2}")));
    }
    let delta3_max = delta3_upper(params, delta2);
    if !(delta3 > 0.0 && delta3 <= delta3_max) {
        return Err(Error::Precondition {
            what: "output shadow bound",
            detail: format!("delta3 = {delta3}"),
            admissible: format!("(0, {delta3_max}]"),
        });
    }
    let n = params.n_modes as f64;
    let raw = 1.0
        - 2.0 * delta1.sqrt()
        - delta1
        - (-2.0 * delta3 * delta3 * params.output_budget() * n).exp();
    Ok(OutputShadowBound {
        bound: raw.max(0.0),
        raw,
        input_cutoff: params.input_cutoff(),
        output_cutoff: params.output_cutoff(delta2),
        delta3_max,
    })
}

/// The smallest exact output shadow over all diagonal inputs with input
/// shadow `≥ 1 - δ₁`: mass `1 - δ₁` at exactly `⌈nN_S⌉` photons and the rest
/// far beyond any cutoff.
pub fn worst_case_output_shadow(delta1: f64, delta2: f64, params: &ChannelParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta1) {
        return Err(Error::domain("worst_case_output_shadow", format!("delta1 {delta1}")));
    }
    let l_in = params.input_cutoff();
    let l_out = params.output_cutoff(delta2);
    let cdf = binomial_tail_below(BinomialTransmission::new(l_in, params.eta)?, l_out);
    Ok((1.0 - delta1) * cdf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coherent_examples() {
        let a = Complex64::new(0.3, -1.2);
        assert_eq!(apply_to_coherent(a, 1.0), a);
        assert_eq!(apply_to_coherent(a, 0.0), Complex64::new(0.0, 0.0));
        let b = apply_to_coherent(Complex64::new(2f64.sqrt(), 0.0), 0.5);
        assert_relative_eq!(b.norm_sqr(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn fock_loss_examples() {
        let d = fock_loss_distribution(0, 0.3).unwrap();
        assert_eq!(d.max_count(), 0);
        assert_eq!(d.prob(0), 1.0);
        let d = fock_loss_distribution(5, 1.0).unwrap();
        assert_eq!(d.prob(5), 1.0);
        assert_eq!(d.prob(4), 0.0);
        let d = fock_loss_distribution(2, 0.5).unwrap();
        assert_relative_eq!(d.prob(0), 0.25, max_relative = 1e-15);
        assert_relative_eq!(d.prob(1), 0.5, max_relative = 1e-15);
        assert_relative_eq!(d.prob(2), 0.25, max_relative = 1e-15);
        let bs = BeamsplitterExpansion::new(2, 0.5).unwrap();
        assert_relative_eq!(bs.amplitudes()[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(bs.amplitudes()[1], 2f64.sqrt() * 0.5, max_relative = 1e-15);
        assert!(fock_loss_distribution(2, 1.5).is_err());
    }

    #[test]
    fn swapped_convention_mirrors_eta() {
        let a = fock_loss_distribution_with(6, 0.2, LossConvention::IndexSwapped).unwrap();
        let b = fock_loss_distribution(6, 0.8).unwrap();
        for k in 0..=6 {
            assert_relative_eq!(a.prob(k), b.prob(k), max_relative = 1e-14);
        }
    }

    #[test]
    fn beamsplitter_squares_are_binomial() {
        for a in 0..=40u64 {
            for &eta in &[0.0, 0.13, 0.5, 0.77, 1.0] {
                let bs = BeamsplitterExpansion::new(a, eta).unwrap();
                assert!((bs.norm_squared() - 1.0).abs() < 1e-12);
                let d = fock_loss_distribution(a, eta).unwrap();
                for (k, amp) in bs.amplitudes().iter().enumerate() {
                    let p = d.prob(k);
                    assert!((amp * amp - p).abs() <= 1e-12 * p + 1e-300, "a={a} k={k} eta={eta}");
                }
            }
        }
    }

    #[test]
    fn output_shadow_examples() {
        let four = PhotonDistribution::point_mass(4);
        let s = output_shadow_exact(&DiagonalInput::Total(&four), 0.5, 2).unwrap();
        assert_relative_eq!(s, 0.6875, max_relative = 1e-15);
        let th = PhotonDistribution::thermal(2.0).unwrap();
        let s = output_shadow_exact(&DiagonalInput::Total(&th), 0.3, u64::MAX).unwrap();
        assert!((s - 1.0).abs() < 1e-14);
        let vac = PhotonDistribution::vacuum();
        assert_eq!(output_shadow_exact(&DiagonalInput::Total(&vac), 0.7, 0).unwrap(), 1.0);
    }

    #[test]
    fn per_mode_and_total_inputs_agree() {
        let modes = vec![
            PhotonDistribution::thermal(0.5).unwrap(),
            PhotonDistribution::poisson(1.2).unwrap(),
            PhotonDistribution::point_mass(2),
        ];
        let total = modes[0].convolve(&modes[1]).convolve(&modes[2]);
        for l in 0..8 {
            let a = output_shadow_exact(&DiagonalInput::Modes(&modes), 0.6, l).unwrap();
            let b = output_shadow_exact(&DiagonalInput::Total(&total), 0.6, l).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_inputs_must_be_diagonal() {
        let diag = vec![SingleModeState::diagonal(&[0.5, 0.5]), SingleModeState::fock(1, 3).unwrap()];
        let s = output_shadow_exact(&DiagonalInput::Dense(&diag), 0.5, 1).unwrap();
        // totals: 1 w.p. 1/2, 2 w.p. 1/2. Pr{Bin(2,.5) <= 1} = 3/4.
        assert_relative_eq!(s, 0.5 + 0.5 * 0.75, max_relative = 1e-14);
        let coh = vec![SingleModeState::coherent(Complex64::new(0.5, 0.0), 5)];
        assert!(matches!(
            output_shadow_exact(&DiagonalInput::Dense(&coh), 0.5, 1),
            Err(Error::UnsupportedRepresentation(_))
        ));
    }

    #[test]
    fn identity_channel_preserves_shadow() {
        let d = PhotonDistribution::thermal(1.3).unwrap().power(4);
        for l in 0..30 {
            let s = output_shadow_exact(&DiagonalInput::Total(&d), 1.0, l).unwrap();
            assert!((s - d.shadow(l)).abs() < 1e-14);
        }
    }

    #[test]
    fn output_shadow_nonincreasing_in_eta() {
        let d = PhotonDistribution::poisson(6.0).unwrap();
        for l in [0u64, 3, 6, 9] {
            let mut prev = f64::INFINITY;
            for i in 0..=20 {
                let s = output_shadow_exact(&DiagonalInput::Total(&d), i as f64 / 20.0, l).unwrap();
                assert!(s <= prev + 1e-15);
                prev = s;
            }
        }
    }

    #[test]
    fn coherent_path_matches_fock_path() {
        let mean = 3.7;
        let d = PhotonDistribution::poisson(mean).unwrap();
        for l in 0..15 {
            let fock = output_shadow_exact(&DiagonalInput::Total(&d), 0.4, l).unwrap();
            let poisson = coherent_output_shadow(mean, 0.4, l).unwrap();
            assert!((fock - poisson).abs() < 1e-12);
        }
    }

    #[test]
    fn lemma2_bound_examples() {
        let params = ChannelParams::new(0.5, 100, 1.0).unwrap();
        let b = lemma2_output_shadow_bound(0.01, 0.3, 0.2, &params).unwrap();
        let expected = 1.0 - 0.2 - 0.01 - (-4.0f64).exp();
        assert_relative_eq!(b.raw, expected, max_relative = 1e-14);
        assert!((b.bound - 0.771685).abs() < 1e-6);
        assert_eq!(b.output_cutoff, 80);
        assert_eq!(b.input_cutoff, 100);

        let vacuous = lemma2_output_shadow_bound(1.0, 0.3, 0.2, &params).unwrap();
        assert_eq!(vacuous.bound, 0.0);

        // Limit: δ₁ = 0 and n large enough for the exponential to vanish.
        let big = ChannelParams::new(0.5, 100_000, 1.0).unwrap();
        assert_eq!(lemma2_output_shadow_bound(0.0, 0.3, 0.2, &big).unwrap().bound, 1.0);

        match lemma2_output_shadow_bound(0.01, 0.1, 0.2, &params) {
            Err(Error::Precondition { admissible, .. }) => assert!(admissible.contains("0.095")),
            other => panic!("expected precondition error, got {other:?}"),
        }
        assert!(lemma2_output_shadow_bound(0.01, 0.3, 0.0, &params).is_err());
    }

    #[test]
    fn worst_case_is_attained_and_respects_bound() {
        let params = ChannelParams::new(0.5, 40, 1.0).unwrap();
        let (d1, d2) = (0.01, 0.3);
        let worst = worst_case_output_shadow(d1, d2, &params).unwrap();
        // explicit worst input: mass 0.99 at 40 photons, 0.01 at 10_000
        let mut pmf = vec![0.0; 10_001];
        pmf[40] = 1.0 - d1;
        pmf[10_000] = d1;
        let input = PhotonDistribution::from_linear_pmf(&pmf).unwrap();
        let exact = output_shadow_exact(&DiagonalInput::Total(&input), 0.5, params.output_cutoff(d2)).unwrap();
        assert!((exact - worst).abs() < 1e-12);
        let bound = lemma2_output_shadow_bound(d1, d2, delta3_upper(&params, d2), &params).unwrap();
        assert!(worst >= bound.bound);
    }
}
