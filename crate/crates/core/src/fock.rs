//! Photon-number-basis representations.
//!
//! Two representations coexist. [`SingleModeState`] holds a truncated dense
//! density matrix for oracle-scale work. [`PhotonDistribution`] holds only
//! the distribution of the total photon count, which is all the shadow and
//! output-shadow computations need once off-diagonal terms drop out, and it
//! scales to hundreds of modes.

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::Zero;

use crate::numerics::{binomial_exact, log2_sum_exp, KahanSum, LogProb};
use crate::{Error, Result};

/// Coherent and thermal pmfs are truncated once the remaining tail mass drops
/// below this value. The dropped mass is kept as the distribution's deficit.
pub const TAIL_TOLERANCE: f64 = 1e-15;

/// Per-mode photon occupations `(a₁, …, aₙ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockOccupation(Box<[u64]>);

impl FockOccupation {
    pub fn new(occupations: impl Into<Box<[u64]>>) -> Self {
        FockOccupation(occupations.into())
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    /// Total photon number. `None` if it does not fit in a `u64`.
    pub fn total(&self) -> Option<u64> {
        self.0.iter().try_fold(0u64, |acc, &a| acc.checked_add(a))
    }
}

/// The projector `Π_L` onto all `n`-mode occupations with total photon number
/// at most `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NumberCutoffProjector {
    n_modes: usize,
    cutoff: u64,
}

impl NumberCutoffProjector {
    pub fn new(n_modes: usize, cutoff: u64) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::domain("NumberCutoffProjector", "n_modes must be positive"));
        }
        Ok(NumberCutoffProjector { n_modes, cutoff })
    }

    /// Cutoff `⌈n · budget⌉` for a per-mode photon budget.
    pub fn for_budget(n_modes: usize, budget: f64) -> Result<Self> {
        if !(budget >= 0.0) {
            return Err(Error::domain("NumberCutoffProjector", format!("budget {budget}")));
        }
        Self::new(n_modes, (n_modes as f64 * budget).ceil() as u64)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    /// Whether the basis vector `|a₁…aₙ⟩` lies in the range of the projector.
    pub fn contains(&self, occupation: &FockOccupation) -> bool {
        occupation.modes() == self.n_modes
            && occupation.total().is_some_and(|t| t <= self.cutoff)
    }

    /// `Π_L |a⟩`: the basis vector itself if kept, `None` if annihilated.
    pub fn apply<'a>(&self, occupation: &'a FockOccupation) -> Option<&'a FockOccupation> {
        self.contains(occupation).then_some(occupation)
    }

    /// Every occupation tuple in the range of the projector, by depth-first
    /// enumeration. Exponential in `n`; meant for small cross-checks.
    pub fn enumerate_basis(&self) -> Vec<FockOccupation> {
        fn walk(prefix: &mut Vec<u64>, modes_left: usize, budget: u64, out: &mut Vec<FockOccupation>) {
            if modes_left == 0 {
                out.push(FockOccupation::new(prefix.clone()));
                return;
            }
            for a in 0..=budget {
                prefix.push(a);
                walk(prefix, modes_left - 1, budget - a, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(&mut Vec::with_capacity(self.n_modes), self.n_modes, self.cutoff, &mut out);
        out
    }

    pub fn rank(&self) -> Result<BigUint> {
        projector_rank(self.n_modes, self.cutoff)
    }
}

/// Rank of `Π_L` on `n` modes, `Σ_{j=0}^{L} C(j+n-1, n-1) = C(L+n, n)`.
///
/// Both forms are evaluated in exact arithmetic and must agree.
pub fn projector_rank(n_modes: usize, cutoff: u64) -> Result<BigUint> {
    if n_modes == 0 {
        return Err(Error::domain("projector_rank", "n_modes must be positive"));
    }
    let n = n_modes as u64;
    let summed = (0..=cutoff).fold(BigUint::zero(), |acc, j| acc + binomial_exact(j + n - 1, n - 1));
    let closed = binomial_exact(cutoff + n, n);
    if summed != closed {
        return Err(Error::TheoremViolation {
            what: "projector_rank",
            detail: format!("sum form {summed} != closed form {closed} (n={n}, L={cutoff})"),
        });
    }
    Ok(closed)
}

/// Distribution of a total photon count, stored in log space.
///
/// `deficit` is probability mass not represented in the support, either
/// because a tail was truncated or because the state is subnormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonDistribution {
    log2_pmf: Vec<f64>,
    deficit: f64,
}

impl PhotonDistribution {
    pub fn point_mass(count: usize) -> Self {
        let mut log2_pmf = vec![f64::NEG_INFINITY; count + 1];
        log2_pmf[count] = 0.0;
        PhotonDistribution { log2_pmf, deficit: 0.0 }
    }

    pub fn vacuum() -> Self {
        Self::point_mass(0)
    }

    pub fn from_log2_pmf(log2_pmf: Vec<f64>, deficit: f64) -> Result<Self> {
        if log2_pmf.is_empty() {
            return Err(Error::domain("PhotonDistribution", "empty support"));
        }
        if log2_pmf.iter().any(|v| v.is_nan() || *v > 1e-12) {
            return Err(Error::domain("PhotonDistribution", "pmf entries must be probabilities"));
        }
        if !(0.0..=1.0).contains(&deficit) {
            return Err(Error::domain("PhotonDistribution", format!("deficit {deficit}")));
        }
        Ok(PhotonDistribution { log2_pmf, deficit })
    }

    /// Builds from linear probabilities. The deficit is taken as whatever
    /// mass is missing from 1 (clamped at 0).
    pub fn from_linear_pmf(pmf: &[f64]) -> Result<Self> {
        if pmf.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::domain("PhotonDistribution", "negative probability"));
        }
        let total = pmf.iter().copied().collect::<KahanSum>().total();
        if total > 1.0 + 1e-9 {
            return Err(Error::domain("PhotonDistribution", format!("total mass {total} > 1")));
        }
        Self::from_log2_pmf(pmf.iter().map(|p| p.log2()).collect(), (1.0 - total).max(0.0))
    }

    /// Poisson photon statistics of a coherent state with mean `mean`,
    /// truncated at [`TAIL_TOLERANCE`].
    pub fn poisson(mean: f64) -> Result<Self> {
        if !(mean >= 0.0) || mean.is_infinite() {
            return Err(Error::domain("poisson", format!("mean {mean}")));
        }
        if mean == 0.0 {
            return Ok(Self::vacuum());
        }
        let log2_mean = mean.log2();
        let mut log2_pmf = vec![-mean * std::f64::consts::LOG2_E];
        let mut k = 0usize;
        loop {
            k += 1;
            let next = log2_pmf[k - 1] + log2_mean - (k as f64).log2();
            if k as f64 > mean && poisson_tail_from(next, mean, k) < TAIL_TOLERANCE {
                let deficit = poisson_tail_from(next, mean, k);
                return Ok(PhotonDistribution { log2_pmf, deficit });
            }
            log2_pmf.push(next);
        }
    }

    pub fn thermal(mean: f64) -> Result<Self> {
        ThermalState::new(mean)?.distribution()
    }

    pub fn support_len(&self) -> usize {
        self.log2_pmf.len()
    }

    pub fn max_count(&self) -> usize {
        self.log2_pmf.len() - 1
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn log_prob(&self, count: usize) -> LogProb {
        self.log2_pmf
            .get(count)
            .map_or(LogProb::ZERO, |&v| LogProb::raw(v))
    }

    pub fn prob(&self, count: usize) -> f64 {
        self.log_prob(count).linear()
    }

    pub fn log2_pmf(&self) -> &[f64] {
        &self.log2_pmf
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.log2_pmf.iter().enumerate().map(|(k, v)| (k, v.exp2()))
    }

    pub fn total_mass(&self) -> f64 {
        self.iter().map(|(_, p)| p).collect::<KahanSum>().total()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).collect::<KahanSum>().total()
    }

    /// `Pr{total ≤ cutoff}` over the represented support. The true value
    /// lies within `deficit` above this.
    pub fn shadow(&self, cutoff: u64) -> f64 {
        self.log_shadow(cutoff).linear().min(1.0)
    }

    pub fn log_shadow(&self, cutoff: u64) -> LogProb {
        let end = usize::try_from(cutoff)
            .unwrap_or(usize::MAX)
            .min(self.max_count());
        log2_sum_exp(self.log2_pmf[..=end].iter().copied())
    }

    /// Distribution of the sum of two independent totals.
    pub fn convolve(&self, other: &PhotonDistribution) -> PhotonDistribution {
        self.convolve_truncated(other, usize::MAX)
    }

    /// As [`convolve`](Self::convolve), dropping counts above `max_count` into
    /// the deficit.
    pub fn convolve_truncated(&self, other: &PhotonDistribution, max_count: usize) -> PhotonDistribution {
        let full_max = self.max_count() + other.max_count();
        let keep = full_max.min(max_count);
        let mut log2_pmf = Vec::with_capacity(keep + 1);
        for k in 0..=keep {
            let lo = k.saturating_sub(other.max_count());
            let hi = k.min(self.max_count());
            let terms = (lo..=hi).map(|i| self.log2_pmf[i] + other.log2_pmf[k - i]);
            log2_pmf.push(log2_sum_exp(terms).log2());
        }
        let mass_a = self.total_mass();
        let mass_b = other.total_mass();
        let mut deficit = (mass_a + self.deficit) * (mass_b + other.deficit) - mass_a * mass_b;
        if keep < full_max {
            let dropped = log2_sum_exp((keep + 1..=full_max).map(|k| {
                let lo = k.saturating_sub(other.max_count());
                let hi = k.min(self.max_count());
                log2_sum_exp((lo..=hi).map(|i| self.log2_pmf[i] + other.log2_pmf[k - i])).log2()
            }));
            deficit += dropped.linear();
        }
        PhotonDistribution {
            log2_pmf,
            deficit: deficit.clamp(0.0, 1.0),
        }
    }

    /// n-fold self-convolution.
    pub fn power(&self, n: usize) -> PhotonDistribution {
        (1..n).fold(self.clone(), |acc, _| acc.convolve(self))
    }
}

/// Poisson tail mass from index `k` on, given `log2 pmf(k)`.
fn poisson_tail_from(log2_first: f64, mean: f64, k: usize) -> f64 {
    let mut acc = KahanSum::default();
    let mut log2_term = log2_first;
    let mut j = k;
    let log2_mean = mean.log2();
    loop {
        let term = log2_term.exp2();
        acc.add(term);
        if term <= acc.total() * 1e-18 || term == 0.0 {
            return acc.total();
        }
        j += 1;
        log2_term += log2_mean - (j as f64).log2();
    }
}

/// Thermal state `θ(N′)`: geometric photon statistics with mean `N′`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalState {
    mean_photon: f64,
}

impl ThermalState {
    pub fn new(mean_photon: f64) -> Result<Self> {
        if !(mean_photon >= 0.0) || mean_photon.is_infinite() {
            return Err(Error::domain("ThermalState", format!("mean photon {mean_photon}")));
        }
        Ok(ThermalState { mean_photon })
    }

    pub fn mean_photon(&self) -> f64 {
        self.mean_photon
    }

    /// Ratio `N′/(N′+1)` of consecutive photon-number probabilities.
    pub fn ratio(&self) -> f64 {
        self.mean_photon / (self.mean_photon + 1.0)
    }

    pub fn log_pmf(&self, l: u64) -> LogProb {
        let n = self.mean_photon;
        let head = -(n + 1.0).log2();
        if l == 0 {
            return LogProb::raw(head);
        }
        LogProb::raw(head + l as f64 * self.ratio().log2())
    }

    pub fn pmf(&self, l: u64) -> f64 {
        self.log_pmf(l).linear()
    }

    /// Truncated pmf; the deficit is the exact geometric tail `r^(K+1)`.
    pub fn distribution(&self) -> Result<PhotonDistribution> {
        if self.mean_photon == 0.0 {
            return Ok(PhotonDistribution::vacuum());
        }
        let r = self.ratio();
        // smallest K with r^(K+1) < tol
        let k_max = (TAIL_TOLERANCE.ln() / r.ln()).ceil() as usize;
        let log2_pmf = (0..=k_max).map(|l| self.log_pmf(l as u64).log2()).collect();
        let deficit = r.powi(k_max as i32 + 1);
        PhotonDistribution::from_log2_pmf(log2_pmf, deficit)
    }

    pub fn single_mode_state(&self, cutoff: usize) -> SingleModeState {
        let pmf: Vec<f64> = (0..=cutoff as u64).map(|l| self.pmf(l)).collect();
        SingleModeState::diagonal(&pmf)
    }
}

/// Fock amplitudes `e^{-|α|²/2} αᵏ / √(k!)` for `k = 0..=cutoff`.
pub fn coherent_fock_amplitudes(alpha: Complex64, cutoff: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(cutoff + 1);
    let mut amp = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    out.push(amp);
    for k in 1..=cutoff {
        amp = amp * alpha / (k as f64).sqrt();
        out.push(amp);
    }
    out
}

/// Truncated single-mode density matrix in the number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleModeState {
    matrix: DMatrix<Complex64>,
}

impl SingleModeState {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const EIGEN_TOL: f64 = 1e-10;

    /// Validates Hermiticity, trace at most one and positivity.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::domain("SingleModeState", "matrix must be square and nonempty"));
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::domain("SingleModeState", format!("not Hermitian ({herm:e})")));
        }
        let trace = matrix.trace().re;
        if trace > 1.0 + Self::TRACE_TOL || trace <= 0.0 {
            return Err(Error::domain("SingleModeState", format!("trace {trace}")));
        }
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < -Self::EIGEN_TOL {
            return Err(Error::domain("SingleModeState", format!("eigenvalue {min_eig}")));
        }
        Ok(SingleModeState { matrix })
    }

    /// `|ψ⟩⟨ψ|` from truncated amplitudes; subnormalized when the amplitudes
    /// carry less than unit norm.
    pub fn pure(amplitudes: &[Complex64]) -> Self {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        SingleModeState {
            matrix: &v * v.adjoint(),
        }
    }

    pub fn diagonal(pmf: &[f64]) -> Self {
        let d = nalgebra::DVector::from_iterator(pmf.len(), pmf.iter().map(|&p| Complex64::new(p, 0.0)));
        SingleModeState {
            matrix: DMatrix::from_diagonal(&d),
        }
    }

    pub fn fock(photons: usize, dim: usize) -> Result<Self> {
        if photons >= dim {
            return Err(Error::domain("SingleModeState::fock", format!("{photons} photons in dim {dim}")));
        }
        let mut pmf = vec![0.0; dim];
        pmf[photons] = 1.0;
        Ok(Self::diagonal(&pmf))
    }

    pub fn coherent(alpha: Complex64, cutoff: usize) -> Self {
        Self::pure(&coherent_fock_amplitudes(alpha, cutoff))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= Self::TRACE_TOL
    }

    /// Diagonal of the matrix as a photon distribution; missing trace becomes
    /// the deficit.
    pub fn photon_distribution(&self) -> PhotonDistribution {
        let pmf: Vec<f64> = (0..self.dim()).map(|k| self.matrix[(k, k)].re.max(0.0)).collect();
        let total = pmf.iter().copied().collect::<KahanSum>().total();
        PhotonDistribution {
            log2_pmf: pmf.iter().map(|p| p.log2()).collect(),
            deficit: (1.0 - total).clamp(0.0, 1.0),
        }
    }
}

/// `Tr{Π_L ρ}` for a product of single-mode states, by convolving their
/// photon distributions.
pub fn product_shadow(modes: &[SingleModeState], cutoff: u64) -> f64 {
    let Some((first, rest)) = modes.split_first() else {
        return 1.0;
    };
    rest.iter()
        .fold(first.photon_distribution(), |acc, m| acc.convolve(&m.photon_distribution()))
        .shadow(cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coherent_amplitude_examples() {
        let vac = coherent_fock_amplitudes(Complex64::new(0.0, 0.0), 3);
        assert_eq!(vac.len(), 4);
        assert_eq!(vac[0], Complex64::new(1.0, 0.0));
        assert!(vac[1..].iter().all(|z| z.norm() == 0.0));

        let amps = coherent_fock_amplitudes(Complex64::new(0.6, 0.8), 60);
        assert_relative_eq!(amps[0].norm_sqr(), (-1.0f64).exp(), max_relative = 1e-15);
        let mean: f64 = amps.iter().enumerate().map(|(k, a)| k as f64 * a.norm_sqr()).sum();
        assert!((mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coherent_truncation_mass_is_poisson_tail() {
        let alpha = Complex64::new(1.5, 0.0);
        let cutoff = 4;
        let amps = coherent_fock_amplitudes(alpha, cutoff);
        let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        // Poisson tail beyond 4 computed term by term.
        let lambda: f64 = 2.25;
        let mut term = (-lambda).exp();
        let mut cdf = term;
        for k in 1..=cutoff {
            term *= lambda / k as f64;
            cdf += term;
        }
        assert_relative_eq!(1.0 - kept, 1.0 - cdf, max_relative = 1e-12);
    }

    #[test]
    fn projector_rank_examples() {
        assert_eq!(projector_rank(2, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(projector_rank(1, 7).unwrap(), BigUint::from(8u32));
        assert_eq!(projector_rank(3, 1).unwrap(), BigUint::from(4u32));
        assert!(projector_rank(0, 3).is_err());
    }

    #[test]
    fn projector_rank_forms_agree_exhaustively() {
        for n in 1..=12 {
            for l in 0..=30 {
                projector_rank(n, l).unwrap();
            }
        }
    }

    #[test]
    fn enumeration_matches_rank() {
        let p = NumberCutoffProjector::new(2, 2).unwrap();
        let basis = p.enumerate_basis();
        let expected: Vec<Vec<u64>> = vec![
            vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![2, 0],
        ];
        let got: Vec<Vec<u64>> = basis.iter().map(|o| o.as_slice().to_vec()).collect();
        assert_eq!(got, expected);
        for n in 1..=4 {
            for l in 0..=6 {
                let p = NumberCutoffProjector::new(n, l).unwrap();
                assert_eq!(BigUint::from(p.enumerate_basis().len()), p.rank().unwrap());
            }
        }
    }

    #[test]
    fn projector_acts_as_identity_or_annihilates() {
        let p = NumberCutoffProjector::new(3, 4).unwrap();
        let inside = FockOccupation::new(vec![1, 2, 1]);
        let outside = FockOccupation::new(vec![1, 2, 2]);
        assert_eq!(p.apply(&inside), Some(&inside));
        assert_eq!(p.apply(&outside), None);
        assert!(!p.contains(&FockOccupation::new(vec![0, 0])));
        let huge = FockOccupation::new(vec![u64::MAX, 1]);
        assert_eq!(huge.total(), None);
        assert_eq!(FockOccupation::new(vec![1 << 61, 1 << 61]).total(), Some(1 << 62));
    }

    #[test]
    fn shadow_examples() {
        assert_eq!(PhotonDistribution::vacuum().shadow(0), 1.0);
        let th = PhotonDistribution::thermal(1.0).unwrap();
        assert_relative_eq!(th.shadow(0), 0.5, max_relative = 1e-15);
        let coh = PhotonDistribution::poisson(1.0).unwrap();
        assert_relative_eq!(coh.shadow(0), (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn product_shadow_of_single_mode_states() {
        let modes = vec![
            SingleModeState::coherent(Complex64::new(0.5, 0.1), 30),
            SingleModeState::coherent(Complex64::new(-0.3, 0.7), 30),
        ];
        let mean: f64 = 0.26 + 0.58;
        let mut cdf = 0.0;
        let mut term = (-mean).exp();
        for k in 0..=2 {
            if k > 0 {
                term *= mean / k as f64;
            }
            cdf += term;
        }
        assert_relative_eq!(product_shadow(&modes, 2), cdf, max_relative = 1e-12);
        assert_eq!(product_shadow(&[], 0), 1.0);
    }

    #[test]
    fn shadow_is_monotone_and_saturates() {
        let d = PhotonDistribution::poisson(3.0)
            .unwrap()
            .convolve(&PhotonDistribution::thermal(0.7).unwrap());
        let mut prev = 0.0;
        for l in 0..=d.max_count() as u64 {
            let s = d.shadow(l);
            assert!(s >= prev);
            prev = s;
        }
        assert!((prev - (1.0 - d.deficit())).abs() < 1e-12);
        assert_eq!(d.shadow(u64::MAX), prev);
    }

    #[test]
    fn convolve_examples() {
        let d = PhotonDistribution::poisson(1.3).unwrap();
        let id = PhotonDistribution::vacuum().convolve(&d);
        assert_eq!(id.log2_pmf(), d.log2_pmf());

        let p1 = PhotonDistribution::poisson(1.0).unwrap();
        let p2 = p1.convolve(&p1);
        let direct = PhotonDistribution::poisson(2.0).unwrap();
        for k in 0..=40 {
            assert!((p2.prob(k) - direct.prob(k)).abs() < 1e-10);
        }

        let g = PhotonDistribution::thermal(1.0).unwrap();
        let nb = g.convolve(&g);
        assert_relative_eq!(nb.prob(0), 0.25, max_relative = 1e-14);
        // pmf(k) = (k+1) (1/2)^k (1/4)
        for k in 0..20 {
            let expected = (k as f64 + 1.0) * 0.5f64.powi(k as i32) * 0.25;
            assert_relative_eq!(nb.prob(k), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn truncated_convolution_records_lost_mass() {
        let g = PhotonDistribution::thermal(2.0).unwrap();
        let full = g.convolve(&g);
        let cut = g.convolve_truncated(&g, 10);
        assert_eq!(cut.max_count(), 10);
        assert!((cut.shadow(10) - full.shadow(10)).abs() < 1e-15);
        assert!((cut.total_mass() + cut.deficit() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_distribution_invariants() {
        for &n in &[0.1, 0.9, 1.0, 5.0] {
            let th = ThermalState::new(n).unwrap();
            let d = th.distribution().unwrap();
            assert!(d.deficit() < TAIL_TOLERANCE);
            assert!((d.total_mass() + d.deficit() - 1.0).abs() < 1e-12);
            assert!((d.mean() - n).abs() < 1e-9);
            assert_relative_eq!(th.pmf(3), (1.0 / (n + 1.0)) * (n / (n + 1.0)).powi(3), max_relative = 1e-14);
        }
        assert!(ThermalState::new(-1.0).is_err());
    }

    #[test]
    fn poisson_truncation_policy() {
        for &m in &[0.01, 1.0, 10.0, 150.0] {
            let d = PhotonDistribution::poisson(m).unwrap();
            assert!(d.deficit() < TAIL_TOLERANCE);
            assert!((d.total_mass() + d.deficit() - 1.0).abs() < 1e-12);
            assert!((d.mean() - m).abs() < 1e-9 * m.max(1.0));
        }
    }

    #[test]
    fn single_mode_state_validation() {
        let coh = SingleModeState::coherent(Complex64::new(1.0, 0.5), 25);
        let checked = SingleModeState::from_matrix(coh.matrix().clone()).unwrap();
        assert!(checked.trace() <= 1.0);
        let mut bad = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
        bad[(0, 1)] = Complex64::new(0.3, 0.0);
        bad[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(SingleModeState::from_matrix(bad).is_err());
        let neg = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.1, 0.0),
            Complex64::new(-0.1, 0.0),
        ]));
        assert!(SingleModeState::from_matrix(neg).is_err());
        assert!(SingleModeState::fock(3, 3).is_err());
    }
}
