//! Dense density-matrix checks at toy dimension.
//!
//! Three operator inequalities carry the converse: the trace inequality
//! `Tr{Λρ} ≥ Tr{Λσ} - ‖ρ - σ‖₁`, the gentle operator lemma
//! `‖ρ - √Λρ√Λ‖₁ ≤ 2√ε` (single-state and ensemble forms), and the
//! vacuum-mixture decoder bound `(1-p)(1-ε)`. They are theorems, so a negative
//! residual here is a bug detector. [`simulate_loss_exact`] applies the loss
//! channel through an explicit beamsplitter unitary and is the independent
//! anchor for the binomial photon-count path in [`crate::channel`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::RngCore;

use crate::rng::{complex_gaussian, keyed_rng, open_unit, Domain};
use crate::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
/// Eigenvalues above `-EIGEN_TOL` count as nonnegative; they are clipped to
/// zero in square roots and the clipped mass is recorded.
pub const EIGEN_TOL: f64 = 1e-10;
/// A residual below `-RESIDUAL_TOL` is a theorem violation.
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const MAX_DIM: usize = 4096;

type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix.
fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn from_eigen(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let d = DVector::from_iterator(values.len(), values.iter().map(|&v| c(v)));
    vectors * CMatrix::from_diagonal(&d) * vectors.adjoint()
}

/// `‖M‖₁` of a Hermitian matrix: the sum of absolute eigenvalues.
pub fn trace_norm(m: &CMatrix) -> f64 {
    eigh(m).0.iter().map(|v| v.abs()).sum()
}

/// Positive square root, clipping eigenvalues in `(-EIGEN_TOL, 0)` to zero.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = eigh(m);
    if let Some(v) = vals.iter().find(|v| **v < -EIGEN_TOL) {
        return Err(Error::domain("psd_sqrt", format!("eigenvalue {v}")));
    }
    let roots: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok(from_eigen(&roots, &vecs))
}

/// A possibly subnormalized density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    /// Negative eigenvalue mass removed by PSD clipping.
    clipped: f64,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and `0 < Tr ≤ 1`. Eigenvalues in
    /// `(-EIGEN_TOL, 0)` are clipped and the clipped mass is kept.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::domain("DensityMatrix", "matrix must be square and nonempty"));
        }
        let herm = hermiticity_defect(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::domain("DensityMatrix", format!("not Hermitian ({herm:e})")));
        }
        let trace = matrix.trace().re;
        if !(trace > 0.0 && trace <= 1.0 + TRACE_TOL) {
            return Err(Error::domain("DensityMatrix", format!("trace {trace}")));
        }
        let (vals, vecs) = eigh(&matrix);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -EIGEN_TOL {
            return Err(Error::domain("DensityMatrix", format!("eigenvalue {min}")));
        }
        if min < 0.0 {
            let clipped: f64 = vals.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
            let fixed: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
            return Ok(DensityMatrix {
                matrix: from_eigen(&fixed, &vecs),
                clipped,
            });
        }
        Ok(DensityMatrix { matrix, clipped: 0.0 })
    }

    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    pub fn basis(index: usize, dim: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::domain("DensityMatrix::basis", format!("{index} >= {dim}")));
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = c(1.0);
        Ok(DensityMatrix { matrix: m, clipped: 0.0 })
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(probs.len(), probs.iter().map(|&p| c(p)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_subnormalized(&self) -> bool {
        self.trace() < 1.0 - TRACE_TOL
    }

    pub fn clipped_mass(&self) -> f64 {
        self.clipped
    }

    /// Convex combination `Σ wᵢ ρᵢ`.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::domain("DensityMatrix::mixture", "no components"));
        };
        let dim = first.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch(dim, rho.dim()));
            }
            m += rho.matrix.scale(*w);
        }
        Self::new(m)
    }

    /// `Tr{Aρ}` for Hermitian `A`.
    pub fn expectation(&self, a: &CMatrix) -> f64 {
        (a * &self.matrix).trace().re
    }
}

/// A POVM element `0 ≤ Λ ≤ I`.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmElement {
    matrix: CMatrix,
}

impl PovmElement {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::domain("PovmElement", "matrix must be square and nonempty"));
        }
        let herm = hermiticity_defect(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::domain("PovmElement", format!("not Hermitian ({herm:e})")));
        }
        let (vals, _) = eigh(&matrix);
        if let Some(v) = vals.iter().find(|v| **v < -EIGEN_TOL || **v > 1.0 + EIGEN_TOL) {
            return Err(Error::domain("PovmElement", format!("eigenvalue {v} outside [0, 1]")));
        }
        Ok(PovmElement { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        PovmElement {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn projector(vectors: &[DVector<Complex64>]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::domain("PovmElement::projector", "no vectors"));
        };
        let mut m = CMatrix::zeros(first.len(), first.len());
        for v in vectors {
            m += v * v.adjoint();
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `Tr{Λρ}`.
    pub fn probability(&self, rho: &DensityMatrix) -> f64 {
        rho.expectation(&self.matrix)
    }
}

/// `‖Σ Λ_m - I‖` in max-entry norm.
pub fn povm_completeness_defect(povm: &[PovmElement]) -> Result<f64> {
    let Some(first) = povm.first() else {
        return Err(Error::domain("povm", "empty POVM"));
    };
    let dim = first.dim();
    let mut sum = CMatrix::zeros(dim, dim);
    for e in povm {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch(dim, e.dim()));
        }
        sum += &e.matrix;
    }
    Ok((sum - CMatrix::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a, b))
    }
}

/// `‖ρ - σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    Ok(trace_norm(&(&rho.matrix - &sigma.matrix)))
}

/// Both sides of an inequality `lhs ≥ rhs` and `residual = lhs - rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl InequalityCheck {
    fn assert(what: &'static str, lhs: f64, rhs: f64) -> Result<Self> {
        let residual = lhs - rhs;
        if residual < -RESIDUAL_TOL {
            return Err(Error::TheoremViolation {
                what,
                detail: format!("lhs {lhs} < rhs {rhs} (residual {residual:e})"),
            });
        }
        Ok(InequalityCheck { lhs, rhs, residual })
    }
}

/// `Tr{Λρ} - Tr{Λσ} + ‖ρ - σ‖₁ ≥ 0`.
pub fn check_trace_inequality(
    lambda: &PovmElement,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<InequalityCheck> {
    same_dim(lambda.dim(), rho.dim())?;
    same_dim(lambda.dim(), sigma.dim())?;
    let lhs = lambda.probability(rho);
    let rhs = lambda.probability(sigma) - trace_distance(rho, sigma)?;
    InequalityCheck::assert("trace inequality", lhs, rhs)
}

/// `‖ρ - √Λ ρ √Λ‖₁`.
pub fn gentle_disturbance(lambda: &PovmElement, rho: &DensityMatrix) -> Result<f64> {
    same_dim(lambda.dim(), rho.dim())?;
    let root = psd_sqrt(&lambda.matrix)?;
    let post = &root * &rho.matrix * &root;
    Ok(trace_norm(&(&rho.matrix - post)))
}

/// Checks `‖ρ - √Λρ√Λ‖₁ ≤ 2√ε` given `Tr{Λρ} ≥ 1 - ε`. Reported as
/// `lhs = 2√ε`, `rhs = disturbance`.
pub fn check_gentle_operator(lambda: &PovmElement, rho: &DensityMatrix, epsilon: f64) -> Result<InequalityCheck> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::domain("gentle operator", format!("epsilon {epsilon}")));
    }
    let success = lambda.probability(rho);
    if success < 1.0 - epsilon - RESIDUAL_TOL {
        return Err(Error::Precondition {
            what: "gentle operator",
            detail: format!("Tr(Λρ) = {success} < 1 - ε = {}", 1.0 - epsilon),
            admissible: format!("epsilon >= {}", 1.0 - success),
        });
    }
    let disturbance = gentle_disturbance(lambda, rho)?;
    InequalityCheck::assert("gentle operator", 2.0 * epsilon.sqrt(), disturbance)
}

/// Ensemble form: `Σ pₓ ‖ρₓ - √Λρₓ√Λ‖₁ ≤ 2√ε` given `Σ pₓ Tr{Λρₓ} ≥ 1 - ε`.
pub fn check_gentle_ensemble(
    lambda: &PovmElement,
    ensemble: &[(f64, DensityMatrix)],
    epsilon: f64,
) -> Result<InequalityCheck> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::domain("gentle ensemble", format!("epsilon {epsilon}")));
    }
    let total_weight: f64 = ensemble.iter().map(|(p, _)| p).sum();
    if ensemble.iter().any(|(p, _)| *p < 0.0) || (total_weight - 1.0).abs() > TRACE_TOL {
        return Err(Error::domain("gentle ensemble", "weights must form a distribution"));
    }
    let success: f64 = ensemble.iter().map(|(p, rho)| p * lambda.probability(rho)).sum();
    if success < 1.0 - epsilon - RESIDUAL_TOL {
        return Err(Error::Precondition {
            what: "gentle ensemble",
            detail: format!("average Tr(Λρ) = {success} < 1 - ε = {}", 1.0 - epsilon),
            admissible: format!("epsilon >= {}", 1.0 - success),
        });
    }
    let mut disturbance = 0.0;
    for (p, rho) in ensemble {
        disturbance += p * gentle_disturbance(lambda, rho)?;
    }
    InequalityCheck::assert("gentle ensemble", 2.0 * epsilon.sqrt(), disturbance)
}

/// `√(1-p)|ψ⟩|0⟩ + √p|φ⟩|1⟩` traced over the flag qubit.
pub fn traced_superposition(psi: &DVector<Complex64>, vacuum: &DVector<Complex64>, p: f64) -> Result<DensityMatrix> {
    same_dim(psi.len(), vacuum.len())?;
    let d = psi.len();
    // flag is the least significant index: |j⟩|f⟩ ↦ 2j + f
    let mut gamma = DVector::zeros(2 * d);
    for j in 0..d {
        gamma[2 * j] = psi[j] * (1.0 - p).sqrt();
        gamma[2 * j + 1] = vacuum[j] * p.sqrt();
    }
    let full = &gamma * gamma.adjoint();
    Ok(DensityMatrix::new(partial_trace_last(&full, d, 2))?)
}

/// Traces out the last tensor factor of dimension `dim_b`.
pub fn partial_trace_last(m: &CMatrix, dim_a: usize, dim_b: usize) -> CMatrix {
    CMatrix::from_fn(dim_a, dim_a, |i, j| {
        (0..dim_b).map(|f| m[(i * dim_b + f, j * dim_b + f)]).sum()
    })
}

/// Outcome of the vacuum-mixture decoder check.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderCheck {
    pub pure_success: Vec<f64>,
    pub mixture_success: Vec<f64>,
    pub superposition_success: Vec<f64>,
    /// `(1-p)(1-ε)`.
    pub bound: f64,
    /// `min_m mixture_success[m] - bound`.
    pub min_residual: f64,
}

/// For codewords `ψ_m` decoded with `Λ_m` at success `≥ 1-ε`, checks that the
/// mixtures `(1-p)ψ_m + p·vacuum` and the flag-traced superpositions both
/// succeed with probability `≥ (1-p)(1-ε)`, and that the two coincide.
pub fn mixture_decoder_bound(
    povm: &[PovmElement],
    codewords: &[DVector<Complex64>],
    vacuum: &DVector<Complex64>,
    epsilon: f64,
    p: f64,
) -> Result<DecoderCheck> {
    if povm.len() != codewords.len() {
        return Err(Error::DimensionMismatch(povm.len(), codewords.len()));
    }
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::domain("mixture_decoder_bound", format!("p = {p}, epsilon = {epsilon}")));
    }
    let defect = povm_completeness_defect(povm)?;
    if defect > TRACE_TOL {
        return Err(Error::Precondition {
            what: "mixture_decoder_bound",
            detail: format!("POVM completeness defect {defect:e}"),
            admissible: "elements summing to the identity".into(),
        });
    }
    let vac = DensityMatrix::pure(vacuum)?;
    let bound = (1.0 - p) * (1.0 - epsilon);
    let mut out = DecoderCheck {
        pure_success: Vec::new(),
        mixture_success: Vec::new(),
        superposition_success: Vec::new(),
        bound,
        min_residual: f64::INFINITY,
    };
    for (lambda, psi) in povm.iter().zip(codewords) {
        let pure = DensityMatrix::pure(psi)?;
        let s = lambda.probability(&pure);
        if s < 1.0 - epsilon - RESIDUAL_TOL {
            return Err(Error::Precondition {
                what: "mixture_decoder_bound",
                detail: format!("pure-state success {s} < 1 - ε"),
                admissible: format!("epsilon >= {}", 1.0 - s),
            });
        }
        let mix = DensityMatrix::mixture(&[(1.0 - p, &pure), (p, &vac)])?;
        let sup = traced_superposition(psi, vacuum, p)?;
        let ms = lambda.probability(&mix);
        let ss = lambda.probability(&sup);
        if (ms - ss).abs() > RESIDUAL_TOL {
            return Err(Error::TheoremViolation {
                what: "superposition purifies mixture",
                detail: format!("mixture success {ms} != superposition success {ss}"),
            });
        }
        InequalityCheck::assert("mixture decoder bound", ms, bound)?;
        out.min_residual = out.min_residual.min(ms - bound);
        out.pure_success.push(s);
        out.mixture_success.push(ms);
        out.superposition_success.push(ss);
    }
    Ok(out)
}

/// Amplitudes `⟨k|_A⟨a-k|_E U |a⟩_A|0⟩_E` for `k = 0..=a`, where
/// `U = exp[θ(a†e - ae†)]` with `cos θ = √η`, exponentiated on the `a`-photon
/// sector.
pub fn beamsplitter_sector_amplitudes(photons: usize, eta: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain("beamsplitter", format!("eta {eta}")));
    }
    let theta = eta.sqrt().clamp(0.0, 1.0).acos();
    let dim = photons + 1;
    // Basis |j⟩_A|N-j⟩_E. a†e|j, N-j⟩ = √((j+1)(N-j)) |j+1, N-j-1⟩.
    // H = i·G with G = θ(a†e - ae†) real antisymmetric, so U = exp(-iH).
    let mut h = CMatrix::zeros(dim, dim);
    for j in 0..photons {
        let w = theta * (((j + 1) * (photons - j)) as f64).sqrt();
        h[(j + 1, j)] = Complex64::new(0.0, w);
        h[(j, j + 1)] = Complex64::new(0.0, -w);
    }
    let (vals, vecs) = eigh(&h);
    let phases = DVector::from_iterator(dim, vals.iter().map(|&l| Complex64::from_polar(1.0, -l)));
    let u = &vecs * CMatrix::from_diagonal(&phases) * vecs.adjoint();
    // column N is the input |N⟩_A|0⟩_E
    Ok((0..dim).map(|k| u[(k, photons)].re).collect())
}

/// `N_η^{⊗n}` applied to an operator on modes with the given dimensions
/// (mode 0 most significant), through the beamsplitter dilation with a vacuum
/// environment traced out. Photon loss never raises a photon number, so the
/// truncated space is invariant and no mass leaves it.
pub fn apply_loss_to_operator(m: &CMatrix, mode_dims: &[usize], eta: f64) -> Result<CMatrix> {
    let total: usize = mode_dims.iter().product();
    if total > MAX_DIM {
        return Err(Error::DimensionCap { dim: total, cap: MAX_DIM });
    }
    same_dim(m.nrows(), total)?;
    same_dim(m.ncols(), total)?;
    let mut current = m.clone();
    for (mode, &dim) in mode_dims.iter().enumerate() {
        let stride: usize = mode_dims[mode + 1..].iter().product();
        // amps[a][k]: amplitude that k of a photons stay in the mode
        let amps: Vec<Vec<f64>> = (0..dim)
            .map(|a| beamsplitter_sector_amplitudes(a, eta))
            .collect::<Result<_>>()?;
        let mut next = CMatrix::zeros(total, total);
        for i in 0..total {
            let a = (i / stride) % dim;
            for j in 0..total {
                let b = (j / stride) % dim;
                let v = current[(i, j)];
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                // environment keeps e photons from both sides
                for e in 0..=a.min(b) {
                    let w = amps[a][a - e] * amps[b][b - e];
                    let i2 = i - e * stride;
                    let j2 = j - e * stride;
                    next[(i2, j2)] += v * w;
                }
            }
        }
        current = next;
    }
    Ok(current)
}

/// Exact loss channel on a dense multimode state.
pub fn simulate_loss_exact(state: &DensityMatrix, mode_dims: &[usize], eta: f64) -> Result<DensityMatrix> {
    let out = apply_loss_to_operator(&state.matrix, mode_dims, eta)?;
    DensityMatrix::new(out)
}

/// `|⟨ψ|ρ|ψ⟩|` for a pure reference state.
pub fn pure_fidelity(rho: &DensityMatrix, psi: &DVector<Complex64>) -> Result<f64> {
    same_dim(rho.dim(), psi.len())?;
    Ok((psi.adjoint() * &rho.matrix * psi)[(0, 0)].re)
}

/// Seeded random instances. Instance `i` draws from its own keyed stream.
#[derive(Clone, Copy, Debug)]
pub struct RandomInstances {
    seed: u64,
}

impl RandomInstances {
    pub fn new(seed: u64) -> Self {
        RandomInstances { seed }
    }

    pub fn rng(&self, instance: u64) -> impl RngCore {
        keyed_rng(self.seed, Domain::Oracle, instance)
    }
}

pub fn ginibre(rng: &mut impl RngCore, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
}

/// `GG†/Tr(GG†)` for a Ginibre `G`.
pub fn random_density_matrix(rng: &mut impl RngCore, dim: usize) -> DensityMatrix {
    let g = ginibre(rng, dim, dim);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    DensityMatrix::new(m.unscale(t)).expect("Ginibre ensemble is a valid state")
}

/// A Ginibre state scaled by a uniform trace in `(0, 1]`.
pub fn random_subnormalized(rng: &mut impl RngCore, dim: usize) -> DensityMatrix {
    let rho = random_density_matrix(rng, dim);
    let t = open_unit(rng);
    DensityMatrix::new(rho.matrix.scale(t)).expect("scaled state is valid")
}

pub fn random_pure_state(rng: &mut impl RngCore, dim: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |_, _| complex_gaussian(rng, 1.0));
    let n = v.norm();
    v.unscale(n)
}

/// Haar unitary: QR of a Ginibre matrix with the phases of `R`'s diagonal
/// moved into `Q`.
pub fn random_unitary(rng: &mut impl RngCore, dim: usize) -> CMatrix {
    let qr = ginibre(rng, dim, dim).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `U diag(λ) U†` with `λᵢ` uniform on `[0, 1]`.
pub fn random_povm_element(rng: &mut impl RngCore, dim: usize) -> PovmElement {
    let u = random_unitary(rng, dim);
    let vals: Vec<f64> = (0..dim).map(|_| 1.0 - open_unit(rng)).collect();
    let m = from_eigen(&vals, &u);
    PovmElement::new((&m + m.adjoint()).scale(0.5)).expect("eigenvalues in [0, 1]")
}

/// Projective POVM with `outcomes` elements from the columns of a Haar
/// unitary, distributed round-robin. Requires `outcomes ≤ dim`.
pub fn random_projective_povm(rng: &mut impl RngCore, dim: usize, outcomes: usize) -> Result<Vec<PovmElement>> {
    if outcomes == 0 || outcomes > dim {
        return Err(Error::domain("random_projective_povm", format!("{outcomes} outcomes in dim {dim}")));
    }
    let u = random_unitary(rng, dim);
    (0..outcomes)
        .map(|m| {
            let cols: Vec<DVector<Complex64>> = (m..dim).step_by(outcomes).map(|j| u.column(j).into_owned()).collect();
            PovmElement::projector(&cols)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{fock_loss_distribution, BeamsplitterExpansion};
    use crate::fock::coherent_fock_amplitudes;
    use approx::assert_relative_eq;

    fn ket(v: &[f64]) -> DVector<Complex64> {
        DVector::from_iterator(v.len(), v.iter().map(|&x| c(x)))
    }

    #[test]
    fn trace_distance_examples() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        assert!(trace_distance(&rho, &rho).unwrap().abs() < 1e-12);
        let z = DensityMatrix::basis(0, 2).unwrap();
        let o = DensityMatrix::basis(1, 2).unwrap();
        assert!((trace_distance(&z, &o).unwrap() - 2.0).abs() < 1e-12);
        let mixed = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        assert!((trace_distance(&mixed, &z).unwrap() - 0.6).abs() < 1e-12);
        assert!(trace_distance(&z, &DensityMatrix::basis(0, 3).unwrap()).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let not_herm = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(not_herm).is_err());
        assert!(DensityMatrix::diagonal(&[0.8, 0.8]).is_err());
        assert!(DensityMatrix::diagonal(&[1.2, -0.2]).is_err());
        let clipped = DensityMatrix::diagonal(&[1.0, -1e-12]).unwrap();
        assert!(clipped.clipped_mass() > 0.0);
        assert!(DensityMatrix::diagonal(&[0.4, 0.1]).unwrap().is_subnormalized());
        assert!(PovmElement::new(CMatrix::from_diagonal(&ket(&[1.2, 0.0]))).is_err());
    }

    #[test]
    fn trace_inequality_edges() {
        let mut rng = RandomInstances::new(1).rng(0);
        let rho = random_density_matrix(&mut rng, 3);
        let lam = random_povm_element(&mut rng, 3);
        let r = check_trace_inequality(&lam, &rho, &rho).unwrap();
        assert!(r.residual.abs() < 1e-12);
        let sigma = random_subnormalized(&mut rng, 3);
        let id = PovmElement::identity(3);
        let r = check_trace_inequality(&id, &rho, &sigma).unwrap();
        let expected = trace_distance(&rho, &sigma).unwrap() - (sigma.trace() - rho.trace());
        assert!((r.residual - expected).abs() < 1e-12);
    }

    #[test]
    fn trace_inequality_random_qutrits() {
        let inst = RandomInstances::new(77);
        for i in 0..10_000 {
            let mut rng = inst.rng(i);
            let rho = random_subnormalized(&mut rng, 3);
            let sigma = random_subnormalized(&mut rng, 3);
            let lam = random_povm_element(&mut rng, 3);
            check_trace_inequality(&lam, &rho, &sigma).unwrap();
        }
    }

    #[test]
    fn gentle_operator_examples() {
        let mut rng = RandomInstances::new(2).rng(0);
        let rho = random_density_matrix(&mut rng, 4);
        let r = check_gentle_operator(&PovmElement::identity(4), &rho, 0.0).unwrap();
        assert!(r.rhs.abs() < 1e-12);

        // ρ = |ψ⟩⟨ψ| with ψ = (√(1-ε), √ε), Λ = |0⟩⟨0|
        let eps: f64 = 0.09;
        let psi = ket(&[(1.0 - eps).sqrt(), eps.sqrt()]);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let lam = PovmElement::projector(&[ket(&[1.0, 0.0])]).unwrap();
        assert_relative_eq!(lam.probability(&rho), 1.0 - eps, max_relative = 1e-14);
        let r = check_gentle_operator(&lam, &rho, eps).unwrap();
        // post-measurement (1-ε)|0⟩⟨0|; difference has eigenvalues ±... norm 2√ε·√(1-ε)+ε-ish
        let diff = rho.matrix() - CMatrix::from_diagonal(&ket(&[1.0 - eps, 0.0]));
        assert!((r.rhs - trace_norm(&diff)).abs() < 1e-12);
        assert!(r.rhs <= 2.0 * eps.sqrt());

        assert!(matches!(
            check_gentle_operator(&lam, &rho, 0.01),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn gentle_ensemble_random_sweep() {
        let inst = RandomInstances::new(3);
        for i in 0..1000 {
            let mut rng = inst.rng(i);
            let dim = 2 + (i as usize % 5);
            let lam = random_povm_element(&mut rng, dim);
            let k = 1 + (i as usize % 4);
            let raw: Vec<f64> = (0..k).map(|_| open_unit(&mut rng)).collect();
            let total: f64 = raw.iter().sum();
            let ens: Vec<(f64, DensityMatrix)> = raw
                .iter()
                .map(|w| (w / total, random_subnormalized(&mut rng, dim)))
                .collect();
            let success: f64 = ens.iter().map(|(p, r)| p * lam.probability(r)).sum();
            check_gentle_ensemble(&lam, &ens, (1.0 - success).clamp(0.0, 1.0)).unwrap();
        }
    }

    #[test]
    fn mixture_decoder_examples() {
        let povm = vec![
            PovmElement::projector(&[ket(&[1.0, 0.0])]).unwrap(),
            PovmElement::projector(&[ket(&[0.0, 1.0])]).unwrap(),
        ];
        let words = vec![ket(&[1.0, 0.0]), ket(&[0.0, 1.0])];
        let vac = ket(&[0.0, 1.0]);
        let p = 0.3;
        let r = mixture_decoder_bound(&povm, &words, &vac, 0.0, p).unwrap();
        assert_relative_eq!(r.mixture_success[0], 1.0 - p, max_relative = 1e-14);
        assert_eq!(r.bound, 1.0 - p);
        let r0 = mixture_decoder_bound(&povm, &words, &vac, 0.0, 0.0).unwrap();
        assert_eq!(r0.mixture_success, r0.pure_success);
        assert!(mixture_decoder_bound(&povm[..1], &words[..1], &vac, 0.0, p).is_err());
    }

    /// Codeword with success exactly 1 - s under a projector `P`.
    pub(crate) fn tilted_codeword(
        rng: &mut impl RngCore,
        lambda: &PovmElement,
        s: f64,
    ) -> DVector<Complex64> {
        let dim = lambda.dim();
        let (vals, vecs) = eigh(lambda.matrix());
        let inside: Vec<usize> = (0..dim).filter(|&j| vals[j] > 0.5).collect();
        let outside: Vec<usize> = (0..dim).filter(|&j| vals[j] <= 0.5).collect();
        let pick = |rng: &mut dyn RngCore, idx: &[usize]| -> DVector<Complex64> {
            let mut v = DVector::zeros(dim);
            for &j in idx {
                v += vecs.column(j) * complex_gaussian(rng, 1.0);
            }
            let n = v.norm();
            v.unscale(n)
        };
        let a = pick(rng, &inside);
        if outside.is_empty() {
            return a;
        }
        let b = pick(rng, &outside);
        a * c((1.0 - s).sqrt()) + b * c(s.sqrt())
    }

    #[test]
    fn mixture_decoder_random_four_dim() {
        let inst = RandomInstances::new(4);
        for i in 0..1000 {
            let mut rng = inst.rng(i);
            let povm = random_projective_povm(&mut rng, 4, 2).unwrap();
            let words: Vec<_> = povm
                .iter()
                .map(|l| {
                    let s = 0.1 * open_unit(&mut rng);
                    tilted_codeword(&mut rng, l, s)
                })
                .collect();
            let vac = random_pure_state(&mut rng, 4);
            let r = mixture_decoder_bound(&povm, &words, &vac, 0.1, 0.25).unwrap();
            assert!(r.pure_success.iter().all(|s| *s >= 0.9 - 1e-12));
            assert!(r.mixture_success.iter().all(|s| *s >= 0.675 - 1e-9));
        }
    }

    #[test]
    fn sector_unitary_matches_combinatorial_expansion() {
        for a in 0..=12u64 {
            for &eta in &[0.0, 0.2, 0.5, 0.93, 1.0] {
                let from_generator = beamsplitter_sector_amplitudes(a as usize, eta).unwrap();
                let expansion = BeamsplitterExpansion::new(a, eta).unwrap();
                for (x, y) in from_generator.iter().zip(expansion.amplitudes()) {
                    assert!((x.abs() - y.abs()).abs() < 1e-10, "a={a} eta={eta}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn loss_examples() {
        let one = DensityMatrix::basis(1, 2).unwrap();
        let out = simulate_loss_exact(&one, &[2], 0.5).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((out.matrix()[(1, 1)].re - 0.5).abs() < 1e-12);
        assert!(out.matrix()[(0, 1)].norm() < 1e-12);

        let mut rng = RandomInstances::new(5).rng(0);
        let rho = random_density_matrix(&mut rng, 9);
        let out = simulate_loss_exact(&rho, &[3, 3], 1.0).unwrap();
        assert!((out.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-12));
        assert!(simulate_loss_exact(&rho, &[3, 3, 3], 0.5).is_err());
    }

    #[test]
    fn coherent_state_stays_coherent() {
        let alpha = Complex64::new(0.8, -0.6);
        let cutoff = 20;
        let psi = DVector::from_vec(coherent_fock_amplitudes(alpha, cutoff));
        let deficit = 1.0 - psi.norm_squared();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let eta = 0.6;
        let out = simulate_loss_exact(&rho, &[cutoff + 1], eta).unwrap();
        let target = DVector::from_vec(coherent_fock_amplitudes(alpha * eta.sqrt(), cutoff));
        let f = pure_fidelity(&out, &target).unwrap();
        assert!(f >= 1.0 - deficit - 1e-10, "fidelity {f}, deficit {deficit}");
    }

    #[test]
    fn diagonal_states_reproduce_binomial_path() {
        let inst = RandomInstances::new(6);
        for (i, dims) in [vec![11usize], vec![6, 6], vec![4, 3, 5]].into_iter().enumerate() {
            let mut rng = inst.rng(i as u64);
            let total: usize = dims.iter().product();
            let raw: Vec<f64> = (0..total).map(|_| open_unit(&mut rng)).collect();
            let s: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let rho = DensityMatrix::diagonal(&probs).unwrap();
            let eta = 0.37;
            let out = simulate_loss_exact(&rho, &dims, eta).unwrap();
            // binomial path, per basis state
            let mut expected = vec![0.0; total];
            for (idx, &p) in probs.iter().enumerate() {
                let mut per_mode = Vec::new();
                let mut rem = idx;
                for (m, &d) in dims.iter().enumerate() {
                    let stride: usize = dims[m + 1..].iter().product();
                    per_mode.push((rem / stride, stride));
                    rem %= stride;
                    let _ = d;
                }
                // enumerate surviving counts per mode
                fn rec(
                    modes: &[(usize, usize)],
                    eta: f64,
                    acc_idx: usize,
                    acc_p: f64,
                    out: &mut [f64],
                ) {
                    let Some(((a, stride), rest)) = modes.split_first() else {
                        out[acc_idx] += acc_p;
                        return;
                    };
                    let d = fock_loss_distribution(*a as u64, eta).unwrap();
                    for k in 0..=*a {
                        rec(rest, eta, acc_idx + k * stride, acc_p * d.prob(k), out);
                    }
                }
                rec(&per_mode, eta, 0, p, &mut expected);
            }
            for j in 0..total {
                assert!((out.matrix()[(j, j)].re - expected[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn off_diagonal_terms_leave_no_diagonal_weight() {
        for (a, b) in [(1usize, 0usize), (3, 1), (2, 4)] {
            let mut m = CMatrix::zeros(6, 6);
            m[(a, b)] = c(1.0);
            let out = apply_loss_to_operator(&m, &[6], 0.45).unwrap();
            for k in 0..6 {
                assert!(out[(k, k)].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn superposition_traced_over_flag_is_the_mixture() {
        let mut rng = RandomInstances::new(8).rng(0);
        let psi = random_pure_state(&mut rng, 5);
        let vac = ket(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let p = 0.35;
        let traced = traced_superposition(&psi, &vac, p).unwrap();
        let mix = DensityMatrix::mixture(&[
            (1.0 - p, &DensityMatrix::pure(&psi).unwrap()),
            (p, &DensityMatrix::pure(&vac).unwrap()),
        ])
        .unwrap();
        assert!(trace_distance(&traced, &mix).unwrap() < 1e-12);
    }

    #[test]
    fn random_generators_are_valid() {
        let mut rng = RandomInstances::new(9).rng(0);
        let u = random_unitary(&mut rng, 6);
        let id = &u * u.adjoint();
        assert!((id - CMatrix::identity(6, 6)).iter().all(|z| z.norm() < 1e-12));
        let povm = random_projective_povm(&mut rng, 6, 4).unwrap();
        assert!(povm_completeness_defect(&povm).unwrap() < 1e-12);
        assert!(random_projective_povm(&mut rng, 3, 4).is_err());
    }
}
