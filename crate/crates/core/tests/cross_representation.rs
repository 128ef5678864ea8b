use bosonic_lab::channel::{fock_loss_distribution, output_shadow_exact, DiagonalInput};
use bosonic_lab::codebook::{codeword_shadow, GaussianEnsemble};
use bosonic_lab::concentration::{geometric_sum_tail_at_least, GeometricLaw};
use bosonic_lab::fock::{product_shadow, PhotonDistribution, SingleModeState, ThermalState};
use bosonic_lab::oracle::{simulate_loss_exact, DensityMatrix, RandomInstances};
use bosonic_lab::rng::open_unit;

#[test]
fn codeword_shadow_matches_fock_tensor_path() {
    for n in 1..=4usize {
        let ensemble = GaussianEnsemble::new(0.8, n, 31 + n as u64).unwrap();
        for m in 0..20 {
            let cw = ensemble.codeword(m);
            let modes: Vec<SingleModeState> = cw
                .amplitudes
                .iter()
                .map(|&a| SingleModeState::coherent(a, 30))
                .collect();
            for cutoff in 0..=30 {
                let fock = product_shadow(&modes, cutoff);
                let poisson = codeword_shadow(&cw, cutoff);
                assert!((fock - poisson).abs() < 1e-9, "n={n} m={m} L={cutoff}: {fock} vs {poisson}");
            }
        }
    }
}

#[test]
fn dense_loss_matches_binomial_path_for_diagonal_inputs() {
    let inst = RandomInstances::new(99);
    let mut case = 0;
    for n in 1..=3usize {
        for cutoff in 1..=10usize {
            let dims = vec![cutoff + 1; n];
            let total: usize = dims.iter().product();
            if total > 4096 {
                continue;
            }
            let mut rng = inst.rng(case);
            case += 1;
            let weights: Vec<f64> = (0..total).map(|_| open_unit(&mut rng)).collect();
            let s: f64 = weights.iter().sum();
            let probs: Vec<f64> = weights.iter().map(|w| w / s).collect();
            let rho = DensityMatrix::diagonal(&probs).unwrap();
            let eta = 0.1 + 0.8 * open_unit(&mut rng);
            let out = simulate_loss_exact(&rho, &dims, eta).unwrap();

            // Per-basis-state binomial thinning, mode by mode.
            let mut expected = probs.clone();
            for mode in 0..n {
                let stride = (cutoff + 1).pow((n - 1 - mode) as u32);
                let mut next = vec![0.0; total];
                for (idx, &p) in expected.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let a = (idx / stride) % (cutoff + 1);
                    let d = fock_loss_distribution(a as u64, eta).unwrap();
                    for k in 0..=a {
                        next[idx - (a - k) * stride] += p * d.prob(k);
                    }
                }
                expected = next;
            }
            for (j, e) in expected.iter().enumerate() {
                let got = out.matrix()[(j, j)].re;
                assert!((got - e).abs() <= 1e-10, "n={n} L={cutoff} j={j}: {got} vs {e}");
            }

            // Total-photon shadow agrees with the diagonal-input fast path.
            let mut total_pmf = vec![0.0; n * cutoff + 1];
            for (idx, &p) in probs.iter().enumerate() {
                let photons: usize = (0..n).map(|m| (idx / (cutoff + 1).pow(m as u32)) % (cutoff + 1)).sum();
                total_pmf[photons] += p;
            }
            let total_dist = PhotonDistribution::from_linear_pmf(&total_pmf).unwrap();
            for l in 0..=(n * cutoff) as u64 {
                let fast = output_shadow_exact(&DiagonalInput::Total(&total_dist), eta, l).unwrap();
                let dense: f64 = (0..total)
                    .filter(|&idx| {
                        (0..n).map(|m| (idx / (cutoff + 1).pow(m as u32)) % (cutoff + 1)).sum::<usize>() as u64 <= l
                    })
                    .map(|idx| out.matrix()[(idx, idx)].re)
                    .sum();
                assert!((fast - dense).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn geometric_tail_is_complement_of_thermal_shadow() {
    for &mean in &[0.25, 0.9, 1.5] {
        let law = GeometricLaw::from_mean(mean).unwrap();
        let per_mode = ThermalState::new(mean).unwrap().distribution().unwrap();
        for n in [1usize, 3, 8, 20] {
            let product = per_mode.power(n);
            for threshold in 1..60u64 {
                let tail = geometric_sum_tail_at_least(law, n as u64, threshold).linear();
                let shadow = product.shadow(threshold - 1);
                let slack = product.deficit() + 1e-10;
                assert!((tail - (1.0 - shadow)).abs() <= slack, "mean={mean} n={n} T={threshold}");
            }
        }
    }
}
