//! Monte Carlo invariants tying sampled graphs back to their generating
//! probabilities: indicator means, occupancy certificates, rejection
//! budgets, and the spectral-tail inequalities behind the estimation error
//! bound. Every test runs on fixed seeds and named streams, so measured
//! frequencies are reproducible, and each stochastic pass rule carries three
//! standard errors of slack.

use std::f64::consts::FRAC_1_SQRT_2;

use graphon_core::experiments::run_conditioning_frequency;
use graphon_core::sampler::{
    chernoff_lower_tail_bound, default_bin_count, probability_matrix, replicate_stream,
    sample_adjacency, sample_latents, sample_latents_conditioned,
};
use graphon_core::spectra::{eigen_tail_profile, low_rank_truncation, mean_and_standard_error};
use graphon_core::usvt::{mse, usvt_estimate};
use graphon_core::{OccupancyBounds, SpectralGraphon, StreamRng, UsvtConfig};

/// Decay exponent of the reference family.
const FAMILY_RATE: f64 = 2.0;
/// Decay coefficient of the reference family.
const FAMILY_COEFF: f64 = 0.015;
/// Oscillatory terms in the reference family.
const FAMILY_RANK: usize = 200;
/// Constant term of the reference family.
const FAMILY_OFFSET: f64 = 0.5;

/// Largest entrywise drift allowed between the empirical edge-indicator
/// mean over 2000 replicates and the generating probabilities.
const INDICATOR_TOL: f64 = 0.05;
/// Mean rejection attempts allowed for the conditioned sampler at the
/// default band.
const MEAN_ATTEMPTS_CAP: f64 = 4.0;
/// Slack for the exact low-rank inequality (float accumulation only).
const EXACT_TOL: f64 = 1e-9;

fn family() -> SpectralGraphon {
    SpectralGraphon::trig_decay(FAMILY_RATE, Some(FAMILY_COEFF), FAMILY_RANK, FAMILY_OFFSET)
        .expect("reference family is valid")
}

#[test]
fn edge_indicator_mean_tracks_probabilities() {
    let graphon = family();
    let n = 50;
    let replicates = 2000_u64;
    let mut rng = StreamRng::new(graphon_core::DEFAULT_SEED, 1000);
    let latents = sample_latents(n, &mut rng);
    let matrix = probability_matrix(&graphon, &latents).unwrap();

    let mut sums = nalgebra::DMatrix::<f64>::zeros(n, n);
    for r in 0..replicates {
        let mut rng = StreamRng::new(graphon_core::DEFAULT_SEED, replicate_stream(1001, r));
        sums += sample_adjacency(&matrix, &mut rng).entries();
    }
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let mean = sums[(i, j)] / replicates as f64;
            worst = worst.max((mean - matrix.entries()[(i, j)]).abs());
        }
    }
    println!("edge indicator: max entrywise deviation {worst}");
    assert!(
        worst <= INDICATOR_TOL,
        "deviation {worst} > {INDICATOR_TOL}"
    );
}

#[test]
fn chernoff_certificate_bounds_single_bin_shortfall() {
    let trials = 2000;
    for (case, &n) in [100_usize, 1000].iter().enumerate() {
        for (sub, &lambda) in [0.3, 0.5].iter().enumerate() {
            let mut rng =
                StreamRng::new(graphon_core::DEFAULT_SEED, 1100 + (case * 2 + sub) as u64);
            let report =
                run_conditioning_frequency(n, trials, lambda, 1.0 + FRAC_1_SQRT_2, &mut rng)
                    .unwrap();
            assert_eq!(report.bins, default_bin_count(n));
            let bound = chernoff_lower_tail_bound(n, lambda);
            let shortfall = report.first_bin_shortfall;
            println!(
                "chernoff n={n} lambda={lambda}: frequency {} vs bound {bound}",
                shortfall.frequency
            );
            assert!(
                shortfall.frequency <= bound + 3.0 * shortfall.std_error,
                "n={n} lambda={lambda}: {} > {bound} + 3se",
                shortfall.frequency
            );
        }
    }
}

#[test]
fn conditioned_sampling_stays_within_attempt_budget() {
    let n = 1000;
    let bins = default_bin_count(n);
    assert_eq!(bins, 36);
    let bounds = OccupancyBounds::default();
    let runs = 500_u64;
    let mut total_attempts = 0_u64;
    for r in 0..runs {
        let mut rng = StreamRng::new(graphon_core::DEFAULT_SEED, replicate_stream(1200, r));
        let draw = sample_latents_conditioned(n, bins, &bounds, &mut rng, 64).unwrap();
        total_attempts += u64::from(draw.attempts);
    }
    let mean = total_attempts as f64 / runs as f64;
    println!("conditioned sampling: mean attempts {mean} over {runs} runs");
    assert!(
        mean <= MEAN_ATTEMPTS_CAP,
        "mean attempts {mean} > {MEAN_ATTEMPTS_CAP}"
    );
}

/// The eigenvalue tail of a realized probability matrix is bounded by the
/// distance to ANY matrix of that rank, in particular the rank-`k`
/// truncation of the generating kernel on the same latent positions. This
/// is the exact inequality the error decomposition rests on.
#[test]
fn eigenvalue_tail_is_bounded_by_kernel_truncation_distance() {
    let graphon = family();
    let n = 200;
    let mut rng = StreamRng::new(graphon_core::DEFAULT_SEED, 1300);
    let latents = sample_latents(n, &mut rng);
    let matrix = probability_matrix(&graphon, &latents).unwrap();
    let profile = eigen_tail_profile(matrix.entries()).unwrap();
    let scale = 1.0 / (n as f64 * n as f64);
    for k in [1_usize, 5, 20] {
        let truncation = low_rank_truncation(&graphon, &latents, k).unwrap();
        let distance_sq: f64 = (matrix.entries() - &truncation)
            .iter()
            .map(|d| d * d)
            .sum::<f64>()
            * scale;
        let tail = profile.value_at(k);
        println!("low-rank bound k={k}: tail {tail} <= distance {distance_sq}");
        assert!(
            tail <= distance_sq + EXACT_TOL,
            "k={k}: tail {tail} exceeds truncation distance {distance_sq}"
        );
    }
}

/// Off-diagonal second moment: E|W(x,y) − prefix_k(x,y)|² over independent
/// uniform pairs is controlled by twice the eigenvalue tail sum.
#[test]
fn off_diagonal_moment_is_bounded_by_tail_sum() {
    let graphon = family();
    let cut = 10;
    let pairs = 100_000;
    let terms = graphon.terms();
    let mut rng = StreamRng::new(graphon_core::DEFAULT_SEED, 1400);
    let mut samples = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let x = rng.uniform();
        let y = rng.uniform();
        let full = graphon.evaluate(x, y).unwrap();
        let prefix: f64 = terms
            .iter()
            .take(cut)
            .map(|(weight, function)| weight * function.evaluate(x) * function.evaluate(y))
            .sum();
        let deviation = full - prefix;
        samples.push(deviation * deviation);
    }
    let (mean, std_error) = mean_and_standard_error(&samples);
    let bound = 2.0 * graphon.tail_eigen_sum(cut);
    println!("off-diagonal moment: mc {mean} vs bound {bound} (se {std_error})");
    assert!(
        mean <= bound + 3.0 * std_error,
        "moment {mean} > {bound} + 3·{std_error}"
    );
}

/// Error-decomposition regression: empirical estimator MSE stays within a
/// fitted constant of `k/n + (1/n²)Σ_{i>k} λ_i²(M)`, and that constant is
/// stable as `n` grows. The fitted values are pinned from fixed-seed runs;
/// drift outside the recorded band signals a behavior change, not a broken
/// bound.
#[test]
fn error_decomposition_constant_is_stable_across_sizes() {
    let graphon = family();
    let sizes = [200_usize, 400, 800];
    let cuts = [1_usize, 5, 20];
    let replicates = 3_u64;
    let config = UsvtConfig::default();

    // ratios[s][c] = mean MSE / (k/n + mean tail_k)
    let mut ratios = [[0.0_f64; 3]; 3];
    for (s, &n) in sizes.iter().enumerate() {
        let mut mses = Vec::new();
        let mut tails: Vec<Vec<f64>> = vec![Vec::new(); cuts.len()];
        for r in 0..replicates {
            let mut rng = StreamRng::new(
                graphon_core::DEFAULT_SEED,
                replicate_stream(1500 + s as u64, r),
            );
            let latents = sample_latents(n, &mut rng);
            let matrix = probability_matrix(&graphon, &latents).unwrap();
            let adjacency = sample_adjacency(&matrix, &mut rng);
            let estimate = usvt_estimate(&adjacency, &config).unwrap();
            mses.push(mse(estimate.matrix(), matrix.entries()).unwrap());
            let profile = eigen_tail_profile(matrix.entries()).unwrap();
            for (c, &k) in cuts.iter().enumerate() {
                tails[c].push(profile.value_at(k));
            }
        }
        let mean_mse = mses.iter().sum::<f64>() / replicates as f64;
        for (c, &k) in cuts.iter().enumerate() {
            let mean_tail = tails[c].iter().sum::<f64>() / replicates as f64;
            ratios[s][c] = mean_mse / (k as f64 / n as f64 + mean_tail);
            println!(
                "decomposition n={n} k={k}: mse {mean_mse}, budget {}, ratio {}",
                k as f64 / n as f64 + mean_tail,
                ratios[s][c]
            );
        }
    }

    for (c, &k) in cuts.iter().enumerate() {
        let column: Vec<f64> = sizes
            .iter()
            .enumerate()
            .map(|(s, _)| ratios[s][c])
            .collect();
        let max = column.iter().cloned().fold(f64::MIN, f64::max);
        let min = column.iter().cloned().fold(f64::MAX, f64::min);
        println!("decomposition k={k}: ratio range [{min}, {max}]");
        assert!(
            max <= 1.0,
            "k={k}: fitted constant {max} left the recorded band (<= 1)"
        );
        assert!(
            max / min <= 2.0,
            "k={k}: constant varies {min}..{max} across sizes (factor > 2)"
        );
    }
}
