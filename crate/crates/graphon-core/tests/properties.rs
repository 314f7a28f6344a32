//! Property tests for the structural inequalities the numeric pipeline
//! rests on: the trace inequality behind the distance-ratio argument,
//! codebook separation, the volume/entropy bound, metric symmetry, and
//! serialization round-trips.

use graphon_core::io;
use graphon_core::packing::{
    entropy_bound_check, hamming_distance, random_centered_frame, sin_theta_metrics,
    vg_greedy_codebook, CenteredFrame,
};
use graphon_core::StreamRng;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Float slack for inequalities that hold exactly in real arithmetic.
const TRACE_TOL: f64 = 1e-9;

fn frame(m: usize, k: usize, seed: u64, stream: u64) -> CenteredFrame {
    let mut rng = StreamRng::new(seed, stream);
    random_centered_frame(m, k, &mut rng).expect("random frame")
}

/// Descending singular values of a small dense matrix.
fn singular_values_desc(matrix: &DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = matrix.singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    values
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

    /// Trace inequality: |tr(A·B)| is at most the dot product of the sorted
    /// singular values of A and B, exercised on cross-Gram matrices of
    /// random frame quadruples exactly as the distance-ratio proof uses it.
    #[test]
    fn trace_inequality_on_frame_quadruples(
        m in 4_usize..16,
        k in 1_usize..4,
        seed in 0_u64..1_000_000,
    ) {
        prop_assume!(k < m);
        let u = frame(m, k, seed, 0);
        let u2 = frame(m, k, seed, 1);
        let w = frame(m, k, seed, 2);
        let w2 = frame(m, k, seed, 3);

        let a = u2.matrix().transpose() * u.matrix();
        let b = w.matrix().transpose() * w2.matrix();
        let lhs = (&a * &b).trace().abs();
        let rhs: f64 = singular_values_desc(&a)
            .iter()
            .zip(singular_values_desc(&b).iter())
            .map(|(x, y)| x * y)
            .sum();
        prop_assert!(
            lhs <= rhs + TRACE_TOL,
            "|tr(AB)| = {lhs} > {rhs}"
        );
    }

    /// Every deterministic greedy codebook keeps all pairs at distance at
    /// least `d` and meets its covering-bound size guarantee.
    #[test]
    fn codebooks_separate_all_pairs(
        alphabet in 2_u16..5,
        length in 2_usize..7,
        distance in 1_usize..4,
        seed in 0_u64..1_000_000,
    ) {
        prop_assume!(distance <= length);
        let mut rng = StreamRng::new(seed, 11);
        let code = vg_greedy_codebook(alphabet, length, distance, &mut rng, 0).unwrap();
        prop_assert!(code.deterministic());
        let words = code.words();
        for i in 0..words.len() {
            for j in (i + 1)..words.len() {
                let measured = hamming_distance(&words[i], &words[j]).unwrap();
                prop_assert!(
                    measured >= distance,
                    "pair ({i}, {j}) at distance {measured} < {distance}"
                );
            }
        }
        if let Some(guarantee) = code.size_guarantee() {
            let guarantee = u64::try_from(guarantee.clone()).unwrap();
            prop_assert!(words.len() as u64 >= guarantee);
        }
    }

    /// Volume/entropy bound: the Hamming ball volume never exceeds the
    /// entropy bound for radii up to `n(1 − 1/N)`.
    #[test]
    fn entropy_bound_holds_in_valid_range(
        alphabet in 2_u16..6,
        length in 2_usize..17,
        radius_scale in 0.0_f64..1.0,
    ) {
        let max_radius = (length as f64 * (1.0 - 1.0 / f64::from(alphabet))).floor() as usize;
        let radius = ((max_radius as f64) * radius_scale).floor() as usize;
        let check = entropy_bound_check(alphabet, length, radius).unwrap();
        prop_assert!(
            check.holds,
            "ln volume {} > ln bound {} at (N={alphabet}, n={length}, r={radius})",
            check.ln_volume,
            check.ln_bound
        );
    }

    /// The projection metric is symmetric in its arguments and vanishes on
    /// identical frames; the internal angle/projector identity is asserted
    /// by the call itself.
    #[test]
    fn projection_metric_is_symmetric(
        m in 3_usize..20,
        k in 1_usize..4,
        seed in 0_u64..1_000_000,
    ) {
        prop_assume!(k < m);
        let a = frame(m, k, seed, 21);
        let b = frame(m, k, seed, 22);
        let forward = sin_theta_metrics(&a, &b).unwrap();
        let backward = sin_theta_metrics(&b, &a).unwrap();
        prop_assert!(
            (forward.projection_distance_sq - backward.projection_distance_sq).abs() <= 1e-9
        );
        let zero = sin_theta_metrics(&a, &a).unwrap();
        prop_assert!(zero.projection_distance_sq.abs() <= 1e-9);
        prop_assert!(zero.sin_sq_sum.abs() <= 1e-9);
    }

    /// Matrix serialization round-trips bit for bit for arbitrary finite
    /// entries.
    #[test]
    fn matrix_io_round_trips_exactly(
        n in 1_usize..8,
        seed in 0_u64..1_000_000,
        scale in prop::sample::select(vec![1e-12_f64, 1.0, 1e3, 1e12]),
    ) {
        let mut rng = StreamRng::new(seed, 33);
        let matrix = DMatrix::from_fn(n, n, |_, _| (rng.uniform() - 0.5) * scale);
        let mut buffer = Vec::new();
        io::write_matrix(&mut buffer, &matrix).unwrap();
        let back = io::read_matrix(buffer.as_slice()).unwrap();
        for (a, b) in matrix.iter().zip(back.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
