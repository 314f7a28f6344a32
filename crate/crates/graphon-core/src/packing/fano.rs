//! From frame packings to graphon families and two-point information
//! diagnostics.
//!
//! Each centered frame `V` (m rows, k columns) induces a step graphon
//! `W_V = 1/2 + L·k^{-α} Σ_i φ_{v_i} ⊗ φ_{v_i}` whose entries on block pair
//! `(a, b)` equal `1/2 + L·k^{-α}·m·(VVᵀ)_{ab}`. Keeping every entry inside
//! `[1/4, 3/4]` makes the Bernoulli KL divergence between any two family
//! members quadratically comparable to the probability-matrix distance,
//! which is what a Fano-style risk lower bound consumes.

use std::f64::consts::LN_2;

use serde::Serialize;

use super::frames::{projection_distance_sq, CenteredFrame, PackingSet};
use super::PackingError;
use crate::graphon::{EigenFunction, SpectralGraphon};
use crate::sampler::{probability_matrix, LatentSample, OccupancyBounds};

/// Upper cap on the perturbation scale `L`.
pub const SCALE_CAP: f64 = 0.1;
/// Absolute tolerance of the binary search for the largest feasible scale.
pub const SCALE_SEARCH_TOL: f64 = 1e-6;
/// Entries of every family member must stay in this closed interval.
pub const KL_RANGE: (f64, f64) = (0.25, 0.75);
/// Constant in the range-restricted KL bound `KL(p, q) ≤ (16/3)(q - p)²`.
pub const KL_QUAD_CONST: f64 = 16.0 / 3.0;

/// KL divergence between Bernoulli(p) and Bernoulli(q) in nats, with the
/// usual `0·ln 0 = 0` conventions; infinite when `q` puts zero mass where
/// `p` does not.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64, PackingError> {
    for value in [p, q] {
        if !(0.0..=1.0).contains(&value) {
            return Err(PackingError::BadProbability(value));
        }
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    Ok(term(p, q) + term(1.0 - p, 1.0 - q))
}

/// Outcome of checking `KL(p, q) ≤ (16/3)(q - p)²` on the restricted range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlBoundCheck {
    pub kl: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Check the quadratic KL bound for `p, q ∈ [1/4, 3/4]` (errors outside the
/// range, where the inequality is not claimed).
pub fn kl_bound_check(p: f64, q: f64) -> Result<KlBoundCheck, PackingError> {
    let (lo, hi) = KL_RANGE;
    if !(lo..=hi).contains(&p) || !(lo..=hi).contains(&q) {
        return Err(PackingError::OutsideKlRange { p, q });
    }
    let kl = kl_bernoulli(p, q)?;
    let bound = KL_QUAD_CONST * (q - p) * (q - p);
    Ok(KlBoundCheck {
        kl,
        bound,
        holds: kl <= bound + 1e-12,
    })
}

/// Build the step graphon induced by one frame at decay rate `rate` and
/// perturbation scale `scale`.
///
/// Every block-pair entry is computed exactly and required to lie in
/// `[1/4, 3/4]`; the first offending pair is reported otherwise. The result
/// carries a certified decay envelope with constant
/// `max(1/2, scale·2^rate)`.
pub fn build_lower_bound_graphon(
    frame: &CenteredFrame,
    rate: f64,
    scale: f64,
) -> Result<SpectralGraphon, PackingError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(PackingError::BadRate(rate));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(PackingError::BadScale(scale));
    }
    let m = frame.rows();
    let k = frame.cols();
    let weight = scale * (k as f64).powf(-rate);

    // Exact range check on block pairs: the graphon is constant on each
    // block pair with value 1/2 + weight · m · (VVᵀ)_{ab}.
    let projector = frame.projector();
    let (lo, hi) = KL_RANGE;
    for a in 0..m {
        for b in 0..m {
            let value = 0.5 + weight * m as f64 * projector[(a, b)];
            if !(lo..=hi).contains(&value) {
                return Err(PackingError::EntryOutsideKlRange {
                    block_a: a,
                    block_b: b,
                    value,
                });
            }
        }
    }

    let mut terms = Vec::with_capacity(k + 1);
    terms.push((0.5, EigenFunction::Constant));
    for col in 0..k {
        let coeffs: Vec<f64> = frame.matrix().column(col).iter().copied().collect();
        terms.push((weight, EigenFunction::Step { coeffs }));
    }
    let graphon = SpectralGraphon::new(terms)?;
    let envelope = (0.5_f64).max(scale * 2.0_f64.powf(rate));
    Ok(graphon.with_decay(rate, envelope)?)
}

/// Largest scale `L ≤` [`SCALE_CAP`] keeping every entry of every family
/// member in `[1/4, 3/4]`, found by binary search to within
/// [`SCALE_SEARCH_TOL`] (the cap is returned exactly when feasible).
pub fn max_scale(packing: &PackingSet, rate: f64) -> Result<f64, PackingError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(PackingError::BadRate(rate));
    }
    let m = packing.rows() as f64;
    let k_pow = (packing.cols() as f64).powf(-rate);
    let margin = KL_RANGE.1 - 0.5;
    let feasible = |scale: f64| -> bool {
        packing
            .frames()
            .iter()
            .all(|frame| scale * k_pow * m * frame.projector_linf() <= margin)
    };
    if feasible(SCALE_CAP) {
        return Ok(SCALE_CAP);
    }
    let mut lo = 0.0_f64;
    let mut hi = SCALE_CAP;
    while hi - lo > SCALE_SEARCH_TOL {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Information-theoretic summary of a packing-induced graphon family on one
/// conditioned latent draw.
#[derive(Debug, Clone, Serialize)]
pub struct FanoReport {
    /// Number of family members `M`.
    pub frames: usize,
    /// Number of latent positions `n`.
    pub n: usize,
    /// Step blocks `m` shared by the family.
    pub bins: usize,
    /// Subspace dimension `k`.
    pub subspace_dim: usize,
    /// Decay rate `α` of the family.
    pub rate: f64,
    /// Perturbation scale `L`.
    pub scale: f64,
    /// Minimum pairwise normalized separation `min (1/n²)‖M_V − M_V'‖_F²`.
    pub alpha_n: f64,
    /// Maximum pairwise KL budget `(16/3)·max ‖M_V − M_V'‖_F²`.
    pub beta_n: f64,
    /// `ln M`.
    pub log_m: f64,
    /// `(β_N + ln 2) / ln M`, the quantity a Fano bound needs small.
    pub fano_ratio: f64,
    /// Frame pair attaining `alpha_n`.
    pub min_pair: (usize, usize),
    /// Frame pair attaining `beta_n`.
    pub max_pair: (usize, usize),
    /// Measured minimum pairwise frame separation `‖VVᵀ − V'V'ᵀ‖_F²`.
    pub min_separation: f64,
}

/// Evaluate separation and KL budgets for the graphon family induced by a
/// packing, on a latent draw that must satisfy the occupancy conditioning
/// event for the packing's block count.
pub fn fano_diagnostics(
    packing: &PackingSet,
    latents: &LatentSample,
    bounds: &OccupancyBounds,
    rate: f64,
    scale: f64,
) -> Result<FanoReport, PackingError> {
    if packing.min_separation() <= 0.0 {
        return Err(PackingError::SeparationViolated {
            measured: packing.min_separation(),
            certified: f64::MIN_POSITIVE,
        });
    }
    let bins = packing.rows();
    if !latents.bin_counts(bins)?.event(bounds).joint() {
        return Err(PackingError::OutsideConditioningEvent { bins });
    }

    let matrices: Vec<_> = packing
        .frames()
        .iter()
        .map(|frame| {
            build_lower_bound_graphon(frame, rate, scale)
                .and_then(|graphon| Ok(probability_matrix(&graphon, latents)?))
        })
        .collect::<Result<_, _>>()?;

    let n = latents.len();
    let count = matrices.len();
    let mut min_dist = f64::INFINITY;
    let mut max_dist = 0.0_f64;
    let mut min_pair = (0, 1);
    let mut max_pair = (0, 1);
    for i in 0..count {
        for j in (i + 1)..count {
            let a = matrices[i].entries();
            let b = matrices[j].entries();
            let dist: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
            if dist < min_dist {
                min_dist = dist;
                min_pair = (i, j);
            }
            if dist > max_dist {
                max_dist = dist;
                max_pair = (i, j);
            }
        }
    }

    let log_m = (count as f64).ln();
    let beta_n = KL_QUAD_CONST * max_dist;
    Ok(FanoReport {
        frames: count,
        n,
        bins,
        subspace_dim: packing.cols(),
        rate,
        scale,
        alpha_n: min_dist / (n as f64 * n as f64),
        beta_n,
        log_m,
        fano_ratio: (beta_n + LN_2) / log_m,
        min_pair,
        max_pair,
        min_separation: packing.min_separation(),
    })
}

/// Re-derive the projection distance between the frames behind a report's
/// minimum pair (convenience for verifying reports against their packing).
pub fn report_min_pair_separation(packing: &PackingSet, report: &FanoReport) -> f64 {
    projection_distance_sq(
        packing.frame(report.min_pair.0),
        packing.frame(report.min_pair.1),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::frames::greedy_frame_packing;
    use crate::sampler::{sample_latents_conditioned, StreamRng};
    use nalgebra::DMatrix;

    const KL_TOL: f64 = 1e-12;

    fn sign_split_frame() -> CenteredFrame {
        // Single column (1/2, 1/2, -1/2, -1/2): centered and unit norm.
        let mut matrix = DMatrix::<f64>::zeros(4, 1);
        matrix[(0, 0)] = 0.5;
        matrix[(1, 0)] = 0.5;
        matrix[(2, 0)] = -0.5;
        matrix[(3, 0)] = -0.5;
        CenteredFrame::new(matrix).unwrap()
    }

    #[test]
    fn kl_closed_forms() {
        // KL(1/4 ‖ 3/4) = (1/2)·ln 3, within the quadratic budget 16/3·(1/2)².
        let kl = kl_bernoulli(0.25, 0.75).unwrap();
        assert!((kl - 0.5 * 3.0_f64.ln()).abs() < KL_TOL);
        let check = kl_bound_check(0.25, 0.75).unwrap();
        assert!(check.holds);
        assert!((check.bound - 4.0 / 3.0).abs() < KL_TOL);

        assert_eq!(kl_bernoulli(0.3, 0.3).unwrap(), 0.0);
        assert!(kl_bernoulli(0.5, 0.0).unwrap().is_infinite());
        assert!(matches!(
            kl_bernoulli(-0.1, 0.5),
            Err(PackingError::BadProbability(_))
        ));
        assert!(matches!(
            kl_bound_check(0.1, 0.5),
            Err(PackingError::OutsideKlRange { .. })
        ));
    }

    #[test]
    fn kl_quadratic_bound_random_sweep() {
        let mut rng = StreamRng::new(314, 0);
        for _ in 0..100_000 {
            let p = 0.25 + 0.5 * rng.uniform();
            let q = 0.25 + 0.5 * rng.uniform();
            let check = kl_bound_check(p, q).unwrap();
            assert!(check.holds, "KL bound failed at ({p}, {q}): {check:?}");
        }
    }

    #[test]
    fn lower_bound_graphon_has_expected_kernel() {
        let frame = sign_split_frame();
        let graphon = build_lower_bound_graphon(&frame, 1.0, 0.1).unwrap();
        // Same-sign blocks: 1/2 + 0.1·(±1)·(±1) = 0.6; opposite signs: 0.4.
        assert!((graphon.evaluate(0.1, 0.3).unwrap() - 0.6).abs() < 1e-12);
        assert!((graphon.evaluate(0.1, 0.9).unwrap() - 0.4).abs() < 1e-12);
        let eigen = graphon.eigenvalues();
        assert_eq!(eigen.len(), 2);
        assert!((eigen[0] - 0.5).abs() < 1e-15);
        assert!((eigen[1] - 0.1).abs() < 1e-15);
        // Decay metadata is attached and certified.
        let decay = graphon.decay().expect("envelope attached");
        assert_eq!(decay.rate, 1.0);
        assert!((decay.coeff - 0.5).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_entries_report_the_block_pair() {
        let frame = sign_split_frame();
        // weight·m·linf = 0.3·4·(1/4) = 0.3 > 1/4 pushes entries past 3/4.
        let result = build_lower_bound_graphon(&frame, 1.0, 0.3);
        assert!(matches!(
            result,
            Err(PackingError::EntryOutsideKlRange {
                block_a: 0,
                block_b: 0,
                ..
            })
        ));
    }

    #[test]
    fn max_scale_matches_closed_form_or_cap() {
        let mut rng = StreamRng::new(2024, 9);
        let packing = greedy_frame_packing(32, 2, 0.25, 8, 4096, &mut rng).unwrap();
        let rate = 2.0;
        let scale = max_scale(&packing, rate).unwrap();
        // Exact feasibility boundary: L* = (1/4) / (k^{-α}·m·g).
        let closed = 0.25 / ((2.0_f64).powf(-rate) * 32.0 * packing.max_linf());
        if closed >= SCALE_CAP {
            assert_eq!(scale, SCALE_CAP);
        } else {
            assert!((scale - closed).abs() <= SCALE_SEARCH_TOL);
            assert!(scale <= closed + 1e-15, "returned scale must be feasible");
        }
        // Every family member must accept the chosen scale.
        for frame in packing.frames() {
            build_lower_bound_graphon(frame, rate, scale).unwrap();
        }
    }

    #[test]
    fn fano_report_is_consistent() {
        let mut rng = StreamRng::new(2024, 9);
        let packing = greedy_frame_packing(16, 2, 0.25, 4, 2048, &mut rng).unwrap();
        let bounds = OccupancyBounds::default();
        let mut latent_rng = StreamRng::new(2024, 10);
        let conditioned =
            sample_latents_conditioned(160, 16, &bounds, &mut latent_rng, 200).unwrap();
        let rate = 2.0;
        let scale = max_scale(&packing, rate).unwrap();
        let report =
            fano_diagnostics(&packing, &conditioned.latents, &bounds, rate, scale).unwrap();

        assert_eq!(report.frames, 4);
        assert_eq!(report.bins, 16);
        assert!((report.log_m - 4.0_f64.ln()).abs() < 1e-15);
        assert!(report.alpha_n > 0.0);
        // β_N dominates the normalized separation by construction.
        assert!(report.beta_n >= KL_QUAD_CONST * report.alpha_n * (160.0 * 160.0));
        assert!((report.fano_ratio - (report.beta_n + LN_2) / report.log_m).abs() < 1e-12);
        assert!(report_min_pair_separation(&packing, &report) >= packing.min_separation());

        // Pairwise KL of actual entries is within the β_N budget: spot-check
        // the maximal pair entry-wise.
        let g0 = build_lower_bound_graphon(packing.frame(report.max_pair.0), rate, scale).unwrap();
        let g1 = build_lower_bound_graphon(packing.frame(report.max_pair.1), rate, scale).unwrap();
        let m0 = probability_matrix(&g0, &conditioned.latents).unwrap();
        let m1 = probability_matrix(&g1, &conditioned.latents).unwrap();
        let mut kl_sum = 0.0;
        let n = conditioned.latents.len();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    kl_sum += kl_bernoulli(m0.entries()[(i, j)], m1.entries()[(i, j)]).unwrap();
                }
            }
        }
        assert!(kl_sum <= report.beta_n + 1e-9);
    }

    #[test]
    fn unconditioned_latents_are_rejected() {
        let mut rng = StreamRng::new(7, 3);
        let packing = greedy_frame_packing(16, 2, 0.25, 4, 2048, &mut rng).unwrap();
        // Ten points cannot fill 16 bins: the lower occupancy event fails.
        let latents = LatentSample::from_values(vec![0.5; 10], 0, 0).unwrap();
        let result = fano_diagnostics(&packing, &latents, &OccupancyBounds::default(), 2.0, 0.05);
        assert!(matches!(
            result,
            Err(PackingError::OutsideConditioningEvent { bins: 16 })
        ));
    }
}
