//! Lower-bound machinery: packings of centered orthonormal frames, greedy
//! error-correcting codebooks, the step-graphon family they index, and the
//! Fano-method diagnostics (separation and KL budgets) computed on top.
//!
//! The pipeline mirrors the estimation-rate argument from the other side:
//!
//! 1. [`frames`] builds frames `V` (orthonormal columns, each orthogonal to
//!    the all-ones vector) and packs them apart in the projection metric
//!    `‖VVᵀ − V'V'ᵀ‖_F²`; block stacking multiplies a small packing into a
//!    large one indexed by codewords while keeping `‖VVᵀ‖_∞ ≤ 1/m₂`.
//! 2. [`codes`] supplies greedy maximal codebooks with a certified minimum
//!    Hamming distance and the exact ball-volume arithmetic behind the
//!    classical size guarantee.
//! 3. [`fano`] turns each frame into a perturbed-constant graphon whose
//!    entries stay in `[1/4, 3/4]`, evaluates every pairwise probability-
//!    matrix distance on a conditioned latent draw, and reports the
//!    separation/KL summary a two-point-method lower bound consumes.

pub mod codes;
pub mod fano;
pub mod frames;

pub use codes::{
    entropy_bound_check, entropy_hn, hamming_ball_volume, hamming_distance, vg_greedy_codebook,
    Codebook, Entropy, EntropyBoundCheck,
};
pub use fano::{
    build_lower_bound_graphon, fano_diagnostics, kl_bernoulli, kl_bound_check, max_scale,
    FanoReport, SCALE_CAP,
};
pub use frames::{
    block_stack_frames, greedy_frame_packing, random_centered_frame, sin_theta_metrics,
    CenteredFrame, PackingSet, SinThetaMetrics,
};

use thiserror::Error;

use crate::graphon::GraphonError;
use crate::sampler::SamplerError;

#[derive(Debug, Error)]
pub enum PackingError {
    #[error("frame shape ({m}, {k}) is invalid: need 1 <= k <= m - 1")]
    BadFrameShape { m: usize, k: usize },
    #[error("packing regime needs 1 <= k <= m - 1 - k, got (m, k) = ({m}, {k})")]
    OutsidePackingRegime { m: usize, k: usize },
    #[error("frame columns are not orthonormal: |(VᵀV − I)[{row}, {col}]| = {deviation:e}")]
    NotOrthonormal {
        row: usize,
        col: usize,
        deviation: f64,
    },
    #[error("frame column {col} is not centered: sum = {sum:e}")]
    NotCentered { col: usize, sum: f64 },
    #[error("frame dimensions disagree: ({m1}, {k1}) vs ({m2}, {k2})")]
    FrameMismatch {
        m1: usize,
        k1: usize,
        m2: usize,
        k2: usize,
    },
    #[error("random frame draw was rank deficient after {retries} retries")]
    RankDeficient { retries: usize },
    #[error("packing search exhausted {budget} candidates with only {kept} frame(s) kept")]
    BudgetExhausted { budget: usize, kept: usize },
    #[error("packing needs at least {needed} frames, got {got}")]
    TooFewFrames { needed: usize, got: usize },
    #[error("sin-theta identity violated: |‖sinΘ‖² − ½‖ΔP‖²| = {residual:e} > 1e-9")]
    MetricIdentity { residual: f64 },
    #[error("separation floor violated: measured {measured:e} < certified {certified:e}")]
    SeparationViolated { measured: f64, certified: f64 },
    #[error("ℓ∞ certificate violated: measured {measured:e} > bound {bound:e}")]
    LinfViolated { measured: f64, bound: f64 },
    #[error("codeword lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(u16),
    #[error("code parameters out of range: {0}")]
    BadCodeParameters(String),
    #[error("ball radius {radius} exceeds the word length {length}")]
    RadiusTooLarge { radius: usize, length: usize },
    #[error("entropy proportion must lie in [0, 1], got {0}")]
    BadProportion(f64),
    #[error("codeword store would exceed {cap} words; tighten the distance or shrink the space")]
    WordLimitExceeded { cap: usize },
    #[error("codebook alphabet {alphabet} does not match the base packing size {base}")]
    AlphabetMismatch { alphabet: u16, base: usize },
    #[error("symbol {symbol} at position {position} outside the {alphabet}-ary alphabet")]
    SymbolOutOfRange {
        symbol: u16,
        position: usize,
        alphabet: u16,
    },
    #[error("separation level must be positive and finite, got {0}")]
    BadSeparation(f64),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("KL range bound needs p, q in [1/4, 3/4], got ({p}, {q})")]
    OutsideKlRange { p: f64, q: f64 },
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
    #[error("decay rate must be positive, got {0}")]
    BadRate(f64),
    #[error(
        "graphon entry {value} at block pair ({block_a}, {block_b}) outside [1/4, 3/4]; lower the scale"
    )]
    EntryOutsideKlRange {
        block_a: usize,
        block_b: usize,
        value: f64,
    },
    #[error("latent draw violates the conditioning event for {bins} bins")]
    OutsideConditioningEvent { bins: usize },
    #[error("design adjustment failed: no n in [{from}, {to}] gives {target} bins")]
    DesignAdjustment {
        from: usize,
        to: usize,
        target: usize,
    },
    #[error(transparent)]
    Graphon(#[from] GraphonError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Integer design derived from a target graph size: subspace dimension
/// `k = max(1, ⌊(n·ln n)^(1/(2α))⌋)`, base block rows `m₁ = 4k`, stack count
/// `m₂ = ⌈m_raw/m₁⌉` for `m_raw = ⌊n/(4 ln n)⌋`, total bins `m = m₁·m₂`, and
/// the smallest `n' ≥ n` whose default bin count equals `m` exactly (the
/// scaling relations ignore integrality; experiments want it exact).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackingDesign {
    pub k: usize,
    pub m1: usize,
    pub m2: usize,
    pub m: usize,
    pub adjusted_n: usize,
}

/// Resolve the integer design for a target size and decay rate.
pub fn packing_design(n: usize, rate: f64) -> Result<PackingDesign, PackingError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(PackingError::BadRate(rate));
    }
    if n < 8 {
        return Err(PackingError::BadCodeParameters(format!(
            "design needs n >= 8, got {n}"
        )));
    }
    let nf = n as f64;
    let k = ((nf * nf.ln()).powf(1.0 / (2.0 * rate)).floor() as usize).max(1);
    let m1 = 4 * k;
    let m_raw = crate::sampler::default_bin_count(n);
    let m2 = m_raw.div_ceil(m1).max(1);
    let m = m1 * m2;
    let cap = n.saturating_mul(10).max(n + 1024);
    let mut adjusted_n = n;
    loop {
        if crate::sampler::default_bin_count(adjusted_n) == m {
            break;
        }
        adjusted_n += 1;
        if adjusted_n > cap {
            return Err(PackingError::DesignAdjustment {
                from: n,
                to: cap,
                target: m,
            });
        }
    }
    Ok(PackingDesign {
        k,
        m1,
        m2,
        m,
        adjusted_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_resolves_consistent_integers() {
        let design = packing_design(500, 2.0).unwrap();
        assert_eq!(design.m, design.m1 * design.m2);
        assert_eq!(design.m1, 4 * design.k);
        assert!(design.adjusted_n >= 500);
        assert_eq!(
            crate::sampler::default_bin_count(design.adjusted_n),
            design.m
        );
        // k = ⌊(500·ln 500)^{1/4}⌋ = ⌊(3107.3)^{0.25}⌋ = ⌊7.466⌋ = 7
        assert_eq!(design.k, 7);
        assert!(packing_design(4, 2.0).is_err());
        assert!(packing_design(500, 0.0).is_err());
    }
}
