//! Random graph generation: latent uniforms, edge-probability matrices,
//! Bernoulli adjacency draws, and bin-occupancy conditioning.
//!
//! The generative model is
//!
//! 1. draw latents `ξ_1, …, ξ_n` i.i.d. Uniform[0, 1];
//! 2. form `M_ij = W(ξ_i, ξ_j)` for `i ≠ j`, `M_ii = 0`;
//! 3. draw `A_ij ~ Bernoulli(M_ij)` independently for `i < j`, mirror below
//!    the diagonal, zero on it.
//!
//! All randomness flows through [`StreamRng`], a counter-mode generator keyed
//! by a `(seed, stream)` pair: fixing both reproduces a draw exactly, and
//! distinct streams are independent, so replicate-level parallelism is safe.
//! Drivers in [`crate::experiments`] derive per-replicate streams with the
//! documented split `stream = (block << 32) | index`.
//!
//! Bin-occupancy utilities support conditioned sampling: split `[0, 1]` into
//! `m` bins (right-open except the last), count latents per bin, and redraw
//! until every count lies in `[λ₁·n/m, λ₂·n/m]`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::graphon::{self, GraphonError, SpectralGraphon};

/// Default lower occupancy ratio `λ₁ = 1 − 1/√2`.
pub const DEFAULT_LOWER_RATIO: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
/// Default upper occupancy ratio `λ₂ = 1 + 1/√2` (symmetric counterpart of
/// [`DEFAULT_LOWER_RATIO`]; a configurable convention, not a derived value).
pub const DEFAULT_UPPER_RATIO: f64 = 1.0 + std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("occupancy ratios must satisfy 0 < lower < 1 < upper, got ({lower}, {upper})")]
    BadOccupancyRatios { lower: f64, upper: f64 },
    #[error(
        "conditioned sampling exhausted {attempts} attempts without hitting the occupancy event"
    )]
    ConditioningExhausted { attempts: u32 },
    #[error("latent value {value} at index {index} outside [0, 1]")]
    LatentOutOfRange { index: usize, value: f64 },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix has nonzero diagonal entry at {index}")]
    NonZeroDiagonal { index: usize },
    #[error("matrix entry {value} at ({row}, {col}) outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("adjacency entry {value} at ({row}, {col}) is not 0 or 1")]
    NotBinary { row: usize, col: usize, value: f64 },
    #[error(transparent)]
    Graphon(#[from] GraphonError),
}

/// Deterministic random source keyed by a `(seed, stream)` pair. Same pair,
/// same draws; distinct streams are independent counter-mode sequences of
/// one ChaCha8 keystream family.
#[derive(Debug, Clone)]
pub struct StreamRng {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// One Uniform[0, 1) draw.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Bernoulli(p) as the event `uniform() < p`, so a draw consumes exactly
    /// one uniform regardless of `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// One standard normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Latent node positions with the `(seed, stream)` pair that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    values: Vec<f64>,
    seed: u64,
    stream: u64,
}

impl LatentSample {
    /// Rebuild a sample from stored values (deserialization); validates the
    /// unit-interval invariant.
    pub fn from_values(values: Vec<f64>, seed: u64, stream: u64) -> Result<Self, SamplerError> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(SamplerError::LatentOutOfRange { index, value });
            }
        }
        Ok(Self {
            values,
            seed,
            stream,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Count latents per bin: `m` bins, right-open `[(i−1)/m, i/m)` except
    /// the last, which is closed at 1, so the counts partition exactly.
    pub fn bin_counts(&self, bins: usize) -> Result<BinCounts, SamplerError> {
        if bins == 0 {
            return Err(SamplerError::ZeroBins);
        }
        let mut counts = vec![0usize; bins];
        for &x in &self.values {
            let idx = ((x * bins as f64).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Ok(BinCounts {
            counts,
            total: self.values.len(),
        })
    }
}

/// Draw `n` i.i.d. Uniform[0, 1] latents from the stream.
pub fn sample_latents(n: usize, rng: &mut StreamRng) -> LatentSample {
    let values = (0..n).map(|_| rng.uniform()).collect();
    LatentSample {
        values,
        seed: rng.seed(),
        stream: rng.stream(),
    }
}

/// Per-bin latent counts plus the occupancy events they satisfy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinCounts {
    counts: Vec<usize>,
    total: usize,
}

impl BinCounts {
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Smallest and largest bin count.
    pub fn extremes(&self) -> (usize, usize) {
        let min = self.counts.iter().copied().min().unwrap_or(0);
        let max = self.counts.iter().copied().max().unwrap_or(0);
        (min, max)
    }

    /// Check the two-sided occupancy event `λ₁·n/m ≤ s_i ≤ λ₂·n/m` for all
    /// bins.
    pub fn event(&self, bounds: &OccupancyBounds) -> OccupancyEvent {
        let (lo, hi) = bounds.band(self.total, self.bins());
        let lower = self.counts.iter().all(|&s| s as f64 >= lo);
        let upper = self.counts.iter().all(|&s| s as f64 <= hi);
        OccupancyEvent { lower, upper }
    }
}

/// Which sides of the two-sided occupancy event hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccupancyEvent {
    pub lower: bool,
    pub upper: bool,
}

impl OccupancyEvent {
    pub fn joint(&self) -> bool {
        self.lower && self.upper
    }
}

/// Occupancy ratios `(λ₁, λ₂)` defining the conditioning event
/// `λ₁·n/m ≤ s_i ≤ λ₂·n/m` for every bin count `s_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyBounds {
    pub lower_ratio: f64,
    pub upper_ratio: f64,
}

impl Default for OccupancyBounds {
    fn default() -> Self {
        Self {
            lower_ratio: DEFAULT_LOWER_RATIO,
            upper_ratio: DEFAULT_UPPER_RATIO,
        }
    }
}

impl OccupancyBounds {
    pub fn new(lower_ratio: f64, upper_ratio: f64) -> Result<Self, SamplerError> {
        if !(lower_ratio > 0.0 && lower_ratio < 1.0 && upper_ratio > 1.0)
            || !lower_ratio.is_finite()
            || !upper_ratio.is_finite()
        {
            return Err(SamplerError::BadOccupancyRatios {
                lower: lower_ratio,
                upper: upper_ratio,
            });
        }
        Ok(Self {
            lower_ratio,
            upper_ratio,
        })
    }

    /// The admissible count band `(λ₁·n/m, λ₂·n/m)` for one bin.
    pub fn band(&self, n: usize, bins: usize) -> (f64, f64) {
        let mean = n as f64 / bins as f64;
        (self.lower_ratio * mean, self.upper_ratio * mean)
    }
}

/// A latent sample that satisfies the occupancy event, with the number of
/// rejection-sampling attempts it took.
#[derive(Debug, Clone)]
pub struct ConditionedSample {
    pub latents: LatentSample,
    pub attempts: u32,
}

/// Rejection-sample latent vectors until every bin count lies in the
/// occupancy band, or fail after `max_attempts` redraws (a misconfiguration
/// signal: the event has vanishing probability for these constants).
pub fn sample_latents_conditioned(
    n: usize,
    bins: usize,
    bounds: &OccupancyBounds,
    rng: &mut StreamRng,
    max_attempts: u32,
) -> Result<ConditionedSample, SamplerError> {
    if bins == 0 {
        return Err(SamplerError::ZeroBins);
    }
    // Re-validate so hand-built bounds cannot smuggle bad ratios in.
    OccupancyBounds::new(bounds.lower_ratio, bounds.upper_ratio)?;
    for attempt in 1..=max_attempts {
        let latents = sample_latents(n, rng);
        if latents.bin_counts(bins)?.event(bounds).joint() {
            return Ok(ConditionedSample {
                latents,
                attempts: attempt,
            });
        }
    }
    Err(SamplerError::ConditioningExhausted {
        attempts: max_attempts,
    })
}

/// The documented stream-split function: replicate `index` inside stream
/// block `block` draws from stream id `(block << 32) | index`. Blocks keep
/// unrelated experiment stages on disjoint streams; indices keep replicates
/// independent and individually reproducible.
pub fn replicate_stream(block: u64, index: u64) -> u64 {
    (block << 32) | (index & 0xFFFF_FFFF)
}

/// Bin count `m = max(1, ⌊n / (4 ln n)⌋)` (natural logarithm, floored).
pub fn default_bin_count(n: usize) -> usize {
    if n <= 1 {
        return 1;
    }
    let m = (n as f64 / (4.0 * (n as f64).ln())).floor() as usize;
    m.max(1)
}

/// Chernoff bound `n^(−2(1−λ)²)` on the probability that one bin falls below
/// `λ·n/m` when `m ≤ n/(4 ln n)`: the count is a sum of `n` independent
/// Bernoulli(1/m), so the lower multiplicative tail gives
/// `exp(−(1−λ)²·(n/m)/2) ≤ exp(−2(1−λ)²·ln n)`.
pub fn chernoff_lower_tail_bound(n: usize, lambda: f64) -> f64 {
    (n as f64).powf(-2.0 * (1.0 - lambda) * (1.0 - lambda))
}

/// Edge-probability matrix: symmetric, zero diagonal, entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    entries: DMatrix<f64>,
}

impl ProbabilityMatrix {
    /// Validate an externally supplied matrix (deserialization).
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self, SamplerError> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(SamplerError::NotSymmetric { row: 0, col: 0 });
        }
        for i in 0..n {
            if entries[(i, i)] != 0.0 {
                return Err(SamplerError::NonZeroDiagonal { index: i });
            }
            for j in (i + 1)..n {
                let v = entries[(i, j)];
                if v != entries[(j, i)] {
                    return Err(SamplerError::NotSymmetric { row: i, col: j });
                }
                if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                    return Err(SamplerError::EntryOutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// `M_ij = W(ξ_i, ξ_j)` for `i ≠ j`, zero diagonal. Off-diagonal entries are
/// bit-identical to `W.evaluate(ξ_i, ξ_j)` (same accumulation order through
/// the eigenfunction cache), and the matrix is exactly symmetric: both
/// triangles are written from one computed value.
pub fn probability_matrix(
    graphon: &SpectralGraphon,
    latents: &LatentSample,
) -> Result<ProbabilityMatrix, SamplerError> {
    let n = latents.len();
    let cache = graphon.eigenfunction_cache(latents.values());
    let mut entries = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v =
                graphon::check_range(cache.pair(i, j), latents.values()[i], latents.values()[j])?;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(ProbabilityMatrix { entries })
}

/// Observed graph: symmetric 0/1 matrix with zero diagonal, stored as `f64`
/// so it feeds dense eigensolvers directly.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    entries: DMatrix<f64>,
}

impl AdjacencyMatrix {
    /// Validate an externally supplied matrix (deserialization).
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self, SamplerError> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(SamplerError::NotSymmetric { row: 0, col: 0 });
        }
        for i in 0..n {
            if entries[(i, i)] != 0.0 {
                return Err(SamplerError::NonZeroDiagonal { index: i });
            }
            for j in (i + 1)..n {
                let v = entries[(i, j)];
                if v != entries[(j, i)] {
                    return Err(SamplerError::NotSymmetric { row: i, col: j });
                }
                if v != 0.0 && v != 1.0 {
                    return Err(SamplerError::NotBinary {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of edges (upper-triangle ones).
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        let mut count = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                if self.entries[(i, j)] == 1.0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Fraction of present edges among the `n(n−1)/2` possible ones.
    pub fn density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (n * (n - 1) / 2) as f64
    }
}

/// Draw `A_ij ~ Bernoulli(M_ij)` independently over the upper triangle in
/// row-major order (`(0,1), (0,2), …`), mirror below, zero diagonal. The
/// traversal order is part of the determinism contract.
pub fn sample_adjacency(matrix: &ProbabilityMatrix, rng: &mut StreamRng) -> AdjacencyMatrix {
    let n = matrix.n();
    let mut entries = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let edge = if rng.bernoulli(matrix.entries[(i, j)]) {
                1.0
            } else {
                0.0
            };
            entries[(i, j)] = edge;
            entries[(j, i)] = edge;
        }
    }
    AdjacencyMatrix { entries }
}
