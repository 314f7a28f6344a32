//! Reproducible numerical studies: estimation-rate scans over a size grid,
//! occupancy-event frequency measurements, and spectral-invariance checks
//! under measure-preserving transforms.
//!
//! Every replicate draws from its own RNG stream derived from
//! [`replicate_stream`](crate::sampler::replicate_stream), so results are
//! independent of execution order and bitwise reproducible from
//! `(seed, stream_block)` alone. Aggregation is an ordered reduction over
//! the grid; nothing here touches the filesystem — callers serialize the
//! returned records.

use serde::Serialize;

use thiserror::Error;

use crate::graphon::{GraphonError, MeasureMap, SpectralGraphon};
use crate::linalg;
use crate::sampler::{
    default_bin_count, probability_matrix, replicate_stream, sample_adjacency, sample_latents,
    SamplerError, StreamRng,
};
use crate::spectra::mean_and_standard_error;
use crate::usvt::{mse, usvt_estimate, UsvtConfig, UsvtError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("size grid must be strictly increasing with every n >= 8, got {0:?}")]
    BadGrid(Vec<usize>),
    #[error("need at least one replicate")]
    ZeroReplicates,
    #[error("need at least one trial")]
    ZeroTrials,
    #[error("occupancy ratios need 0 <= lower <= 1 <= upper, got ({lower}, {upper})")]
    BadRatios { lower: f64, upper: f64 },
    #[error("log-log fit needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("log-log fit needs positive values, got {value} at point {index}")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("replicate {replicate} at n = {n} failed")]
    Replicate {
        n: usize,
        replicate: u32,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error(transparent)]
    Graphon(#[from] GraphonError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Usvt(#[from] UsvtError),
}

/// Parameters of a rate experiment, independent of the graphon under study.
#[derive(Debug, Clone)]
pub struct RateConfig {
    /// Graph sizes, strictly increasing, every entry at least 8.
    pub n_grid: Vec<usize>,
    /// Replicates per grid point.
    pub replicates: u32,
    /// Root seed shared by every replicate (streams differ).
    pub seed: u64,
    /// High 32 bits of each replicate's stream: grid index `g` and
    /// replicate `r` draw from stream `replicate_stream(stream_block + g, r)`.
    pub stream_block: u64,
    /// Estimator configuration applied at every size.
    pub usvt: UsvtConfig,
}

impl RateConfig {
    /// Default study: the given grid, 20 replicates, documented seed.
    pub fn new(n_grid: Vec<usize>) -> Self {
        Self {
            n_grid,
            replicates: 20,
            seed: crate::DEFAULT_SEED,
            stream_block: 0,
            usvt: UsvtConfig::default(),
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let ascending = self.n_grid.windows(2).all(|w| w[0] < w[1]);
        if self.n_grid.is_empty() || !ascending || self.n_grid.iter().any(|&n| n < 8) {
            return Err(ExperimentError::BadGrid(self.n_grid.clone()));
        }
        if self.replicates == 0 {
            return Err(ExperimentError::ZeroReplicates);
        }
        Ok(())
    }
}

/// One replicate's outcome (a CSV row of the per-replicate artifact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub replicate: u32,
    pub mse: f64,
    pub retained_rank: usize,
    /// RNG stream the replicate drew from (with the experiment seed, enough
    /// to reproduce it in isolation).
    pub seed_stream: u64,
}

/// Per-size aggregate (a CSV row of the summary artifact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSummaryRow {
    pub n: usize,
    pub mean_mse: f64,
    pub stderr: f64,
    pub mean_rank: f64,
}

/// Ordinary least squares fit of `ln value` against `ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Slope predicted by the decay metadata, `-(2α-1)/(2α)`, when known.
    pub theory_slope: Option<f64>,
}

/// Full outcome of a rate experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RateResult {
    pub rows: Vec<RateRow>,
    pub summary: Vec<RateSummaryRow>,
    /// Absent (flagged) when the grid has a single point.
    pub fit: Option<LogLogFit>,
    /// Grid indices `g` where mean MSE increased from `n_grid[g]` to
    /// `n_grid[g+1]` — expected empty, tolerated up to one entry.
    pub inversions: Vec<usize>,
}

/// Run the full sample → estimate → score loop over the size grid.
///
/// Each replicate draws latents, builds the probability matrix, samples an
/// adjacency matrix, runs the thresholding estimator, and records the mean
/// squared error against the probability matrix (zero diagonals included on
/// both sides). The fitted slope of `ln mean-MSE` on `ln n` is the headline
/// statistic; the theoretical slope is attached when the graphon carries
/// decay metadata.
pub fn run_rate_experiment(
    graphon: &SpectralGraphon,
    cfg: &RateConfig,
) -> Result<RateResult, ExperimentError> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len() * cfg.replicates as usize);
    let mut summary = Vec::with_capacity(cfg.n_grid.len());
    for (grid_index, &n) in cfg.n_grid.iter().enumerate() {
        let mut mses = Vec::with_capacity(cfg.replicates as usize);
        let mut ranks = Vec::with_capacity(cfg.replicates as usize);
        for replicate in 0..cfg.replicates {
            let stream = replicate_stream(cfg.stream_block + grid_index as u64, replicate as u64);
            let row = run_replicate(graphon, cfg, n, stream).map_err(|source| {
                ExperimentError::Replicate {
                    n,
                    replicate,
                    source: Box::new(source),
                }
            })?;
            mses.push(row.0);
            ranks.push(row.1 as f64);
            rows.push(RateRow {
                n,
                replicate,
                mse: row.0,
                retained_rank: row.1,
                seed_stream: stream,
            });
        }
        let (mean_mse, stderr) = mean_and_standard_error(&mses);
        let (mean_rank, _) = mean_and_standard_error(&ranks);
        summary.push(RateSummaryRow {
            n,
            mean_mse,
            stderr,
            mean_rank,
        });
    }

    let fit = if summary.len() >= 2 {
        let points: Vec<(f64, f64)> = summary
            .iter()
            .map(|row| (row.n as f64, row.mean_mse))
            .collect();
        let mut fit = fit_loglog_slope(&points)?;
        fit.theory_slope = graphon
            .decay()
            .map(|decay| -(2.0 * decay.rate - 1.0) / (2.0 * decay.rate));
        Some(fit)
    } else {
        None
    };

    let inversions = summary
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].mean_mse > w[0].mean_mse)
        .map(|(g, _)| g)
        .collect();

    Ok(RateResult {
        rows,
        summary,
        fit,
        inversions,
    })
}

fn run_replicate(
    graphon: &SpectralGraphon,
    cfg: &RateConfig,
    n: usize,
    stream: u64,
) -> Result<(f64, usize), ExperimentError> {
    let mut rng = StreamRng::new(cfg.seed, stream);
    let latents = sample_latents(n, &mut rng);
    let target = probability_matrix(graphon, &latents)?;
    let adjacency = sample_adjacency(&target, &mut rng);
    let estimate = usvt_estimate(&adjacency, &cfg.usvt)?;
    Ok((
        mse(estimate.matrix(), target.entries())?,
        estimate.retained_rank(),
    ))
}

/// Least squares of `ln value` on `ln n` over `(n, value)` pairs.
///
/// All values must be strictly positive and at least two points are
/// required. For exactly constant values the slope is 0 and `r2` is 1 by
/// the zero-variance convention.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<LogLogFit, ExperimentError> {
    if points.len() < 2 {
        return Err(ExperimentError::TooFewPoints(points.len()));
    }
    for (index, &(x, value)) in points.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) || !(x.is_finite() && x > 0.0) {
            return Err(ExperimentError::NonPositiveValue { index, value });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fitted = intercept + slope * x;
            (y - fitted) * (y - fitted)
        })
        .sum();
    let r2 = if ss_tot <= f64::EPSILON * n {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LogLogFit {
        slope,
        intercept,
        r2,
        theory_slope: None,
    })
}

/// Empirical frequency of one event over repeated trials, with the binomial
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventFrequency {
    pub successes: u32,
    pub frequency: f64,
    pub std_error: f64,
}

impl EventFrequency {
    fn from_counts(successes: u32, trials: u32) -> Self {
        let frequency = f64::from(successes) / f64::from(trials);
        Self {
            successes,
            frequency,
            std_error: (frequency * (1.0 - frequency) / f64::from(trials)).sqrt(),
        }
    }
}

/// Measured frequencies of the occupancy events at one size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditioningReport {
    pub n: usize,
    pub bins: usize,
    pub trials: u32,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    /// Every bin holds at least `lower_ratio · n/m` points.
    pub lower: EventFrequency,
    /// Every bin holds at most `upper_ratio · n/m` points.
    pub upper: EventFrequency,
    /// Both at once (the conditioning event).
    pub joint: EventFrequency,
    /// The first bin alone falls short of `lower_ratio · n/m` — the event
    /// the single-bin lower tail bound controls.
    pub first_bin_shortfall: EventFrequency,
}

/// Estimate occupancy-event probabilities by direct simulation.
///
/// The bin count is the default `⌊n/(4 ln n)⌋`. Unlike the conditioned
/// sampler, degenerate ratios are allowed here (`lower_ratio = 0` makes the
/// lower event certain) so the whole parameter range can be studied.
pub fn run_conditioning_frequency(
    n: usize,
    trials: u32,
    lower_ratio: f64,
    upper_ratio: f64,
    rng: &mut StreamRng,
) -> Result<ConditioningReport, ExperimentError> {
    if trials == 0 {
        return Err(ExperimentError::ZeroTrials);
    }
    if !(lower_ratio.is_finite() && upper_ratio.is_finite())
        || !(0.0..=1.0).contains(&lower_ratio)
        || upper_ratio < 1.0
    {
        return Err(ExperimentError::BadRatios {
            lower: lower_ratio,
            upper: upper_ratio,
        });
    }
    let bins = default_bin_count(n);
    let mean = n as f64 / bins as f64;
    let (lo, hi) = (lower_ratio * mean, upper_ratio * mean);
    let mut lower_hits = 0_u32;
    let mut upper_hits = 0_u32;
    let mut joint_hits = 0_u32;
    let mut shortfall_hits = 0_u32;
    for _ in 0..trials {
        let latents = sample_latents(n, rng);
        let counts = latents.bin_counts(bins)?;
        let (min, max) = counts.extremes();
        let lower_ok = min as f64 >= lo;
        let upper_ok = max as f64 <= hi;
        lower_hits += u32::from(lower_ok);
        upper_hits += u32::from(upper_ok);
        joint_hits += u32::from(lower_ok && upper_ok);
        shortfall_hits += u32::from((counts.counts()[0] as f64) < lo);
    }
    Ok(ConditioningReport {
        n,
        bins,
        trials,
        lower_ratio,
        upper_ratio,
        lower: EventFrequency::from_counts(lower_hits, trials),
        upper: EventFrequency::from_counts(upper_hits, trials),
        joint: EventFrequency::from_counts(joint_hits, trials),
        first_bin_shortfall: EventFrequency::from_counts(shortfall_hits, trials),
    })
}

/// Spectral deviation of one measure-preserving transform.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceRow {
    /// Human-readable map label (`identity`, `half-swap`, `wrap:n`).
    pub map: String,
    /// Largest absolute difference between the sorted discretized spectra of
    /// the base graphon and its transformed copy.
    pub max_deviation: f64,
}

/// Compare discretized spectra before and after each transform.
///
/// Spectra are the eigenvalues of the midpoint-discretized operator on
/// `grid` bins, sorted by value descending so the elementwise comparison is
/// the canonical one. A measure-preserving transform leaves the graphon's
/// spectrum unchanged, so deviations reflect only discretization error.
pub fn run_invariance_suite(
    graphon: &SpectralGraphon,
    maps: &[MeasureMap],
    grid: usize,
) -> Result<Vec<InvarianceRow>, ExperimentError> {
    let base = linalg::symmetric_eigenvalues_desc(&graphon.discretize_operator(grid)?);
    let mut rows = Vec::with_capacity(maps.len());
    for &map in maps {
        let mapped = graphon.apply_measure_preserving(map);
        let spectrum = linalg::symmetric_eigenvalues_desc(&mapped.discretize_operator(grid)?);
        let max_deviation = base
            .iter()
            .zip(&spectrum)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        rows.push(InvarianceRow {
            map: map.label(),
            max_deviation,
        });
    }
    Ok(rows)
}
