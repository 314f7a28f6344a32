//! Universal singular value thresholding.
//!
//! Given one observed adjacency matrix `A`, the estimator of the underlying
//! edge-probability matrix is
//!
//! 1. decompose `A = Σ_i λ_i q_i q_iᵀ` (symmetric eigendecomposition; the
//!    singular values of a symmetric matrix are `s_i = |λ_i|` and the
//!    singular vector pairs carry the eigenvalue signs, so this is exact and
//!    about twice as cheap as a general SVD);
//! 2. keep the components with `s_i ≥ τ`, where `τ = c·√n` by default with
//!    `c = 4`;
//! 3. clip entries to `[0, 1]`, then zero the diagonal.
//!
//! The estimator never sees the latents or the graphon — only `A` and the
//! threshold rule.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg;
use crate::sampler::{AdjacencyMatrix, ProbabilityMatrix, SamplerError};

/// Default scale constant in `τ = c·√n`.
pub const DEFAULT_THRESHOLD_SCALE: f64 = 4.0;
/// Default cap on the matrix side length for the dense solver.
pub const DEFAULT_MAX_SIZE: usize = 6000;

#[derive(Debug, Error)]
pub enum UsvtError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix side {n} exceeds the dense-solver cap {max}")]
    TooLarge { n: usize, max: usize },
    #[error("threshold must be nonnegative and finite, got {0}")]
    BadThreshold(f64),
    #[error("dimension mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error(
        "eigendecomposition did not converge (n = {n}, edges = {edges}, frobenius = {frobenius:.6e})"
    )]
    EigenFailed {
        n: usize,
        edges: usize,
        frobenius: f64,
    },
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// How the singular value threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Use `τ` directly.
    Absolute(f64),
    /// `τ = scale·√n` for an `n × n` input.
    Scaled(f64),
}

impl ThresholdRule {
    pub fn tau(&self, n: usize) -> f64 {
        match *self {
            ThresholdRule::Absolute(tau) => tau,
            ThresholdRule::Scaled(scale) => scale * (n as f64).sqrt(),
        }
    }

    fn validate(&self) -> Result<(), UsvtError> {
        let raw = match *self {
            ThresholdRule::Absolute(tau) => tau,
            ThresholdRule::Scaled(scale) => scale,
        };
        if raw.is_finite() && raw >= 0.0 {
            Ok(())
        } else {
            Err(UsvtError::BadThreshold(raw))
        }
    }
}

/// Estimator configuration. The defaults (`τ = 4√n`, clip on, zero-diagonal
/// on) are the ones every experiment in this crate uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsvtConfig {
    pub threshold: ThresholdRule,
    pub clip: bool,
    pub zero_diagonal: bool,
    /// Dense-solver size cap; inputs beyond it error out instead of
    /// grinding.
    pub max_size: usize,
}

impl Default for UsvtConfig {
    fn default() -> Self {
        Self {
            threshold: ThresholdRule::Scaled(DEFAULT_THRESHOLD_SCALE),
            clip: true,
            zero_diagonal: true,
            max_size: DEFAULT_MAX_SIZE,
        }
    }
}

impl UsvtConfig {
    pub fn with_scale(scale: f64) -> Self {
        Self {
            threshold: ThresholdRule::Scaled(scale),
            ..Self::default()
        }
    }

    pub fn with_absolute_threshold(tau: f64) -> Self {
        Self {
            threshold: ThresholdRule::Absolute(tau),
            ..Self::default()
        }
    }
}

/// Estimator output: the estimate, the threshold actually used, the retained
/// component indices, and the full singular value list (descending).
#[derive(Debug, Clone)]
pub struct UsvtEstimate {
    matrix: DMatrix<f64>,
    tau: f64,
    retained: Vec<usize>,
    singular_values: Vec<f64>,
}

impl UsvtEstimate {
    /// The estimate after the configured clip / zero-diagonal steps.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Threshold `τ` after resolving the rule against the input size.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Indices (into the descending singular value list) of the retained
    /// components: always the prefix `{i : s_i ≥ τ}`.
    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn retained_rank(&self) -> usize {
        self.retained.len()
    }

    /// All singular values, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Reinterpret the estimate as a validated probability matrix. Always
    /// succeeds under the default configuration (clip and zero-diagonal on).
    pub fn into_probability_matrix(self) -> Result<ProbabilityMatrix, SamplerError> {
        ProbabilityMatrix::from_matrix(self.matrix)
    }
}

/// Run the thresholding estimator on one adjacency matrix.
pub fn usvt_estimate(
    adjacency: &AdjacencyMatrix,
    config: &UsvtConfig,
) -> Result<UsvtEstimate, UsvtError> {
    config.threshold.validate()?;
    let n = adjacency.n();
    if n > config.max_size {
        return Err(UsvtError::TooLarge {
            n,
            max: config.max_size,
        });
    }
    let entries = adjacency.entries();
    let (values, vectors) = linalg::try_symmetric_eigen(entries, eigen_iteration_cap(n))
        .ok_or_else(|| UsvtError::EigenFailed {
            n,
            edges: adjacency.edge_count(),
            frobenius: linalg::frobenius_sq(entries).sqrt(),
        })?;
    let tau = config.threshold.tau(n);
    let singular_values: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let retained: Vec<usize> = (0..n).take_while(|&i| singular_values[i] >= tau).collect();

    let mut matrix = DMatrix::<f64>::zeros(n, n);
    for &i in &retained {
        let q = vectors.column(i);
        // λ_i q_i q_iᵀ == s_i u_i v_iᵀ for the symmetric input.
        matrix.ger(values[i], &q, &q, 1.0);
    }
    if config.clip {
        matrix.apply(|v| *v = v.clamp(0.0, 1.0));
    }
    if config.zero_diagonal {
        matrix.fill_diagonal(0.0);
    }
    Ok(UsvtEstimate {
        matrix,
        tau,
        retained,
        singular_values,
    })
}

/// Iteration cap for the fallible eigendecomposition: generous for any
/// matrix this crate handles, finite so pathological inputs error instead of
/// spinning.
fn eigen_iteration_cap(n: usize) -> usize {
    30 * n + 1024
}

/// Mean squared entrywise error `(1/(rows·cols))·Σ_ij (a_ij − b_ij)²`; for
/// the square matrices used everywhere this is `(1/n²)‖a − b‖_F²`.
pub fn mse(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, UsvtError> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(UsvtError::DimensionMismatch {
            left_rows: a.nrows(),
            left_cols: a.ncols(),
            right_rows: b.nrows(),
            right_cols: b.ncols(),
        });
    }
    let cells = (a.nrows() * a.ncols()) as f64;
    if cells == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / cells)
}

/// Eigenvalues (absolute value descending) and singular values (their
/// absolute values) of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    pub eigenvalues: Vec<f64>,
    pub singular_values: Vec<f64>,
}

/// Spectral diagnostics for any exactly symmetric matrix.
pub fn spectral_profile(matrix: &DMatrix<f64>) -> Result<SpectralProfile, UsvtError> {
    check_symmetric(matrix)?;
    let eigenvalues = linalg::symmetric_eigenvalues_abs_desc(matrix);
    let singular_values = eigenvalues.iter().map(|v| v.abs()).collect();
    Ok(SpectralProfile {
        eigenvalues,
        singular_values,
    })
}

fn check_symmetric(matrix: &DMatrix<f64>) -> Result<(), UsvtError> {
    if matrix.nrows() != matrix.ncols() {
        return Err(UsvtError::NotSquare {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
        });
    }
    match linalg::first_asymmetry(matrix) {
        Some((row, col)) => Err(UsvtError::NotSymmetric { row, col }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::SpectralGraphon;
    use crate::sampler::{
        probability_matrix, sample_adjacency, sample_latents, AdjacencyMatrix, StreamRng,
    };

    fn random_adjacency(n: usize, p: f64, seed: u64) -> AdjacencyMatrix {
        let w = SpectralGraphon::constant(p).unwrap();
        let s = sample_latents(n, &mut StreamRng::new(seed, 0));
        let m = probability_matrix(&w, &s).unwrap();
        sample_adjacency(&m, &mut StreamRng::new(seed, 1))
    }

    #[test]
    fn zero_matrix_yields_zero_estimate() {
        let a = AdjacencyMatrix::from_matrix(DMatrix::zeros(6, 6)).unwrap();
        let est = usvt_estimate(&a, &UsvtConfig::default()).unwrap();
        assert_eq!(est.retained_rank(), 0);
        assert!(est.matrix().iter().all(|&v| v == 0.0));
        assert!(est.singular_values().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn zero_threshold_recovers_the_input_exactly() {
        let a = random_adjacency(24, 0.4, 7);
        let est = usvt_estimate(&a, &UsvtConfig::with_absolute_threshold(0.0)).unwrap();
        assert_eq!(est.retained_rank(), 24);
        let mut max_dev = 0.0_f64;
        for (x, y) in est.matrix().iter().zip(a.entries().iter()) {
            max_dev = max_dev.max((x - y).abs());
        }
        assert!(max_dev <= 1e-8, "max deviation {max_dev}");
        // Rounding to the clip endpoints reproduces A bit for bit.
        let rounded = est.matrix().map(|v| v.round());
        assert_eq!(rounded, *a.entries());
    }

    #[test]
    fn retained_set_is_monotone_in_tau() {
        let a = random_adjacency(40, 0.5, 3);
        let mut previous = usize::MAX;
        for tau in [0.0, 1.0, 2.0, 5.0, 10.0, 1e6] {
            let est = usvt_estimate(&a, &UsvtConfig::with_absolute_threshold(tau)).unwrap();
            let rank = est.retained_rank();
            assert!(rank <= previous, "rank grew as tau grew");
            // Retained set is the prefix {i : s_i >= tau}.
            assert!(est
                .retained()
                .iter()
                .enumerate()
                .all(|(pos, &idx)| pos == idx));
            assert!(est.singular_values()[..rank].iter().all(|&s| s >= tau));
            if rank < 40 {
                assert!(est.singular_values()[rank] < tau);
            }
            previous = rank;
        }
    }

    #[test]
    fn clip_and_zero_diagonal_commute_and_are_idempotent() {
        let mut m = DMatrix::<f64>::zeros(3, 3);
        m[(0, 0)] = 2.0;
        m[(0, 1)] = -0.5;
        m[(1, 0)] = -0.5;
        m[(1, 2)] = 0.7;
        m[(2, 1)] = 0.7;
        m[(2, 2)] = -3.0;

        let clip_then_zero = {
            let mut x = m.clone();
            x.apply(|v| *v = v.clamp(0.0, 1.0));
            x.fill_diagonal(0.0);
            x
        };
        let zero_then_clip = {
            let mut x = m.clone();
            x.fill_diagonal(0.0);
            x.apply(|v| *v = v.clamp(0.0, 1.0));
            x
        };
        assert_eq!(clip_then_zero, zero_then_clip);

        let twice = {
            let mut x = clip_then_zero.clone();
            x.apply(|v| *v = v.clamp(0.0, 1.0));
            x.fill_diagonal(0.0);
            x
        };
        assert_eq!(clip_then_zero, twice);
    }

    #[test]
    fn mse_reference_values() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.2, 0.4]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let shifted = a.map(|v| v + 0.25);
        assert!((mse(&a, &shifted).unwrap() - 0.0625).abs() < 1e-15);
        // hand instance cross-checked by an explicit scalar loop
        let x = DMatrix::from_row_slice(3, 3, &[0.0, 0.1, 0.3, 0.1, 0.0, 0.5, 0.3, 0.5, 0.0]);
        let y = DMatrix::from_row_slice(3, 3, &[0.0, 0.3, 0.1, 0.3, 0.0, 0.9, 0.1, 0.9, 0.0]);
        let mut oracle = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = x[(i, j)] - y[(i, j)];
                oracle += d * d;
            }
        }
        oracle /= 9.0;
        assert!((mse(&x, &y).unwrap() - oracle).abs() < 1e-15);
        let wrong = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            mse(&a, &wrong),
            Err(UsvtError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spectral_profile_reference_values() {
        let zero = DMatrix::<f64>::zeros(4, 4);
        let profile = spectral_profile(&zero).unwrap();
        assert!(profile.eigenvalues.iter().all(|&v| v == 0.0));

        // p(J − I) at n = 3, p = 0.6: eigenvalues {1.2, −0.6, −0.6}.
        let p = 0.6;
        let m = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { p });
        let profile = spectral_profile(&m).unwrap();
        assert!((profile.eigenvalues[0] - 1.2).abs() < 1e-12);
        assert!((profile.eigenvalues[1] + 0.6).abs() < 1e-12);
        assert!((profile.eigenvalues[2] + 0.6).abs() < 1e-12);
        for (e, s) in profile.eigenvalues.iter().zip(&profile.singular_values) {
            assert_eq!(e.abs(), *s);
        }

        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(
            spectral_profile(&asym),
            Err(UsvtError::NotSymmetric { row: 0, col: 1 })
        ));
    }

    #[test]
    fn size_cap_is_enforced() {
        let a = AdjacencyMatrix::from_matrix(DMatrix::zeros(8, 8)).unwrap();
        let config = UsvtConfig {
            max_size: 5,
            ..UsvtConfig::default()
        };
        assert!(matches!(
            usvt_estimate(&a, &config),
            Err(UsvtError::TooLarge { n: 8, max: 5 })
        ));
    }

    #[test]
    fn threshold_validation_rejects_bad_values() {
        let a = AdjacencyMatrix::from_matrix(DMatrix::zeros(3, 3)).unwrap();
        for config in [
            UsvtConfig::with_absolute_threshold(-1.0),
            UsvtConfig::with_scale(f64::NAN),
        ] {
            assert!(matches!(
                usvt_estimate(&a, &config),
                Err(UsvtError::BadThreshold(_))
            ));
        }
    }

    #[test]
    fn default_estimate_is_a_valid_probability_matrix() {
        let a = random_adjacency(60, 0.5, 9);
        let est = usvt_estimate(&a, &UsvtConfig::default()).unwrap();
        assert!(est.into_probability_matrix().is_ok());
    }
}
