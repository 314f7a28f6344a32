//! Centered orthonormal frames and packings in the projection metric.
//!
//! A frame is an `m × k` matrix `V` with orthonormal columns, each orthogonal
//! to the all-ones vector. Its projector `VVᵀ` is the object the estimation
//! lower bound perturbs, so packings are measured in the squared Frobenius
//! distance `‖VVᵀ − V'V'ᵀ‖_F²` (equivalently `2‖sinΘ‖_F²` for the canonical
//! angles between the column spans).

use nalgebra::DMatrix;

use super::codes::Codebook;
use super::PackingError;
use crate::sampler::StreamRng;

/// Tolerance on `VᵀV = I` for a valid frame.
pub const FRAME_ORTHO_TOL: f64 = 1e-10;
/// Tolerance on per-column sums for a valid (centered) frame.
pub const FRAME_CENTER_TOL: f64 = 1e-10;
/// Tolerance on the internal sin-theta / projection-distance identity.
pub const SIN_THETA_IDENTITY_TOL: f64 = 1e-9;
/// Rank-deficiency retries for random frame draws.
const RANK_RETRIES: usize = 16;
/// Relative floor on QR diagonal entries below which a draw counts as
/// rank deficient.
const RANK_REL_TOL: f64 = 1e-8;
/// Slack allowed when re-checking a certified inequality against a measured
/// value (floating-point accumulation only; never a modelling margin).
const CERT_SLACK: f64 = 1e-9;

/// An `m × k` matrix with orthonormal columns, each summing to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredFrame {
    matrix: DMatrix<f64>,
}

impl CenteredFrame {
    /// Validate and wrap a candidate frame.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, PackingError> {
        let (m, k) = matrix.shape();
        if k == 0 || m < 2 || k > m - 1 {
            return Err(PackingError::BadFrameShape { m, k });
        }
        for col in 0..k {
            let sum: f64 = matrix.column(col).sum();
            if !sum.is_finite() || sum.abs() > FRAME_CENTER_TOL {
                return Err(PackingError::NotCentered { col, sum });
            }
        }
        let gram = matrix.transpose() * &matrix;
        for row in 0..k {
            for col in 0..k {
                let target = if row == col { 1.0 } else { 0.0 };
                let deviation = (gram[(row, col)] - target).abs();
                if !deviation.is_finite() || deviation > FRAME_ORTHO_TOL {
                    return Err(PackingError::NotOrthonormal {
                        row,
                        col,
                        deviation,
                    });
                }
            }
        }
        Ok(Self { matrix })
    }

    /// The underlying `m × k` matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Number of rows `m`.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of columns `k` (the subspace dimension).
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// The explicit `m × m` projector `VVᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.matrix * self.matrix.transpose()
    }

    /// Largest absolute entry of the projector.
    pub fn projector_linf(&self) -> f64 {
        crate::linalg::linf_norm(&self.projector())
    }
}

/// Squared projection distance `‖VVᵀ − V'V'ᵀ‖_F²` via the Gram identity
/// `2k − 2‖VᵀV'‖_F²` (avoids forming `m × m` projectors in inner loops).
pub(crate) fn projection_distance_sq(a: &CenteredFrame, b: &CenteredFrame) -> f64 {
    let k = a.cols() as f64;
    let cross = a.matrix().transpose() * b.matrix();
    let cross_sq: f64 = cross.iter().map(|v| v * v).sum();
    2.0 * (k - cross_sq)
}

/// Canonical-angle summary of a frame pair, with the projection-metric
/// cross-check computed on explicit projectors.
#[derive(Debug, Clone)]
pub struct SinThetaMetrics {
    /// Canonical angles in ascending order (radians).
    pub angles: Vec<f64>,
    /// `‖sinΘ‖_F² = Σ sin²θ_i`, from the singular values of `VᵀV'`.
    pub sin_sq_sum: f64,
    /// `‖VVᵀ − V'V'ᵀ‖_F²`, evaluated on explicit projectors.
    pub projection_distance_sq: f64,
    /// `‖VVᵀ‖_∞` for the first frame.
    pub linf_left: f64,
    /// `‖V'V'ᵀ‖_∞` for the second frame.
    pub linf_right: f64,
}

/// Canonical angles between two frames plus the identity check
/// `‖sinΘ‖² = ½‖VVᵀ − V'V'ᵀ‖²`.
///
/// The two sides are computed along independent routes (singular values of
/// the `k × k` cross-Gram versus explicit `m × m` projectors); a residual
/// above [`SIN_THETA_IDENTITY_TOL`] is reported as an error rather than
/// silently returned.
pub fn sin_theta_metrics(
    a: &CenteredFrame,
    b: &CenteredFrame,
) -> Result<SinThetaMetrics, PackingError> {
    check_same_shape(a, b)?;
    let cross = a.matrix().transpose() * b.matrix();
    let mut cosines: Vec<f64> = cross
        .singular_values()
        .iter()
        .map(|&s| s.clamp(0.0, 1.0))
        .collect();
    cosines.sort_by(|x, y| y.total_cmp(x));
    let angles: Vec<f64> = cosines.iter().map(|&c| c.acos()).collect();
    let sin_sq_sum: f64 = cosines.iter().map(|&c| 1.0 - c * c).sum();

    let diff = a.projector() - b.projector();
    let projection_distance_sq: f64 = diff.iter().map(|v| v * v).sum();

    let residual = (sin_sq_sum - 0.5 * projection_distance_sq).abs();
    if residual > SIN_THETA_IDENTITY_TOL {
        return Err(PackingError::MetricIdentity { residual });
    }
    Ok(SinThetaMetrics {
        angles,
        sin_sq_sum,
        projection_distance_sq,
        linf_left: a.projector_linf(),
        linf_right: b.projector_linf(),
    })
}

fn check_same_shape(a: &CenteredFrame, b: &CenteredFrame) -> Result<(), PackingError> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(PackingError::FrameMismatch {
            m1: a.rows(),
            k1: a.cols(),
            m2: b.rows(),
            k2: b.cols(),
        });
    }
    Ok(())
}

/// Draw a uniformly random centered frame: a Gaussian `m × k` matrix is
/// centered column-wise and orthonormalized by QR, retrying on (measure-zero)
/// rank deficiency.
pub fn random_centered_frame(
    m: usize,
    k: usize,
    rng: &mut StreamRng,
) -> Result<CenteredFrame, PackingError> {
    if k == 0 || m < 2 || k > m - 1 {
        return Err(PackingError::BadFrameShape { m, k });
    }
    for _ in 0..RANK_RETRIES {
        let mut draw = DMatrix::<f64>::zeros(m, k);
        for col in 0..k {
            for row in 0..m {
                draw[(row, col)] = rng.normal();
            }
            let mean = draw.column(col).sum() / m as f64;
            for row in 0..m {
                draw[(row, col)] -= mean;
            }
        }
        let qr = draw.qr();
        let r = qr.r();
        let max_diag = (0..k).fold(0.0_f64, |acc, i| acc.max(r[(i, i)].abs()));
        let min_diag = (0..k).fold(f64::INFINITY, |acc, i| acc.min(r[(i, i)].abs()));
        if !(max_diag.is_finite() && max_diag > 0.0) || min_diag < RANK_REL_TOL * max_diag {
            continue;
        }
        if let Ok(frame) = CenteredFrame::new(qr.q()) {
            return Ok(frame);
        }
    }
    Err(PackingError::RankDeficient {
        retries: RANK_RETRIES,
    })
}

/// A set of same-shaped frames with a certified pairwise separation floor and
/// a certified bound on every projector's largest entry.
///
/// Construction re-measures both quantities and fails if either certificate
/// is violated, so a value of this type is itself the certificate.
#[derive(Debug, Clone)]
pub struct PackingSet {
    frames: Vec<CenteredFrame>,
    delta_times_k: f64,
    linf_bound: f64,
    min_separation: f64,
    max_linf: f64,
}

impl PackingSet {
    /// Certify a packing: at least two same-shaped frames, measured pairwise
    /// separation at least `delta_times_k`, measured projector entries at
    /// most `linf_bound`.
    pub fn from_frames(
        frames: Vec<CenteredFrame>,
        delta_times_k: f64,
        linf_bound: f64,
    ) -> Result<Self, PackingError> {
        if frames.len() < 2 {
            return Err(PackingError::TooFewFrames {
                needed: 2,
                got: frames.len(),
            });
        }
        for frame in &frames[1..] {
            check_same_shape(&frames[0], frame)?;
        }
        let mut min_separation = f64::INFINITY;
        for i in 0..frames.len() {
            for j in (i + 1)..frames.len() {
                min_separation = min_separation.min(projection_distance_sq(&frames[i], &frames[j]));
            }
        }
        let max_linf = frames
            .iter()
            .fold(0.0_f64, |acc, f| acc.max(f.projector_linf()));
        if min_separation < delta_times_k - CERT_SLACK {
            return Err(PackingError::SeparationViolated {
                measured: min_separation,
                certified: delta_times_k,
            });
        }
        if max_linf > linf_bound + CERT_SLACK {
            return Err(PackingError::LinfViolated {
                measured: max_linf,
                bound: linf_bound,
            });
        }
        Ok(Self {
            frames,
            delta_times_k,
            linf_bound,
            min_separation,
            max_linf,
        })
    }

    pub fn frames(&self) -> &[CenteredFrame] {
        &self.frames
    }

    pub fn frame(&self, index: usize) -> &CenteredFrame {
        &self.frames[index]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Rows `m` shared by every frame.
    pub fn rows(&self) -> usize {
        self.frames[0].rows()
    }

    /// Columns `k` shared by every frame.
    pub fn cols(&self) -> usize {
        self.frames[0].cols()
    }

    /// Certified pairwise separation floor on `‖VVᵀ − V'V'ᵀ‖_F²`.
    pub fn delta_times_k(&self) -> f64 {
        self.delta_times_k
    }

    /// Certified bound on `‖VVᵀ‖_∞` over all frames.
    pub fn linf_bound(&self) -> f64 {
        self.linf_bound
    }

    /// Measured minimum pairwise separation.
    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// Measured maximum projector entry.
    pub fn max_linf(&self) -> f64 {
        self.max_linf
    }

    /// All pairwise squared projection distances as `(i, j, distance)`.
    pub fn pairwise_separations(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.frames.len() {
            for j in (i + 1)..self.frames.len() {
                out.push((
                    i,
                    j,
                    projection_distance_sq(&self.frames[i], &self.frames[j]),
                ));
            }
        }
        out
    }
}

/// Greedily pack random centered frames at separation level `delta`:
/// a candidate is kept when its squared projection distance to every kept
/// frame is at least `delta · k`. Stops at `target` frames or after `budget`
/// candidate draws, and errors if fewer than two frames survive.
pub fn greedy_frame_packing(
    m: usize,
    k: usize,
    delta: f64,
    target: usize,
    budget: usize,
    rng: &mut StreamRng,
) -> Result<PackingSet, PackingError> {
    if k == 0 || m < 2 || k > m - 1 {
        return Err(PackingError::BadFrameShape { m, k });
    }
    if m < 2 * k + 1 {
        return Err(PackingError::OutsidePackingRegime { m, k });
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(PackingError::BadSeparation(delta));
    }
    if target < 2 {
        return Err(PackingError::TooFewFrames {
            needed: 2,
            got: target,
        });
    }
    let floor = delta * k as f64;
    let mut kept: Vec<CenteredFrame> = Vec::new();
    for _ in 0..budget {
        if kept.len() >= target {
            break;
        }
        let candidate = random_centered_frame(m, k, rng)?;
        let separated = kept
            .iter()
            .all(|f| projection_distance_sq(f, &candidate) >= floor);
        if separated {
            kept.push(candidate);
        }
    }
    if kept.len() < 2 {
        return Err(PackingError::BudgetExhausted {
            budget,
            kept: kept.len(),
        });
    }
    let max_linf = kept
        .iter()
        .fold(0.0_f64, |acc, f| acc.max(f.projector_linf()));
    PackingSet::from_frames(kept, floor, max_linf)
}

/// Stack a base packing along codewords: codeword `ω ∈ {0..N-1}^{m₂}` over a
/// base packing of `N` frames (`m₁ × k` each) yields the `m₁m₂ × k` frame
/// whose `i`-th row block is `U_{ω(i)} / √m₂`.
///
/// Certificates carried by the result:
/// - every projector entry is at most `1/m₂` (row leverages of an
///   orthonormal frame never exceed one);
/// - any two stacked frames differ in at least `d` row blocks (the code's
///   minimum distance), and each differing diagonal block alone contributes
///   `‖U_aU_aᵀ − U_bU_bᵀ‖²/m₂² ≥ δ'k/m₂²`, so the certified floor is
///   `(δ'k) · d / m₂²`. Off-diagonal blocks only add to the distance, which
///   is why the measured separation typically sits well above the floor.
///
/// At most `max_frames` codewords (in codebook order) are stacked.
pub fn block_stack_frames(
    base: &PackingSet,
    code: &Codebook,
    max_frames: usize,
) -> Result<PackingSet, PackingError> {
    if u16::try_from(base.len()).map_err(|_| PackingError::AlphabetMismatch {
        alphabet: code.alphabet(),
        base: base.len(),
    })? != code.alphabet()
    {
        return Err(PackingError::AlphabetMismatch {
            alphabet: code.alphabet(),
            base: base.len(),
        });
    }
    if base.min_separation() <= 0.0 {
        return Err(PackingError::SeparationViolated {
            measured: base.min_separation(),
            certified: f64::MIN_POSITIVE,
        });
    }
    let count = code.len().min(max_frames);
    if count < 2 {
        return Err(PackingError::TooFewFrames {
            needed: 2,
            got: count,
        });
    }
    let m1 = base.rows();
    let k = base.cols();
    let m2 = code.word_length();
    let scale = 1.0 / (m2 as f64).sqrt();

    let mut frames = Vec::with_capacity(count);
    for word in code.words().iter().take(count) {
        let mut stacked = DMatrix::<f64>::zeros(m1 * m2, k);
        for (block, &symbol) in word.iter().enumerate() {
            let source = base.frame(symbol as usize).matrix();
            for col in 0..k {
                for row in 0..m1 {
                    stacked[(block * m1 + row, col)] = scale * source[(row, col)];
                }
            }
        }
        frames.push(CenteredFrame::new(stacked)?);
    }

    let m2_sq = (m2 * m2) as f64;
    let floor = base.delta_times_k() * code.min_distance() as f64 / m2_sq;
    let linf_bound = 1.0 / m2 as f64;
    PackingSet::from_frames(frames, floor, linf_bound)
}
