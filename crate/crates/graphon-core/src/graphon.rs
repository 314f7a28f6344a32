//! Spectral graphons: symmetric kernels on `[0,1]²` given by finite
//! eigenfunction expansions
//!
//! ```text
//!     W(x, y) = Σ_i ω_i · φ_i(x) · φ_i(y)
//! ```
//!
//! with `{φ_i}` orthonormal in L2[0,1]. Three eigenfunction shapes cover every
//! family used in this crate:
//!
//! | shape    | formula                                   | closed-form Gram |
//! |----------|-------------------------------------------|------------------|
//! | constant | `φ(x) = 1`                                | yes              |
//! | step     | `φ(x) = √m Σ_j v_j 1((j−1)/m < x ≤ j/m)`  | yes              |
//! | trig     | `φ(x) = √2 cos(2πfx)` or `√2 sin(2πfx)`   | yes              |
//!
//! Construction validates unit norms, pairwise orthogonality, and that the
//! kernel itself stays inside `[0, 1]` (exact block-pair enumeration for pure
//! step kernels, a midpoint validation grid otherwise). Optional decay
//! metadata `(rate, coeff)` asserts `|ω_k| ≤ coeff · k^(−rate)` for every
//! listed index and feeds the spectral tail envelopes in [`crate::spectra`].
//!
//! Measure-preserving relabelings of `[0,1]` (half swap, n-fold wrap) act on
//! a graphon by composing every eigenfunction with the map; the spectrum is
//! unchanged, which [`SpectralGraphon::discretize_operator`] lets tests check
//! numerically: the `m × m` matrix `W(g_i, g_j)/m` on the midpoint grid
//! `g_i = (i − 1/2)/m` has eigenvalues converging on the graphon's.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg;

/// Tolerance for unit-norm validation of eigenfunctions.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for pairwise orthogonality validation.
pub const ORTHO_TOL: f64 = 1e-10;
/// Kernel values may stray outside `[0, 1]` by at most this much (floating
/// point slack); beyond it, evaluation errors instead of clamping silently.
pub const RANGE_TOL: f64 = 1e-9;
/// Side length of the midpoint validation grid used when exact block-pair
/// enumeration is not available.
pub const VALIDATION_GRID: usize = 512;

#[derive(Debug, Error)]
pub enum GraphonError {
    #[error("eigenfunction {index} has L2 norm {norm:e}, expected 1 within {NORM_TOL:e}")]
    NotUnitNorm { index: usize, norm: f64 },
    #[error("eigenfunctions {first} and {second} have inner product {value:e}, expected 0 within {ORTHO_TOL:e}")]
    NotOrthogonal {
        first: usize,
        second: usize,
        value: f64,
    },
    #[error("no closed-form inner product for eigenfunction pair ({first}, {second})")]
    GramUnsupported { first: usize, second: usize },
    #[error("kernel value {value} at ({x}, {y}) lies outside [0, 1] beyond tolerance")]
    ValueOutOfRange { x: f64, y: f64, value: f64 },
    #[error("evaluation point ({x}, {y}) outside the unit square")]
    PointOutOfDomain { x: f64, y: f64 },
    #[error("eigenvalue {index} is not finite")]
    NonFiniteEigenvalue { index: usize },
    #[error("step eigenfunction needs at least one block")]
    EmptyStep,
    #[error("trig eigenfunction frequency must be at least 1")]
    ZeroFrequency,
    #[error("wrap map factor must be at least 1")]
    ZeroWrap,
    #[error("block matrix must be square and nonempty")]
    SbmShape,
    #[error("block matrix is not symmetric at ({row}, {col})")]
    SbmNotSymmetric { row: usize, col: usize },
    #[error("block matrix entry {value} at ({row}, {col}) outside [0, 1]")]
    SbmEntryRange { row: usize, col: usize, value: f64 },
    #[error("constant level {0} outside [0, 1]")]
    ConstantRange(f64),
    #[error("decay envelope violated at index {index}: |eigenvalue| {value} > bound {bound}")]
    DecayViolated {
        index: usize,
        value: f64,
        bound: f64,
    },
    #[error("tail envelope needs decay metadata with rate > 1/2 and cut >= 1")]
    EnvelopeUnavailable,
    #[error("invalid family parameter: {0}")]
    BadFamilyParameter(String),
    #[error("discretization needs at least one grid point")]
    EmptyGrid,
}

/// Measure-preserving relabelings of `[0, 1]` under Lebesgue measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMap {
    /// `x ↦ x`.
    Identity,
    /// Swap the two halves of the interval: `x ↦ x + 1/2` for `x ≤ 1/2`,
    /// `x − 1/2` otherwise.
    HalfSwap,
    /// `x ↦ frac(n·x)`: wrap the interval around itself `n` times.
    Wrap(u32),
}

impl MeasureMap {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            MeasureMap::Identity => x,
            MeasureMap::HalfSwap => {
                if x <= 0.5 {
                    x + 0.5
                } else {
                    x - 0.5
                }
            }
            MeasureMap::Wrap(n) => (f64::from(n) * x).fract(),
        }
    }

    /// Short label used in reports and CSV output.
    pub fn label(&self) -> String {
        match *self {
            MeasureMap::Identity => "identity".to_owned(),
            MeasureMap::HalfSwap => "half-swap".to_owned(),
            MeasureMap::Wrap(n) => format!("wrap:{n}"),
        }
    }
}

/// Phase of a trigonometric eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    Cosine,
    Sine,
}

/// Orthonormal basis functions for spectral graphons. Unit L2 norm is
/// enforced when a [`SpectralGraphon`] is built.
#[derive(Debug, Clone, PartialEq)]
pub enum EigenFunction {
    /// `φ(x) = 1`.
    Constant,
    /// `φ(x) = √m · Σ_j v_j · 1((j−1)/m < x ≤ j/m)` with `m = coeffs.len()`.
    /// `x = 0` is assigned to the first block.
    Step { coeffs: Vec<f64> },
    /// `φ(x) = √2 cos(2π·frequency·x)` (or sine).
    Trig { frequency: u32, kind: TrigKind },
    /// `φ(x) = inner(map(x))`: composition with a measure-preserving map.
    Composed {
        map: MeasureMap,
        inner: Box<EigenFunction>,
    },
}

impl EigenFunction {
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            EigenFunction::Constant => 1.0,
            EigenFunction::Step { coeffs } => {
                let m = coeffs.len();
                let idx = if x <= 0.0 {
                    0
                } else {
                    (((x * m as f64).ceil() as usize).max(1) - 1).min(m - 1)
                };
                (m as f64).sqrt() * coeffs[idx]
            }
            EigenFunction::Trig { frequency, kind } => {
                let arg = 2.0 * std::f64::consts::PI * f64::from(*frequency) * x;
                match kind {
                    TrigKind::Cosine => std::f64::consts::SQRT_2 * arg.cos(),
                    TrigKind::Sine => std::f64::consts::SQRT_2 * arg.sin(),
                }
            }
            EigenFunction::Composed { map, inner } => inner.evaluate(map.apply(x)),
        }
    }

    /// Closed-form L2 inner product on `[0, 1]`, or `None` for pairs with no
    /// closed form (compositions under different maps).
    pub fn inner_product(&self, other: &EigenFunction) -> Option<f64> {
        use EigenFunction::*;
        match (self, other) {
            (Constant, Constant) => Some(1.0),
            (Constant, Step { coeffs }) | (Step { coeffs }, Constant) => {
                let m = coeffs.len() as f64;
                Some(coeffs.iter().sum::<f64>() / m.sqrt())
            }
            (Constant, Trig { .. }) | (Trig { .. }, Constant) => Some(0.0),
            (Step { coeffs: a }, Step { coeffs: b }) => Some(step_step_inner(a, b)),
            (s @ Step { .. }, Trig { frequency, kind })
            | (Trig { frequency, kind }, s @ Step { .. }) => {
                let Step { coeffs } = s else { unreachable!() };
                Some(step_trig_inner(coeffs, *frequency, *kind))
            }
            (
                Trig {
                    frequency: f1,
                    kind: k1,
                },
                Trig {
                    frequency: f2,
                    kind: k2,
                },
            ) => Some(if f1 == f2 && k1 == k2 { 1.0 } else { 0.0 }),
            (Composed { map: m1, inner: a }, Composed { map: m2, inner: b }) if m1 == m2 => {
                a.inner_product(b)
            }
            _ => None,
        }
    }

    /// Validate variant-level structure (nonempty steps, nonzero frequencies).
    fn validate_shape(&self) -> Result<(), GraphonError> {
        match self {
            EigenFunction::Constant => Ok(()),
            EigenFunction::Step { coeffs } => {
                if coeffs.is_empty() {
                    Err(GraphonError::EmptyStep)
                } else {
                    Ok(())
                }
            }
            EigenFunction::Trig { frequency, .. } => {
                if *frequency == 0 {
                    Err(GraphonError::ZeroFrequency)
                } else {
                    Ok(())
                }
            }
            EigenFunction::Composed { map, inner } => {
                if let MeasureMap::Wrap(0) = map {
                    return Err(GraphonError::ZeroWrap);
                }
                inner.validate_shape()
            }
        }
    }

    fn is_pure_step(&self) -> bool {
        matches!(self, EigenFunction::Constant | EigenFunction::Step { .. })
    }

    fn block_count(&self) -> usize {
        match self {
            EigenFunction::Step { coeffs } => coeffs.len(),
            _ => 1,
        }
    }
}

/// `⟨step_a, step_b⟩` via common refinement of the two block partitions.
fn step_step_inner(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (a.len(), b.len());
    if ma == mb {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let l = lcm(ma, mb);
    let (sa, sb) = ((ma as f64).sqrt(), (mb as f64).sqrt());
    let mut acc = 0.0;
    for cell in 0..l {
        // cell covers ((cell)/l, (cell+1)/l]; block indices in each partition
        let ia = cell * ma / l;
        let ib = cell * mb / l;
        acc += sa * a[ia] * sb * b[ib] / l as f64;
    }
    acc
}

/// `⟨step, √2 trig(2πf·)⟩` from the antiderivative on each block.
fn step_trig_inner(coeffs: &[f64], frequency: u32, kind: TrigKind) -> f64 {
    let m = coeffs.len();
    let scale = (m as f64).sqrt() * std::f64::consts::SQRT_2;
    let omega = 2.0 * std::f64::consts::PI * f64::from(frequency);
    let mut acc = 0.0;
    for (j, &v) in coeffs.iter().enumerate() {
        let a = j as f64 / m as f64;
        let b = (j + 1) as f64 / m as f64;
        let integral = match kind {
            TrigKind::Cosine => ((omega * b).sin() - (omega * a).sin()) / omega,
            TrigKind::Sine => ((omega * a).cos() - (omega * b).cos()) / omega,
        };
        acc += v * integral;
    }
    scale * acc
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Polynomial decay metadata: asserts `|ω_k| ≤ coeff · k^(−rate)` for every
/// listed eigenvalue (1-based `k`, absolute-value-descending order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDecay {
    pub rate: f64,
    pub coeff: f64,
}

/// Result of checking a decay envelope against the listed eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCheck {
    pub holds: bool,
    /// First `(index, |eigenvalue|, bound)` violating the envelope, if any.
    /// Index is 1-based to match the envelope formula.
    pub first_violation: Option<(usize, f64, f64)>,
}

/// A finite-rank graphon in spectral form. Terms are kept sorted by
/// `|eigenvalue|` descending, ties broken by sign (positive first) and then
/// construction order.
#[derive(Debug, Clone)]
pub struct SpectralGraphon {
    terms: Vec<(f64, EigenFunction)>,
    decay: Option<SpectralDecay>,
}

impl SpectralGraphon {
    /// Build and fully validate a graphon from `(eigenvalue, eigenfunction)`
    /// pairs: shapes, unit norms, pairwise orthogonality (closed-form Gram),
    /// and kernel range (exact block-pair enumeration for pure step kernels,
    /// otherwise a `512 × 512` midpoint grid).
    pub fn new(terms: Vec<(f64, EigenFunction)>) -> Result<Self, GraphonError> {
        for (i, (value, function)) in terms.iter().enumerate() {
            if !value.is_finite() {
                return Err(GraphonError::NonFiniteEigenvalue { index: i });
            }
            function.validate_shape()?;
        }
        // Gram checks before sorting so error indices refer to input order.
        for i in 0..terms.len() {
            let norm_sq =
                terms[i]
                    .1
                    .inner_product(&terms[i].1)
                    .ok_or(GraphonError::GramUnsupported {
                        first: i,
                        second: i,
                    })?;
            if (norm_sq - 1.0).abs() > NORM_TOL {
                return Err(GraphonError::NotUnitNorm {
                    index: i,
                    norm: norm_sq.sqrt(),
                });
            }
            for j in (i + 1)..terms.len() {
                let ip =
                    terms[i]
                        .1
                        .inner_product(&terms[j].1)
                        .ok_or(GraphonError::GramUnsupported {
                            first: i,
                            second: j,
                        })?;
                if ip.abs() > ORTHO_TOL {
                    return Err(GraphonError::NotOrthogonal {
                        first: i,
                        second: j,
                        value: ip,
                    });
                }
            }
        }
        let graphon = Self {
            terms: sort_terms(terms),
            decay: None,
        };
        graphon.certify_range()?;
        Ok(graphon)
    }

    /// The constant graphon `W ≡ level`.
    pub fn constant(level: f64) -> Result<Self, GraphonError> {
        if !(0.0..=1.0).contains(&level) || !level.is_finite() {
            return Err(GraphonError::ConstantRange(level));
        }
        Ok(Self {
            terms: if level == 0.0 {
                Vec::new()
            } else {
                vec![(level, EigenFunction::Constant)]
            },
            decay: None,
        })
    }

    /// Stochastic block model graphon: `W(x, y) = B[z(x), z(y)]` with `k`
    /// equal blocks. Eigenvalues are `eig(B)/k` and eigenfunctions the
    /// unit-norm step functions `√k Σ_j u_ij 1(z(x) = j)` built from the
    /// orthonormal eigenvectors `u_i` of `B`; exact zero eigenvalues of `B`
    /// are dropped.
    pub fn from_sbm(blocks: &DMatrix<f64>) -> Result<Self, GraphonError> {
        let k = blocks.nrows();
        if k == 0 || blocks.ncols() != k {
            return Err(GraphonError::SbmShape);
        }
        for i in 0..k {
            for j in 0..k {
                let v = blocks[(i, j)];
                if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                    return Err(GraphonError::SbmEntryRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                if blocks[(i, j)] != blocks[(j, i)] {
                    return Err(GraphonError::SbmNotSymmetric { row: i, col: j });
                }
            }
        }
        let (values, vectors) = linalg::symmetric_eigen(blocks);
        let mut terms = Vec::with_capacity(k);
        for (i, &lambda) in values.iter().enumerate() {
            if lambda == 0.0 {
                continue;
            }
            let coeffs: Vec<f64> = vectors.column(i).iter().copied().collect();
            terms.push((lambda / k as f64, EigenFunction::Step { coeffs }));
        }
        // Eigenvector columns are orthonormal by construction; range is exact
        // (kernel values are exactly the entries of B). Skip the generic
        // validation and keep the construction O(k³).
        Ok(Self {
            terms: sort_terms(terms),
            decay: None,
        })
    }

    /// Trigonometric family with polynomially decaying spectrum:
    /// `W = offset + Σ_{i=1..rank} coeff·i^(−rate) · φ_i ⊗ φ_i` with
    /// `φ_i(x) = √2 cos(2πix)`. With `coeff = None` the largest coefficient
    /// keeping `W ≤ 1` is used: `(1 − offset) / (2 Σ_i i^(−rate))`, attained
    /// at the corner `(0, 0)`; for `offset ≥ 1/2` that choice also keeps
    /// `W ≥ 2·offset − 1 ≥ 0`, while smaller offsets may fail the range
    /// check and error. Decay metadata is attached with the tightest
    /// envelope constant consistent with the listed eigenvalues.
    pub fn trig_decay(
        rate: f64,
        coeff: Option<f64>,
        rank: usize,
        offset: f64,
    ) -> Result<Self, GraphonError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(GraphonError::BadFamilyParameter(format!(
                "decay rate must be positive, got {rate}"
            )));
        }
        if rank == 0 {
            return Err(GraphonError::BadFamilyParameter(
                "trig family needs rank >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&offset) {
            return Err(GraphonError::BadFamilyParameter(format!(
                "offset must lie in [0, 1), got {offset}"
            )));
        }
        let weight_sum: f64 = (1..=rank).map(|i| (i as f64).powf(-rate)).sum();
        let coeff = match coeff {
            Some(c) if c.is_finite() && c > 0.0 => c,
            Some(c) => {
                return Err(GraphonError::BadFamilyParameter(format!(
                    "coefficient must be positive, got {c}"
                )))
            }
            None => (1.0 - offset) / (2.0 * weight_sum),
        };
        // Exact corner check: every cosine peaks at x = y = 0.
        let corner = offset + 2.0 * coeff * weight_sum;
        if corner > 1.0 + RANGE_TOL {
            return Err(GraphonError::ValueOutOfRange {
                x: 0.0,
                y: 0.0,
                value: corner,
            });
        }
        let mut terms = Vec::with_capacity(rank + 1);
        if offset > 0.0 {
            terms.push((offset, EigenFunction::Constant));
        }
        for i in 1..=rank {
            terms.push((
                coeff * (i as f64).powf(-rate),
                EigenFunction::Trig {
                    frequency: i as u32,
                    kind: TrigKind::Cosine,
                },
            ));
        }
        let mut graphon = Self {
            terms: sort_terms(terms),
            decay: None,
        };
        graphon.certify_range()?;
        let tight = graphon.tightest_envelope_coeff(rate);
        graphon.decay = Some(SpectralDecay { rate, coeff: tight });
        Ok(graphon)
    }

    /// Largest valid coefficient for [`SpectralGraphon::trig_decay`] at the
    /// given rate/rank/offset.
    pub fn max_trig_coeff(rate: f64, rank: usize, offset: f64) -> f64 {
        let weight_sum: f64 = (1..=rank).map(|i| (i as f64).powf(-rate)).sum();
        (1.0 - offset) / (2.0 * weight_sum)
    }

    /// Kernel evaluation. Values may drift outside `[0, 1]` by at most
    /// [`RANGE_TOL`] (they are clamped back); larger excursions error.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64, GraphonError> {
        if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
            return Err(GraphonError::PointOutOfDomain { x, y });
        }
        let mut acc = 0.0;
        for (value, function) in &self.terms {
            acc += value * (function.evaluate(x) * function.evaluate(y));
        }
        check_range(acc, x, y)
    }

    /// Terms as `(eigenvalue, eigenfunction)` in the crate's sort order.
    pub fn terms(&self) -> &[(f64, EigenFunction)] {
        &self.terms
    }

    /// Eigenvalues in sort order (absolute value descending).
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.terms.iter().map(|(v, _)| *v).collect()
    }

    /// Number of listed terms.
    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// `Σ_i |ω_i|` over the listed terms.
    pub fn trace_norm(&self) -> f64 {
        self.terms.iter().map(|(v, _)| v.abs()).sum()
    }

    pub fn decay(&self) -> Option<SpectralDecay> {
        self.decay
    }

    /// Attach decay metadata after checking it against every listed
    /// eigenvalue.
    pub fn with_decay(mut self, rate: f64, coeff: f64) -> Result<Self, GraphonError> {
        let check = self.decay_envelope_check(rate, coeff);
        if let Some((index, value, bound)) = check.first_violation {
            return Err(GraphonError::DecayViolated {
                index,
                value,
                bound,
            });
        }
        self.decay = Some(SpectralDecay { rate, coeff });
        Ok(self)
    }

    /// Check `|ω_k| ≤ coeff · k^(−rate)` for every listed `k` (1-based).
    pub fn decay_envelope_check(&self, rate: f64, coeff: f64) -> EnvelopeCheck {
        for (i, (value, _)) in self.terms.iter().enumerate() {
            let k = (i + 1) as f64;
            let bound = coeff * k.powf(-rate);
            if value.abs() > bound {
                return EnvelopeCheck {
                    holds: false,
                    first_violation: Some((i + 1, value.abs(), bound)),
                };
            }
        }
        EnvelopeCheck {
            holds: true,
            first_violation: None,
        }
    }

    /// Smallest `C` such that `|ω_k| ≤ C·k^(−rate)` holds for every listed
    /// eigenvalue.
    pub fn tightest_envelope_coeff(&self, rate: f64) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, (value, _))| value.abs() * ((i + 1) as f64).powf(rate))
            .fold(0.0_f64, f64::max)
    }

    /// `Σ_{i > cut} ω_i²` over the listed eigenvalues.
    pub fn tail_eigen_sum(&self, cut: usize) -> f64 {
        tail_sum_squares(&self.eigenvalues(), cut)
    }

    /// Analytic envelope `coeff² · cut^(1−2·rate) / (2·rate − 1)` for the
    /// tail sum; needs decay metadata with `rate > 1/2` and `cut ≥ 1`.
    pub fn tail_envelope(&self, cut: usize) -> Result<f64, GraphonError> {
        let decay = self.decay.ok_or(GraphonError::EnvelopeUnavailable)?;
        tail_envelope_value(decay.rate, decay.coeff, cut).ok_or(GraphonError::EnvelopeUnavailable)
    }

    /// Relabel the graphon by a measure-preserving map: every eigenfunction
    /// is composed with the map, the eigenvalue list (and hence the
    /// spectrum) is unchanged. Evaluation goes through the map numerically,
    /// so discretized spectra genuinely exercise the transform.
    pub fn apply_measure_preserving(&self, map: MeasureMap) -> SpectralGraphon {
        let terms = self
            .terms
            .iter()
            .map(|(value, function)| {
                (
                    *value,
                    EigenFunction::Composed {
                        map,
                        inner: Box::new(function.clone()),
                    },
                )
            })
            .collect();
        SpectralGraphon {
            terms,
            decay: self.decay,
        }
    }

    /// Values of every eigenfunction at the given points, for fast repeated
    /// evaluation (`points × terms` layout plus the eigenvalue weights).
    pub fn eigenfunction_cache(&self, points: &[f64]) -> EigenCache {
        let n = points.len();
        let t = self.terms.len();
        let mut values = DMatrix::<f64>::zeros(n, t);
        for (ti, (_, function)) in self.terms.iter().enumerate() {
            for (pi, &x) in points.iter().enumerate() {
                values[(pi, ti)] = function.evaluate(x);
            }
        }
        EigenCache {
            weights: self.terms.iter().map(|(v, _)| *v).collect(),
            values,
        }
    }

    /// Discretized integral operator on the `bins`-point midpoint grid:
    /// `D_ij = W(g_i, g_j)/bins` with `g_i = (i − 1/2)/bins`. Its eigenvalues
    /// approximate (and for pure step/trig kernels on aligned grids, exactly
    /// reproduce) the graphon eigenvalues.
    pub fn discretize_operator(&self, bins: usize) -> Result<DMatrix<f64>, GraphonError> {
        if bins == 0 {
            return Err(GraphonError::EmptyGrid);
        }
        let grid: Vec<f64> = (0..bins).map(|i| (i as f64 + 0.5) / bins as f64).collect();
        let cache = self.eigenfunction_cache(&grid);
        let scale = 1.0 / bins as f64;
        let mut out = DMatrix::<f64>::zeros(bins, bins);
        for i in 0..bins {
            for j in i..bins {
                let v = check_range(cache.pair(i, j), grid[i], grid[j])? * scale;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    /// Eigenvalues of [`SpectralGraphon::discretize_operator`], absolute
    /// value descending.
    pub fn discretized_spectrum(&self, bins: usize) -> Result<Vec<f64>, GraphonError> {
        Ok(linalg::symmetric_eigenvalues_abs_desc(
            &self.discretize_operator(bins)?,
        ))
    }

    /// Exact range certificate. Pure step kernels are enumerated over block
    /// pairs at the common refinement; everything else is checked on the
    /// midpoint validation grid.
    fn certify_range(&self) -> Result<(), GraphonError> {
        let pure_step = self.terms.iter().all(|(_, f)| f.is_pure_step());
        if pure_step {
            let mut blocks = 1usize;
            for (_, f) in &self.terms {
                blocks = lcm(blocks, f.block_count());
                if blocks > 4096 {
                    break;
                }
            }
            if blocks <= 4096 {
                let grid: Vec<f64> = (0..blocks)
                    .map(|i| (i as f64 + 0.5) / blocks as f64)
                    .collect();
                return self.check_grid(&grid);
            }
        }
        let grid: Vec<f64> = (0..VALIDATION_GRID)
            .map(|i| (i as f64 + 0.5) / VALIDATION_GRID as f64)
            .collect();
        self.check_grid(&grid)
    }

    fn check_grid(&self, grid: &[f64]) -> Result<(), GraphonError> {
        let cache = self.eigenfunction_cache(grid);
        for i in 0..grid.len() {
            for j in i..grid.len() {
                check_range(cache.pair(i, j), grid[i], grid[j])?;
            }
        }
        Ok(())
    }
}

/// Cached eigenfunction values at fixed points; `pair(i, j)` reproduces
/// `evaluate(points[i], points[j])` bit for bit (same accumulation order).
pub struct EigenCache {
    weights: Vec<f64>,
    values: DMatrix<f64>,
}

impl EigenCache {
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pair_prefix(i, j, self.weights.len())
    }

    /// Accumulate only the first `terms` components, in the same order and
    /// with the same floating-point operations as [`EigenCache::pair`], so a
    /// full-prefix call is bit-identical to the full kernel value.
    pub fn pair_prefix(&self, i: usize, j: usize, terms: usize) -> f64 {
        let mut acc = 0.0;
        for (t, w) in self.weights.iter().enumerate().take(terms) {
            acc += w * (self.values[(i, t)] * self.values[(j, t)]);
        }
        acc
    }

    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

pub(crate) fn check_range(value: f64, x: f64, y: f64) -> Result<f64, GraphonError> {
    if !value.is_finite() || !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&value) {
        return Err(GraphonError::ValueOutOfRange { x, y, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

fn sort_terms(terms: Vec<(f64, EigenFunction)>) -> Vec<(f64, EigenFunction)> {
    let values: Vec<f64> = terms.iter().map(|(v, _)| *v).collect();
    let perm = linalg::abs_desc_permutation(&values);
    let mut slots: Vec<Option<(f64, EigenFunction)>> = terms.into_iter().map(Some).collect();
    perm.into_iter()
        .map(|i| slots[i].take().expect("permutation visits each index once"))
        .collect()
}

/// `Σ_{i > cut} v_i²` for a raw eigenvalue list (1-based cut; `cut = 0` sums
/// everything). Standalone so decay-envelope arithmetic can be tested on
/// sequences that are not valid kernels.
pub fn tail_sum_squares(values: &[f64], cut: usize) -> f64 {
    values.iter().skip(cut).map(|v| v * v).sum()
}

/// Analytic tail envelope `coeff² · cut^(1−2·rate)/(2·rate − 1)`; `None`
/// unless `rate > 1/2` and `cut ≥ 1`.
pub fn tail_envelope_value(rate: f64, coeff: f64, cut: usize) -> Option<f64> {
    if rate <= 0.5 || cut == 0 {
        return None;
    }
    Some(coeff * coeff * (cut as f64).powf(1.0 - 2.0 * rate) / (2.0 * rate - 1.0))
}
