//! Greedy error-correcting codebooks over a finite alphabet, with the exact
//! ball-volume arithmetic behind the classical covering-style size guarantee.
//!
//! Symbols are `0..N-1` for an alphabet of size `N ≥ 2`; a word of length `n`
//! is identified with the integer `Σ word[pos] · N^pos`, and enumeration
//! follows that integer order. When the whole space fits under
//! [`DETERMINISTIC_SPACE_CAP`], the greedy scan is exhaustive: every word is
//! visited in order and kept unless some earlier codeword is within distance
//! `d - 1`. The resulting code is maximal, so radius-`(d-1)` balls around the
//! codewords cover the space and the size is at least `N^n / V_N(n, d-1)` —
//! an exact big-integer certificate stored on the codebook. Larger spaces
//! fall back to randomized greedy sampling, which certifies the pairwise
//! distance but not the size.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::PackingError;
use crate::sampler::StreamRng;

/// Largest word-space size `N^n` for which the greedy scan is exhaustive
/// (and the codebook therefore deterministic with a certified size bound).
pub const DETERMINISTIC_SPACE_CAP: u128 = 1 << 25;
/// Hard cap on stored codewords (memory guard; reached only for tiny
/// distances in large spaces).
pub const KEPT_WORDS_CAP: usize = 1 << 21;

/// Number of positions at which two equal-length words differ.
pub fn hamming_distance(left: &[u16], right: &[u16]) -> Result<usize, PackingError> {
    if left.len() != right.len() {
        return Err(PackingError::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    Ok(left.iter().zip(right).filter(|(a, b)| a != b).count())
}

/// Value of the base-`N` entropy function, with a flag marking evaluation at
/// the boundary of its domain (where the value is a continuity limit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropy {
    pub value: f64,
    pub at_boundary: bool,
}

/// Base-`N` entropy `h_N(p) = p·log_N(N-1) - p·log_N p - (1-p)·log_N(1-p)`.
///
/// Defined for `p ∈ [0, 1]`; the endpoints return the continuity limits
/// `h_N(0) = 0` and `h_N(1) = log_N(N-1)`, flagged via
/// [`Entropy::at_boundary`].
pub fn entropy_hn(alphabet: u16, p: f64) -> Result<Entropy, PackingError> {
    if alphabet < 2 {
        return Err(PackingError::AlphabetTooSmall(alphabet));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(PackingError::BadProportion(p));
    }
    let ln_n = f64::from(alphabet).ln();
    let log_n = |x: f64| x.ln() / ln_n;
    if p == 0.0 {
        return Ok(Entropy {
            value: 0.0,
            at_boundary: true,
        });
    }
    if p == 1.0 {
        return Ok(Entropy {
            value: log_n(f64::from(alphabet) - 1.0),
            at_boundary: true,
        });
    }
    let value = p * log_n(f64::from(alphabet) - 1.0) - p * log_n(p) - (1.0 - p) * log_n(1.0 - p);
    Ok(Entropy {
        value,
        at_boundary: false,
    })
}

/// Exact Hamming-ball volume `V_N(n, r) = Σ_{j ≤ r} C(n, j) (N-1)^j`.
pub fn hamming_ball_volume(
    alphabet: u16,
    length: usize,
    radius: usize,
) -> Result<BigUint, PackingError> {
    if alphabet < 2 {
        return Err(PackingError::AlphabetTooSmall(alphabet));
    }
    if radius > length {
        return Err(PackingError::RadiusTooLarge { radius, length });
    }
    let n_minus_1 = BigUint::from(alphabet as u32 - 1);
    let mut volume = BigUint::from(1_u32);
    let mut term = BigUint::from(1_u32); // C(n, j) (N-1)^j, starting at j = 0
    for j in 1..=radius {
        // C(n, j) = C(n, j-1) · (n - j + 1) / j, exactly divisible at each step.
        term = term * BigUint::from((length - j + 1) as u64) / BigUint::from(j as u64);
        term *= &n_minus_1;
        volume += &term;
        // Undo the (N-1) factor bookkeeping: keep term = C(n, j) (N-1)^j by
        // multiplying once per step, so nothing to undo — the loop invariant
        // holds because both factors are applied exactly once per j.
    }
    Ok(volume)
}

/// Result of comparing a Hamming-ball volume against its entropy bound
/// `V_N(n, pn) ≤ N^{h_N(p) n}` at `p = r/n` (valid for `p ≤ 1 - 1/N`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBoundCheck {
    /// Natural log of the exact ball volume.
    pub ln_volume: f64,
    /// Natural log of the entropy bound `N^{h_N(r/n) n}`.
    pub ln_bound: f64,
    /// Whether the bound holds (`ln_volume ≤ ln_bound` up to 1e-12 slack).
    pub holds: bool,
}

/// Compare the exact ball volume at radius `r` with the entropy bound at
/// proportion `p = r/n` on the log scale.
pub fn entropy_bound_check(
    alphabet: u16,
    length: usize,
    radius: usize,
) -> Result<EntropyBoundCheck, PackingError> {
    if length == 0 {
        return Err(PackingError::BadCodeParameters(
            "entropy bound needs length >= 1".into(),
        ));
    }
    let volume = hamming_ball_volume(alphabet, length, radius)?;
    let p = radius as f64 / length as f64;
    let entropy = entropy_hn(alphabet, p)?;
    let ln_volume = ln_biguint(&volume);
    let ln_bound = entropy.value * length as f64 * f64::from(alphabet).ln();
    Ok(EntropyBoundCheck {
        ln_volume,
        ln_bound,
        holds: ln_volume <= ln_bound + 1e-12,
    })
}

/// Natural log of a positive big integer (exact via `f64` when it fits,
/// mantissa-plus-shift otherwise).
fn ln_biguint(value: &BigUint) -> f64 {
    if let Some(f) = value.to_f64() {
        if f.is_finite() && f > 0.0 {
            return f.ln();
        }
    }
    let bits = value.bits();
    let shift = bits.saturating_sub(53);
    let mantissa = (value >> shift)
        .to_f64()
        .expect("53-bit mantissa fits in f64");
    mantissa.ln() + shift as f64 * std::f64::consts::LN_2
}

/// A codebook with a certified minimum pairwise Hamming distance.
#[derive(Debug, Clone)]
pub struct Codebook {
    alphabet: u16,
    word_length: usize,
    min_distance: usize,
    words: Vec<Vec<u16>>,
    deterministic: bool,
    size_guarantee: Option<BigUint>,
}

impl Codebook {
    /// Alphabet size `N`.
    pub fn alphabet(&self) -> u16 {
        self.alphabet
    }

    /// Word length `n`.
    pub fn word_length(&self) -> usize {
        self.word_length
    }

    /// The design distance `d`: every pair of codewords differs in at least
    /// this many positions.
    pub fn min_distance(&self) -> usize {
        self.min_distance
    }

    pub fn words(&self) -> &[Vec<u16>] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &[u16] {
        &self.words[index]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Whether the codebook came from the exhaustive deterministic scan.
    pub fn deterministic(&self) -> bool {
        self.deterministic
    }

    /// The certified size floor `⌈N^n / V_N(n, d-1)⌉`, present only for
    /// deterministic (maximal) codebooks.
    pub fn size_guarantee(&self) -> Option<&BigUint> {
        self.size_guarantee.as_ref()
    }

    /// Exhaustively measured minimum pairwise distance, or `None` when the
    /// number of pairs exceeds `max_pairs` or the codebook has fewer than
    /// two words.
    pub fn measured_min_distance(&self, max_pairs: usize) -> Option<usize> {
        let m = self.words.len();
        if m < 2 || m * (m - 1) / 2 > max_pairs {
            return None;
        }
        let mut min = usize::MAX;
        for i in 0..m {
            for j in (i + 1)..m {
                let d = hamming_distance(&self.words[i], &self.words[j])
                    .expect("stored words share a length");
                min = min.min(d);
            }
        }
        Some(min)
    }

    /// Measured minimum distance over `samples` random pairs (for codebooks
    /// too large for the exhaustive check). Never below the design distance
    /// unless the invariant is broken.
    pub fn sampled_min_distance(&self, samples: usize, rng: &mut StreamRng) -> Option<usize> {
        let m = self.words.len();
        if m < 2 {
            return None;
        }
        let mut min = usize::MAX;
        for _ in 0..samples {
            let i = (rng.uniform() * m as f64) as usize % m;
            let mut j = (rng.uniform() * (m - 1) as f64) as usize % (m - 1);
            if j >= i {
                j += 1;
            }
            let d = hamming_distance(&self.words[i], &self.words[j])
                .expect("stored words share a length");
            min = min.min(d);
        }
        Some(min)
    }
}

/// Build a codebook of minimum distance `d` by greedy selection.
///
/// When `N^n ≤` [`DETERMINISTIC_SPACE_CAP`] the scan is exhaustive in integer
/// word order, `rng` and `budget` are ignored, and the result is maximal:
/// its size certificate `⌈N^n / V_N(n, d-1)⌉` is computed exactly and stored.
/// Otherwise `budget` random candidate words are screened against the kept
/// set (`budget ≥ 1` required) and no size guarantee is claimed.
pub fn vg_greedy_codebook(
    alphabet: u16,
    length: usize,
    distance: usize,
    rng: &mut StreamRng,
    budget: usize,
) -> Result<Codebook, PackingError> {
    if alphabet < 2 {
        return Err(PackingError::AlphabetTooSmall(alphabet));
    }
    if length == 0 || distance == 0 || distance > length {
        return Err(PackingError::BadCodeParameters(format!(
            "need 1 <= d <= n, got n = {length}, d = {distance}"
        )));
    }
    let space = (alphabet as u128)
        .checked_pow(
            u32::try_from(length).map_err(|_| {
                PackingError::BadCodeParameters(format!("length {length} too large"))
            })?,
        )
        .ok_or_else(|| PackingError::BadCodeParameters(format!("{alphabet}^{length} overflows")))?;

    if space <= DETERMINISTIC_SPACE_CAP {
        exhaustive_greedy(alphabet, length, distance, space as usize)
    } else {
        randomized_greedy(alphabet, length, distance, rng, budget)
    }
}

fn exhaustive_greedy(
    alphabet: u16,
    length: usize,
    distance: usize,
    space: usize,
) -> Result<Codebook, PackingError> {
    let mut covered = BitSet::new(space);
    let powers: Vec<usize> = {
        let mut p = Vec::with_capacity(length);
        let mut acc = 1_usize;
        for _ in 0..length {
            p.push(acc);
            acc *= alphabet as usize;
        }
        p
    };
    let mut words: Vec<Vec<u16>> = Vec::new();
    let mut word = vec![0_u16; length];
    for index in 0..space {
        if !covered.get(index) {
            decode(index, alphabet, &mut word);
            if words.len() >= KEPT_WORDS_CAP {
                return Err(PackingError::WordLimitExceeded {
                    cap: KEPT_WORDS_CAP,
                });
            }
            words.push(word.clone());
            mark_ball(&mut covered, &word, index, distance - 1, alphabet, &powers);
        }
    }

    let volume = hamming_ball_volume(alphabet, length, distance - 1)?;
    let space_big = BigUint::from(space as u64);
    let guarantee = (&space_big + &volume - BigUint::from(1_u32)) / &volume;
    assert!(
        BigUint::from(words.len() as u64) >= guarantee,
        "maximal greedy code smaller than its covering bound"
    );
    Ok(Codebook {
        alphabet,
        word_length: length,
        min_distance: distance,
        words,
        deterministic: true,
        size_guarantee: Some(guarantee),
    })
}

fn randomized_greedy(
    alphabet: u16,
    length: usize,
    distance: usize,
    rng: &mut StreamRng,
    budget: usize,
) -> Result<Codebook, PackingError> {
    if budget == 0 {
        return Err(PackingError::BadCodeParameters(
            "randomized codebook search needs a positive budget".into(),
        ));
    }
    let mut words: Vec<Vec<u16>> = Vec::new();
    let mut candidate = vec![0_u16; length];
    for _ in 0..budget {
        for slot in candidate.iter_mut() {
            *slot = ((rng.uniform() * f64::from(alphabet)) as u16).min(alphabet - 1);
        }
        let ok = words.iter().all(|w| {
            hamming_distance(w, &candidate).expect("equal lengths by construction") >= distance
        });
        if ok {
            if words.len() >= KEPT_WORDS_CAP {
                return Err(PackingError::WordLimitExceeded {
                    cap: KEPT_WORDS_CAP,
                });
            }
            words.push(candidate.clone());
        }
    }
    Ok(Codebook {
        alphabet,
        word_length: length,
        min_distance: distance,
        words,
        deterministic: false,
        size_guarantee: None,
    })
}

/// Write the base-`N` digits of `index` into `word` (position 0 least
/// significant).
fn decode(index: usize, alphabet: u16, word: &mut [u16]) {
    let mut rest = index;
    for slot in word.iter_mut() {
        *slot = (rest % alphabet as usize) as u16;
        rest /= alphabet as usize;
    }
}

/// Mark every word within Hamming distance `radius` of `word` as covered.
/// Visits each ball member exactly once by only modifying positions at or
/// beyond `start`, tracking the integer index incrementally.
fn mark_ball(
    covered: &mut BitSet,
    word: &[u16],
    base_index: usize,
    radius: usize,
    alphabet: u16,
    powers: &[usize],
) {
    covered.set(base_index);
    if radius == 0 {
        return;
    }
    mark_ball_from(covered, word, base_index, radius, alphabet, powers, 0);
}

fn mark_ball_from(
    covered: &mut BitSet,
    word: &[u16],
    index: usize,
    remaining: usize,
    alphabet: u16,
    powers: &[usize],
    start: usize,
) {
    for pos in start..word.len() {
        let original = word[pos] as usize;
        for symbol in 0..alphabet as usize {
            if symbol == original {
                continue;
            }
            let shifted =
                (index as i64 + (symbol as i64 - original as i64) * powers[pos] as i64) as usize;
            covered.set(shifted);
            if remaining > 1 {
                mark_ball_from(
                    covered,
                    word,
                    shifted,
                    remaining - 1,
                    alphabet,
                    powers,
                    pos + 1,
                );
            }
        }
    }
}

/// Fixed-size bit set over `0..len`.
struct BitSet {
    bits: Vec<u64>,
}

impl BitSet {
    fn new(len: usize) -> Self {
        Self {
            bits: vec![0; len.div_ceil(64)],
        }
    }

    fn get(&self, index: usize) -> bool {
        self.bits[index / 64] & (1 << (index % 64)) != 0
    }

    fn set(&mut self, index: usize) {
        self.bits[index / 64] |= 1 << (index % 64);
    }
}
