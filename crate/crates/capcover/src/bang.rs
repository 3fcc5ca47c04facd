//! The Bang set of a plank-vector family: the 2^n signed sums of the
//! vectors. This module picks the signing of maximal sum norm (exactly via
//! Gray-code enumeration, or by local search past the exact budget), finds
//! minimal subsets whose partial sums are too long for their widths (the
//! trigger for a zone merge), and provides the cell-membership diagnostics
//! behind the covering argument: a point of maximal norm within its
//! translate of the Bang set lies in the cell cut out by the signed
//! halfspaces and outside every open plank.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::separability::SignPattern;
use crate::sphere::PlankVector;
use crate::vecmath as vm;
use crate::EPS_GEOM;

/// Enumeration budgets: 2^n signed sums / subsets beyond this are refused.
pub const MAX_ENUMERATION: usize = 24;

#[derive(Debug, Error)]
pub enum BangError {
    #[error("empty vector family")]
    EmptyFamily,
    #[error("family of {n} vectors exceeds the enumeration budget of {MAX_ENUMERATION}; exact subset reduction is only supported up to that size")]
    BudgetExceeded { n: usize },
    #[error("sign pattern length {pattern} does not match vector count {vectors}")]
    PatternLength { pattern: usize, vectors: usize },
    #[error("point with norm {norm} is outside the open unit ball")]
    OutsideBall { norm: f64 },
    #[error("lens membership forms disagree: halfspace margin {halfspace}, norm margin {norm}")]
    DualFormDisagreement { halfspace: f64, norm: f64 },
}

/// Knobs for the signing search.
#[derive(Debug, Clone)]
pub struct SigningConfig {
    /// Families up to this size are signed exactly; larger ones fall back to
    /// local search and flag the result heuristic.
    pub exact_threshold: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SigningConfig {
    fn default() -> Self {
        Self {
            exact_threshold: 24,
            restarts: 8,
            seed: 0,
        }
    }
}

/// A plank-vector family re-signed so the chosen maximal sum is the plain
/// sum of `vectors`. `signs_applied` records the flips relative to the
/// input; `heuristic` is set when the signing came from local search.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedFamily {
    pub vectors: Vec<PlankVector>,
    pub half_widths: Vec<f64>,
    pub signs_applied: SignPattern,
    pub heuristic: bool,
}

impl OrientedFamily {
    pub fn sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.vectors[0].w.len()];
        for v in &self.vectors {
            vm::axpy(&mut s, 1.0, &v.w);
        }
        s
    }
}

/// A subset whose partial sum is longer than the sine of its summed widths.
/// Found in ascending cardinality, so no proper subset violates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetViolation {
    pub indices: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Lexicographic order on flip masks read from the low bit: the mask whose
/// first differing sign is +1 wins.
fn mask_lex_less(a: u64, b: u64) -> bool {
    let d = a ^ b;
    if d == 0 {
        return false;
    }
    a & (1 << d.trailing_zeros()) == 0
}

/// Exact maximal signing over 2^{n-1} sign choices (the first sign is fixed
/// +1; norms are symmetric under global negation). Gray-code order updates
/// the running sum with one vector add per step. Ties within 1e-11 on the
/// squared norm go to the lexicographically smallest flip mask.
fn exact_signing(vectors: &[Vec<f64>]) -> (u64, f64) {
    let n = vectors.len();
    let mut sum: Vec<f64> = vec![0.0; vectors[0].len()];
    for v in vectors {
        vm::axpy(&mut sum, 1.0, v);
    }
    let mut best_mask = 0u64;
    let mut best_norm = vm::norm_sq(&sum);
    let mut mask = 0u64;
    let total: u64 = 1 << (n - 1);
    for g in 1..total {
        let bit = g.trailing_zeros() as usize;
        let idx = bit + 1;
        mask ^= 1 << bit;
        let sign = if mask & (1 << bit) != 0 { -2.0 } else { 2.0 };
        vm::axpy(&mut sum, sign, &vectors[idx]);
        let norm = vm::norm_sq(&sum);
        if norm > best_norm + 1e-11
            || (norm > best_norm - 1e-11 && mask_lex_less(mask, best_mask))
        {
            best_norm = norm.max(best_norm);
            best_mask = mask;
        }
    }
    (best_mask, best_norm)
}

fn signs_from_mask(n: usize, mask: u64) -> Vec<i8> {
    let mut signs = vec![1i8; n];
    for (bit, s) in signs.iter_mut().skip(1).enumerate() {
        if mask & (1 << bit) != 0 {
            *s = -1;
        }
    }
    signs
}

fn mask_from_signs(signs: &[i8]) -> u64 {
    let mut mask = 0u64;
    for (bit, &s) in signs.iter().skip(1).enumerate() {
        if s < 0 {
            mask |= 1 << bit;
        }
    }
    mask
}

fn signed_sum(vectors: &[Vec<f64>], signs: &[i8]) -> Vec<f64> {
    let mut sum = vec![0.0; vectors[0].len()];
    for (v, &s) in vectors.iter().zip(signs) {
        vm::axpy(&mut sum, s as f64, v);
    }
    sum
}

/// Steepest-ascent sign flipping: flipping i changes the squared norm by
/// 4(|w_i|^2 - e_i <w, w_i>), so any i with e_i <w, w_i> < |w_i|^2 improves.
fn local_search(vectors: &[Vec<f64>], signs: &mut [i8]) -> f64 {
    let mut sum = signed_sum(vectors, signs);
    loop {
        let mut best_gain = 0.0;
        let mut best_i = None;
        for (i, v) in vectors.iter().enumerate() {
            let gain = 4.0 * (vm::norm_sq(v) - signs[i] as f64 * vm::dot(&sum, v));
            if gain > best_gain + 1e-15 {
                best_gain = gain;
                best_i = Some(i);
            }
        }
        match best_i {
            Some(i) => {
                vm::axpy(&mut sum, -2.0 * signs[i] as f64, &vectors[i]);
                signs[i] = -signs[i];
            }
            None => return vm::norm_sq(&sum),
        }
    }
}

/// Signs the family for maximal sum norm. Exact up to
/// `config.exact_threshold` vectors, local search with restarts beyond;
/// heuristic results are flagged on the returned family.
pub fn max_norm_signing(
    vectors: &[PlankVector],
    config: &SigningConfig,
) -> Result<OrientedFamily, BangError> {
    if vectors.is_empty() {
        return Err(BangError::EmptyFamily);
    }
    let n = vectors.len();
    let raw: Vec<Vec<f64>> = vectors.iter().map(|v| v.w.clone()).collect();
    let (signs, heuristic) = if n <= config.exact_threshold && n <= MAX_ENUMERATION {
        let (mask, _) = exact_signing(&raw);
        (signs_from_mask(n, mask), false)
    } else {
        let mut best_signs = vec![1i8; n];
        // greedy start: align each vector with the running sum
        let mut sum = raw[0].clone();
        for (i, v) in raw.iter().enumerate().skip(1) {
            if vm::dot(&sum, v) < 0.0 {
                best_signs[i] = -1;
            }
            vm::axpy(&mut sum, best_signs[i] as f64, v);
        }
        let mut best_norm = local_search(&raw, &mut best_signs);
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed ^ 0xb1a5);
        for _ in 0..config.restarts {
            let mut signs: Vec<i8> =
                (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let norm = local_search(&raw, &mut signs);
            if norm > best_norm + 1e-11
                || ((norm - best_norm).abs() <= 1e-11
                    && mask_lex_less(
                        mask_from_signs(&canonical_signs(&signs)),
                        mask_from_signs(&canonical_signs(&best_signs)),
                    ))
            {
                best_norm = norm.max(best_norm);
                best_signs = signs;
            }
        }
        (canonical_signs(&best_signs), true)
    };
    let oriented: Vec<PlankVector> = vectors
        .iter()
        .zip(&signs)
        .map(|(v, &s)| PlankVector {
            w: vm::scale(&v.w, s as f64),
        })
        .collect();
    let half_widths = oriented.iter().map(|v| v.norm().asin()).collect();
    let fam = OrientedFamily {
        vectors: oriented,
        half_widths,
        signs_applied: SignPattern::new(signs).expect("signs are +-1"),
        heuristic,
    };
    debug_assert!({
        let max_single = fam.vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
        vm::norm(&fam.sum()) >= max_single - EPS_GEOM
    });
    Ok(fam)
}

fn canonical_signs(signs: &[i8]) -> Vec<i8> {
    if signs[0] < 0 {
        signs.iter().map(|s| -s).collect()
    } else {
        signs.to_vec()
    }
}

/// First violating subset in ascending cardinality (then lexicographic)
/// order, or None when the full sum already satisfies its bound. Singletons
/// never violate: |w_i| = sin(a_i) exactly, so every returned subset has at
/// least two members and, by the search order, no violating proper subset.
pub fn find_minimal_violating_subset(
    fam: &OrientedFamily,
) -> Result<Option<SubsetViolation>, BangError> {
    let n = fam.vectors.len();
    let total_lhs = vm::norm(&fam.sum());
    let total_rhs = fam.half_widths.iter().sum::<f64>().sin();
    if total_lhs <= total_rhs + EPS_GEOM {
        return Ok(None);
    }
    if n > MAX_ENUMERATION {
        return Err(BangError::BudgetExceeded { n });
    }
    let raw: Vec<&[f64]> = fam.vectors.iter().map(|v| v.w.as_slice()).collect();
    let mut found = None;
    for k in 2..=n {
        let stopped = crate::separability::for_each_combination(n, k, &mut |subset| {
            let mut sum = vec![0.0; raw[0].len()];
            let mut width = 0.0;
            for &i in subset {
                vm::axpy(&mut sum, 1.0, raw[i]);
                width += fam.half_widths[i];
            }
            let lhs = vm::norm(&sum);
            let rhs = width.sin();
            if lhs > rhs + EPS_GEOM {
                found = Some(SubsetViolation {
                    indices: subset.to_vec(),
                    lhs,
                    rhs,
                });
                true
            } else {
                false
            }
        });
        if stopped {
            return Ok(found);
        }
    }
    unreachable!("the full index set violates, so the search must find a subset");
}

/// Iterator over all 2^n signed sums of the family, in Gray-code order with
/// one vector update per step.
pub struct SignedSums {
    vectors: Vec<Vec<f64>>,
    sum: Vec<f64>,
    signs: Vec<i8>,
    index: u64,
    total: u64,
}

impl Iterator for SignedSums {
    type Item = (SignPattern, Vec<f64>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.index >= self.total {
            return None;
        }
        if self.index > 0 {
            let bit = self.index.trailing_zeros() as usize;
            self.signs[bit] = -self.signs[bit];
            vm::axpy(&mut self.sum, 2.0 * self.signs[bit] as f64, &self.vectors[bit]);
        }
        self.index += 1;
        Some((
            SignPattern::new(self.signs.clone()).expect("signs are +-1"),
            self.sum.clone(),
        ))
    }
}

/// All elements of the Bang set { sum of +-w_i }.
pub fn signed_sums(vectors: &[PlankVector]) -> Result<SignedSums, BangError> {
    if vectors.is_empty() {
        return Err(BangError::EmptyFamily);
    }
    if vectors.len() > MAX_ENUMERATION {
        return Err(BangError::BudgetExceeded { n: vectors.len() });
    }
    let raw: Vec<Vec<f64>> = vectors.iter().map(|v| v.w.clone()).collect();
    let mut sum = vec![0.0; raw[0].len()];
    for v in &raw {
        vm::axpy(&mut sum, 1.0, v);
    }
    Ok(SignedSums {
        sum,
        signs: vec![1; vectors.len()],
        vectors: raw,
        index: 0,
        total: 1 << vectors.len(),
    })
}

fn pattern_sum(vectors: &[PlankVector], pattern: &SignPattern) -> Vec<f64> {
    let mut x = vec![0.0; vectors[0].w.len()];
    for (v, &s) in vectors.iter().zip(pattern.signs()) {
        vm::axpy(&mut x, s as f64, &v.w);
    }
    x
}

/// True iff |t| >= |t + x - y| for every y in the Bang set, where x is the
/// signed sum selected by the pattern.
pub fn is_max_in_translate(
    t: &[f64],
    pattern: &SignPattern,
    vectors: &[PlankVector],
) -> Result<bool, BangError> {
    if pattern.len() != vectors.len() {
        return Err(BangError::PatternLength {
            pattern: pattern.len(),
            vectors: vectors.len(),
        });
    }
    let x = pattern_sum(vectors, pattern);
    let shifted = vm::add(t, &x);
    let nt = vm::norm(t);
    for (_, y) in signed_sums(vectors)? {
        if nt < vm::norm(&vm::sub(&shifted, &y)) - EPS_GEOM {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Membership in the cell of the pattern: <t, -e_i w_i> >= <w_i, w_i> for
/// every i. The cell is disjoint from every open plank.
pub fn in_bang_cell(
    t: &[f64],
    pattern: &SignPattern,
    vectors: &[PlankVector],
) -> Result<bool, BangError> {
    if pattern.len() != vectors.len() {
        return Err(BangError::PatternLength {
            pattern: pattern.len(),
            vectors: vectors.len(),
        });
    }
    Ok(vectors.iter().zip(pattern.signs()).all(|(v, &e)| {
        -(e as f64) * vm::dot(t, &v.w) >= vm::norm_sq(&v.w) - EPS_GEOM
    }))
}

/// Membership in the lens of points of the open unit ball that are farthest
/// in their pair translate: <t, -w> >= <w, w>, equivalently |t| >= |t + 2w|.
/// Both forms are evaluated; a confident disagreement is an internal error.
pub fn in_far_lens(t: &[f64], w: &[f64]) -> Result<bool, BangError> {
    let nt = vm::norm(t);
    if nt >= 1.0 {
        return Err(BangError::OutsideBall { norm: nt });
    }
    let halfspace = -vm::dot(t, w) - vm::norm_sq(w);
    let mut shifted = t.to_vec();
    vm::axpy(&mut shifted, 2.0, w);
    let norm_margin = nt - vm::norm(&shifted);
    let b1 = halfspace >= -EPS_GEOM;
    let b2 = norm_margin >= -EPS_GEOM;
    if b1 != b2 && halfspace.abs() > 1e-9 && norm_margin.abs() > 1e-9 {
        return Err(BangError::DualFormDisagreement {
            halfspace,
            norm: norm_margin,
        });
    }
    Ok(b1)
}
