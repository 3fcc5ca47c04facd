//! Deciding whether a cap family is separable by an avoiding great sphere.
//!
//! A great sphere with pole n avoids cap i exactly when |<n, c_i>| > sin a_i,
//! and it splits the family when the signs of <n, c_i> are not all equal.
//! Equivalently, writing D'_i for the open dual cap of cap i, the family is
//! separable iff some non-constant sign choice e makes the intersection of
//! the caps e_i D'_i non-empty. Each sign choice is probed by maximizing the
//! concave margin
//!
//! ```text
//! g(x) = min_i ( <x, e_i c_i> - sin a_i )
//! ```
//!
//! over the unit ball: a positive value at a unit point certifies the
//! pattern feasible, a certified-negative maximum rules it out. The solver
//! combines an exact two-cone bound (closed form for any pair of the
//! constraints, an upper bound on the margin and an infeasibility
//! certificate when negative), candidate evaluation, projected
//! supergradient ascent, and an active-set polish for sharp margins.

use std::f64::consts::FRAC_PI_2;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sphere::{Cap, GeomError, Instance, Point};
use crate::vecmath as vm;
use crate::EPS_FEAS;

/// Separability search enumerates 2^{n-1} - 1 sign patterns.
pub const MAX_CAPS_FOR_SEARCH: usize = 30;

#[derive(Debug, Error)]
pub enum SepError {
    #[error("sign pattern length {pattern} does not match cap count {caps}")]
    PatternLength { pattern: usize, caps: usize },
    #[error("signs must be +1 or -1")]
    InvalidSigns,
    #[error("pattern must be nonempty")]
    EmptyPattern,
    #[error("separability search supports at most {MAX_CAPS_FOR_SEARCH} caps, got {0}")]
    TooManyCaps(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// One sign per cap. Verdict witnesses store the canonical form with the
/// first sign positive; the raw form is allowed elsewhere (signed sums need
/// all 2^n patterns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignPattern {
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn new(signs: Vec<i8>) -> Result<Self, SepError> {
        if signs.is_empty() {
            return Err(SepError::EmptyPattern);
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(SepError::InvalidSigns);
        }
        Ok(Self { signs })
    }

    pub fn all_plus(n: usize) -> Self {
        Self { signs: vec![1; n] }
    }

    /// Pattern with sign -1 exactly at the given indices.
    pub fn with_negatives(n: usize, neg: &[usize]) -> Self {
        let mut signs = vec![1i8; n];
        for &i in neg {
            signs[i] = -1;
        }
        Self { signs }
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.signs.iter().all(|&s| s == self.signs[0])
    }

    pub fn negated(&self) -> Self {
        Self {
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }

    /// Flips all signs if needed so the first one is +1.
    pub fn canonical(self) -> Self {
        if self.signs[0] < 0 {
            self.negated()
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparabilityStatus {
    Separable,
    NonSeparable,
    Indeterminate,
}

/// Outcome of the separability search. `best_margin` is the largest margin
/// seen over all probed patterns; `None` when no non-constant pattern exists
/// (a single cap is vacuously non-separable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityVerdict {
    pub status: SeparabilityStatus,
    pub witness_normal: Option<Point>,
    pub witness_pattern: Option<SignPattern>,
    pub best_margin: Option<f64>,
}

/// Open cap concentric with `c` of radius pi/2 - c.radius. A unit vector
/// lies in the dual iff its open hemisphere covers `c`. Involutive, with the
/// open/closed flag toggled and restored on the second application.
pub fn dual_cap(c: &Cap) -> Cap {
    Cap {
        center: c.center.clone(),
        radius: FRAC_PI_2 - c.radius,
        open: !c.open,
    }
}

/// Knobs for the margin-maximization solver.
#[derive(Debug, Clone)]
pub struct SolverParams {
    pub max_iters: usize,
    pub restarts: usize,
    pub step_scale: f64,
    /// Iterations without improvement before a restart is cut short.
    pub stall_window: usize,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            restarts: 8,
            step_scale: 0.5,
            stall_window: 300,
            seed: 0,
        }
    }
}

/// min_i ( <x, a_i> - s_i )
fn margin_at(x: &[f64], a: &[Vec<f64>], s: &[f64]) -> f64 {
    a.iter()
        .zip(s)
        .map(|(ai, si)| vm::dot(x, ai) - si)
        .fold(f64::INFINITY, f64::min)
}

fn argmin_term(x: &[f64], a: &[Vec<f64>], s: &[f64]) -> usize {
    let mut best = 0;
    let mut val = f64::INFINITY;
    for (i, (ai, si)) in a.iter().zip(s).enumerate() {
        let t = vm::dot(x, ai) - si;
        if t < val {
            val = t;
            best = i;
        }
    }
    best
}

/// Exact maximum of min(<n,a> - sa, <n,b> - sb) over unit n, with a point
/// attaining it. Candidates are the peaks n = a, n = b and the balanced
/// crossing where both terms agree; the crossing margin solves a quadratic
/// obtained from |n| = 1 in the span of a and b.
fn two_cone_margin(a: &[f64], sa: f64, b: &[f64], sb: f64) -> (f64, Vec<f64>) {
    let dot = vm::clamp_unit(vm::dot(a, b));
    let at_a = (1.0 - sa).min(dot - sb);
    let at_b = (dot - sa).min(1.0 - sb);
    let (mut best, mut point) = if at_a >= at_b {
        (at_a, a.to_vec())
    } else {
        (at_b, b.to_vec())
    };
    if 1.0 - dot > 1e-12 {
        let qa = 2.0 * (1.0 - dot);
        let qb = 2.0 * (sa + sb) * (1.0 - dot);
        let qc = sa * sa + sb * sb - 2.0 * sa * sb * dot - (1.0 - dot * dot);
        let mut disc = qb * qb - 4.0 * qa * qc;
        // tangent crossings compute to a tiny negative discriminant
        if disc < 0.0 && disc > -1e-12 * (qb * qb + (4.0 * qa * qc).abs()).max(1e-300) {
            disc = 0.0;
        }
        if disc >= 0.0 {
            let m = (-qb + disc.sqrt()) / (2.0 * qa);
            if m > best {
                // the crossing value stands on its own; the point is only a
                // candidate for evaluation and may fail to reconstruct at
                // the numerical edges
                best = m;
                let p = m + sa;
                let q = m + sb;
                let denom = 1.0 - dot * dot;
                let n = if denom > 1e-12 {
                    let x = (p - q * dot) / denom;
                    let y = (q - p * dot) / denom;
                    let mut n = vm::scale(a, x);
                    vm::axpy(&mut n, y, b);
                    vm::normalized(&n)
                } else {
                    // b = -a: any direction orthogonal to a completes the
                    // balanced point at height p along a
                    orthogonal_completion(a, p)
                };
                if let Some(n) = n {
                    point = n;
                }
            }
        }
    }
    (best, point)
}

/// Unit vector n with <n, a> = h, built from a deterministic direction
/// orthogonal to the unit vector a.
fn orthogonal_completion(a: &[f64], h: f64) -> Option<Vec<f64>> {
    let h = h.clamp(-1.0, 1.0);
    let len = a.len();
    let mut v = None;
    for k in 0..len {
        let mut e = vec![0.0; len];
        e[k] = 1.0;
        let r = vm::reject(&e, a);
        if let Some(u) = vm::normalized(&r) {
            v = Some(u);
            break;
        }
    }
    let u = v?;
    let mut n = vm::scale(a, h);
    vm::axpy(&mut n, (1.0 - h * h).max(0.0).sqrt(), &u);
    vm::normalized(&n)
}

/// Closed-form candidate for the point where the given constraints are all
/// tight and |n| = 1: solve the Gram system for the multipliers as an affine
/// function of the common margin m, then pick the larger root of |n|^2 = 1.
fn active_set_candidate(active: &[usize], a: &[Vec<f64>], s: &[f64]) -> Option<Vec<f64>> {
    let k = active.len();
    if k < 2 || k > 8 {
        return None;
    }
    let gram: Vec<Vec<f64>> = active
        .iter()
        .map(|&i| active.iter().map(|&j| vm::dot(&a[i], &a[j])).collect())
        .collect();
    let ones = vec![1.0; k];
    let svec: Vec<f64> = active.iter().map(|&i| s[i]).collect();
    let u = vm::solve(&gram, &ones)?;
    let v = vm::solve(&gram, &svec)?;
    let qa: f64 = u.iter().sum();
    let qb: f64 = 2.0 * v.iter().sum::<f64>();
    let qc: f64 = vm::dot(&svec, &v) - 1.0;
    if qa.abs() < 1e-14 {
        return None;
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let m = (-qb + disc.sqrt()) / (2.0 * qa);
    let mut n = vec![0.0; a[0].len()];
    for (t, &i) in active.iter().enumerate() {
        vm::axpy(&mut n, m * u[t] + v[t], &a[i]);
    }
    vm::normalized(&n)
}

/// Indices whose terms sit within `tol` of the minimum at x.
fn active_set(x: &[f64], a: &[Vec<f64>], s: &[f64], tol: f64) -> Vec<usize> {
    let m = margin_at(x, a, s);
    a.iter()
        .zip(s)
        .enumerate()
        .filter(|(_, (ai, si))| vm::dot(x, ai) - *si <= m + tol)
        .map(|(i, _)| i)
        .collect()
}

struct Probe {
    /// Best margin at a unit point (sound feasibility evidence).
    best_unit: f64,
    best_point: Option<Vec<f64>>,
    /// Best value seen anywhere in the ball (estimates the concave maximum).
    best_ball: f64,
}

fn consider_unit(probe: &mut Probe, x: &[f64], a: &[Vec<f64>], s: &[f64]) {
    let v = margin_at(x, a, s);
    if v > probe.best_unit {
        probe.best_unit = v;
        probe.best_point = Some(x.to_vec());
    }
    if v > probe.best_ball {
        probe.best_ball = v;
    }
}

/// Polish by re-solving on the active set at the current best point,
/// repeating while it keeps improving.
fn polish(probe: &mut Probe, a: &[Vec<f64>], s: &[f64]) {
    for _ in 0..4 {
        let Some(x) = probe.best_point.clone() else {
            return;
        };
        let mut improved = false;
        for tol in [1e-9, 1e-6, 1e-3] {
            let act = active_set(&x, a, s, tol);
            let candidate = if act.len() == 1 {
                Some(a[act[0]].clone())
            } else {
                active_set_candidate(&act, a, s)
            };
            if let Some(n) = candidate {
                let before = probe.best_unit;
                consider_unit(probe, &n, a, s);
                if probe.best_unit > before + 1e-15 {
                    improved = true;
                }
            }
        }
        if !improved {
            return;
        }
    }
}

fn ascend(
    probe: &mut Probe,
    start: &[f64],
    a: &[Vec<f64>],
    s: &[f64],
    params: &SolverParams,
) {
    let mut x = start.to_vec();
    let mut stall = 0usize;
    let mut local_best = f64::NEG_INFINITY;
    for k in 1..=params.max_iters {
        let v = margin_at(&x, a, s);
        if v > probe.best_ball {
            probe.best_ball = v;
        }
        let nx = vm::norm(&x);
        if nx > 1e-12 {
            let unit = vm::scale(&x, 1.0 / nx);
            consider_unit(probe, &unit, a, s);
        }
        if v > local_best + 1e-14 {
            local_best = v;
            stall = 0;
        } else {
            stall += 1;
            if stall >= params.stall_window {
                break;
            }
        }
        let i = argmin_term(&x, a, s);
        let step = params.step_scale / (k as f64).sqrt();
        vm::axpy(&mut x, step, &a[i]);
        let n2 = vm::norm_sq(&x);
        if n2 > 1.0 {
            let inv = 1.0 / n2.sqrt();
            for c in x.iter_mut() {
                *c *= inv;
            }
        }
    }
}

/// Feasibility probe for one sign pattern: returns the margin estimate and,
/// when it exceeds [`EPS_FEAS`], a unit witness n with e_i <n, c_i> > sin a_i
/// for every cap (the center of a hemisphere arrangement realizing the
/// pattern's dual-cap intersection).
pub fn pattern_feasible(
    caps: &[Cap],
    pattern: &SignPattern,
    params: &SolverParams,
) -> Result<(f64, Option<Point>), SepError> {
    if pattern.len() != caps.len() {
        return Err(SepError::PatternLength {
            pattern: pattern.len(),
            caps: caps.len(),
        });
    }
    let a: Vec<Vec<f64>> = caps
        .iter()
        .zip(pattern.signs())
        .map(|(c, &e)| vm::scale(c.center.coords(), e as f64))
        .collect();
    let s: Vec<f64> = caps.iter().map(|c| c.radius.sin()).collect();
    Ok(probe_pattern(&a, &s, params))
}

fn probe_pattern(a: &[Vec<f64>], s: &[f64], params: &SolverParams) -> (f64, Option<Point>) {
    let n = a.len();
    let mut ub = f64::INFINITY;
    let mut probe = Probe {
        best_unit: f64::NEG_INFINITY,
        best_point: None,
        best_ball: f64::NEG_INFINITY,
    };
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        ub = ub.min(1.0 - s[i]);
        candidates.push(a[i].clone());
        for j in i + 1..n {
            let (m2, point) = two_cone_margin(&a[i], s[i], &a[j], s[j]);
            ub = ub.min(m2);
            candidates.push(point);
        }
    }
    if ub <= EPS_FEAS {
        // the pairwise maximum bounds the full margin from above, so the
        // pattern cannot be feasible; when the bound is decisively negative
        // it certifies infeasibility, otherwise it lands in the gray band
        return (ub, None);
    }
    for c in &candidates {
        consider_unit(&mut probe, c, a, s);
    }
    // balanced candidates for every small constraint subset; the optimum is
    // balanced on its active set, so for small families this is exact
    if n <= 12 {
        let k_max = n.min(a[0].len() + 1).min(6);
        for k in 3..=k_max {
            for_each_combination(n, k, &mut |subset| {
                if let Some(c) = active_set_candidate(subset, a, s) {
                    consider_unit(&mut probe, &c, a, s);
                }
                false
            });
        }
    }
    polish(&mut probe, a, s);
    // candidate evaluation is exact when it meets the pairwise bound
    if probe.best_unit >= ub - 1e-12 {
        return finish(probe, ub, a, s);
    }
    if probe.best_unit > EPS_FEAS {
        return finish(probe, ub, a, s);
    }
    let mut starts: Vec<(f64, Vec<f64>)> = candidates
        .into_iter()
        .map(|c| (margin_at(&c, a, s), c))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_cafe);
    for _ in 0..params.restarts {
        let r = crate::sphere::random_unit_vector(a[0].len(), &mut rng);
        starts.push((margin_at(&r, a, s), r));
    }
    // rank starts by value, ascend from the most promising ones
    starts.sort_by(|x, y| y.0.total_cmp(&x.0));
    for (_, start) in starts.iter().take(params.restarts) {
        ascend(&mut probe, start, a, s, params);
        polish(&mut probe, a, s);
        if probe.best_unit > EPS_FEAS {
            break;
        }
    }
    finish(probe, ub, a, s)
}

fn finish(probe: Probe, ub: f64, a: &[Vec<f64>], s: &[f64]) -> (f64, Option<Point>) {
    if probe.best_unit > EPS_FEAS {
        let x = probe.best_point.expect("feasible probe has a point");
        let margin = margin_at(&x, a, s);
        let witness = Point::normalized(x).expect("witness is a unit vector");
        return (margin, Some(witness));
    }
    // infeasible or gray band: report the tightest estimate of the maximum,
    // never above the exact pairwise bound
    let est = probe.best_ball.max(probe.best_unit);
    (est.min(ub), None)
}

/// Pairwise margin table reused across the pattern sweep: entry for (i, j)
/// holds the exact two-cone margin for equal and for opposite signs.
struct PairTable {
    same: Vec<Vec<f64>>,
    diff: Vec<Vec<f64>>,
    singleton: Vec<f64>,
}

fn build_pair_table(centers: &[Vec<f64>], s: &[f64]) -> PairTable {
    let n = centers.len();
    let mut same = vec![vec![0.0; n]; n];
    let mut diff = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let (ms, _) = two_cone_margin(&centers[i], s[i], &centers[j], s[j]);
            let (md, _) =
                two_cone_margin(&centers[i], s[i], &vm::neg(&centers[j]), s[j]);
            same[i][j] = ms;
            diff[i][j] = md;
        }
    }
    PairTable {
        same,
        diff,
        singleton: s.iter().map(|si| 1.0 - si).collect(),
    }
}

impl PairTable {
    fn upper_bound(&self, signs: &[i8]) -> f64 {
        let n = signs.len();
        let mut ub = f64::INFINITY;
        for i in 0..n {
            ub = ub.min(self.singleton[i]);
            for j in i + 1..n {
                let m = if signs[i] == signs[j] {
                    self.same[i][j]
                } else {
                    self.diff[i][j]
                };
                ub = ub.min(m);
            }
        }
        ub
    }
}

/// Search over all non-constant sign patterns (first sign fixed +1,
/// ascending count of negatives) for an avoiding, separating great sphere.
///
/// Separable as soon as one pattern is feasible beyond [`EPS_FEAS`];
/// non-separable when every pattern is certified below -[`EPS_FEAS`];
/// indeterminate when some pattern lands in the gray band.
pub fn check_nonseparable(
    inst: &Instance,
    params: &SolverParams,
) -> Result<SeparabilityVerdict, SepError> {
    let n = inst.caps.len();
    if n > MAX_CAPS_FOR_SEARCH {
        return Err(SepError::TooManyCaps(n));
    }
    if n == 1 {
        return Ok(SeparabilityVerdict {
            status: SeparabilityStatus::NonSeparable,
            witness_normal: None,
            witness_pattern: None,
            best_margin: None,
        });
    }
    let centers: Vec<Vec<f64>> = inst.caps.iter().map(|c| c.center.coords().to_vec()).collect();
    let s: Vec<f64> = inst.caps.iter().map(|c| c.radius.sin()).collect();
    let table = build_pair_table(&centers, &s);

    let mut best_margin = f64::NEG_INFINITY;
    let mut gray = false;

    // negatives are chosen among indices 1..n so the first sign stays +1
    for weight in 1..n {
        let mut found: Option<SeparabilityVerdict> = None;
        for_each_combination(n - 1, weight, &mut |chosen| {
            let neg: Vec<usize> = chosen.iter().map(|&i| i + 1).collect();
            let pattern = SignPattern::with_negatives(n, &neg);
            let ub = table.upper_bound(pattern.signs());
            if ub < -EPS_FEAS {
                best_margin = best_margin.max(ub);
                return false;
            }
            let a: Vec<Vec<f64>> = centers
                .iter()
                .zip(pattern.signs())
                .map(|(c, &e)| vm::scale(c, e as f64))
                .collect();
            let (margin, witness) = probe_pattern(&a, &s, params);
            best_margin = best_margin.max(margin);
            if margin > EPS_FEAS {
                let w = witness.expect("feasible probe returns a witness");
                debug_assert!(pattern
                    .signs()
                    .iter()
                    .zip(&centers)
                    .zip(&s)
                    .all(|((&e, c), si)| e as f64 * vm::dot(w.coords(), c) - si > EPS_FEAS));
                found = Some(SeparabilityVerdict {
                    status: SeparabilityStatus::Separable,
                    witness_normal: Some(w),
                    witness_pattern: Some(pattern),
                    best_margin: Some(margin),
                });
                return true;
            }
            if margin >= -EPS_FEAS {
                gray = true;
            }
            false
        });
        if let Some(v) = found {
            return Ok(v);
        }
    }
    Ok(SeparabilityVerdict {
        status: if gray {
            SeparabilityStatus::Indeterminate
        } else {
            SeparabilityStatus::NonSeparable
        },
        witness_normal: None,
        witness_pattern: None,
        best_margin: Some(best_margin),
    })
}

/// Visits every k-subset of 0..n in lexicographic order; the callback
/// returns true to stop early. Returns whether the walk was stopped.
pub(crate) fn for_each_combination(
    n: usize,
    k: usize,
    f: &mut impl FnMut(&[usize]) -> bool,
) -> bool {
    if k > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if f(&idx) {
            return true;
        }
        // advance the rightmost index that can still move
        let mut i = k;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return false;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{geodesic_point, Cap, Instance, Point};
    use std::f64::consts::{FRAC_PI_6, PI};

    fn e(k: usize) -> Point {
        Point::basis(3, k)
    }

    #[test]
    fn combinations_cover_all_subsets() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, &mut |c| {
            seen.push(c.to_vec());
            false
        });
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 1]);
        assert_eq!(seen[5], vec![2, 3]);
    }

    #[test]
    fn dual_cap_is_involutive() {
        let c = Cap::new(e(2), FRAC_PI_6).unwrap();
        let d = dual_cap(&c);
        assert!((d.radius - PI / 3.0).abs() < 1e-15);
        assert!(d.open);
        let dd = dual_cap(&d);
        assert_eq!(dd, c);

        let fixed = Cap::new(e(0), PI / 4.0).unwrap();
        assert!((dual_cap(&fixed).radius - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn contradictory_pattern_is_infeasible() {
        let caps = vec![
            Cap::new(e(2), 0.3).unwrap(),
            Cap::new(e(2), 0.25).unwrap(),
        ];
        let pat = SignPattern::new(vec![1, -1]).unwrap();
        let (margin, witness) =
            pattern_feasible(&caps, &pat, &SolverParams::default()).unwrap();
        assert!(margin <= 0.0);
        assert!(witness.is_none());
        // exact value: -(sin a1 + sin a2)/2
        let expect = -(0.3f64.sin() + 0.25f64.sin()) / 2.0;
        assert!((margin - expect).abs() < 1e-9);
    }

    #[test]
    fn antipodal_caps_are_separable() {
        let alpha = PI / 12.0;
        let caps = vec![
            Cap::new(e(2), alpha).unwrap(),
            Cap::new(e(2).antipode(), alpha).unwrap(),
        ];
        let pat = SignPattern::new(vec![1, -1]).unwrap();
        let (margin, witness) =
            pattern_feasible(&caps, &pat, &SolverParams::default()).unwrap();
        assert!((margin - (1.0 - alpha.sin())).abs() < 1e-9);
        let w = witness.unwrap();
        assert!(vm::dot(w.coords(), e(2).coords()) > 0.99);
    }

    #[test]
    fn single_pattern_margin_is_exact() {
        let alpha = 0.4;
        let caps = vec![Cap::new(e(0), alpha).unwrap()];
        let pat = SignPattern::all_plus(1);
        let (margin, witness) =
            pattern_feasible(&caps, &pat, &SolverParams::default()).unwrap();
        assert!((margin - (1.0 - alpha.sin())).abs() < 1e-12);
        assert_eq!(witness.unwrap(), e(0));
    }

    #[test]
    fn sign_symmetry_of_margins() {
        let caps = vec![
            Cap::new(e(0), 0.3).unwrap(),
            Cap::new(geodesic_point(&e(0), e(1).coords(), 1.2), 0.2).unwrap(),
            Cap::new(e(2), 0.25).unwrap(),
        ];
        let params = SolverParams::default();
        for signs in [[1, -1, 1], [1, 1, -1], [1, -1, -1]] {
            let pat = SignPattern::new(signs.to_vec()).unwrap();
            let (m1, _) = pattern_feasible(&caps, &pat, &params).unwrap();
            let (m2, _) = pattern_feasible(&caps, &pat.negated(), &params).unwrap();
            assert!(
                (m1 - m2).abs() < 1e-7,
                "margins differ: {m1} vs {m2} for {signs:?}"
            );
        }
    }

    #[test]
    fn single_cap_is_vacuously_nonseparable() {
        let inst = Instance::new(2, vec![Cap::new(e(0), 0.3).unwrap()]).unwrap();
        let v = check_nonseparable(&inst, &SolverParams::default()).unwrap();
        assert_eq!(v.status, SeparabilityStatus::NonSeparable);
        assert!(v.best_margin.is_none());
    }

    #[test]
    fn antipodal_pair_verdict_with_witness() {
        let alpha = PI / 12.0;
        let inst = Instance::new(
            2,
            vec![
                Cap::new(e(2), alpha).unwrap(),
                Cap::new(e(2).antipode(), alpha).unwrap(),
            ],
        )
        .unwrap();
        let v = check_nonseparable(&inst, &SolverParams::default()).unwrap();
        assert_eq!(v.status, SeparabilityStatus::Separable);
        let w = v.witness_normal.unwrap();
        assert!(vm::dot(w.coords(), e(2).coords()).abs() > 0.99);
        let pat = v.witness_pattern.unwrap();
        assert!(!pat.is_constant());
        // soundness of the witness
        for (cap, &eps) in inst.caps.iter().zip(pat.signs()) {
            let m = eps as f64 * vm::dot(w.coords(), cap.center.coords()) - cap.radius.sin();
            assert!(m > EPS_FEAS);
        }
    }

    #[test]
    fn overlapping_chain_is_nonseparable() {
        // three caps along the equator, consecutive pairs overlapping
        let alpha = 0.25;
        let step = 1.6 * alpha; // less than 2 alpha: neighbors overlap
        let caps: Vec<Cap> = (0..3)
            .map(|i| {
                let c = geodesic_point(&e(0), e(1).coords(), step * i as f64);
                Cap::new(c, alpha).unwrap()
            })
            .collect();
        let inst = Instance::new(2, caps).unwrap();
        let v = check_nonseparable(&inst, &SolverParams::default()).unwrap();
        assert_eq!(v.status, SeparabilityStatus::NonSeparable);
        assert!(v.best_margin.unwrap() < -EPS_FEAS);
    }

    #[test]
    fn verdict_is_rotation_invariant() {
        let alpha = PI / 12.0;
        let inst = Instance::new(
            2,
            vec![
                Cap::new(e(2), alpha).unwrap(),
                Cap::new(e(2).antipode(), alpha).unwrap(),
            ],
        )
        .unwrap();
        let params = SolverParams::default();
        let base = check_nonseparable(&inst, &params).unwrap().status;
        for seed in 0..5 {
            let rot = crate::sphere::random_rotation(2, seed);
            let rotated = crate::sphere::apply_rotation(&rot, &inst);
            let v = check_nonseparable(&rotated, &params).unwrap();
            assert_eq!(v.status, base);
        }
    }

    #[test]
    fn too_many_caps_is_rejected() {
        let caps: Vec<Cap> = (0..31).map(|_| Cap::new(e(0), 0.01).unwrap()).collect();
        let inst = Instance::new(2, caps).unwrap();
        assert!(matches!(
            check_nonseparable(&inst, &SolverParams::default()),
            Err(SepError::TooManyCaps(31))
        ));
    }
}
