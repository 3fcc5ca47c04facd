//! Independent brute-force checks: sampling containment oracles, a grid
//! scan over candidate avoiding great spheres (d = 2), a minimal enclosing
//! cap estimator for tightness experiments, and a property harness for the
//! max-in-translate implication on random plank families.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bang::{in_bang_cell, is_max_in_translate, BangError};
use crate::separability::SignPattern;
use crate::sphere::{
    geodesic_point, random_point_in_cap, random_point_in_zone, random_unit_vector,
    spherical_distance, Cap, GeomError, Instance, PlankVector, Point, Zone,
};
use crate::vecmath as vm;
use crate::{EPS_FEAS, EPS_GEOM};

/// Direction grids beyond this size are refused.
pub const MAX_GRID_RESOLUTION: usize = 10_000_000;

const MAX_STORED_WITNESSES: usize = 16;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid separability runs on the 2-sphere only, got dim {0}")]
    WrongDimension(usize),
    #[error("grid resolution {0} exceeds the {MAX_GRID_RESOLUTION} budget")]
    ResolutionTooLarge(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Bang(#[from] BangError),
}

/// Outcome of a brute-force check: pass iff no witness was found.
/// `witnesses` stores at most the first few counterexamples;
/// `witness_count` is the full tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checked: usize,
    pub witnesses: Vec<Vec<f64>>,
    pub witness_count: usize,
    pub pass: bool,
    pub max_violation: f64,
}

impl OracleReport {
    fn new() -> Self {
        Self {
            checked: 0,
            witnesses: Vec::new(),
            witness_count: 0,
            pass: true,
            max_violation: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, violation: f64, witness: impl FnOnce() -> Vec<f64>) {
        self.checked += 1;
        if violation > self.max_violation {
            self.max_violation = violation;
        }
        if violation > EPS_GEOM {
            self.witness_count += 1;
            self.pass = false;
            if self.witnesses.len() < MAX_STORED_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }
}

/// Draws area-uniform points of the inner cap and reports any that land
/// outside the outer cap beyond [`EPS_GEOM`].
pub fn sampled_cap_containment(
    outer: &Cap,
    inner: &Cap,
    samples: usize,
    seed: u64,
) -> Result<OracleReport, OracleError> {
    spherical_distance(&outer.center, &inner.center)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport::new();
    for _ in 0..samples {
        let p = random_point_in_cap(inner, &mut rng);
        let violation = spherical_distance(&outer.center, &p)? - outer.radius;
        report.record(violation, || p.coords().to_vec());
    }
    Ok(report)
}

/// Same check for zones, sampling the inner zone by rejection from the
/// sphere-uniform law.
pub fn sampled_zone_containment(
    outer: &Zone,
    inner: &Zone,
    samples: usize,
    seed: u64,
) -> Result<OracleReport, OracleError> {
    spherical_distance(&outer.normal, &inner.normal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sin_outer = outer.half_width.sin();
    let mut report = OracleReport::new();
    for _ in 0..samples {
        let p = random_point_in_zone(inner, &mut rng);
        let violation = vm::dot(p.coords(), outer.normal.coords()).abs() - sin_outer;
        report.record(violation, || p.coords().to_vec());
    }
    Ok(report)
}

/// Near-uniform deterministic directions on the 2-sphere (golden-angle
/// spiral).
pub fn fibonacci_directions(resolution: usize) -> impl Iterator<Item = [f64; 3]> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..resolution).map(move |k| {
        let z = 1.0 - 2.0 * (k as f64 + 0.5) / resolution as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden_angle * k as f64;
        [r * phi.cos(), r * phi.sin(), z]
    })
}

/// Exhaustive scan for an avoiding, separating great sphere: a grid
/// direction n is a witness when min_i |<n, c_i>| - sin a_i exceeds
/// [`EPS_FEAS`] and the signs of <n, c_i> are not all equal. Pass supports
/// non-separability.
pub fn grid_separability(
    inst: &Instance,
    resolution: usize,
) -> Result<OracleReport, OracleError> {
    if inst.dim != 2 {
        return Err(OracleError::WrongDimension(inst.dim));
    }
    if resolution > MAX_GRID_RESOLUTION {
        return Err(OracleError::ResolutionTooLarge(resolution));
    }
    let centers: Vec<[f64; 3]> = inst
        .caps
        .iter()
        .map(|c| {
            let s = c.center.coords();
            [s[0], s[1], s[2]]
        })
        .collect();
    let sines: Vec<f64> = inst.caps.iter().map(|c| c.radius.sin()).collect();
    let mut report = OracleReport::new();
    report.checked = resolution;
    for n in fibonacci_directions(resolution) {
        let mut margin = f64::INFINITY;
        let mut pos = false;
        let mut neg = false;
        for (c, s) in centers.iter().zip(&sines) {
            let d = n[0] * c[0] + n[1] * c[1] + n[2] * c[2];
            if d >= 0.0 {
                pos = true;
            } else {
                neg = true;
            }
            let m = d.abs() - s;
            if m < margin {
                margin = m;
            }
        }
        if pos && neg && margin > report.max_violation {
            report.max_violation = margin;
        }
        if pos && neg && margin > EPS_FEAS {
            report.witness_count += 1;
            report.pass = false;
            if report.witnesses.len() < MAX_STORED_WITNESSES {
                report.witnesses.push(n.to_vec());
            }
        }
    }
    Ok(report)
}

fn enclosing_objective(c: &Point, caps: &[Cap]) -> f64 {
    caps.iter()
        .map(|cap| spherical_distance(c, &cap.center).unwrap() + cap.radius)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Upper-bound estimate of the smallest cap containing all input caps:
/// candidate seeding (cap centers and pairwise balanced points on
/// connecting geodesics) followed by geodesic descent on the max objective.
/// The returned radius is monotone in the best-so-far sense and always an
/// upper bound on the optimum.
pub fn minimal_enclosing_cap_estimate(
    caps: &[Cap],
    iters: usize,
    restarts: usize,
    seed: u64,
) -> (Point, f64) {
    assert!(!caps.is_empty());
    let len = caps[0].center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<Point> = caps.iter().map(|c| c.center.clone()).collect();
    for i in 0..caps.len() {
        for j in i + 1..caps.len() {
            let (a, b) = (&caps[i], &caps[j]);
            let d = spherical_distance(&a.center, &b.center).unwrap();
            if d < 1e-12 {
                continue;
            }
            // point equalizing the two reach values along the geodesic
            let t = ((d + b.radius - a.radius) / 2.0).clamp(0.0, d);
            let dir = vm::reject(b.center.coords(), a.center.coords());
            if let Some(u) = vm::normalized(&dir) {
                candidates.push(geodesic_point(&a.center, &u, t));
            }
        }
    }
    let mut best = candidates[0].clone();
    let mut best_val = enclosing_objective(&best, caps);
    for c in &candidates[1..] {
        let v = enclosing_objective(c, caps);
        if v < best_val {
            best_val = v;
            best = c.clone();
        }
    }
    candidates.sort_by(|a, b| {
        enclosing_objective(a, caps).total_cmp(&enclosing_objective(b, caps))
    });
    let mut starts: Vec<Point> = candidates.into_iter().take(restarts).collect();
    while starts.len() < restarts {
        starts.push(Point::new(random_unit_vector(len, &mut rng)).unwrap());
    }
    for start in starts {
        let mut c = start;
        for k in 1..=iters {
            let (far_idx, _) = caps
                .iter()
                .enumerate()
                .map(|(i, cap)| {
                    (i, spherical_distance(&c, &cap.center).unwrap() + cap.radius)
                })
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            let target = &caps[far_idx].center;
            let dir = vm::reject(target.coords(), c.coords());
            let Some(u) = vm::normalized(&dir) else {
                break;
            };
            let step = 0.3 / (k as f64).sqrt();
            c = geodesic_point(&c, &u, step);
            let v = enclosing_objective(&c, caps);
            if v < best_val {
                best_val = v;
                best = c.clone();
            }
        }
    }
    (best, best_val)
}

/// Uniform point in the open unit ball of the given dimension.
fn random_ball_point<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    let u = random_unit_vector(len, rng);
    let r: f64 = rng.gen::<f64>().powf(1.0 / len as f64) * 0.999;
    vm::scale(&u, r)
}

/// Property harness for the covering argument's key implication: whenever a
/// point has maximal norm within its translate of the signed-sum set, it
/// lies in the corresponding halfspace cell and outside every open plank.
///
/// Random families (up to six vectors), random sign patterns, and sampled
/// points; sampling mixes uniform ball points with points biased toward the
/// pattern's cell so the implication fires often. `checked` counts the
/// max-in-translate hits actually verified.
pub fn bang_cell_harness(
    families: usize,
    samples_per_family: usize,
    seed: u64,
) -> Result<OracleReport, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport::new();
    for _ in 0..families {
        let n = 1 + rng.gen::<usize>() % 6;
        let len = 2 + rng.gen::<usize>() % 3;
        let vectors: Vec<PlankVector> = (0..n)
            .map(|_| {
                let u = random_unit_vector(len, &mut rng);
                let norm = 0.05 + 0.9 * rng.gen::<f64>();
                PlankVector::new(vm::scale(&u, norm)).unwrap()
            })
            .collect();
        for _ in 0..samples_per_family {
            let signs: Vec<i8> = (0..n)
                .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                .collect();
            let pattern = SignPattern::new(signs).unwrap();
            let t = if rng.gen::<bool>() {
                random_ball_point(len, &mut rng)
            } else {
                // bias toward the opposite of the pattern sum, where the
                // cell tends to live
                let mut x = vec![0.0; len];
                for (v, &s) in vectors.iter().zip(pattern.signs()) {
                    vm::axpy(&mut x, -(s as f64), &v.w);
                }
                let nx = vm::norm(&x).max(1e-9);
                let r: f64 = rng.gen::<f64>() * 0.98;
                vm::scale(&x, r / nx)
            };
            if !is_max_in_translate(&t, &pattern, &vectors)? {
                continue;
            }
            let mut breach = f64::NEG_INFINITY;
            if !in_bang_cell(&t, &pattern, &vectors)? {
                for (v, &s) in vectors.iter().zip(pattern.signs()) {
                    breach =
                        breach.max(vm::norm_sq(&v.w) + (s as f64) * vm::dot(&t, &v.w));
                }
            }
            for v in &vectors {
                breach = breach.max(vm::norm_sq(&v.w) - vm::dot(&t, &v.w).abs());
            }
            report.record(breach, || t.clone());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::geodesic_point;
    use std::f64::consts::{FRAC_PI_6, PI};

    fn e(k: usize) -> Point {
        Point::basis(3, k)
    }

    #[test]
    fn identical_caps_contain_themselves() {
        let c = Cap::new(e(0), FRAC_PI_6).unwrap();
        let r = sampled_cap_containment(&c, &c, 5_000, 1).unwrap();
        assert!(r.pass);
        assert!(r.witnesses.is_empty());
        assert!(r.max_violation <= EPS_GEOM);
    }

    #[test]
    fn nested_caps_with_slack_pass() {
        let outer = Cap::new(e(0), 0.5).unwrap();
        let inner_center = geodesic_point(&e(0), e(1).coords(), 0.19);
        let inner = Cap::new(inner_center, 0.3).unwrap();
        // slack 0.01 radians
        let r = sampled_cap_containment(&outer, &inner, 100_000, 2).unwrap();
        assert!(r.pass, "max violation {}", r.max_violation);
    }

    #[test]
    fn shrunk_outer_cap_fails_with_witness() {
        let outer = Cap::new(e(0), 0.5).unwrap();
        let inner_center = geodesic_point(&e(0), e(1).coords(), 0.21);
        let inner = Cap::new(inner_center, 0.3).unwrap();
        // containment short by 0.01 radians
        let r = sampled_cap_containment(&outer, &inner, 100_000, 3).unwrap();
        assert!(!r.pass);
        assert!(r.witness_count >= 1);
        assert!(r.max_violation > EPS_GEOM);
    }

    #[test]
    fn zone_oracle_matches_analytic_verdict() {
        let outer = Zone::new(e(2), PI / 3.0).unwrap();
        let tilted = geodesic_point(&e(2), e(0).coords(), FRAC_PI_6 - 0.01);
        let inner = Zone::new(tilted, FRAC_PI_6).unwrap();
        let r = sampled_zone_containment(&outer, &inner, 20_000, 4).unwrap();
        assert!(r.pass);

        let over = geodesic_point(&e(2), e(0).coords(), FRAC_PI_6 + 0.02);
        let bad = Zone::new(over, FRAC_PI_6).unwrap();
        let r = sampled_zone_containment(&outer, &bad, 100_000, 5).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn grid_finds_the_equatorial_separation() {
        let alpha = PI / 12.0;
        let inst = Instance::new(
            2,
            vec![
                Cap::new(e(2), alpha).unwrap(),
                Cap::new(e(2).antipode(), alpha).unwrap(),
            ],
        )
        .unwrap();
        let r = grid_separability(&inst, 100_000).unwrap();
        assert!(!r.pass);
        let w = &r.witnesses[0];
        assert!(w[2].abs() > 0.99, "witness should be near a pole: {w:?}");
    }

    #[test]
    fn grid_passes_on_overlapping_chain() {
        let alpha = 0.25;
        let caps: Vec<Cap> = (0..3)
            .map(|i| {
                let c = geodesic_point(&e(0), e(1).coords(), 1.6 * alpha * i as f64);
                Cap::new(c, alpha).unwrap()
            })
            .collect();
        let inst = Instance::new(2, caps).unwrap();
        let r = grid_separability(&inst, 1_000_000).unwrap();
        assert!(r.pass, "found witness with margin {}", r.max_violation);
    }

    #[test]
    fn grid_passes_vacuously_for_single_cap() {
        let inst = Instance::new(2, vec![Cap::new(e(0), 0.4).unwrap()]).unwrap();
        let r = grid_separability(&inst, 10_000).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_violation, f64::NEG_INFINITY);
    }

    #[test]
    fn grid_rejects_wrong_dimension() {
        let inst = Instance::new(3, vec![Cap::new(Point::basis(4, 0), 0.4).unwrap()]).unwrap();
        assert!(matches!(
            grid_separability(&inst, 1000),
            Err(OracleError::WrongDimension(3))
        ));
    }

    #[test]
    fn enclosing_single_cap_is_exact() {
        let c = Cap::new(e(0), 0.37).unwrap();
        let (center, radius) = minimal_enclosing_cap_estimate(&[c.clone()], 100, 4, 0);
        assert!(spherical_distance(&center, &c.center).unwrap() < 1e-9);
        assert!((radius - 0.37).abs() < 1e-12);
    }

    #[test]
    fn enclosing_tangent_pair_hits_the_midpoint() {
        let c1 = Cap::new(e(0), FRAC_PI_6).unwrap();
        let c2 = Cap::new(geodesic_point(&e(0), e(1).coords(), PI / 3.0), FRAC_PI_6).unwrap();
        let (center, radius) = minimal_enclosing_cap_estimate(&[c1, c2], 200, 6, 0);
        assert!((radius - PI / 3.0).abs() < 1e-6);
        let mid = geodesic_point(&e(0), e(1).coords(), FRAC_PI_6);
        assert!(spherical_distance(&center, &mid).unwrap() < 1e-6);
    }

    #[test]
    fn enclosing_tangent_chain_of_three() {
        let alpha = PI / 12.0;
        let caps: Vec<Cap> = (0..3)
            .map(|i| {
                let c = geodesic_point(&e(0), e(1).coords(), 2.0 * alpha * i as f64);
                Cap::new(c, alpha).unwrap()
            })
            .collect();
        let (_, radius) = minimal_enclosing_cap_estimate(&caps, 200, 6, 0);
        assert!((radius - PI / 4.0).abs() < 1e-6, "estimate {radius}");
    }

    #[test]
    fn harness_reports_no_violations() {
        let r = bang_cell_harness(100, 50, 7).unwrap();
        assert!(r.pass, "violations found: {}", r.witness_count);
        assert!(r.checked > 100, "harness barely fired: {}", r.checked);
    }

    #[test]
    fn corrupted_membership_is_caught() {
        // self-test: a sign-flipped cell predicate must contradict the
        // implication on sampled hits
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut contradicted = false;
        'outer: for _ in 0..200 {
            let n = 1 + rng.gen::<usize>() % 3;
            let vectors: Vec<PlankVector> = (0..n)
                .map(|_| {
                    let u = random_unit_vector(3, &mut rng);
                    PlankVector::new(vm::scale(&u, 0.1 + 0.8 * rng.gen::<f64>())).unwrap()
                })
                .collect();
            let signs: Vec<i8> = (0..n)
                .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                .collect();
            let pattern = SignPattern::new(signs).unwrap();
            for _ in 0..50 {
                let mut x = vec![0.0; 3];
                for (v, &s) in vectors.iter().zip(pattern.signs()) {
                    vm::axpy(&mut x, -(s as f64), &v.w);
                }
                let nx = vm::norm(&x).max(1e-9);
                let t = vm::scale(&x, rng.gen::<f64>() * 0.9 / nx);
                if is_max_in_translate(&t, &pattern, &vectors).unwrap() {
                    let corrupted = vectors.iter().zip(pattern.signs()).all(|(v, &s)| {
                        (s as f64) * vm::dot(&t, &v.w) >= vm::norm_sq(&v.w) - EPS_GEOM
                    });
                    if !corrupted {
                        contradicted = true;
                        break 'outer;
                    }
                }
            }
        }
        assert!(contradicted, "corrupted predicate was never contradicted");
    }
}
