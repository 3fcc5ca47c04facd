//! The covering pipeline: dualize caps to zones, sign the plank vectors for
//! maximal sum norm, merge minimal oversized subsets until the signed sum is
//! no longer than the sine of the total width, and read the covering zone
//! and cap off the final sum direction. Every merge is gated by explicit
//! hypothesis checks and every containment is asserted analytically, so the
//! output certificate is self-verifying.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bang::{
    find_minimal_violating_subset, max_norm_signing, BangError, SigningConfig,
};
use crate::separability::{
    check_nonseparable, SepError, SeparabilityStatus, SeparabilityVerdict, SolverParams,
};
use crate::sphere::{
    cap_to_zone, plank_vector, spherical_distance, zone_contains_zone, Cap, GeomError,
    Instance, PlankVector, Point, Zone,
};
use crate::vecmath as vm;
use crate::EPS_GEOM;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("sum of radii {sum} is not below pi/2; the covering bound does not apply")]
    RadiiSumTooLarge { sum: f64 },
    #[error("instance is separable; no covering is guaranteed (witness margin {margin:?})")]
    Separable {
        verdict: Box<SeparabilityVerdict>,
        margin: Option<f64>,
    },
    #[error("merge hypothesis violated for subset {indices:?}: {detail}")]
    MergePrecondition { indices: Vec<usize>, detail: String },
    #[error("merged zone fails to contain member {index}: deficit {deficit}")]
    MergeContainment { index: usize, deficit: f64 },
    #[error(transparent)]
    Bang(#[from] BangError),
    #[error(transparent)]
    Sep(#[from] SepError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// One zone merge: the indices merged (positions in the zone list at the
/// time of the step), the replacement zone of summed width, and the
/// hypothesis slacks that licensed the merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub merged_indices: Vec<usize>,
    pub new_zone: Zone,
    /// |w_I| - sin(sum of widths): positive since the subset violates.
    pub w_norm_slack: f64,
    /// Per member: sin(total - a_i) - |w_I - w_i|, each >= -EPS_GEOM.
    pub member_slacks: Vec<f64>,
}

/// Options for the covering pipeline.
#[derive(Debug, Clone, Default)]
pub struct CoverOptions {
    /// Skip the separability precheck; the certificate then carries no
    /// verdict and validity rests entirely on the containment checks.
    pub skip_check: bool,
    pub signing: SigningConfig,
    pub solver: SolverParams,
}

/// The certificate of a computed cover. Valid iff every containment slack
/// is at least -EPS_GEOM; the cover radius is exactly the sum of the input
/// radii, never minimized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub dim: usize,
    pub cover_cap: Cap,
    pub input_caps: Vec<Cap>,
    /// Per cap: cover radius - dist(cover center, cap center) - cap radius.
    pub containment_slacks: Vec<f64>,
    pub merge_trace: Vec<MergeStep>,
    /// Final signed sum after reduction; |final_w| <= sin(cover radius), so
    /// the tighter covering zone of half-width arcsin|final_w| is
    /// recoverable from the certificate.
    pub final_w: Vec<f64>,
    pub heuristic_signing: bool,
    pub separability: Option<SeparabilityVerdict>,
}

impl CoverCertificate {
    pub fn is_valid(&self) -> bool {
        self.containment_slacks.iter().all(|&s| s >= -EPS_GEOM)
    }

    pub fn min_slack(&self) -> f64 {
        self.containment_slacks
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Merges a subset of zones into one zone of summed width, normal along the
/// aggregated plank vector. `oriented` carries the members' plank vectors
/// with the signs chosen by the maximal signing; hypotheses
/// |w_I| >= sin(total) and |w_I - w_i| <= sin(total - a_i) are enforced and
/// the returned zone is checked to contain every member.
pub fn merge_zones(
    zones: &[Zone],
    oriented: &[PlankVector],
) -> Result<(Zone, f64, Vec<f64>), CoverError> {
    assert_eq!(zones.len(), oriented.len());
    let indices: Vec<usize> = (0..zones.len()).collect();
    let total: f64 = zones.iter().map(|z| z.half_width).sum();
    let mut w_agg = vec![0.0; oriented[0].w.len()];
    for v in oriented {
        vm::axpy(&mut w_agg, 1.0, &v.w);
    }
    let w_norm = vm::norm(&w_agg);
    let w_norm_slack = w_norm - total.sin();
    if w_norm_slack < -EPS_GEOM {
        return Err(CoverError::MergePrecondition {
            indices,
            detail: format!("|w_I| = {w_norm} below sin(total) = {}", total.sin()),
        });
    }
    let mut member_slacks = Vec::with_capacity(zones.len());
    for (i, (z, v)) in zones.iter().zip(oriented).enumerate() {
        let gap = vm::norm(&vm::sub(&w_agg, &v.w));
        let slack = (total - z.half_width).sin() - gap;
        if slack < -EPS_GEOM {
            return Err(CoverError::MergePrecondition {
                indices,
                detail: format!(
                    "member {i}: |w_I - w_i| = {gap} exceeds sin(total - a_i) = {}",
                    (total - z.half_width).sin()
                ),
            });
        }
        member_slacks.push(slack);
    }
    let normal = Point::normalized(w_agg)?;
    let merged = Zone::new(normal, total)?;
    for (i, z) in zones.iter().enumerate() {
        if !zone_contains_zone(&merged, z)? {
            let theta = spherical_distance(&merged.normal, &z.normal)?;
            let phi = theta.min(std::f64::consts::PI - theta);
            return Err(CoverError::MergeContainment {
                index: i,
                deficit: phi + z.half_width - merged.half_width,
            });
        }
    }
    Ok((merged, w_norm_slack, member_slacks))
}

/// Result of the reduction loop.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub zones: Vec<Zone>,
    pub trace: Vec<MergeStep>,
    /// Final signed sum with |w| <= sin(sum of widths) + EPS_GEOM.
    pub w: Vec<f64>,
    pub heuristic: bool,
}

/// Repeatedly signs the current zone family for maximal sum norm and, while
/// the sum is longer than the sine of the total width, merges a minimal
/// violating subset. Width is conserved by every merge, each merge shrinks
/// the family, and at most n - 1 merges can happen.
pub fn reduce_to_small_w(
    zones: &[Zone],
    signing: &SigningConfig,
) -> Result<Reduction, CoverError> {
    let n = zones.len();
    let mut zones = zones.to_vec();
    let mut trace: Vec<MergeStep> = Vec::new();
    loop {
        let vectors: Vec<PlankVector> = zones.iter().map(plank_vector).collect();
        let mut fam = max_norm_signing(&vectors, signing)?;
        // carry the exact zone widths rather than arcsin reconstructions
        fam.half_widths = zones.iter().map(|z| z.half_width).collect();
        let w = fam.sum();
        let total: f64 = fam.half_widths.iter().sum();
        if vm::norm(&w) <= total.sin() + EPS_GEOM {
            assert!(
                trace.len() <= n.saturating_sub(1),
                "merge count exceeded the n - 1 bound"
            );
            return Ok(Reduction {
                zones,
                trace,
                w,
                heuristic: fam.heuristic,
            });
        }
        let violation = find_minimal_violating_subset(&fam)?
            .expect("sum exceeds its bound, so a violating subset exists");
        let members: Vec<Zone> = violation.indices.iter().map(|&i| zones[i].clone()).collect();
        let oriented: Vec<PlankVector> = violation
            .indices
            .iter()
            .map(|&i| fam.vectors[i].clone())
            .collect();
        let (merged, w_norm_slack, member_slacks) = merge_zones(&members, &oriented)?;
        let sum_before: f64 = zones.iter().map(|z| z.half_width).sum();
        let mut next: Vec<Zone> = Vec::with_capacity(zones.len() - violation.indices.len() + 1);
        for (i, z) in zones.iter().enumerate() {
            if i == violation.indices[0] {
                next.push(merged.clone());
            } else if !violation.indices.contains(&i) {
                next.push(z.clone());
            }
        }
        let sum_after: f64 = next.iter().map(|z| z.half_width).sum();
        debug_assert!((sum_before - sum_after).abs() <= 1e-12);
        trace.push(MergeStep {
            merged_indices: violation.indices,
            new_zone: merged,
            w_norm_slack,
            member_slacks,
        });
        zones = next;
    }
}

/// The covering zone construction.
#[derive(Debug, Clone)]
pub struct CoveringZone {
    pub zone: Zone,
    /// Unit direction of the final signed sum, before canonicalization.
    pub w_hat: Point,
    /// The final signed sum itself.
    pub w: Vec<f64>,
    pub trace: Vec<MergeStep>,
    pub heuristic: bool,
    /// Original zones the covering zone failed to contain, with deficits.
    /// Empty on success; non-empty only for separable inputs or heuristic
    /// signings, where the construction has no guarantee.
    pub containment_failures: Vec<(usize, f64)>,
}

/// Computes the zone of half-width equal to the summed widths around the
/// reduced sum direction, and checks it contains every original zone.
pub fn covering_zone(
    zones: &[Zone],
    signing: &SigningConfig,
) -> Result<CoveringZone, CoverError> {
    let total: f64 = zones.iter().map(|z| z.half_width).sum();
    if total >= std::f64::consts::FRAC_PI_2 - EPS_GEOM {
        return Err(CoverError::RadiiSumTooLarge { sum: total });
    }
    let reduction = reduce_to_small_w(zones, signing)?;
    let w_norm = vm::norm(&reduction.w);
    assert!(
        w_norm > 0.0,
        "maximal signed sum is at least the longest plank vector, which is positive"
    );
    let w_hat = Point::normalized(reduction.w.clone())?;
    let zone = Zone::new(w_hat.clone(), total)?;
    let mut failures = Vec::new();
    for (i, z) in zones.iter().enumerate() {
        if !zone_contains_zone(&zone, z)? {
            let theta = spherical_distance(&zone.normal, &z.normal)?;
            let phi = theta.min(std::f64::consts::PI - theta);
            failures.push((i, phi + z.half_width - total));
        }
    }
    Ok(CoveringZone {
        zone,
        w_hat,
        w: reduction.w,
        trace: reduction.trace,
        heuristic: reduction.heuristic,
        containment_failures: failures,
    })
}

/// Covers a non-separable cap family by one cap of radius equal to the sum
/// of the radii. Refuses separable inputs unless `skip_check`; an
/// indeterminate verdict proceeds (the containment checks decide validity)
/// and is recorded on the certificate.
pub fn cover_caps(
    inst: &Instance,
    options: &CoverOptions,
) -> Result<CoverCertificate, CoverError> {
    let total = inst.sum_radii();
    if total >= std::f64::consts::FRAC_PI_2 - EPS_GEOM {
        return Err(CoverError::RadiiSumTooLarge { sum: total });
    }
    let separability = if options.skip_check {
        None
    } else {
        let verdict = check_nonseparable(inst, &options.solver)?;
        if verdict.status == SeparabilityStatus::Separable {
            let margin = verdict.best_margin;
            return Err(CoverError::Separable {
                verdict: Box::new(verdict),
                margin,
            });
        }
        Some(verdict)
    };
    let zones: Vec<Zone> = inst.caps.iter().map(cap_to_zone).collect();
    let cz = covering_zone(&zones, &options.signing)?;

    // pick the component: the sign of the axis minimizing the worst-case
    // containment requirement
    let mut best_center = None;
    let mut best_worst = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let center = if sign > 0.0 {
            cz.w_hat.clone()
        } else {
            cz.w_hat.antipode()
        };
        let worst = inst
            .caps
            .iter()
            .map(|c| spherical_distance(&center, &c.center).unwrap() + c.radius)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst < best_worst {
            best_worst = worst;
            best_center = Some(center);
        }
    }
    let center = best_center.expect("two candidate centers were evaluated");
    let cover_cap = Cap::new(center, total)?;
    let containment_slacks: Vec<f64> = inst
        .caps
        .iter()
        .map(|c| total - spherical_distance(&cover_cap.center, &c.center).unwrap() - c.radius)
        .collect();
    Ok(CoverCertificate {
        dim: inst.dim,
        cover_cap,
        input_caps: inst.caps.clone(),
        containment_slacks,
        merge_trace: cz.trace,
        final_w: cz.w,
        heuristic_signing: cz.heuristic,
        separability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{geodesic_point, Point};
    use std::f64::consts::{FRAC_PI_6, PI};

    fn e(k: usize) -> Point {
        Point::basis(3, k)
    }

    fn zone(normal: Point, hw: f64) -> Zone {
        Zone::new(normal, hw).unwrap()
    }

    #[test]
    fn merge_identical_zones() {
        let z = zone(e(2), 0.3);
        let pv = plank_vector(&z);
        let (merged, w_slack, member) =
            merge_zones(&[z.clone(), z.clone()], &[pv.clone(), pv]).unwrap();
        assert_eq!(merged.normal, e(2));
        assert!((merged.half_width - 0.6).abs() < 1e-15);
        assert!(w_slack > 0.0); // 2 sin(0.3) > sin(0.6)
        assert!(member.iter().all(|&s| s >= -EPS_GEOM));
        assert!(zone_contains_zone(&merged, &z).unwrap());
    }

    #[test]
    fn merge_tangent_pair_is_tight() {
        // two pi/6 zones with normals one third of a turn apart:
        // |w_I| = 2 sin(pi/6) cos(pi/6) = sin(pi/3) exactly
        let u1 = e(2);
        let u2 = geodesic_point(&e(2), e(0).coords(), PI / 3.0);
        let z1 = zone(u1, FRAC_PI_6);
        let z2 = zone(u2, FRAC_PI_6);
        let (merged, w_slack, _) = merge_zones(
            &[z1.clone(), z2.clone()],
            &[plank_vector(&z1), plank_vector(&z2)],
        )
        .unwrap();
        assert!((merged.half_width - PI / 3.0).abs() < 1e-15);
        assert!(w_slack.abs() < 1e-12);
        // merged normal bisects the two input normals
        let d1 = spherical_distance(&merged.normal, &z1.normal).unwrap();
        let d2 = spherical_distance(&merged.normal, &z2.normal).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
        assert!(zone_contains_zone(&merged, &z1).unwrap());
        assert!(zone_contains_zone(&merged, &z2).unwrap());
    }

    #[test]
    fn merge_rejects_bad_hypotheses() {
        // far-apart zone pulled into a subset it does not belong to
        let z1 = zone(e(2), 0.3);
        let z2 = zone(geodesic_point(&e(2), e(0).coords(), 1.4), 0.05);
        let r = merge_zones(
            &[z1.clone(), z2.clone()],
            &[plank_vector(&z1), plank_vector(&z2)],
        );
        assert!(matches!(r, Err(CoverError::MergePrecondition { .. })));
    }

    #[test]
    fn reduce_no_op_when_sum_is_small() {
        let z1 = zone(e(2), 0.2);
        let z2 = zone(geodesic_point(&e(2), e(0).coords(), 1.0), 0.2);
        let red = reduce_to_small_w(&[z1, z2], &SigningConfig::default()).unwrap();
        assert!(red.trace.is_empty());
        assert_eq!(red.zones.len(), 2);
    }

    #[test]
    fn reduce_merges_collinear_tangent_pair() {
        let alpha = PI / 5.0;
        let z = zone(e(2), alpha);
        let red =
            reduce_to_small_w(&[z.clone(), z.clone()], &SigningConfig::default()).unwrap();
        assert_eq!(red.trace.len(), 1);
        assert_eq!(red.trace[0].merged_indices, vec![0, 1]);
        assert_eq!(red.zones.len(), 1);
        assert!((red.zones[0].half_width - 2.0 * alpha).abs() < 1e-15);
        // after the merge the sum norm equals sin(2 alpha) exactly
        assert!((vm::norm(&red.w) - (2.0 * alpha).sin()).abs() < 1e-12);
    }

    #[test]
    fn covering_zone_single_zone_is_identity() {
        let z = zone(e(2), 0.4);
        let cz = covering_zone(&[z.clone()], &SigningConfig::default()).unwrap();
        assert!(cz.trace.is_empty());
        assert!(cz.containment_failures.is_empty());
        assert_eq!(cz.zone.normal, z.normal);
        assert!((cz.zone.half_width - 0.4).abs() < 1e-15);
    }

    #[test]
    fn covering_zone_tangent_pair() {
        let u1 = e(2);
        let u2 = geodesic_point(&e(2), e(0).coords(), PI / 3.0);
        let z1 = zone(u1, FRAC_PI_6);
        let z2 = zone(u2, FRAC_PI_6);
        let cz = covering_zone(&[z1.clone(), z2.clone()], &SigningConfig::default()).unwrap();
        assert!(cz.containment_failures.is_empty());
        assert!((cz.zone.half_width - PI / 3.0).abs() < 1e-15);
        // both containments are tight: angle + inner width = total width
        for z in [&z1, &z2] {
            let theta = spherical_distance(&cz.zone.normal, &z.normal).unwrap();
            let phi = theta.min(PI - theta);
            assert!((phi + z.half_width - cz.zone.half_width).abs() < 1e-9);
        }
    }

    #[test]
    fn covering_zone_chain_has_positive_slack() {
        let alpha = PI / 12.0;
        let normals: Vec<Point> = (0..3)
            .map(|i| geodesic_point(&e(2), e(0).coords(), alpha * i as f64))
            .collect();
        let zones: Vec<Zone> = normals.into_iter().map(|u| zone(u, alpha)).collect();
        let cz = covering_zone(&zones, &SigningConfig::default()).unwrap();
        assert!(cz.containment_failures.is_empty());
        assert!((cz.zone.half_width - PI / 4.0).abs() < 1e-15);
        for z in &zones {
            let theta = spherical_distance(&cz.zone.normal, &z.normal).unwrap();
            let phi = theta.min(PI - theta);
            assert!(phi + z.half_width < cz.zone.half_width + EPS_GEOM);
        }
    }

    #[test]
    fn cover_single_cap_is_identity() {
        let c = Cap::new(e(0), FRAC_PI_6).unwrap();
        let inst = Instance::new(2, vec![c.clone()]).unwrap();
        let cert = cover_caps(&inst, &CoverOptions::default()).unwrap();
        assert!(cert.is_valid());
        assert_eq!(cert.cover_cap.radius, FRAC_PI_6);
        assert!(spherical_distance(&cert.cover_cap.center, &c.center).unwrap() < 1e-12);
        assert!(cert.containment_slacks[0].abs() < 1e-12);
    }

    #[test]
    fn cover_two_tangent_caps() {
        let c1 = Cap::new(Point::new(vec![1.0, 0.0, 0.0]).unwrap(), FRAC_PI_6).unwrap();
        let c2 = Cap::new(
            Point::new(vec![0.5, 0.75f64.sqrt(), 0.0]).unwrap(),
            FRAC_PI_6,
        )
        .unwrap();
        let inst = Instance::new(2, vec![c1, c2]).unwrap();
        let cert = cover_caps(&inst, &CoverOptions::default()).unwrap();
        assert!(cert.is_valid());
        assert!((cert.cover_cap.radius - PI / 3.0).abs() < 1e-15);
        // center at the geodesic midpoint of the two centers
        let mid = Point::new(vec![0.75f64.sqrt(), 0.5, 0.0]).unwrap();
        assert!(spherical_distance(&cert.cover_cap.center, &mid).unwrap() < 1e-9);
        for s in &cert.containment_slacks {
            assert!(s.abs() < 1e-9, "tangent pair slacks should be tight: {s}");
        }
    }

    #[test]
    fn cover_tangent_chain_of_three() {
        let alpha = PI / 12.0;
        let caps: Vec<Cap> = (0..3)
            .map(|i| {
                let c = geodesic_point(&e(0), e(1).coords(), 2.0 * alpha * i as f64);
                Cap::new(c, alpha).unwrap()
            })
            .collect();
        let middle = caps[1].center.clone();
        let inst = Instance::new(2, caps).unwrap();
        let cert = cover_caps(&inst, &CoverOptions::default()).unwrap();
        assert!(cert.is_valid());
        assert!((cert.cover_cap.radius - PI / 4.0).abs() < 1e-15);
        assert!(spherical_distance(&cert.cover_cap.center, &middle).unwrap() < 1e-9);
        assert!(cert.containment_slacks[0].abs() < 1e-9);
        assert!(cert.containment_slacks[2].abs() < 1e-9);
    }

    #[test]
    fn cover_rejects_oversized_radii() {
        let caps = vec![
            Cap::new(e(0), 0.9).unwrap(),
            Cap::new(e(0), 0.9).unwrap(),
        ];
        let inst = Instance::new(2, caps).unwrap();
        assert!(matches!(
            cover_caps(&inst, &CoverOptions::default()),
            Err(CoverError::RadiiSumTooLarge { .. })
        ));
    }

    #[test]
    fn cover_refuses_separable_input() {
        let alpha = PI / 12.0;
        let inst = Instance::new(
            2,
            vec![
                Cap::new(e(2), alpha).unwrap(),
                Cap::new(e(2).antipode(), alpha).unwrap(),
            ],
        )
        .unwrap();
        match cover_caps(&inst, &CoverOptions::default()) {
            Err(CoverError::Separable { verdict, .. }) => {
                assert!(verdict.witness_normal.is_some());
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        // with the check skipped the pipeline runs and reports honestly
        let options = CoverOptions {
            skip_check: true,
            ..Default::default()
        };
        let cert = cover_caps(&inst, &options).unwrap();
        assert!(!cert.is_valid(), "antipodal caps cannot be covered tightly");
        assert!(cert.separability.is_none());
    }

    #[test]
    fn radius_is_exactly_the_sum() {
        let caps = vec![
            Cap::new(e(0), 0.21).unwrap(),
            Cap::new(geodesic_point(&e(0), e(1).coords(), 0.3), 0.17).unwrap(),
            Cap::new(geodesic_point(&e(0), e(1).coords(), 0.6), 0.13).unwrap(),
        ];
        let expected: f64 = caps.iter().map(|c| c.radius).sum();
        let inst = Instance::new(2, caps).unwrap();
        let cert = cover_caps(&inst, &CoverOptions::default()).unwrap();
        assert_eq!(cert.cover_cap.radius, expected);
    }
}
