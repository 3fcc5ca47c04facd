//! Instance generators. Chains and trees keep consecutive caps
//! intersecting, so the intersection graph is connected and no avoiding
//! great sphere can split the family; the separable generator places two
//! small caps at antipodes as the negative fixture.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sphere::{
    geodesic_point, random_sphere_point, random_tangent, Cap, GeomError, Instance,
};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("sum of radii {sum} must stay below pi/2 - 1e-3")]
    RadiiSumTooLarge { sum: f64 },
    #[error("overlap factor {0} must lie in [0, 1]")]
    BadOverlapFactor(f64),
    #[error("need at least one cap")]
    Empty,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

const SUM_MARGIN: f64 = 1e-3;

/// Caps along a random geodesic with consecutive center distances
/// (a_i + a_{i+1}) * (1 - overlap_factor). Factor 0 gives the tangent
/// configuration where the covering radius bound is attained.
pub fn chain(
    dim: usize,
    radii: &[f64],
    overlap_factor: f64,
    seed: u64,
) -> Result<Instance, GenError> {
    if radii.is_empty() {
        return Err(GenError::Empty);
    }
    let sum: f64 = radii.iter().sum();
    if sum >= std::f64::consts::FRAC_PI_2 - SUM_MARGIN {
        return Err(GenError::RadiiSumTooLarge { sum });
    }
    if !(0.0..=1.0).contains(&overlap_factor) {
        return Err(GenError::BadOverlapFactor(overlap_factor));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_sphere_point(dim + 1, &mut rng);
    let dir = random_tangent(&start, &mut rng);
    let mut caps = Vec::with_capacity(radii.len());
    let mut t = 0.0;
    for (i, &r) in radii.iter().enumerate() {
        if i > 0 {
            t += (radii[i - 1] + r) * (1.0 - overlap_factor);
        }
        caps.push(Cap::new(geodesic_point(&start, &dir, t), r)?);
    }
    Ok(Instance::new(dim, caps)?)
}

/// Random radii summing to `target_sum`, each at least a fifth of the mean.
pub fn random_radii<R: Rng>(n: usize, target_sum: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.2 + 0.8 * rng.gen::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|r| r * target_sum / s).collect()
}

/// Chain with radii and overlap drawn from the seed.
pub fn random_chain(dim: usize, n: usize, seed: u64) -> Result<Instance, GenError> {
    random_chain_with(dim, n, seed, None, None)
}

/// Like [`random_chain`], with explicit overrides for the overlap factor
/// and the radii sum.
pub fn random_chain_with(
    dim: usize,
    n: usize,
    seed: u64,
    overlap: Option<f64>,
    sum_alpha: Option<f64>,
) -> Result<Instance, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc4a1);
    let target = sum_alpha.unwrap_or_else(|| {
        (0.25 + 0.65 * rng.gen::<f64>()) * (std::f64::consts::FRAC_PI_2 - 0.01)
    });
    let radii = random_radii(n, target, &mut rng);
    let overlap = overlap.unwrap_or(match seed % 4 {
        0 => 0.0,
        1 => 0.25,
        2 => 0.5,
        _ => rng.gen::<f64>() * 0.9,
    });
    chain(dim, &radii, overlap, seed)
}

/// Random intersection tree: each new cap overlaps a previously placed
/// parent, keeping the family connected and therefore non-separable. Radii
/// are rescaled so their sum stays below pi/2.
pub fn tree(dim: usize, n: usize, seed: u64) -> Result<Instance, GenError> {
    if n == 0 {
        return Err(GenError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x72ee);
    let target = (0.25 + 0.65 * rng.gen::<f64>()) * (std::f64::consts::FRAC_PI_2 - 0.01);
    let radii = random_radii(n, target, &mut rng);
    let root = random_sphere_point(dim + 1, &mut rng);
    let mut caps = vec![Cap::new(root, radii[0])?];
    for (i, &r) in radii.iter().enumerate().skip(1) {
        let parent = rng.gen::<usize>() % i;
        let overlap = 0.1 + 0.8 * rng.gen::<f64>();
        let dist = (caps[parent].radius + r) * (1.0 - overlap);
        let u = random_tangent(&caps[parent].center, &mut rng);
        caps.push(Cap::new(geodesic_point(&caps[parent].center, &u, dist), r)?);
    }
    Ok(Instance::new(dim, caps)?)
}

/// Two small caps at antipodes: separable by the equator between them.
pub fn separable(dim: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e9a);
    let p = random_sphere_point(dim + 1, &mut rng);
    let alpha = std::f64::consts::PI / 12.0;
    Instance::new(
        dim,
        vec![
            Cap::new(p.clone(), alpha).unwrap(),
            Cap::new(p.antipode(), alpha).unwrap(),
        ],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separability::{check_nonseparable, SeparabilityStatus, SolverParams};
    use crate::sphere::spherical_distance;
    use std::f64::consts::PI;

    #[test]
    fn single_cap_chain() {
        let inst = chain(2, &[0.3], 0.0, 1).unwrap();
        assert_eq!(inst.caps.len(), 1);
        assert_eq!(inst.caps[0].radius, 0.3);
    }

    #[test]
    fn tangent_chain_has_exact_spacing() {
        let alpha = PI / 12.0;
        let inst = chain(2, &[alpha, alpha, alpha], 0.0, 5).unwrap();
        for pair in inst.caps.windows(2) {
            let d = spherical_distance(&pair[0].center, &pair[1].center).unwrap();
            assert!((d - PI / 6.0).abs() < 1e-12, "spacing {d}");
        }
    }

    #[test]
    fn chain_outputs_are_not_separable() {
        for seed in 0..10 {
            let inst = random_chain(2, 4, seed).unwrap();
            let v = check_nonseparable(&inst, &SolverParams::default()).unwrap();
            assert_ne!(
                v.status,
                SeparabilityStatus::Separable,
                "seed {seed} produced a separable chain"
            );
        }
    }

    #[test]
    fn tree_outputs_are_not_separable_and_bounded() {
        for seed in 0..10 {
            let inst = tree(3, 6, seed).unwrap();
            assert!(inst.sum_radii() < std::f64::consts::FRAC_PI_2);
            let v = check_nonseparable(&inst, &SolverParams::default()).unwrap();
            assert_ne!(v.status, SeparabilityStatus::Separable);
        }
    }

    #[test]
    fn separable_fixture_is_separable() {
        let inst = separable(2, 3);
        let v = check_nonseparable(&inst, &SolverParams::default()).unwrap();
        assert_eq!(v.status, SeparabilityStatus::Separable);
    }

    #[test]
    fn oversized_radii_are_rejected() {
        assert!(matches!(
            chain(2, &[1.0, 1.0], 0.0, 0),
            Err(GenError::RadiiSumTooLarge { .. })
        ));
    }
}
