//! Spherical primitives: points, caps, zones, plank vectors, the duality
//! maps between caps and zones, and the analytic containment predicates the
//! rest of the crate builds on.
//!
//! All angles are radians. The sphere is the unit d-sphere embedded in
//! R^{d+1}; points are unit vectors of length d+1. Caps are closed, zones
//! are closed; "open" caps (duals) carry a flag that only affects how
//! feasibility margins are interpreted, never the predicates here, which all
//! compare with tolerance [`EPS_GEOM`].

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vecmath as vm;
use crate::{EPS_GEOM, EPS_UNIT};

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected vector length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector norm {norm} is not within {EPS_UNIT:e} of 1")]
    NotUnit { norm: f64 },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("radius {value} outside the open interval (0, pi/2)")]
    InvalidRadius { value: f64 },
    #[error("half-width {value} outside the open interval (0, pi/2)")]
    InvalidHalfWidth { value: f64 },
    #[error("plank vector norm {norm} outside the open interval (0, 1)")]
    InvalidPlankNorm { norm: f64 },
    #[error("instance needs at least one cap")]
    EmptyInstance,
    #[error("ambient dimension must be at least 1, got {0}")]
    InvalidDimension(usize),
}

pub type GeomResult<T> = Result<T, GeomError>;

/// A point on the unit d-sphere: a unit vector in R^{d+1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Accepts coordinates that are already unit-norm to within [`EPS_UNIT`].
    pub fn new(coords: Vec<f64>) -> GeomResult<Self> {
        let n = vm::norm(&coords);
        if (n - 1.0).abs() > EPS_UNIT {
            return Err(GeomError::NotUnit { norm: n });
        }
        Ok(Self { coords })
    }

    /// Normalizes arbitrary coordinates onto the sphere.
    pub fn normalized(coords: Vec<f64>) -> GeomResult<Self> {
        let v = vm::normalized(&coords).ok_or(GeomError::ZeroVector)?;
        Ok(Self { coords: v })
    }

    /// Standard basis vector e_k in R^{len}.
    pub fn basis(len: usize, k: usize) -> Self {
        let mut coords = vec![0.0; len];
        coords[k] = 1.0;
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn antipode(&self) -> Self {
        Self {
            coords: vm::neg(&self.coords),
        }
    }

    fn check_len(&self, other: &Point) -> GeomResult<()> {
        if self.len() != other.len() {
            return Err(GeomError::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }
}

/// Angular distance arccos(clamp(<p,q>, -1, 1)), in [0, pi].
///
/// Evaluated through the chord length (2 asin(|p - q| / 2), antipodal
/// variant past a quarter turn), which computes the same value as the
/// arccosine of the inner product without its precision loss near 0 and pi.
pub fn spherical_distance(p: &Point, q: &Point) -> GeomResult<f64> {
    p.check_len(q)?;
    let dot = vm::dot(p.coords(), q.coords());
    if dot >= 0.0 {
        let chord = vm::norm(&vm::sub(p.coords(), q.coords()));
        Ok(2.0 * vm::clamp_unit(chord / 2.0).asin())
    } else {
        let chord = vm::norm(&vm::add(p.coords(), q.coords()));
        Ok(std::f64::consts::PI - 2.0 * vm::clamp_unit(chord / 2.0).asin())
    }
}

/// A closed spherical cap: points within `radius` of `center`.
///
/// Dual caps are marked `open`; the flag is bookkeeping for strictness in
/// separability margins and does not change the containment predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub center: Point,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub open: bool,
}

impl Cap {
    pub fn new(center: Point, radius: f64) -> GeomResult<Self> {
        if !(radius > 0.0 && radius < FRAC_PI_2) {
            return Err(GeomError::InvalidRadius { value: radius });
        }
        Ok(Self {
            center,
            radius,
            open: false,
        })
    }

    pub fn new_open(center: Point, radius: f64) -> GeomResult<Self> {
        let mut c = Self::new(center, radius)?;
        c.open = true;
        Ok(c)
    }
}

/// True iff `p` lies in the cap, with tolerance [`EPS_GEOM`].
pub fn cap_contains_point(c: &Cap, p: &Point) -> GeomResult<bool> {
    Ok(spherical_distance(&c.center, p)? <= c.radius + EPS_GEOM)
}

/// True iff `inner` lies inside `outer`: center distance plus inner radius
/// stays within the outer radius.
pub fn cap_contains_cap(outer: &Cap, inner: &Cap) -> GeomResult<bool> {
    let d = spherical_distance(&outer.center, &inner.center)?;
    Ok(d + inner.radius <= outer.radius + EPS_GEOM)
}

/// A closed zone: points within `half_width` of the great sphere whose pole
/// is `normal`, i.e. { x : |<x, normal>| <= sin(half_width) }.
///
/// `normal` and its antipode denote the same zone; construction
/// canonicalizes the sign so the first nonzero coordinate is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub normal: Point,
    pub half_width: f64,
}

impl Zone {
    pub fn new(normal: Point, half_width: f64) -> GeomResult<Self> {
        if !(half_width > 0.0 && half_width < FRAC_PI_2) {
            return Err(GeomError::InvalidHalfWidth { value: half_width });
        }
        Ok(Self {
            normal: canonicalize(normal),
            half_width,
        })
    }
}

/// Flips the sign so the first nonzero coordinate is positive.
fn canonicalize(p: Point) -> Point {
    match p.coords().iter().find(|&&x| x != 0.0) {
        Some(&x) if x < 0.0 => p.antipode(),
        _ => p,
    }
}

/// True iff `p` lies in the zone, with tolerance [`EPS_GEOM`].
pub fn zone_contains_point(z: &Zone, p: &Point) -> GeomResult<bool> {
    z.normal.check_len(p)?;
    let s = vm::dot(p.coords(), z.normal.coords()).abs();
    Ok(s <= z.half_width.sin() + EPS_GEOM)
}

/// True iff `inner` lies inside `outer`.
///
/// With phi the angle between the normals reduced to [0, pi/2], the inner
/// zone reaches heights up to sin(phi + inner.half_width) over the outer
/// great sphere, so containment is exactly phi + inner.half_width <=
/// outer.half_width. Requires outer.half_width <= pi/2.
pub fn zone_contains_zone(outer: &Zone, inner: &Zone) -> GeomResult<bool> {
    let theta = spherical_distance(&outer.normal, &inner.normal)?;
    let phi = theta.min(std::f64::consts::PI - theta);
    Ok(phi + inner.half_width <= outer.half_width + EPS_GEOM)
}

/// The zone left over when a cap's open dual and its antipode are removed
/// from the sphere: normal along the cap center, half-width the cap radius.
pub fn cap_to_zone(c: &Cap) -> Zone {
    Zone {
        normal: canonicalize(c.center.clone()),
        half_width: c.radius,
    }
}

/// The two open caps forming the complement of a zone, centered at the
/// zone's poles with radius pi/2 - half_width.
pub fn zone_to_antipodal_caps(z: &Zone) -> (Cap, Cap) {
    let radius = FRAC_PI_2 - z.half_width;
    (
        Cap {
            center: z.normal.clone(),
            radius,
            open: true,
        },
        Cap {
            center: z.normal.antipode(),
            radius,
            open: true,
        },
    )
}

/// The vector w = sin(half_width) * normal encoding the open plank whose
/// closure meets the sphere in the given zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlankVector {
    pub w: Vec<f64>,
}

impl PlankVector {
    pub fn new(w: Vec<f64>) -> GeomResult<Self> {
        let n = vm::norm(&w);
        if !(n > 0.0 && n < 1.0) {
            return Err(GeomError::InvalidPlankNorm { norm: n });
        }
        Ok(Self { w })
    }

    pub fn norm(&self) -> f64 {
        vm::norm(&self.w)
    }
}

pub fn plank_vector(z: &Zone) -> PlankVector {
    PlankVector {
        w: vm::scale(z.normal.coords(), z.half_width.sin()),
    }
}

/// Reconstructs the zone from its plank vector; errors when |w| >= 1, which
/// would signal a half-width of at least pi/2.
pub fn zone_of_plank_vector(pv: &PlankVector) -> GeomResult<Zone> {
    let n = pv.norm();
    if !(n > 0.0 && n < 1.0) {
        return Err(GeomError::InvalidPlankNorm { norm: n });
    }
    let normal = Point::normalized(pv.w.clone())?;
    Zone::new(normal, n.asin())
}

/// A finite cap family on the d-sphere. `sum_radii < pi/2` is the covering
/// pipeline's hypothesis and is checked there, not at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub dim: usize,
    pub caps: Vec<Cap>,
}

impl Instance {
    pub fn new(dim: usize, caps: Vec<Cap>) -> GeomResult<Self> {
        if dim < 1 {
            return Err(GeomError::InvalidDimension(dim));
        }
        if caps.is_empty() {
            return Err(GeomError::EmptyInstance);
        }
        for c in &caps {
            if c.center.len() != dim + 1 {
                return Err(GeomError::DimensionMismatch {
                    expected: dim + 1,
                    got: c.center.len(),
                });
            }
        }
        Ok(Self { dim, caps })
    }

    pub fn sum_radii(&self) -> f64 {
        self.caps.iter().map(|c| c.radius).sum()
    }
}

/// Standard normal sample, Box-Muller on the rng's uniforms.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>();
        if u > 0.0 {
            let v: f64 = rng.gen::<f64>();
            return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
        }
    }
}

pub fn random_unit_vector<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| gaussian(rng)).collect();
        if let Some(u) = vm::normalized(&v) {
            return u;
        }
    }
}

pub fn random_sphere_point<R: Rng>(len: usize, rng: &mut R) -> Point {
    Point {
        coords: random_unit_vector(len, rng),
    }
}

/// Random unit vector orthogonal to `axis`.
pub fn random_tangent<R: Rng>(axis: &Point, rng: &mut R) -> Vec<f64> {
    loop {
        let v = random_unit_vector(axis.len(), rng);
        let t = vm::reject(&v, axis.coords());
        if let Some(u) = vm::normalized(&t) {
            return u;
        }
    }
}

/// Geodesic point at arc length `t` from `p` along the unit tangent `u`.
pub fn geodesic_point(p: &Point, u: &[f64], t: f64) -> Point {
    let mut c = vm::scale(p.coords(), t.cos());
    vm::axpy(&mut c, t.sin(), u);
    // renormalize to keep construction error near machine precision
    Point {
        coords: vm::normalized(&c).expect("geodesic point is never zero"),
    }
}

/// Area-uniform sample inside a cap, via a random tangent direction and a
/// colatitude drawn by rejection from the sin^{d-1} density.
pub fn random_point_in_cap<R: Rng>(c: &Cap, rng: &mut R) -> Point {
    let d = c.center.len() - 1;
    let u = random_tangent(&c.center, rng);
    let sin_alpha = c.radius.sin();
    let theta = loop {
        let t: f64 = rng.gen::<f64>() * c.radius;
        if d <= 1 {
            break t;
        }
        let accept = (t.sin() / sin_alpha).powi(d as i32 - 1);
        if rng.gen::<f64>() < accept {
            break t;
        }
    };
    geodesic_point(&c.center, &u, theta)
}

/// Uniform sample inside a zone, by rejection from the sphere-uniform law.
pub fn random_point_in_zone<R: Rng>(z: &Zone, rng: &mut R) -> Point {
    let s = z.half_width.sin();
    loop {
        let p = random_sphere_point(z.normal.len(), rng);
        if vm::dot(p.coords(), z.normal.coords()).abs() <= s {
            return p;
        }
    }
}

/// An orthogonal matrix with determinant 1, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    rows: Vec<Vec<f64>>,
}

impl Rotation {
    pub fn identity(len: usize) -> Self {
        let rows = (0..len)
            .map(|i| {
                let mut r = vec![0.0; len];
                r[i] = 1.0;
                r
            })
            .collect();
        Self { rows }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| vm::dot(row, v)).collect()
    }

    pub fn apply_point(&self, p: &Point) -> Point {
        Point {
            coords: vm::normalized(&self.apply(p.coords())).expect("rotation preserves norm"),
        }
    }
}

/// Haar-ish random rotation of R^{dim+1}: modified Gram-Schmidt on a
/// Gaussian matrix, with a column flip to land in the determinant-1
/// component.
pub fn random_rotation(dim: usize, seed: u64) -> Rotation {
    let len = dim + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut cols: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..len).map(|_| gaussian(&mut rng)).collect())
            .collect();
        let mut ok = true;
        for j in 0..len {
            for i in 0..j {
                let c = vm::dot(&cols[j], &cols[i]);
                let prev = cols[i].clone();
                vm::axpy(&mut cols[j], -c, &prev);
            }
            match vm::normalized(&cols[j]) {
                Some(u) => cols[j] = u,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let mut rows: Vec<Vec<f64>> = (0..len)
            .map(|i| (0..len).map(|j| cols[j][i]).collect())
            .collect();
        if vm::det(&rows) < 0.0 {
            for row in rows.iter_mut() {
                row[0] = -row[0];
            }
        }
        return Rotation { rows };
    }
}

pub fn apply_rotation(rot: &Rotation, inst: &Instance) -> Instance {
    Instance {
        dim: inst.dim,
        caps: inst
            .caps
            .iter()
            .map(|c| Cap {
                center: rot.apply_point(&c.center),
                radius: c.radius,
                open: c.open,
            })
            .collect(),
    }
}
