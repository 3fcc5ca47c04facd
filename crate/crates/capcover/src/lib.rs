//! Covering non-separable spherical cap families by a single cap.
//!
//! A cap family on the unit d-sphere is non-separable when no great sphere
//! avoiding every cap splits the family in two. For such a family with radii
//! summing below a quarter turn, a single cap of radius exactly the sum of
//! the radii covers all of them. This crate computes that cap constructively
//! and emits a machine-checkable certificate: the cover, per-cap containment
//! slacks, the zone-merge trace of the reduction, and the separability
//! verdict, all re-verifiable by independent sampling oracles.
//!
//! Pipeline: caps dualize to zones, zone plank vectors are signed for maximal
//! sum norm, oversized subsets are merged until the signed sum is small, and
//! the final sum direction centers the covering zone and cap.

pub mod bang;
pub mod cover;
pub mod gen;
pub mod io;
pub mod oracle;
pub mod separability;
pub mod sphere;
pub mod svg;
pub mod vecmath;

/// Tolerance for unit-norm checks on constructed points.
pub const EPS_UNIT: f64 = 1e-12;

/// Tolerance for geometric predicates (containment, violation tests).
pub const EPS_GEOM: f64 = 1e-9;

/// Margin below which feasibility decisions are reported as indeterminate.
pub const EPS_FEAS: f64 = 1e-7;
