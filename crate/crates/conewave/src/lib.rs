//! Numerical laboratory for local energy decay of waves on the exterior of a
//! ball, where the coefficient matrix of the spatial operator carries a
//! polynomial cone structure in the radial direction.
//!
//! The crate splits into five layers:
//!
//! - [`metric`]: coefficient fields `A(x)`, the geometry they induce on
//!   centered spheres, and verification of the structural assumptions
//!   (cone identity, divergence of the inverse speed bound, convexity of
//!   the sphere form).
//! - [`radial`]: leapfrog solver for the radially reduced wave equation in
//!   the geodesic coordinate, with an exact method-of-images oracle for the
//!   effectively one-dimensional case and weighted-energy diagnostics.
//! - [`planar`]: conservative finite-volume solver for the full
//!   two-dimensional exterior problem on an annular polar grid.
//! - [`decay`]: model fitting and classification of local-energy decay
//!   (extinction, exponential, polynomial).
//! - [`experiment`]: config-driven runs, traces, plots, records, sweeps.

pub mod decay;
pub mod experiment;
pub mod geom;
pub mod metric;
pub mod planar;
pub mod quad;
pub mod radial;
