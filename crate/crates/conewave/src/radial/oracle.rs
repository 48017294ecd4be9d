//! Exact reference solution for the effective-dimension-one reduction.
//!
//! When `d = n/m = 1` the reduced equation is the flat wave equation on the
//! half-line `[rho_min, infinity)` with a Dirichlet wall. Extending the
//! initial displacement oddly about the wall and taking the even primitive
//! of the oddly extended initial velocity turns the problem into a free one
//! on the whole line, solved in closed form by traveling waves; restricting
//! back gives the exterior solution for all times, reflections included.

use super::{BumpSpec, DataKind};

/// Odd extension about `rho_min` of the summed displacement bumps.
fn odd_displacement(data: &[BumpSpec], rho_min: f64, s: f64) -> f64 {
    let mut acc = 0.0;
    for b in data.iter().filter(|b| b.kind == DataKind::Displacement) {
        acc += b.eval(s) - b.eval(2.0 * rho_min - s);
    }
    acc
}

/// Even primitive `int_{rho_min}^{s}` of the oddly extended velocity.
fn even_velocity_primitive(data: &[BumpSpec], rho_min: f64, s: f64) -> f64 {
    let sigma = if s < rho_min { 2.0 * rho_min - s } else { s };
    let mut acc = 0.0;
    for b in data.iter().filter(|b| b.kind == DataKind::Velocity) {
        acc += b.primitive_from_left(sigma) - b.primitive_from_left(rho_min);
    }
    acc
}

/// Exact solution of the half-line wave equation at `(rho, t)` for bump
/// initial data supported strictly inside the domain.
pub fn images_solution(data: &[BumpSpec], rho_min: f64, rho: f64, t: f64) -> f64 {
    let left = rho - t;
    let right = rho + t;
    0.5 * (odd_displacement(data, rho_min, left) + odd_displacement(data, rho_min, right))
        + 0.5
            * (even_velocity_primitive(data, rho_min, right)
                - even_velocity_primitive(data, rho_min, left))
}

/// [`images_solution`] sampled along a coordinate vector.
pub fn images_profile(data: &[BumpSpec], rho_min: f64, rhos: &[f64], t: f64) -> Vec<f64> {
    rhos.iter()
        .map(|&rho| images_solution(data, rho_min, rho, t))
        .collect()
}
