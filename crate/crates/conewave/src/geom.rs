//! Shared geometry helpers: hyperspherical charts with analytic coordinate
//! tangents, and the area of the unit sphere in `n` dimensions.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Gamma(k/2) for positive integer `k`, by the recurrence from
/// Gamma(1/2) = sqrt(pi) and Gamma(1) = 1.
fn gamma_half(k: usize) -> f64 {
    assert!(k >= 1);
    let mut val = if k % 2 == 1 { PI.sqrt() } else { 1.0 };
    let mut j = if k % 2 == 1 { 1 } else { 2 };
    while j < k {
        // Gamma(z + 1) = z Gamma(z) with z = j/2.
        val *= j as f64 / 2.0;
        j += 2;
    }
    val
}

/// Surface area of the unit sphere S^{n-1} in R^n.
pub fn unit_sphere_area(n: usize) -> f64 {
    assert!(n >= 1);
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Unit direction for hyperspherical angles `theta` (length n-1).
///
/// The chart is u_0 = cos t_0, u_k = cos t_k prod_{i<k} sin t_i, and
/// u_{n-1} = prod sin t_i; for n = 2 this is the usual (cos, sin).
pub fn chart_direction(n: usize, theta: &[f64]) -> DVector<f64> {
    assert_eq!(theta.len(), n - 1, "need n-1 angles");
    let mut u = DVector::zeros(n);
    let mut sin_prod = 1.0;
    for k in 0..n - 1 {
        u[k] = theta[k].cos() * sin_prod;
        sin_prod *= theta[k].sin();
    }
    u[n - 1] = sin_prod;
    u
}

/// Point at radius `r` in the hyperspherical chart.
pub fn chart_point(n: usize, r: f64, theta: &[f64]) -> DVector<f64> {
    chart_direction(n, theta) * r
}

/// Coordinate tangent vectors d(point)/d(theta_i), i = 0..n-2, with analytic
/// partial derivatives. Each tangent is Euclidean-orthogonal to the radius.
pub fn chart_tangents(n: usize, r: f64, theta: &[f64]) -> Vec<DVector<f64>> {
    assert_eq!(theta.len(), n - 1, "need n-1 angles");
    let mut tangents = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let mut t = DVector::zeros(n);
        for k in 0..n {
            t[k] = r * chart_partial(theta, k, i, n);
        }
        tangents.push(t);
    }
    tangents
}

/// d u_k / d theta_i for the unit-direction chart.
fn chart_partial(theta: &[f64], k: usize, i: usize, n: usize) -> f64 {
    if k < n - 1 {
        if i > k {
            return 0.0;
        }
        let mut val = if i == k { -theta[k].sin() } else { theta[k].cos() };
        for l in 0..k {
            val *= if l == i { theta[l].cos() } else { theta[l].sin() };
        }
        val
    } else {
        let mut val = 1.0;
        for l in 0..n - 1 {
            val *= if l == i { theta[l].cos() } else { theta[l].sin() };
        }
        val
    }
}

/// Deterministic, near-uniform set of unit directions on S^{n-1}.
///
/// n = 2 uses a uniform angle grid (so axis directions are hit exactly),
/// n = 3 a Fibonacci lattice, higher dimensions normalized Gaussian draws
/// from a fixed-seed generator.
pub fn sphere_directions(n: usize, count: usize) -> Vec<DVector<f64>> {
    assert!(n >= 2 && count >= 1);
    match n {
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5.0_f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let rxy = (1.0 - z * z).max(0.0).sqrt();
                    let t = golden * k as f64;
                    DVector::from_vec(vec![rxy * t.cos(), rxy * t.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_D1CE);
            (0..count)
                .map(|_| {
                    loop {
                        let mut v = DVector::zeros(n);
                        for k in 0..n {
                            // Box-Muller from two open-interval uniforms.
                            let u1: f64 = rng.random::<f64>().max(1e-12);
                            let u2: f64 = rng.random();
                            v[k] = (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
                        }
                        let norm = v.norm();
                        if norm > 1e-6 {
                            return v / norm;
                        }
                    }
                })
                .collect()
        }
    }
}

/// Hyperspherical angles of a unit direction, inverting [`chart_direction`].
/// Near-pole products are clamped; used for reporting sample locations.
pub fn angles_from_direction(u: &DVector<f64>) -> Vec<f64> {
    let n = u.len();
    assert!(n >= 2);
    if n == 2 {
        let t = u[1].atan2(u[0]);
        return vec![if t < 0.0 { t + 2.0 * PI } else { t }];
    }
    let mut theta = Vec::with_capacity(n - 1);
    let mut sin_prod = 1.0_f64;
    for k in 0..n - 2 {
        let c = if sin_prod > 1e-12 { (u[k] / sin_prod).clamp(-1.0, 1.0) } else { 1.0 };
        let t = c.acos();
        theta.push(t);
        sin_prod *= t.sin();
    }
    let last = u[n - 1].atan2(u[n - 2]);
    theta.push(if last < 0.0 { last + 2.0 * PI } else { last });
    theta
}
