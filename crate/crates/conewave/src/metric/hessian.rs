//! Independent cross-check of the sphere form `P`: on vectors tangent to a
//! centered sphere, the Hessian of the geodesic radius `rho = r^m` (computed
//! with the dual metric `g = A^{-1}` and finite-difference Christoffel
//! symbols) must agree with `P` entry by entry after whitening by the sphere
//! metric.

use super::checks::SampleMargin;
use super::sphere::p_form;
use super::{CoefficientField, MetricError};
use crate::geom::{chart_point, chart_tangents};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Result of comparing the whitened radius Hessian against the whitened
/// sphere form over a sample set.
#[derive(Clone, Debug, Serialize)]
pub struct HessianCheck {
    /// Largest whitened entrywise deviation seen across all samples.
    pub residual: f64,
    pub samples_checked: usize,
    pub worst: SampleMargin,
}

fn dual_metric(field: &CoefficientField, x: &DVector<f64>) -> Result<DMatrix<f64>, MetricError> {
    let a = field.evaluate(x)?;
    a.clone()
        .try_inverse()
        .ok_or(MetricError::SingularCoefficient { r: x.norm() })
}

/// Christoffel symbols of `g = A^{-1}` at `x`, with `d g` by central
/// differences of step `h_g`. Returned as `gamma[c][(a, b)]`.
fn christoffels(
    field: &CoefficientField,
    x: &DVector<f64>,
    h_g: f64,
) -> Result<Vec<DMatrix<f64>>, MetricError> {
    let n = x.len();
    let a_mat = field.evaluate(x)?;
    let mut dg = Vec::with_capacity(n);
    for a in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[a] += h_g;
        xm[a] -= h_g;
        let gp = dual_metric(field, &xp)?;
        let gm = dual_metric(field, &xm)?;
        dg.push((gp - gm) / (2.0 * h_g));
    }
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for c in 0..n {
        for a in 0..n {
            for b in a..n {
                let mut s = 0.0;
                for d in 0..n {
                    s += a_mat[(c, d)] * (dg[a][(b, d)] + dg[b][(a, d)] - dg[d][(a, b)]);
                }
                let val = 0.5 * s;
                gamma[c][(a, b)] = val;
                gamma[c][(b, a)] = val;
            }
        }
    }
    Ok(gamma)
}

/// Covariant Hessian of `rho = |x|^m` at `x` in the metric `g = A^{-1}`,
/// as a Cartesian bilinear form: analytic flat derivatives of `rho` minus
/// the Christoffel correction.
fn radius_hessian(
    field: &CoefficientField,
    x: &DVector<f64>,
    h_g: f64,
) -> Result<DMatrix<f64>, MetricError> {
    let m = field.cone_power().ok_or(MetricError::NotACone)?;
    let n = x.len();
    let r = x.norm();
    let grad: DVector<f64> = x * (m * r.powf(m - 2.0));
    let mut hess = DMatrix::zeros(n, n);
    let c1 = m * r.powf(m - 2.0);
    let c2 = m * (m - 2.0) * r.powf(m - 4.0);
    for a in 0..n {
        for b in a..n {
            let mut val = c2 * x[a] * x[b];
            if a == b {
                val += c1;
            }
            hess[(a, b)] = val;
            hess[(b, a)] = val;
        }
    }
    let gamma = christoffels(field, x, h_g)?;
    for c in 0..n {
        let gc = grad[c];
        for a in 0..n {
            for b in 0..n {
                hess[(a, b)] -= gamma[c][(a, b)] * gc;
            }
        }
    }
    Ok(hess)
}

fn whiten(
    form: &DMatrix<f64>,
    chol: &Cholesky<f64, nalgebra::Dyn>,
    r: f64,
) -> Result<DMatrix<f64>, MetricError> {
    let l = chol.l();
    let y = l
        .clone()
        .solve_lower_triangular(form)
        .ok_or(MetricError::SingularSphereForm { r })?;
    let z = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(MetricError::SingularSphereForm { r })?;
    Ok(0.5 * (&z + &z.transpose()))
}

/// Worst whitened deviation between the radius Hessian restricted to sphere
/// tangents and the sphere form `P`, over `(r, theta)` samples. `h_g` is the
/// coefficient-differencing step, `h_r` the radial step for `P`.
pub fn hessian_identity_residual(
    field: &CoefficientField,
    samples: &[(f64, Vec<f64>)],
    h_g: f64,
    h_r: f64,
) -> Result<HessianCheck, MetricError> {
    let n = field.dimension();
    let r0 = field.obstacle_radius();
    let k = n - 1;
    let mut worst: Option<SampleMargin> = None;
    for (r, theta) in samples {
        let r = *r;
        let h = h_g.max(h_r);
        if r - h <= r0 {
            return Err(MetricError::StepOutsideDomain { r, h, r0 });
        }
        let x = chart_point(n, r, theta);
        let tangents = chart_tangents(n, r, theta);
        let hess = radius_hessian(field, &x, h_g)?;
        let mut d_form = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let val = tangents[i].dot(&(&hess * &tangents[j]));
                d_form[(i, j)] = val;
                d_form[(j, i)] = val;
            }
        }
        let s = p_form(field, r, theta, h_r)?;
        let chol = Cholesky::new(s.upsilon.clone())
            .ok_or(MetricError::SingularSphereForm { r })?;
        let d_w = whiten(&d_form, &chol, r)?;
        let p_w = whiten(&s.p, &chol, r)?;
        let dev = (&d_w - &p_w).abs().max();
        let sample = SampleMargin {
            r,
            theta: theta.clone(),
            margin: dev,
        };
        if worst.as_ref().map_or(true, |w| dev > w.margin) {
            worst = Some(sample);
        }
    }
    let worst = worst.expect("at least one sample");
    Ok(HessianCheck {
        residual: worst.margin,
        samples_checked: samples.len(),
        worst,
    })
}

/// Deterministic random `(r, theta)` samples: radii uniform on
/// `[r_lo, r_hi]`, polar angles kept away from the chart poles, azimuth
/// uniform on the full circle.
pub fn random_sphere_samples(
    n: usize,
    r_lo: f64,
    r_hi: f64,
    count: usize,
    seed: u64,
) -> Vec<(f64, Vec<f64>)> {
    assert!(n >= 2 && r_hi >= r_lo && r_lo > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let r = rng.random_range(r_lo..=r_hi);
        let mut theta = Vec::with_capacity(n - 1);
        for _ in 0..n.saturating_sub(2) {
            theta.push(rng.random_range(1e-3..std::f64::consts::PI - 1e-3));
        }
        theta.push(rng.random_range(0.0..2.0 * std::f64::consts::PI));
        out.push((r, theta));
    }
    out
}
