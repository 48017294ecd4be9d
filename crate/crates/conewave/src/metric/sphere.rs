//! Geometry induced on centered spheres.
//!
//! With `g = A^{-1}`, the angular block of `g` in a hyperspherical chart is
//! `Upsilon_ij = < A^{-1} d/dtheta_i, d/dtheta_j >`. The associated sphere
//! form is `P = (1 / (2 phi)) d(Upsilon)/dr`, the quantity the convexity
//! assumption bounds from below against `alpha * Upsilon`.

use super::{CoefficientField, MetricError};
use crate::geom::{chart_point, chart_tangents};
use nalgebra::DMatrix;

/// Sphere sample: angular metric block and sphere form at `(r, theta)`.
#[derive(Clone, Debug)]
pub struct SphereSample {
    pub r: f64,
    pub theta: Vec<f64>,
    /// Angular block of `A^{-1}` in the coordinate basis, `(n-1) x (n-1)`.
    pub upsilon: DMatrix<f64>,
    /// Scaled radial derivative of `upsilon`; zero unless filled by
    /// [`p_form`].
    pub p: DMatrix<f64>,
}

/// Quadratic form `x^T F x` for a small symmetric matrix.
pub fn quadratic(form: &DMatrix<f64>, x: &[f64]) -> f64 {
    let k = form.nrows();
    assert_eq!(x.len(), k);
    let mut acc = 0.0;
    for i in 0..k {
        for j in 0..k {
            acc += form[(i, j)] * x[i] * x[j];
        }
    }
    acc
}

fn upsilon_at(
    field: &CoefficientField,
    r: f64,
    theta: &[f64],
) -> Result<DMatrix<f64>, MetricError> {
    let n = field.dimension();
    let x = chart_point(n, r, theta);
    let tangents = chart_tangents(n, r, theta);
    let a = field.evaluate(&x)?;
    let lu = a.lu();
    let k = n - 1;
    let mut ups = DMatrix::zeros(k, k);
    let mut solved = Vec::with_capacity(k);
    for t in &tangents {
        let y = lu
            .solve(t)
            .ok_or(MetricError::SingularCoefficient { r })?;
        solved.push(y);
    }
    for i in 0..k {
        for j in i..k {
            let val = 0.5 * (tangents[i].dot(&solved[j]) + tangents[j].dot(&solved[i]));
            ups[(i, j)] = val;
            ups[(j, i)] = val;
        }
    }
    Ok(ups)
}

/// Angular metric block at `(r, theta)`; `p` is left zero.
pub fn sphere_metric(
    field: &CoefficientField,
    r: f64,
    theta: &[f64],
) -> Result<SphereSample, MetricError> {
    let upsilon = upsilon_at(field, r, theta)?;
    let k = field.dimension() - 1;
    Ok(SphereSample {
        r,
        theta: theta.to_vec(),
        upsilon,
        p: DMatrix::zeros(k, k),
    })
}

/// Sphere sample with `P = (1/(2 phi)) dUpsilon/dr` filled by central
/// differencing with step `h_r`. The step must stay inside the domain.
pub fn p_form(
    field: &CoefficientField,
    r: f64,
    theta: &[f64],
    h_r: f64,
) -> Result<SphereSample, MetricError> {
    let r0 = field.obstacle_radius();
    if r - h_r <= r0 {
        return Err(MetricError::StepOutsideDomain { r, h: h_r, r0 });
    }
    let phi = field.phi(r)?;
    let plus = upsilon_at(field, r + h_r, theta)?;
    let minus = upsilon_at(field, r - h_r, theta)?;
    let upsilon = upsilon_at(field, r, theta)?;
    let p = (plus - minus) * (1.0 / (2.0 * h_r) / (2.0 * phi));
    Ok(SphereSample {
        r,
        theta: theta.to_vec(),
        upsilon,
        p,
    })
}
