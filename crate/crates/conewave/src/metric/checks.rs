//! Verification of the structural assumptions behind the decay theory:
//! the cone identity, divergence of the integrated inverse speed bound,
//! and the convexity lower bound on sphere forms.

use super::sphere::p_form;
use super::{default_radial_step, CoefficientField, MetricError};
use crate::geom::{angles_from_direction, sphere_directions};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

/// Default acceptance fraction for the doubling-ladder divergence test.
pub const DEFAULT_DIVERGENCE_FRACTION: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    ConeIdentity,
    SpeedDivergence,
    Convexity,
    /// Agreement of the geodesic-radius Hessian with the scaled radial
    /// derivative of the sphere form (reported through the same channel,
    /// produced by the hessian module).
    HessianIdentity,
}

impl CheckKind {
    /// The kebab-case name used in reports and configs.
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::ConeIdentity => "cone-identity",
            CheckKind::SpeedDivergence => "speed-divergence",
            CheckKind::Convexity => "convexity",
            CheckKind::HessianIdentity => "hessian-identity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One checked sample: location and the margin recorded there.
#[derive(Clone, Debug, Serialize)]
pub struct SampleMargin {
    pub r: f64,
    pub theta: Vec<f64>,
    pub margin: f64,
}

/// Outcome of one structural check, with every sampled margin retained for
/// line-oriented reporting.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub check: CheckKind,
    pub verdict: Verdict,
    /// Worst margin; its meaning is check-specific (relative identity error,
    /// increment ratio, pencil eigenvalue).
    pub margin: f64,
    pub tolerance: f64,
    pub samples_checked: usize,
    pub worst: SampleMargin,
    pub samples: Vec<SampleMargin>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Relative error of the cone identity `A(x) x = x / phi(r)^2`, maximized
/// over spheres at `radii` with `dirs` directions each. Passes when the
/// worst error stays at or below `tol`.
pub fn check_cone_identity(
    field: &CoefficientField,
    radii: &[f64],
    tol: f64,
    dirs: usize,
) -> Result<AssumptionReport, MetricError> {
    field.cone_power().ok_or(MetricError::NotACone)?;
    let n = field.dimension();
    let directions = sphere_directions(n, dirs);
    let mut samples = Vec::with_capacity(radii.len() * dirs);
    let mut worst: Option<SampleMargin> = None;
    for &r in radii {
        let phi = field.phi(r)?;
        let inv = 1.0 / (phi * phi);
        for dir in &directions {
            let x = dir * r;
            let a = field.evaluate(&x)?;
            let rhs = &x * inv;
            let rel = (&a * &x - &rhs).norm() / rhs.norm();
            let sample = SampleMargin {
                r,
                theta: angles_from_direction(dir),
                margin: rel,
            };
            if worst.as_ref().map_or(true, |w| rel > w.margin) {
                worst = Some(sample.clone());
            }
            samples.push(sample);
        }
    }
    let worst = worst.expect("at least one radius and direction");
    let margin = worst.margin;
    Ok(AssumptionReport {
        check: CheckKind::ConeIdentity,
        verdict: if margin <= tol { Verdict::Pass } else { Verdict::Fail },
        margin,
        tolerance: tol,
        samples_checked: samples.len(),
        worst,
        samples,
    })
}

/// Speed bound `F(y) = sup_{|x| = y} sqrt(<unit_x, A(x) unit_x>)`, by dense
/// direction sampling.
pub fn radial_speed_bound(
    field: &CoefficientField,
    y: f64,
    dirs: usize,
) -> Result<f64, MetricError> {
    let n = field.dimension();
    let mut best = f64::NEG_INFINITY;
    for dir in sphere_directions(n, dirs) {
        let x = &dir * y;
        let a = field.evaluate(&x)?;
        let val = dir.dot(&(&a * &dir));
        if val > best {
            best = val;
        }
    }
    if best <= 0.0 {
        return Err(MetricError::NonPositiveSpeed { y, value: best });
    }
    Ok(best.sqrt())
}

/// Norm of the conormal direction, `sqrt(<unit_x, A(x) unit_x>)` at a point.
/// Never exceeds the sampled speed bound at `|x|` beyond sampling error.
pub fn conormal_norm(field: &CoefficientField, x: &DVector<f64>) -> Result<f64, MetricError> {
    let r = x.norm();
    let unit = x / r;
    let a = field.evaluate(x)?;
    let val = unit.dot(&(&a * &unit));
    if val <= 0.0 {
        return Err(MetricError::NonPositiveSpeed { y: r, value: val });
    }
    Ok(val.sqrt())
}

fn composite_simpson<F: FnMut(f64) -> Result<f64, MetricError>>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<f64, MetricError> {
    let h = (b - a) / panels as f64;
    let mut acc = f(a)? + f(b)?;
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// Divergence heuristic for the escape integral `int 1/F`.
///
/// Partial integrals are accumulated over the doubling ladder
/// `Y_k = r0 * 2^k` up to `y_max`; the check passes when the last doubling
/// contributes at least `fraction` of the previous increment. Report rows
/// carry `(Y_k, increment)` pairs; the margin is the final increment ratio.
pub fn check_speed_divergence(
    field: &CoefficientField,
    y_max: f64,
    fraction: f64,
    dirs: usize,
) -> Result<AssumptionReport, MetricError> {
    let r0 = field.obstacle_radius();
    let mut rungs = Vec::new();
    let mut y = 2.0 * r0;
    while y <= y_max * (1.0 + 1e-12) {
        rungs.push(y);
        y *= 2.0;
    }
    if rungs.len() < 3 {
        return Err(MetricError::LadderTooShort {
            y_max,
            got: rungs.len(),
            need: 3,
        });
    }
    let mut samples = Vec::with_capacity(rungs.len());
    let mut lo = r0;
    let mut increments = Vec::with_capacity(rungs.len());
    for &hi in &rungs {
        let inc = composite_simpson(
            |yy| {
                let f = radial_speed_bound(field, yy, dirs)?;
                Ok(1.0 / f)
            },
            lo,
            hi,
            64,
        )?;
        increments.push(inc);
        samples.push(SampleMargin {
            r: hi,
            theta: Vec::new(),
            margin: inc,
        });
        lo = hi;
    }
    let last = increments[increments.len() - 1];
    let prev = increments[increments.len() - 2];
    let ratio = last / prev;
    let worst = samples.last().unwrap().clone();
    Ok(AssumptionReport {
        check: CheckKind::SpeedDivergence,
        verdict: if ratio >= fraction { Verdict::Pass } else { Verdict::Fail },
        margin: ratio,
        tolerance: fraction,
        samples_checked: samples.len(),
        worst,
        samples,
    })
}

/// Smallest eigenvalue of the pencil `(lhs, base)`, i.e. of
/// `base^{-1/2} lhs base^{-1/2}`, via Cholesky whitening.
pub fn pencil_min_eigenvalue(
    lhs: &DMatrix<f64>,
    base: &DMatrix<f64>,
    r: f64,
) -> Result<f64, MetricError> {
    let chol = Cholesky::new(base.clone()).ok_or(MetricError::SingularSphereForm { r })?;
    let l = chol.l();
    let y = l
        .clone()
        .solve_lower_triangular(lhs)
        .ok_or(MetricError::SingularSphereForm { r })?;
    let z = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(MetricError::SingularSphereForm { r })?;
    let sym = 0.5 * (&z + &z.transpose());
    let eig = SymmetricEigen::new(sym);
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Pole-safe angle grid for convexity sampling: `count` tuples per sphere.
pub fn angle_grid(n: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(count >= 1);
    match n {
        2 => (0..count)
            .map(|k| vec![2.0 * std::f64::consts::PI * k as f64 / count as f64])
            .collect(),
        3 => {
            let k1 = ((count as f64 / 2.0).sqrt().round() as usize).max(3);
            let k2 = (count / k1).max(4);
            let (lo, hi) = (1e-3, std::f64::consts::PI - 1e-3);
            let mut grid = Vec::with_capacity(k1 * k2);
            for i in 0..k1 {
                let t0 = lo + (hi - lo) * (i as f64 + 0.5) / k1 as f64;
                for j in 0..k2 {
                    let t1 = 2.0 * std::f64::consts::PI * j as f64 / k2 as f64;
                    grid.push(vec![t0, t1]);
                }
            }
            grid
        }
        _ => sphere_directions(n, count)
            .iter()
            .map(angles_from_direction)
            .collect(),
    }
}

/// Convexity lower bound: at every sample the pencil `(P - alpha Upsilon,
/// Upsilon)` must have smallest eigenvalue at least `-tol`. `alpha` is a
/// function of the Euclidean radius.
pub fn check_convexity(
    field: &CoefficientField,
    alpha: &dyn Fn(f64) -> f64,
    radii: &[f64],
    angles: &[Vec<f64>],
    tol: f64,
) -> Result<AssumptionReport, MetricError> {
    let mut samples = Vec::with_capacity(radii.len() * angles.len());
    let mut worst: Option<SampleMargin> = None;
    for &r in radii {
        let h_r = default_radial_step(r);
        for theta in angles {
            let s = p_form(field, r, theta, h_r)?;
            let lhs = &s.p - &s.upsilon * alpha(r);
            let lam = pencil_min_eigenvalue(&lhs, &s.upsilon, r)?;
            let sample = SampleMargin {
                r,
                theta: theta.clone(),
                margin: lam,
            };
            if worst.as_ref().map_or(true, |w| lam < w.margin) {
                worst = Some(sample.clone());
            }
            samples.push(sample);
        }
    }
    let worst = worst.expect("at least one sample");
    let margin = worst.margin;
    Ok(AssumptionReport {
        check: CheckKind::Convexity,
        verdict: if margin >= -tol { Verdict::Pass } else { Verdict::Fail },
        margin,
        tolerance: tol,
        samples_checked: samples.len(),
        worst,
        samples,
    })
}

/// Convenience wrapper: cone identity at a default radius ladder.
pub fn default_check_radii(r0: f64) -> Vec<f64> {
    [1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0]
        .iter()
        .map(|s| s * r0)
        .collect()
}

/// Uniform radius grid on `[lo, hi]`, endpoints nudged inward so radial
/// differencing stays inside the domain.
pub fn radius_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && hi > lo);
    let eps = 1e-3 * (hi - lo);
    let (a, b) = (lo + eps, hi - eps);
    (0..count)
        .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{AlphaSpec, FieldVariant, CONVEXITY_TOL};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn builtin_cones_pass_the_identity_check() {
        let radii = default_check_radii(1.0);
        for f in [
            CoefficientField::isotropic(2, 1.0, 1.0).unwrap(),
            CoefficientField::isotropic(2, 1.0, 2.0).unwrap(),
            CoefficientField::warped(2, 1.0, 2.0, AlphaSpec::Coth { delta: 0.5 }).unwrap(),
        ] {
            let rep = check_cone_identity(&f, &radii, 1e-10, 64).unwrap();
            assert!(rep.passed(), "margin {}", rep.margin);
        }
    }

    #[test]
    fn anisotropic_cone_identity_holds_for_any_spd_block() {
        let q = nalgebra::DMatrix::from_row_slice(2, 2, &[3.0, 0.7, 0.7, 1.1]);
        let f = CoefficientField::anisotropic(2, 1.0, 2.0, q).unwrap();
        let rep = check_cone_identity(&f, &default_check_radii(1.0), 1e-10, 128).unwrap();
        assert!(rep.passed(), "margin {}", rep.margin);
        assert_eq!(f.variant(), FieldVariant::Anisotropic);
    }

    #[test]
    fn flat_field_on_a_steeper_cone_spec_fails_loudly() {
        // A = I claimed as an m = 2 cone: relative error |phi^2 - 1| = 3
        // at r = 1.
        let eval = Arc::new(|x: &nalgebra::DVector<f64>| {
            nalgebra::DMatrix::identity(x.len(), x.len())
        });
        let f = CoefficientField::custom(2, 1.0, Some(2.0), eval).unwrap();
        let rep = check_cone_identity(&f, &[1.0], 1e-10, 16).unwrap();
        assert!(!rep.passed());
        assert_relative_eq!(rep.margin, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn speed_bound_closed_forms() {
        let f1 = CoefficientField::isotropic(2, 1.0, 1.0).unwrap();
        assert_relative_eq!(radial_speed_bound(&f1, 3.0, 64).unwrap(), 1.0, epsilon = 1e-13);
        let f2 = CoefficientField::isotropic(2, 1.0, 2.0).unwrap();
        assert_relative_eq!(
            radial_speed_bound(&f2, 3.0, 64).unwrap(),
            1.0 / 6.0,
            epsilon = 1e-13
        );
        // Constant diag(4, 1): the supremum 2 is attained on the first axis,
        // which the planar direction grid hits exactly.
        let eval = Arc::new(|_: &nalgebra::DVector<f64>| {
            nalgebra::DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0])
        });
        let f3 = CoefficientField::custom(2, 0.5, None, eval).unwrap();
        assert_relative_eq!(radial_speed_bound(&f3, 1.0, 256).unwrap(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn conormal_norm_never_exceeds_the_speed_bound_on_cones() {
        let f = CoefficientField::warped(2, 1.0, 2.0, AlphaSpec::Coth { delta: 0.5 }).unwrap();
        for r in [1.0, 1.7, 2.9] {
            let bound = radial_speed_bound(&f, r, 64).unwrap();
            for t in [0.2, 1.4, 2.8] {
                let x = nalgebra::DVector::from_vec(vec![r * f64::cos(t), r * f64::sin(t)]);
                let c = conormal_norm(&f, &x).unwrap();
                assert!(c <= bound + 1e-12);
                assert_relative_eq!(c, 1.0 / (2.0 * r), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn divergence_ladder_increments_match_quadrature_closed_forms() {
        // m = 1: 1/F = 1, increments double: Y_k - Y_{k-1}.
        let f1 = CoefficientField::isotropic(2, 1.0, 1.0).unwrap();
        let rep = check_speed_divergence(&f1, 16.0, DEFAULT_DIVERGENCE_FRACTION, 16).unwrap();
        assert!(rep.passed());
        let incs: Vec<f64> = rep.samples.iter().map(|s| s.margin).collect();
        assert_eq!(incs.len(), 4);
        for (k, want) in [1.0, 2.0, 4.0, 8.0].iter().enumerate() {
            assert_relative_eq!(incs[k], want, max_relative = 1e-10);
        }
        assert_relative_eq!(rep.margin, 2.0, max_relative = 1e-10);

        // m = 2: 1/F = 2y, partial integrals Y^2 - r0^2, increments
        // quadruple.
        let f2 = CoefficientField::isotropic(2, 1.0, 2.0).unwrap();
        let rep2 = check_speed_divergence(&f2, 16.0, DEFAULT_DIVERGENCE_FRACTION, 16).unwrap();
        assert!(rep2.passed());
        let incs2: Vec<f64> = rep2.samples.iter().map(|s| s.margin).collect();
        assert_relative_eq!(incs2[0], 3.0, max_relative = 1e-10);
        assert_relative_eq!(incs2[1], 12.0, max_relative = 1e-10);
        assert_relative_eq!(rep2.margin, 4.0, max_relative = 1e-10);
    }

    #[test]
    fn convergent_escape_integral_fails_the_divergence_check() {
        // A = r^4 I gives F = y^2, 1/F integrable: increments halve.
        let eval = Arc::new(|x: &nalgebra::DVector<f64>| {
            let r2 = x.norm_squared();
            nalgebra::DMatrix::from_diagonal_element(x.len(), x.len(), r2 * r2)
        });
        let f = CoefficientField::custom(2, 1.0, None, eval).unwrap();
        let rep = check_speed_divergence(&f, 16.0, DEFAULT_DIVERGENCE_FRACTION, 16).unwrap();
        assert!(!rep.passed());
        assert_relative_eq!(rep.margin, 0.5, max_relative = 1e-6);
    }

    #[test]
    fn ladder_needs_room_to_double() {
        let f = CoefficientField::isotropic(2, 1.0, 1.0).unwrap();
        assert!(matches!(
            check_speed_divergence(&f, 5.0, 0.9, 8),
            Err(MetricError::LadderTooShort { .. })
        ));
    }

    #[test]
    fn euclidean_convexity_margin_is_zero_at_inverse_radius() {
        // P = (1/r) Upsilon exactly for the flat plane.
        let f = CoefficientField::isotropic(2, 1.0, 1.0).unwrap();
        let radii = radius_grid(1.0, 3.0, 7);
        let angles = angle_grid(2, 16);
        let rep = check_convexity(&f, &|r| 1.0 / r, &radii, &angles, 1e-6).unwrap();
        assert!(rep.passed());
        assert!(rep.margin.abs() <= 1e-6, "margin {}", rep.margin);
    }

    #[test]
    fn doubled_alpha_fails_convexity_with_strictly_negative_margin() {
        let f = CoefficientField::isotropic(2, 1.0, 1.0).unwrap();
        let radii = radius_grid(1.0, 3.0, 7);
        let angles = angle_grid(2, 8);
        let rep = check_convexity(&f, &|r| 2.0 / r, &radii, &angles, CONVEXITY_TOL).unwrap();
        assert!(!rep.passed());
        assert!(rep.margin < -0.3, "margin {}", rep.margin);
    }

    #[test]
    fn warped_field_passes_convexity_against_its_own_alpha() {
        let f = CoefficientField::warped(2, 1.0, 2.0, AlphaSpec::Coth { delta: 0.5 }).unwrap();
        let radii = radius_grid(1.0, 3.0, 9);
        let angles = angle_grid(2, 8);
        let alpha = |r: f64| f.alpha_of_r(r).unwrap();
        let rep = check_convexity(&f, &alpha, &radii, &angles, CONVEXITY_TOL).unwrap();
        assert!(rep.passed(), "margin {}", rep.margin);
    }
}
