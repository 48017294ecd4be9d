//! Structural verification of coefficient fields.
//!
//! Builds three fields — a flat cone, an anisotropic perturbation, and a
//! warped field with coth profile — and runs the geometric checks each one
//! supports: the radial cone identity, divergence of the inverse-speed
//! integral, convexity of the sphere-form pencil, and the Hessian identity
//! relating the second fundamental form to the radial derivative of the
//! sphere metric.  Also demonstrates that the convexity check is sharp:
//! doubling the first-order coefficient makes the pencil indefinite and the
//! check fails.
//!
//! Run with: `cargo run --release --example check_metric`

use conewave::metric::checks::{
    angle_grid, check_cone_identity, check_convexity, check_speed_divergence,
    default_check_radii, radius_grid, AssumptionReport,
};
use conewave::metric::hessian::{hessian_identity_residual, random_sphere_samples};
use conewave::metric::{
    default_direction_count, AlphaSpec, CoefficientField, DEFAULT_METRIC_STEP,
};
use nalgebra::DMatrix;

fn line(report: &AssumptionReport) {
    println!(
        "  {:<16} {} (margin {:+.3e}, tolerance {:.1e}, {} samples)",
        report.check.name(),
        if report.passed() { "PASS" } else { "FAIL" },
        report.margin,
        report.tolerance,
        report.samples_checked
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r0 = 1.0;

    // --- Flat cone in three dimensions, cone power 2 -----------------------
    let cone = CoefficientField::isotropic(3, r0, 2.0)?;
    println!("isotropic cone (n = 3, m = 2):");
    let radii = default_check_radii(r0);
    let dirs = default_direction_count(3);
    line(&check_cone_identity(&cone, &radii, 1e-10, dirs)?);
    line(&check_speed_divergence(&cone, 64.0 * r0, 0.9, dirs)?);

    // --- Anisotropic perturbation ------------------------------------------
    // Any symmetric positive-definite angular block keeps the cone
    // identity because the radial direction is projected out exactly.
    let q = DMatrix::from_row_slice(3, 3, &[1.3, 0.2, 0.0, 0.2, 0.9, 0.1, 0.0, 0.1, 1.1]);
    let aniso = CoefficientField::anisotropic(3, r0, 2.0, q)?;
    println!("anisotropic perturbation (n = 3, m = 2):");
    line(&check_cone_identity(&aniso, &radii, 1e-10, dirs)?);
    line(&check_speed_divergence(&aniso, 64.0 * r0, 0.9, dirs)?);

    // --- Warped field: coth profile -----------------------------------------
    let delta = 0.5;
    let m = 2.0;
    let warped = CoefficientField::warped(2, r0, m, AlphaSpec::Coth { delta })?;
    println!("warped field (n = 2, m = 2, coth profile, delta = {delta}):");
    let wradii = default_check_radii(r0);
    let wdirs = default_direction_count(2);
    line(&check_cone_identity(&warped, &wradii, 1e-10, wdirs)?);
    line(&check_speed_divergence(&warped, 64.0 * r0, 0.9, wdirs)?);

    // Convexity: the pencil (P - alpha(r) Upsilon, Upsilon) must be
    // nonnegative.  alpha is a function of the geodesic radius rho = r^m.
    let spec = AlphaSpec::Coth { delta };
    let alpha = |r: f64| spec.value(r.powf(m));
    let conv_radii = radius_grid(r0, 3.0 * r0, 16);
    let angles = angle_grid(2, 64);
    line(&check_convexity(&warped, &alpha, &conv_radii, &angles, 1e-8)?);

    // Hessian identity: tangential Hessian of the geodesic radius equals
    // the P-form, both whitened by the sphere metric.
    let h = DEFAULT_METRIC_STEP;
    let samples = random_sphere_samples(2, 1.25 * r0, 3.0 * r0, 100, 7);
    let hess = hessian_identity_residual(&warped, &samples, h, h)?;
    println!(
        "  {:<16} {} (residual {:.3e} over {} samples)",
        "hessian-identity",
        if hess.residual <= 1e-4 { "PASS" } else { "FAIL" },
        hess.residual,
        hess.samples_checked
    );

    // --- Sharpness control ---------------------------------------------------
    // With twice the admissible first-order coefficient the pencil dips
    // strictly negative: the check must fail, and by a margin.
    let alpha2 = |r: f64| 2.0 * spec.value(r.powf(m));
    let control = check_convexity(&warped, &alpha2, &conv_radii, &angles, 1e-8)?;
    println!("control with doubled coefficient (must fail):");
    line(&control);
    assert!(
        !control.passed() && control.margin < 0.0,
        "the doubled-coefficient pencil should be indefinite"
    );

    println!("all structural checks behaved as expected");
    Ok(())
}
