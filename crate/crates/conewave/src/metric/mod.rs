//! Coefficient fields `A(x)` on the exterior of a centered ball.
//!
//! A field assigns to each point `x` with `|x| >= r0` a symmetric positive
//! definite matrix `A(x)`. A field is a *cone field* with power `m > 0` when
//! `A(x) x = x / phi(|x|)^2` with `phi(r) = m r^{m-1}`; the induced geodesic
//! radial coordinate is `rho = r^m`, so radial signals travel at unit speed
//! in `rho`. Four closed-form constructions are provided:
//!
//! - `isotropic`: `A = I / phi^2`, the conformal cone.
//! - `anisotropic`: cone radial speed plus an arbitrary constant symmetric
//!   positive definite tangential block `Q`, restricted to the sphere
//!   tangent space on both sides.
//! - `warped`: cone radial speed with tangential scalar `exp(-H(r))`, where
//!   `H` integrates `2 alpha(rho(y)) phi(y) - 2/y` from `r0`. This makes the
//!   scaled radial derivative of the sphere form equal `alpha` times the
//!   sphere form, which is the convexity profile the decay theory needs.
//! - `warped_anisotropic`: the same warp applied to a tangential block `Q`.
//!
//! Arbitrary fields enter through [`CoefficientField::custom`].

pub mod checks;
pub mod hessian;
pub mod sphere;

use crate::quad::{CachedIntegral, QuadError};
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

/// Default evaluation-point count on a sphere for supremum sampling.
pub fn default_direction_count(n: usize) -> usize {
    match n {
        2 => 256,
        3 => 1024,
        _ => 4096,
    }
}

/// Relative tolerance for the cone identity on the built-in constructions.
pub const CONE_IDENTITY_TOL: f64 = 1e-10;

/// Pass tolerance for the convexity pencil margin.
pub const CONVEXITY_TOL: f64 = 1e-8;

/// Default step for radial central differences of the sphere form.
pub fn default_radial_step(r: f64) -> f64 {
    (1e-4 * r).max(1e-6)
}

/// Default step for Cartesian central differences of the inverse field.
pub const DEFAULT_METRIC_STEP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("obstacle radius must be positive and finite, got {0}")]
    InvalidObstacleRadius(f64),
    #[error("cone power must be positive and finite, got {0}")]
    InvalidConePower(f64),
    #[error("invalid convexity profile: {0}")]
    InvalidAlpha(String),
    #[error("tangential matrix must be {n} x {n}")]
    TangentialWrongShape { n: usize },
    #[error("tangential matrix must be symmetric (max asymmetry {asym:e})")]
    TangentialNotSymmetric { asym: f64 },
    #[error("tangential matrix must be positive definite")]
    TangentialNotPositiveDefinite,
    #[error("point at radius {r} lies inside the obstacle of radius {r0}")]
    InsideObstacle { r: f64, r0: f64 },
    #[error("operation requires a cone field with a declared power")]
    NotACone,
    #[error("sphere form is numerically singular at r = {r}")]
    SingularSphereForm { r: f64 },
    #[error("coefficient matrix is numerically singular at r = {r}")]
    SingularCoefficient { r: f64 },
    #[error("differencing step {h} leaves the domain at r = {r} (obstacle radius {r0})")]
    StepOutsideDomain { r: f64, h: f64, r0: f64 },
    #[error("speed bound is not positive at y = {y}: got {value}")]
    NonPositiveSpeed { y: f64, value: f64 },
    #[error("doubling ladder needs at least {need} rungs below y_max = {y_max}, got {got}")]
    LadderTooShort { y_max: f64, got: usize, need: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Convexity profile `alpha`, given as a function of the geodesic radius
/// `rho = r^m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaSpec {
    /// `alpha = delta * coth(delta * rho)`; decreasing, approaches `delta`.
    Coth { delta: f64 },
    /// `alpha = m1 / rho` with `m1 > 1/2`.
    InversePower { m1: f64 },
}

impl AlphaSpec {
    pub fn value(&self, rho: f64) -> f64 {
        match *self {
            AlphaSpec::Coth { delta } => delta / (delta * rho).tanh(),
            AlphaSpec::InversePower { m1 } => m1 / rho,
        }
    }

    fn validate(&self) -> Result<(), MetricError> {
        match *self {
            AlphaSpec::Coth { delta } => {
                if delta > 0.0 && delta.is_finite() {
                    Ok(())
                } else {
                    Err(MetricError::InvalidAlpha(format!(
                        "coth profile needs delta > 0, got {delta}"
                    )))
                }
            }
            AlphaSpec::InversePower { m1 } => {
                if m1 > 0.5 && m1.is_finite() {
                    Ok(())
                } else {
                    Err(MetricError::InvalidAlpha(format!(
                        "inverse-power profile needs m1 > 1/2, got {m1}"
                    )))
                }
            }
        }
    }
}

/// Tag identifying how a field was constructed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldVariant {
    Isotropic,
    Anisotropic,
    Warped,
    WarpedAnisotropic,
    Custom,
}

type CustomEval = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum FieldKind {
    Isotropic,
    Anisotropic { q: DMatrix<f64> },
    Warped,
    WarpedAnisotropic { q: DMatrix<f64> },
    Custom { eval: CustomEval },
}

/// Matrix-valued coefficient field on `{ |x| >= r0 }`.
#[derive(Clone)]
pub struct CoefficientField {
    n: usize,
    r0: f64,
    m: Option<f64>,
    alpha: Option<AlphaSpec>,
    warp: Option<Arc<CachedIntegral>>,
    variant: FieldVariant,
    kind: FieldKind,
}

fn validate_base(n: usize, r0: f64) -> Result<(), MetricError> {
    if n < 2 {
        return Err(MetricError::InvalidDimension(n));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(MetricError::InvalidObstacleRadius(r0));
    }
    Ok(())
}

fn validate_power(m: f64) -> Result<(), MetricError> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(MetricError::InvalidConePower(m))
    }
}

fn validate_tangential(n: usize, q: &DMatrix<f64>) -> Result<(), MetricError> {
    if q.nrows() != n || q.ncols() != n {
        return Err(MetricError::TangentialWrongShape { n });
    }
    let mut asym = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((q[(i, j)] - q[(j, i)]).abs());
            scale = scale.max(q[(i, j)].abs());
        }
    }
    if asym > 1e-12 * (1.0 + scale) {
        return Err(MetricError::TangentialNotSymmetric { asym });
    }
    if Cholesky::new(q.clone()).is_none() {
        return Err(MetricError::TangentialNotPositiveDefinite);
    }
    Ok(())
}

fn build_warp(r0: f64, m: f64, alpha: AlphaSpec) -> Arc<CachedIntegral> {
    let h = move |y: f64| 2.0 * alpha.value(y.powf(m)) * m * y.powf(m - 1.0) - 2.0 / y;
    Arc::new(CachedIntegral::new(h, r0, r0 / 256.0, 1e-10))
}

impl CoefficientField {
    /// `A = I / phi^2`.
    pub fn isotropic(n: usize, r0: f64, m: f64) -> Result<Self, MetricError> {
        validate_base(n, r0)?;
        validate_power(m)?;
        Ok(Self {
            n,
            r0,
            m: Some(m),
            alpha: None,
            warp: None,
            variant: FieldVariant::Isotropic,
            kind: FieldKind::Isotropic,
        })
    }

    /// Cone radial speed with tangential block `Q` (constant, symmetric,
    /// positive definite), applied on the sphere tangent space.
    pub fn anisotropic(n: usize, r0: f64, m: f64, q: DMatrix<f64>) -> Result<Self, MetricError> {
        validate_base(n, r0)?;
        validate_power(m)?;
        validate_tangential(n, &q)?;
        Ok(Self {
            n,
            r0,
            m: Some(m),
            alpha: None,
            warp: None,
            variant: FieldVariant::Anisotropic,
            kind: FieldKind::Anisotropic { q },
        })
    }

    /// Cone radial speed with tangential scalar `exp(-H(r))` driven by the
    /// convexity profile `alpha`.
    pub fn warped(n: usize, r0: f64, m: f64, alpha: AlphaSpec) -> Result<Self, MetricError> {
        validate_base(n, r0)?;
        validate_power(m)?;
        alpha.validate()?;
        Ok(Self {
            n,
            r0,
            m: Some(m),
            alpha: Some(alpha),
            warp: Some(build_warp(r0, m, alpha)),
            variant: FieldVariant::Warped,
            kind: FieldKind::Warped,
        })
    }

    /// Warped construction with tangential block `Q` frozen at the obstacle
    /// sphere (evaluated at `r0 * x/|x|`).
    pub fn warped_anisotropic(
        n: usize,
        r0: f64,
        m: f64,
        alpha: AlphaSpec,
        q: DMatrix<f64>,
    ) -> Result<Self, MetricError> {
        validate_base(n, r0)?;
        validate_power(m)?;
        alpha.validate()?;
        validate_tangential(n, &q)?;
        Ok(Self {
            n,
            r0,
            m: Some(m),
            alpha: Some(alpha),
            warp: Some(build_warp(r0, m, alpha)),
            variant: FieldVariant::WarpedAnisotropic,
            kind: FieldKind::WarpedAnisotropic { q },
        })
    }

    /// Wrap an arbitrary evaluator. `cone_power` declares the power the
    /// field claims to satisfy; checks verify the claim, operations that
    /// need `phi` fail without it.
    pub fn custom(
        n: usize,
        r0: f64,
        cone_power: Option<f64>,
        eval: CustomEval,
    ) -> Result<Self, MetricError> {
        validate_base(n, r0)?;
        if let Some(m) = cone_power {
            validate_power(m)?;
        }
        Ok(Self {
            n,
            r0,
            m: cone_power,
            alpha: None,
            warp: None,
            variant: FieldVariant::Custom,
            kind: FieldKind::Custom { eval },
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn obstacle_radius(&self) -> f64 {
        self.r0
    }

    pub fn cone_power(&self) -> Option<f64> {
        self.m
    }

    pub fn variant(&self) -> FieldVariant {
        self.variant
    }

    pub fn alpha(&self) -> Option<AlphaSpec> {
        self.alpha
    }

    /// `alpha(r)` as a function of the Euclidean radius, when the field
    /// carries a convexity profile.
    pub fn alpha_of_r(&self, r: f64) -> Option<f64> {
        match (self.alpha, self.m) {
            (Some(a), Some(m)) => Some(a.value(r.powf(m))),
            _ => None,
        }
    }

    /// `phi(r) = m r^{m-1}`.
    pub fn phi(&self, r: f64) -> Result<f64, MetricError> {
        let m = self.m.ok_or(MetricError::NotACone)?;
        Ok(m * r.powf(m - 1.0))
    }

    /// Scalar multiplying the tangential block, `exp(-H(r))`; `1` for the
    /// unwarped constructions.
    pub fn tangential_scale(&self, r: f64) -> Result<f64, MetricError> {
        match &self.warp {
            Some(cache) => Ok((-cache.eval(r)?).exp()),
            None => Ok(1.0),
        }
    }

    /// Pre-populate the warp integral cache up to radius `r`; evaluation is
    /// thread-safe either way, this just avoids write-lock contention.
    pub fn warm_cache(&self, r: f64) -> Result<(), MetricError> {
        if let Some(cache) = &self.warp {
            cache.warm(r)?;
        }
        Ok(())
    }

    /// Evaluate `A(x)`. The result is exactly symmetric entrywise.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, MetricError> {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        let r = x.norm();
        if r < self.r0 * (1.0 - 1e-12) {
            return Err(MetricError::InsideObstacle { r, r0: self.r0 });
        }
        match &self.kind {
            FieldKind::Isotropic => {
                let phi = self.phi(r)?;
                let c = 1.0 / (phi * phi);
                Ok(DMatrix::from_diagonal_element(self.n, self.n, c))
            }
            FieldKind::Warped => {
                let phi = self.phi(r)?;
                let radial = 1.0 / (phi * phi);
                let tang = self.tangential_scale(r)?;
                Ok(self.radial_tangential_scalar(x, r, radial, tang))
            }
            FieldKind::Anisotropic { q } => {
                let phi = self.phi(r)?;
                self.radial_tangential_block(x, r, 1.0 / (phi * phi), q, 1.0)
            }
            FieldKind::WarpedAnisotropic { q } => {
                let phi = self.phi(r)?;
                let scale = self.tangential_scale(r)?;
                self.radial_tangential_block(x, r, 1.0 / (phi * phi), q, scale)
            }
            FieldKind::Custom { eval } => Ok(eval(x)),
        }
    }

    /// `radial * unit_x unit_x^T + tang * (I - unit_x unit_x^T)`, assembled
    /// entrywise so symmetry is exact.
    fn radial_tangential_scalar(
        &self,
        x: &DVector<f64>,
        r: f64,
        radial: f64,
        tang: f64,
    ) -> DMatrix<f64> {
        let n = self.n;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let pr = (x[i] / r) * (x[j] / r);
                let val = radial * pr + tang * (if i == j { 1.0 } else { 0.0 } - pr);
                a[(i, j)] = val;
                a[(j, i)] = val;
            }
        }
        a
    }

    /// `radial * unit_x unit_x^T + scale * Pt Q Pt` with `Pt` the tangential
    /// projector; the product is mirror-averaged to exact symmetry.
    fn radial_tangential_block(
        &self,
        x: &DVector<f64>,
        r: f64,
        radial: f64,
        q: &DMatrix<f64>,
        scale: f64,
    ) -> Result<DMatrix<f64>, MetricError> {
        let n = self.n;
        let unit = x / r;
        let mut pt = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                pt[(i, j)] -= unit[i] * unit[j];
            }
        }
        let b = &pt * q * &pt;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let val = radial * unit[i] * unit[j] + scale * 0.5 * (b[(i, j)] + b[(j, i)]);
                a[(i, j)] = val;
                a[(j, i)] = val;
            }
        }
        Ok(a)
    }
}

/// Geodesic radial coordinate `rho = r^m` of a cone field normalized so
/// that the obstacle sphere sits at `rho = r0^m`.
pub fn geodesic_radius(m: f64, r0: f64, r: f64) -> Result<f64, MetricError> {
    validate_power(m)?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(MetricError::InvalidObstacleRadius(r0));
    }
    if r < r0 * (1.0 - 1e-12) {
        return Err(MetricError::InsideObstacle { r, r0 });
    }
    Ok(r.powf(m))
}
