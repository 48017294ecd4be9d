//! Experiment configuration: a single TOML document describing the
//! coefficient field, initial data, grid, observation plan, analysis
//! policy, structural checks, and output selection.
//!
//! Unknown keys are rejected everywhere (catching typos at parse time with
//! a line number); semantic problems are reported with the offending
//! field's dotted name. The canonical JSON serialization of the parsed
//! struct — not the source text — is hashed, so two spellings of the same
//! configuration get the same hash.

use crate::decay::ClassifyPolicy;
use crate::metric::{AlphaSpec, CoefficientField, FieldVariant, MetricError};
use crate::planar::{Bump2D, PlanarError, PolarGrid};
use crate::radial::{BumpSpec, DataKind, RadialGrid, SolverError};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {why}")]
    Invalid { field: String, why: String },
    #[error("building the coefficient field failed: {0}")]
    Metric(#[from] MetricError),
}

fn invalid(field: &str, why: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        why: why.into(),
    }
}

/// Which solver a run drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Radial,
    Planar,
}

/// `[metric]` — the coefficient field.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub variant: FieldVariant,
    pub dimension: usize,
    pub obstacle_radius: f64,
    pub cone_power: f64,
    /// Convexity profile; required by the warped variants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaConfig>,
    /// Constant tangential block `Q`, row-major; required by the
    /// anisotropic variants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangential: Option<Vec<Vec<f64>>>,
}

/// Convexity profile selector with flat, typo-safe keys.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    pub kind: AlphaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaKind {
    Coth,
    InversePower,
}

impl AlphaConfig {
    pub fn to_spec(&self) -> Result<AlphaSpec, ConfigError> {
        match self.kind {
            AlphaKind::Coth => {
                if self.m1.is_some() {
                    return Err(invalid("metric.alpha.m1", "not used by the coth profile"));
                }
                let delta = self
                    .delta
                    .ok_or_else(|| invalid("metric.alpha.delta", "required by the coth profile"))?;
                Ok(AlphaSpec::Coth { delta })
            }
            AlphaKind::InversePower => {
                if self.delta.is_some() {
                    return Err(invalid(
                        "metric.alpha.delta",
                        "not used by the inverse-power profile",
                    ));
                }
                let m1 = self.m1.ok_or_else(|| {
                    invalid("metric.alpha.m1", "required by the inverse-power profile")
                })?;
                Ok(AlphaSpec::InversePower { m1 })
            }
        }
    }
}

/// `[[data]]` — one initial bump, specified in the geodesic coordinate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKind,
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    /// `cos(angular_mode * theta)` modulation; planar runs only.
    #[serde(default)]
    pub angular_mode: usize,
}

impl DataConfig {
    pub fn to_bump(&self) -> BumpSpec {
        BumpSpec {
            center: self.center,
            width: self.width,
            amplitude: self.amplitude,
            kind: self.kind,
        }
    }

    pub fn to_bump_2d(&self) -> Bump2D {
        Bump2D {
            center: self.center,
            width: self.width,
            amplitude: self.amplitude,
            angular_mode: self.angular_mode,
            kind: self.kind,
        }
    }
}

fn default_cfl() -> f64 {
    0.5
}

/// `[grid]` — discretization knobs; radial and planar runs use disjoint
/// key subsets.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub solver: SolverKind,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Radial: outer edge of the geodesic domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
    /// Radial: cell count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    /// Planar: outer Euclidean radius of the annulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Planar: radial cell count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_r: Option<usize>,
    /// Planar: angular cell count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
}

fn default_sample_every() -> usize {
    1
}

/// `[observation]` — where and how long to watch.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationConfig {
    /// Euclidean radii of the observation balls.
    pub radii: Vec<f64>,
    pub t_final: f64,
    /// Record diagnostics every this many steps (the final step is always
    /// recorded).
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
}

/// `[analysis]` — classification policy override and optional explicit
/// fit window.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub policy: ClassifyPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
}

/// Which structural checks `check-metric` runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckSelect {
    ConeIdentity,
    SpeedDivergence,
    Convexity,
    HessianIdentity,
}

fn default_radius_count() -> usize {
    16
}

fn default_angle_count() -> usize {
    64
}

fn default_divergence_fraction() -> f64 {
    crate::metric::checks::DEFAULT_DIVERGENCE_FRACTION
}

fn default_identity_tolerance() -> f64 {
    crate::metric::CONE_IDENTITY_TOL
}

fn default_convexity_tolerance() -> f64 {
    crate::metric::CONVEXITY_TOL
}

fn default_hessian_tolerance() -> f64 {
    1e-4
}

fn default_energy_drift_tolerance() -> f64 {
    5e-3
}

fn default_front_leak_tolerance() -> f64 {
    1e-4
}

/// `[checks]` — structural-check sampling plan plus the run-invariant
/// tolerances that decide a run record's pass flag.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    /// Subset to run; empty means every check the field supports.
    pub run: Vec<CheckSelect>,
    /// Explicit radius samples; default is a ladder scaled from the
    /// obstacle radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Convexity sampling range (defaults: obstacle radius to three times
    /// it) and counts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_hi: Option<f64>,
    pub radius_count: usize,
    pub angle_count: usize,
    /// Directions per sphere for supremum sampling; default depends on the
    /// dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    /// Top of the doubling ladder for the divergence check; default
    /// `64 * obstacle_radius`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    pub divergence_fraction: f64,
    pub identity_tolerance: f64,
    pub convexity_tolerance: f64,
    /// Random samples for the curvature-identity check (0 disables it
    /// unless explicitly listed in `run`).
    pub hessian_samples: usize,
    pub hessian_tolerance: f64,
    /// Run invariants: allowed relative drift of total energy, and allowed
    /// fraction of energy beyond the causal front, over a whole run.
    pub energy_drift_tolerance: f64,
    pub front_leak_tolerance: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            run: Vec::new(),
            radii: None,
            radius_lo: None,
            radius_hi: None,
            radius_count: default_radius_count(),
            angle_count: default_angle_count(),
            directions: None,
            y_max: None,
            divergence_fraction: default_divergence_fraction(),
            identity_tolerance: default_identity_tolerance(),
            convexity_tolerance: default_convexity_tolerance(),
            hessian_samples: 100,
            hessian_tolerance: default_hessian_tolerance(),
            energy_drift_tolerance: default_energy_drift_tolerance(),
            front_leak_tolerance: default_front_leak_tolerance(),
        }
    }
}

/// `[output]` — artifact selection; the directory comes from `--out`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub trace: bool,
    pub plot: bool,
    pub record: bool,
    pub snapshots: bool,
    /// Artifact file stem; defaults to the subcommand name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trace: true,
            plot: true,
            record: true,
            snapshots: false,
            label: None,
        }
    }
}

/// `[sweep]` — the axis for `sweep`: one run per cone power.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub cone_powers: Vec<f64>,
}

/// The whole experiment document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub metric: MetricConfig,
    #[serde(default)]
    pub data: Vec<DataConfig>,
    pub grid: GridConfig,
    pub observation: ObservationConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    /// Parse and semantically validate a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 over the canonical JSON serialization of the parsed
    /// document; stable across key order and default spelling.
    pub fn hash(&self) -> String {
        let canonical =
            serde_json::to_string(self).expect("config serialization cannot fail");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(2 * digest.len() + 7);
        hex.push_str("sha256:");
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.metric;
        if m.dimension < 1 {
            return Err(invalid("metric.dimension", "must be at least 1"));
        }
        if !(m.obstacle_radius.is_finite() && m.obstacle_radius > 0.0) {
            return Err(invalid("metric.obstacle_radius", "must be positive"));
        }
        if !(m.cone_power.is_finite() && m.cone_power > 0.0) {
            return Err(invalid("metric.cone_power", "must be positive"));
        }
        match m.variant {
            FieldVariant::Custom => {
                return Err(invalid(
                    "metric.variant",
                    "custom fields cannot be described in a config document",
                ));
            }
            FieldVariant::Warped | FieldVariant::WarpedAnisotropic => {
                let alpha = m
                    .alpha
                    .as_ref()
                    .ok_or_else(|| invalid("metric.alpha", "required by warped variants"))?;
                alpha.to_spec()?;
            }
            FieldVariant::Isotropic | FieldVariant::Anisotropic => {
                if m.alpha.is_some() {
                    return Err(invalid(
                        "metric.alpha",
                        "only meaningful for warped variants",
                    ));
                }
            }
        }
        let needs_q = matches!(
            m.variant,
            FieldVariant::Anisotropic | FieldVariant::WarpedAnisotropic
        );
        match (&m.tangential, needs_q) {
            (None, true) => {
                return Err(invalid(
                    "metric.tangential",
                    "required by anisotropic variants",
                ));
            }
            (Some(rows), _) => {
                if rows.len() != m.dimension
                    || rows.iter().any(|row| row.len() != m.dimension)
                {
                    return Err(invalid(
                        "metric.tangential",
                        format!("must be a {0} x {0} matrix", m.dimension),
                    ));
                }
                if !needs_q {
                    return Err(invalid(
                        "metric.tangential",
                        "only meaningful for anisotropic variants",
                    ));
                }
            }
            (None, false) => {}
        }

        for (i, d) in self.data.iter().enumerate() {
            let field = |name: &str| format!("data[{i}].{name}");
            if !(d.width.is_finite() && d.width > 0.0) {
                return Err(invalid(&field("width"), "must be positive"));
            }
            if !(d.center.is_finite() && d.amplitude.is_finite()) {
                return Err(invalid(&field("center"), "center and amplitude must be finite"));
            }
            if d.angular_mode > 0 && self.grid.solver == SolverKind::Radial {
                return Err(invalid(
                    &field("angular_mode"),
                    "only meaningful for the planar solver",
                ));
            }
        }

        let g = &self.grid;
        if !(g.cfl > 0.0 && g.cfl <= crate::radial::MAX_CFL) {
            return Err(invalid(
                "grid.cfl",
                format!("must lie in (0, {}]", crate::radial::MAX_CFL),
            ));
        }
        match g.solver {
            SolverKind::Radial => {
                if g.rho_max.is_none() {
                    return Err(invalid("grid.rho_max", "required by the radial solver"));
                }
                if g.n_cells.is_none() {
                    return Err(invalid("grid.n_cells", "required by the radial solver"));
                }
                for (name, set) in [
                    ("grid.r_max", g.r_max.is_some()),
                    ("grid.n_r", g.n_r.is_some()),
                    ("grid.n_theta", g.n_theta.is_some()),
                ] {
                    if set {
                        return Err(invalid(name, "only meaningful for the planar solver"));
                    }
                }
            }
            SolverKind::Planar => {
                if m.dimension != 2 {
                    return Err(invalid(
                        "metric.dimension",
                        "the planar solver handles dimension 2",
                    ));
                }
                if g.r_max.is_none() {
                    return Err(invalid("grid.r_max", "required by the planar solver"));
                }
                if g.n_r.is_none() {
                    return Err(invalid("grid.n_r", "required by the planar solver"));
                }
                if g.n_theta.is_none() {
                    return Err(invalid("grid.n_theta", "required by the planar solver"));
                }
                for (name, set) in [
                    ("grid.rho_max", g.rho_max.is_some()),
                    ("grid.n_cells", g.n_cells.is_some()),
                ] {
                    if set {
                        return Err(invalid(name, "only meaningful for the radial solver"));
                    }
                }
            }
        }

        let o = &self.observation;
        if !(o.t_final.is_finite() && o.t_final > 0.0) {
            return Err(invalid("observation.t_final", "must be positive"));
        }
        if o.sample_every == 0 {
            return Err(invalid("observation.sample_every", "must be positive"));
        }
        for (i, &a) in o.radii.iter().enumerate() {
            let field = format!("observation.radii[{i}]");
            if !(a.is_finite() && a > m.obstacle_radius) {
                return Err(invalid(
                    &field,
                    "must exceed the obstacle radius",
                ));
            }
            let inside = match g.solver {
                SolverKind::Radial => {
                    a.powf(m.cone_power) <= g.rho_max.unwrap_or(f64::INFINITY)
                }
                SolverKind::Planar => a <= g.r_max.unwrap_or(f64::INFINITY),
            };
            if !inside {
                return Err(invalid(&field, "observation ball leaves the domain"));
            }
        }

        if let Some(window) = self.analysis.window {
            if !(window.0.is_finite() && window.1.is_finite() && window.1 > window.0) {
                return Err(invalid("analysis.window", "must be an increasing pair"));
            }
        }

        let c = &self.checks;
        if !(c.divergence_fraction > 0.0 && c.divergence_fraction.is_finite()) {
            return Err(invalid("checks.divergence_fraction", "must be positive"));
        }
        if c.run.contains(&CheckSelect::Convexity) && m.alpha.is_none() {
            return Err(invalid(
                "checks.run",
                "the convexity check needs metric.alpha",
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.cone_powers.is_empty() {
                return Err(invalid("sweep.cone_powers", "must not be empty"));
            }
            for (i, &p) in sweep.cone_powers.iter().enumerate() {
                if !(p.is_finite() && p > 0.0) {
                    return Err(invalid(
                        &format!("sweep.cone_powers[{i}]"),
                        "must be positive",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Build the coefficient field the metric section describes.
    pub fn build_field(&self) -> Result<CoefficientField, ConfigError> {
        let m = &self.metric;
        if m.dimension < 2 {
            return Err(invalid(
                "metric.dimension",
                "coefficient fields need dimension at least 2 \
                 (one-dimensional runs use the radial solver directly)",
            ));
        }
        let q = m.tangential.as_ref().map(|rows| {
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            DMatrix::from_row_slice(m.dimension, m.dimension, &flat)
        });
        let field = match m.variant {
            FieldVariant::Isotropic => {
                CoefficientField::isotropic(m.dimension, m.obstacle_radius, m.cone_power)?
            }
            FieldVariant::Anisotropic => CoefficientField::anisotropic(
                m.dimension,
                m.obstacle_radius,
                m.cone_power,
                q.expect("validated"),
            )?,
            FieldVariant::Warped => CoefficientField::warped(
                m.dimension,
                m.obstacle_radius,
                m.cone_power,
                m.alpha.as_ref().expect("validated").to_spec()?,
            )?,
            FieldVariant::WarpedAnisotropic => CoefficientField::warped_anisotropic(
                m.dimension,
                m.obstacle_radius,
                m.cone_power,
                m.alpha.as_ref().expect("validated").to_spec()?,
                q.expect("validated"),
            )?,
            FieldVariant::Custom => unreachable!("rejected by validate"),
        };
        Ok(field)
    }

    /// Build the radial grid for a radial run.
    pub fn build_radial_grid(&self) -> Result<RadialGrid, SolverError> {
        RadialGrid::new(
            self.metric.dimension,
            self.metric.cone_power,
            self.metric.obstacle_radius,
            self.grid.rho_max.expect("validated radial config"),
            self.grid.n_cells.expect("validated radial config"),
        )
    }

    /// Build the annulus for a planar run.
    pub fn build_polar_grid(&self) -> Result<PolarGrid, PlanarError> {
        PolarGrid::new(
            self.metric.obstacle_radius,
            self.grid.r_max.expect("validated planar config"),
            self.grid.n_r.expect("validated planar config"),
            self.grid.n_theta.expect("validated planar config"),
        )
    }

    /// The checks to run: the configured subset, or everything the field
    /// supports.
    pub fn selected_checks(&self) -> Vec<CheckSelect> {
        if !self.checks.run.is_empty() {
            return self.checks.run.clone();
        }
        let mut all = vec![
            CheckSelect::ConeIdentity,
            CheckSelect::SpeedDivergence,
            CheckSelect::HessianIdentity,
        ];
        if self.metric.alpha.is_some() {
            all.insert(2, CheckSelect::Convexity);
        }
        all
    }

    /// Artifact file stem.
    pub fn label(&self, command: &str) -> String {
        self.output
            .label
            .clone()
            .unwrap_or_else(|| command.to_string())
    }
}
