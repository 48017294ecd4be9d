//! The five commands behind the command-line binary: structural checks on
//! the coefficient field, the two solvers, trace re-analysis, and the
//! cone-power sweep. Each returns a [`CommandOutput`] whose `pass` flag
//! distinguishes exit 0 from exit 1; real failures surface as [`CmdError`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{CheckSelect, ConfigError, ExperimentConfig, SolverKind};
use super::plot::{decay_plot, FitOverlay, PlotSeries};
use super::record::{fits_to_csv, unix_now, FitRow, InvariantChecks, RunRecord, SolverSummary};
use super::snapshot::{GridKind, Snapshot};
use super::trace::Trace;
use super::{CmdError, CommandOutput};
use crate::decay::{classify_with_window, default_window, DecayModel, EnergySeries, SeriesMeta};
use crate::metric::checks::{
    angle_grid, check_cone_identity, check_convexity, check_speed_divergence,
    default_check_radii, radius_grid, AssumptionReport, CheckKind, Verdict,
};
use crate::metric::hessian::{hessian_identity_residual, random_sphere_samples};
use crate::metric::{default_direction_count, CoefficientField, DEFAULT_METRIC_STEP};
use crate::planar::solve_planar;
use crate::radial::{
    exp_weighted_energy, local_energy, solve_radial, support_mass_outside, total_energy,
    BumpSpec,
};

/// Everything a finished run leaves behind, for callers (the sweep) that
/// aggregate across runs.
pub struct RunArtifacts {
    pub record: RunRecord,
    pub text: String,
}

impl RunArtifacts {
    fn into_output(self) -> CommandOutput {
        CommandOutput {
            pass: self.record.pass,
            text: self.text,
        }
    }
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

/// Execute one selected check with the config's sampling parameters.
fn run_check(
    field: &CoefficientField,
    cfg: &ExperimentConfig,
    select: CheckSelect,
    seed: u64,
) -> Result<AssumptionReport, CmdError> {
    let checks = &cfg.checks;
    let r0 = field.obstacle_radius();
    let n = field.dimension();
    let dirs = checks
        .directions
        .unwrap_or_else(|| default_direction_count(n));
    match select {
        CheckSelect::ConeIdentity => {
            let radii = checks
                .radii
                .clone()
                .unwrap_or_else(|| default_check_radii(r0));
            Ok(check_cone_identity(
                field,
                &radii,
                checks.identity_tolerance,
                dirs,
            )?)
        }
        CheckSelect::SpeedDivergence => {
            let y_max = checks.y_max.unwrap_or(64.0 * r0);
            Ok(check_speed_divergence(
                field,
                y_max,
                checks.divergence_fraction,
                dirs,
            )?)
        }
        CheckSelect::Convexity => {
            let spec = cfg
                .metric
                .alpha
                .as_ref()
                .ok_or_else(|| ConfigError::Invalid {
                    field: "checks.run".into(),
                    why: "the convexity check needs a [metric.alpha] profile".into(),
                })?
                .to_spec()?;
            let m = cfg.metric.cone_power;
            // The profile lives in the geodesic coordinate; the check
            // samples Euclidean radii.
            let alpha = move |r: f64| spec.value(r.powf(m));
            let lo = checks.radius_lo.unwrap_or(r0);
            let hi = checks.radius_hi.unwrap_or(3.0 * r0);
            let radii = radius_grid(lo, hi, checks.radius_count);
            let angles = angle_grid(n, checks.angle_count);
            Ok(check_convexity(
                field,
                &alpha,
                &radii,
                &angles,
                checks.convexity_tolerance,
            )?)
        }
        CheckSelect::HessianIdentity => {
            let h = DEFAULT_METRIC_STEP;
            // Keep every stencil point clear of the obstacle boundary.
            let lo = checks
                .radius_lo
                .unwrap_or(1.25 * r0)
                .max(r0 + 100.0 * h * r0.max(1.0));
            let hi = checks.radius_hi.unwrap_or(3.0 * r0).max(lo * 1.5);
            let count = checks.hessian_samples.max(1);
            let samples = random_sphere_samples(n, lo, hi, count, seed);
            let hc = hessian_identity_residual(field, &samples, h, h)?;
            let verdict = if hc.residual <= checks.hessian_tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            Ok(AssumptionReport {
                check: CheckKind::HessianIdentity,
                verdict,
                margin: hc.residual,
                tolerance: checks.hessian_tolerance,
                samples_checked: hc.samples_checked,
                worst: hc.worst.clone(),
                samples: vec![hc.worst],
            })
        }
    }
}

/// Render a check report in the documented line-oriented form: `#` header
/// fields, then `r,theta_0,...,margin` rows.
fn render_report(report: &AssumptionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# check v1");
    let _ = writeln!(out, "# kind = {}", report.check.name());
    let _ = writeln!(
        out,
        "# verdict = {}",
        if report.passed() { "pass" } else { "fail" }
    );
    let _ = writeln!(out, "# margin = {}", report.margin);
    let _ = writeln!(out, "# tolerance = {}", report.tolerance);
    let _ = writeln!(out, "# samples_checked = {}", report.samples_checked);
    let mut header = String::from("r");
    for i in 0..report.worst.theta.len() {
        let _ = write!(header, ",theta_{i}");
    }
    header.push_str(",margin");
    let _ = writeln!(out, "{header}");
    for s in &report.samples {
        let mut row = format!("{}", s.r);
        for th in &s.theta {
            let _ = write!(row, ",{th}");
        }
        let _ = writeln!(out, "{row},{}", s.margin);
    }
    out
}

fn run_selected_checks(
    cfg: &ExperimentConfig,
    selects: &[CheckSelect],
    seed: u64,
) -> Result<Vec<AssumptionReport>, CmdError> {
    if selects.is_empty() {
        return Ok(Vec::new());
    }
    let field = cfg.build_field()?;
    selects
        .iter()
        .map(|&s| run_check(&field, cfg, s, seed))
        .collect()
}

fn check_line(report: &AssumptionReport) -> String {
    format!(
        "check {:<16} {} (margin {:.3e}, tolerance {:.1e}, {} samples)",
        report.check.name(),
        pass_word(report.passed()),
        report.margin,
        report.tolerance,
        report.samples_checked
    )
}

/// `check-metric`: run the selected (default: all supported) structural
/// checks, write one line-oriented report per check plus a JSON bundle,
/// and summarize pass/fail per check on stdout.
pub fn cmd_check_metric(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<CommandOutput, CmdError> {
    fs::create_dir_all(out_dir)?;
    let label = cfg.label("check-metric");
    let reports = run_selected_checks(cfg, &cfg.selected_checks(), seed)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "field: {:?} (n = {}, m = {}, r0 = {})",
        cfg.metric.variant, cfg.metric.dimension, cfg.metric.cone_power, cfg.metric.obstacle_radius
    );
    for report in &reports {
        let path = out_dir.join(format!("{label}.{}.report.txt", report.check.name()));
        fs::write(&path, render_report(report))?;
        let _ = writeln!(text, "{}", check_line(report));
    }
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    fs::write(out_dir.join(format!("{label}.reports.json")), json)?;
    let pass = reports.iter().all(|r| r.passed());
    let _ = writeln!(text, "verdict: {}", pass_word(pass));
    Ok(CommandOutput { pass, text })
}

// ---------------------------------------------------------------------------
// Shared run plumbing
// ---------------------------------------------------------------------------

/// Classify one observation-radius series and package it as a table row.
fn classify_series(
    times: &[f64],
    values: &[f64],
    label: String,
    observation_radius: f64,
    cone_power: Option<f64>,
    support_outer: Option<f64>,
    analysis: &crate::experiment::config::AnalysisConfig,
) -> Result<FitRow, CmdError> {
    let series = EnergySeries::new(
        times.to_vec(),
        values.to_vec(),
        SeriesMeta {
            label: label.clone(),
            cone_power,
            observation_radius: if observation_radius.is_finite() {
                Some(observation_radius)
            } else {
                None
            },
            support_outer,
        },
    )?;
    let policy = analysis.policy;
    let window = analysis
        .window
        .unwrap_or_else(|| default_window(&series, &policy));
    let fit = classify_with_window(&series, &policy, window)?;
    let decades = series.decades_spanned(fit.window, policy.floor);
    Ok(FitRow {
        label,
        observation_radius,
        fit,
        decades,
    })
}

fn fit_rows_from_trace(
    trace: &Trace,
    analysis: &crate::experiment::config::AnalysisConfig,
) -> Result<Vec<FitRow>, CmdError> {
    if trace.radii.is_empty() {
        let row = classify_series(
            &trace.times,
            &trace.e_total,
            "total".into(),
            f64::INFINITY,
            trace.cone_power,
            trace.support_outer,
            analysis,
        )?;
        return Ok(vec![row]);
    }
    trace
        .radii
        .iter()
        .zip(&trace.e_local)
        .map(|(&a, values)| {
            classify_series(
                &trace.times,
                values,
                format!("a={a}"),
                a,
                trace.cone_power,
                trace.support_outer,
                analysis,
            )
        })
        .collect()
}

/// Render the decay plot for a trace with its fitted laws overlaid.
fn plot_trace(trace: &Trace, fits: &[FitRow], title: &str, floor: f64) -> String {
    let mut series = Vec::new();
    if trace.radii.is_empty() {
        series.push(PlotSeries {
            label: "total".into(),
            points: trace.times.iter().copied().zip(trace.e_total.iter().copied()).collect(),
        });
    }
    for (k, &a) in trace.radii.iter().enumerate() {
        series.push(PlotSeries {
            label: format!("a={a}"),
            points: trace
                .times
                .iter()
                .copied()
                .zip(trace.e_local[k].iter().copied())
                .collect(),
        });
    }
    let overlays: Vec<FitOverlay> = fits
        .iter()
        .filter(|row| {
            matches!(
                row.fit.model,
                DecayModel::Exponential | DecayModel::Polynomial
            )
        })
        .map(|row| FitOverlay {
            label: row.label.clone(),
            fit: row.fit,
        })
        .collect();
    decay_plot(title, &series, &overlays, floor)
}

struct RunSeries {
    dt: f64,
    n_steps: usize,
    support_outer: f64,
    trace: Trace,
    grid_line: String,
}

/// Artifact writing, classification, invariants, record, and stdout text
/// shared by both solvers.
fn finish_run(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
    command: &str,
    started_at: u64,
    rs: RunSeries,
    snapshots: Option<(Snapshot, Snapshot)>,
) -> Result<RunArtifacts, CmdError> {
    let label = cfg.label(command);
    let trace = &rs.trace;
    let e0 = trace.e_total[0];
    let e_final = *trace.e_total.last().expect("non-empty trace");
    let (mut drift, mut leak) = (0.0f64, 0.0f64);
    if e0 > 0.0 {
        for k in 0..trace.times.len() {
            drift = drift.max((trace.e_total[k] - e0).abs() / e0);
            leak = leak.max(trace.front_outside[k] / e0);
        }
    }

    if cfg.output.trace {
        trace.write(&out_dir.join(format!("{label}.trace.csv")))?;
    }

    let fits: Vec<FitRow> = if trace.radii.is_empty() {
        Vec::new()
    } else {
        fit_rows_from_trace(trace, &cfg.analysis)?
    };
    fs::write(
        out_dir.join(format!("{label}.fits.csv")),
        fits_to_csv(&fits),
    )?;

    if cfg.output.plot {
        let svg = plot_trace(trace, &fits, &label, cfg.analysis.policy.floor);
        fs::write(out_dir.join(format!("{label}.svg")), svg)?;
    }

    if let Some((first, last)) = &snapshots {
        first.save(&out_dir.join(format!("{label}.first.snap")))?;
        last.save(&out_dir.join(format!("{label}.final.snap")))?;
    }

    let reports = run_selected_checks(cfg, &cfg.checks.run, seed)?;
    for report in &reports {
        let path = out_dir.join(format!("{label}.{}.report.txt", report.check.name()));
        fs::write(&path, render_report(report))?;
    }

    let invariants = InvariantChecks {
        energy_drift_ok: drift <= cfg.checks.energy_drift_tolerance,
        front_leak_ok: leak <= cfg.checks.front_leak_tolerance,
        assumptions_ok: reports.iter().all(|r| r.passed()),
    };
    let pass = invariants.energy_drift_ok && invariants.front_leak_ok && invariants.assumptions_ok;

    let mut text = String::new();
    let _ = writeln!(text, "{}", rs.grid_line);
    let _ = writeln!(
        text,
        "energy: initial {:.6e}, final {:.6e}, drift {:.3e} (tolerance {:.1e}) {}",
        e0,
        e_final,
        drift,
        cfg.checks.energy_drift_tolerance,
        pass_word(invariants.energy_drift_ok)
    );
    let _ = writeln!(
        text,
        "front leakage: {:.3e} of initial energy (tolerance {:.1e}) {}",
        leak,
        cfg.checks.front_leak_tolerance,
        pass_word(invariants.front_leak_ok)
    );
    for report in &reports {
        let _ = writeln!(text, "{}", check_line(report));
    }
    for row in &fits {
        let _ = write!(text, "{}", row.summary_block());
    }
    let _ = writeln!(text, "verdict: {}", pass_word(pass));

    let record = RunRecord {
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config_hash: cfg.hash(),
        started_at,
        finished_at: unix_now(),
        config: cfg.clone(),
        solver: SolverSummary {
            dt: rs.dt,
            n_steps: rs.n_steps,
            support_outer: rs.support_outer,
            e_initial: e0,
            e_final,
            energy_drift: drift,
            front_leak: leak,
        },
        assumption_reports: reports,
        fits,
        invariants,
        pass,
    };
    if cfg.output.record {
        record.save(&out_dir.join(format!("{label}.record.json")))?;
    }
    Ok(RunArtifacts { record, text })
}

// ---------------------------------------------------------------------------
// The two run commands
// ---------------------------------------------------------------------------

fn radial_pipeline(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<RunArtifacts, CmdError> {
    fs::create_dir_all(out_dir)?;
    let started_at = unix_now();
    let grid = cfg.build_radial_grid()?;
    let data: Vec<BumpSpec> = cfg.data.iter().map(|d| d.to_bump()).collect();
    let run = solve_radial(
        &grid,
        &data,
        cfg.observation.t_final,
        cfg.grid.cfl,
        cfg.observation.sample_every,
    )?;

    let radii = cfg.observation.radii.clone();
    let len = run.states.len();
    let mut times = Vec::with_capacity(len);
    let mut e_total = Vec::with_capacity(len);
    let mut e_local = vec![Vec::with_capacity(len); radii.len()];
    let mut w_exp = Vec::with_capacity(len);
    let mut front_outside = Vec::with_capacity(len);
    for s in &run.states {
        times.push(s.t);
        e_total.push(total_energy(&grid, s));
        for (k, &a) in radii.iter().enumerate() {
            e_local[k].push(local_energy(&grid, s, a));
        }
        w_exp.push(exp_weighted_energy(&grid, s)?);
        front_outside.push(support_mass_outside(&grid, s, run.support_outer + s.t));
    }
    let trace = Trace {
        cone_power: Some(grid.cone_power()),
        support_outer: Some(run.support_outer),
        radii,
        times,
        e_total,
        e_local,
        w_exp,
        front_outside,
    };

    let snapshots = if cfg.output.snapshots {
        let snap = |s: &crate::radial::RadialState| Snapshot {
            kind: GridKind::RadialGeodesic,
            n_r: grid.n_points(),
            n_theta: 1,
            t: s.t,
            coord_lo: grid.rho_min(),
            coord_hi: grid.rho_max(),
            u: s.u.clone(),
            v: s.v.clone(),
        };
        Some((snap(&run.states[0]), snap(run.final_state())))
    } else {
        None
    };

    let grid_line = format!(
        "radial run: n = {}, m = {}, {} cells on [{:.4}, {:.4}], dt {:.6e}, {} steps",
        grid.dimension(),
        grid.cone_power(),
        grid.n_cells(),
        grid.rho_min(),
        grid.rho_max(),
        run.dt,
        run.n_steps
    );
    finish_run(
        cfg,
        out_dir,
        seed,
        "run-radial",
        started_at,
        RunSeries {
            dt: run.dt,
            n_steps: run.n_steps,
            support_outer: run.support_outer,
            trace,
            grid_line,
        },
        snapshots,
    )
}

fn planar_pipeline(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<RunArtifacts, CmdError> {
    fs::create_dir_all(out_dir)?;
    let started_at = unix_now();
    let field = cfg.build_field()?;
    let grid = cfg.build_polar_grid()?;
    let data: Vec<crate::planar::Bump2D> = cfg.data.iter().map(|d| d.to_bump_2d()).collect();
    let run = solve_planar(
        &field,
        &grid,
        &data,
        cfg.observation.t_final,
        cfg.grid.cfl,
        cfg.observation.sample_every,
        &cfg.observation.radii,
    )?;

    let trace = Trace {
        cone_power: Some(cfg.metric.cone_power),
        support_outer: Some(run.support_outer),
        radii: run.observation_radii.clone(),
        times: run.times.clone(),
        e_total: run.total_energies.clone(),
        e_local: run.local_energies.clone(),
        w_exp: run.w_exp.clone(),
        front_outside: run.outside_front.clone(),
    };

    let snapshots = if cfg.output.snapshots {
        let snap = |s: &crate::planar::PlanarState| Snapshot {
            kind: GridKind::PolarAnnulus,
            n_r: grid.n_r() + 1,
            n_theta: grid.n_theta(),
            t: s.t,
            coord_lo: grid.r_min(),
            coord_hi: grid.r_max(),
            u: s.u.clone(),
            v: s.v.clone(),
        };
        Some((snap(&run.first_state), snap(&run.final_state)))
    } else {
        None
    };

    let grid_line = format!(
        "planar run: m = {}, {} x {} cells on [{:.4}, {:.4}], dt {:.6e}, {} steps",
        cfg.metric.cone_power,
        grid.n_r(),
        grid.n_theta(),
        grid.r_min(),
        grid.r_max(),
        run.dt,
        run.n_steps
    );
    finish_run(
        cfg,
        out_dir,
        seed,
        "run-planar",
        started_at,
        RunSeries {
            dt: run.dt,
            n_steps: run.n_steps,
            support_outer: run.support_outer,
            trace,
            grid_line,
        },
        snapshots,
    )
}

/// Dispatch on the configured solver; the sweep uses this too.
pub fn run_pipeline(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<RunArtifacts, CmdError> {
    match cfg.grid.solver {
        SolverKind::Radial => radial_pipeline(cfg, out_dir, seed),
        SolverKind::Planar => planar_pipeline(cfg, out_dir, seed),
    }
}

/// `run-radial`: spherically symmetric solve in the geodesic coordinate.
pub fn cmd_run_radial(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<CommandOutput, CmdError> {
    if cfg.grid.solver != SolverKind::Radial {
        return Err(ConfigError::Invalid {
            field: "grid.solver".into(),
            why: "run-radial needs solver = \"radial\"".into(),
        }
        .into());
    }
    Ok(radial_pipeline(cfg, out_dir, seed)?.into_output())
}

/// `run-planar`: annulus solve with angular dependence.
pub fn cmd_run_planar(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<CommandOutput, CmdError> {
    if cfg.grid.solver != SolverKind::Planar {
        return Err(ConfigError::Invalid {
            field: "grid.solver".into(),
            why: "run-planar needs solver = \"planar\"".into(),
        }
        .into());
    }
    Ok(planar_pipeline(cfg, out_dir, seed)?.into_output())
}

// ---------------------------------------------------------------------------
// Analysis of saved traces
// ---------------------------------------------------------------------------

/// `analyze`: refit decay laws from a saved trace; the optional config
/// supplies the policy and window, everything else defaults.
pub fn cmd_analyze(
    trace_path: &Path,
    cfg: Option<&ExperimentConfig>,
    out_dir: &Path,
) -> Result<CommandOutput, CmdError> {
    fs::create_dir_all(out_dir)?;
    let trace = Trace::read(trace_path)?;
    let analysis = cfg.map(|c| c.analysis).unwrap_or_default();
    let base = trace_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trace");
    let base = base.strip_suffix(".trace").unwrap_or(base);
    let label = cfg
        .and_then(|c| c.output.label.clone())
        .unwrap_or_else(|| format!("{base}.analysis"));

    let fits = fit_rows_from_trace(&trace, &analysis)?;
    fs::write(
        out_dir.join(format!("{label}.fits.csv")),
        fits_to_csv(&fits),
    )?;
    let svg = plot_trace(&trace, &fits, &label, analysis.policy.floor);
    fs::write(out_dir.join(format!("{label}.svg")), svg)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "trace: {} samples, t in [{}, {}], {} observation radii",
        trace.len(),
        trace.times[0],
        trace.times[trace.len() - 1],
        trace.radii.len()
    );
    for row in &fits {
        let _ = write!(text, "{}", row.summary_block());
    }
    let _ = writeln!(text, "verdict: PASS");
    Ok(CommandOutput { pass: true, text })
}

// ---------------------------------------------------------------------------
// The cone-power sweep
// ---------------------------------------------------------------------------

pub const SWEEP_CSV_HEADER: &str = "m,d,label,observation_radius,model,rate,prefactor,\
window_lo,window_hi,r_squared,residual_rms,decades,pass";

/// `sweep`: one run per cone power (in parallel), aggregated into a single
/// CSV sorted by the axis value, one row per (power, observation radius).
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<CommandOutput, CmdError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| ConfigError::Invalid {
        field: "sweep".into(),
        why: "the sweep command needs a [sweep] table with cone_powers".into(),
    })?;
    fs::create_dir_all(out_dir)?;

    let mut powers = sweep.cone_powers.clone();
    powers.sort_by(|a, b| a.partial_cmp(b).expect("finite cone powers"));
    powers.dedup();

    let subruns: Vec<(f64, ExperimentConfig, PathBuf)> = powers
        .iter()
        .map(|&m| {
            let mut sub = cfg.clone();
            sub.metric.cone_power = m;
            sub.sweep = None;
            let dir = out_dir.join(format!("m_{m}"));
            (m, sub, dir)
        })
        .collect();
    for (m, sub, _) in &subruns {
        sub.validate().map_err(|e| ConfigError::Invalid {
            field: "sweep.cone_powers".into(),
            why: format!("m = {m} yields an invalid configuration: {e}"),
        })?;
    }

    let results: Vec<Result<RunArtifacts, CmdError>> = subruns
        .par_iter()
        .map(|(_, sub, dir)| run_pipeline(sub, dir, seed))
        .collect();

    let n = cfg.metric.dimension as f64;
    let mut csv = String::from(SWEEP_CSV_HEADER);
    csv.push('\n');
    let mut text = format!(
        "sweep over cone powers: n = {}, {} runs\n",
        cfg.metric.dimension,
        powers.len()
    );
    let mut all_pass = true;
    for ((m, _, dir), result) in subruns.iter().zip(results) {
        let artifacts = result?;
        let record = &artifacts.record;
        all_pass &= record.pass;
        let d = n / m;
        if record.fits.is_empty() {
            let _ = writeln!(
                text,
                "m = {m} (d = {d}): no observation radii, run {}",
                pass_word(record.pass)
            );
        }
        for row in &record.fits {
            let _ = writeln!(csv, "{m},{d},{},{}", row.to_csv_row(), record.pass);
            let _ = writeln!(
                text,
                "m = {m} (d = {d}): {} -> {:?} (rate {:.4}, r^2 {:.4}, {:.2} decades) run {}",
                row.label,
                row.fit.model,
                row.fit.rate,
                row.fit.r_squared,
                row.decades,
                pass_word(record.pass)
            );
        }
        let _ = writeln!(text, "  artifacts: {}", dir.display());
    }
    fs::write(out_dir.join("sweep.csv"), &csv)?;
    let _ = writeln!(text, "verdict: {}", pass_word(all_pass));
    Ok(CommandOutput {
        pass: all_pass,
        text,
    })
}
