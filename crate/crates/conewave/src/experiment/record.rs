//! The run record: a JSON document embedding the full resolved config (for
//! provenance), solver summary, structural-check reports, decay fits, and
//! a pass flag. Wall-clock timestamps live here and only here — traces
//! stay bit-deterministic.

use super::config::ExperimentConfig;
use crate::decay::DecayFit;
use crate::metric::checks::AssumptionReport;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// One classified observation radius.
#[derive(Clone, Debug, Serialize)]
pub struct FitRow {
    pub label: String,
    pub observation_radius: f64,
    #[serde(flatten)]
    pub fit: DecayFit,
    /// Decades of decay covered inside the fit window.
    pub decades: f64,
}

impl FitRow {
    pub const CSV_HEADER: &'static str =
        "label,observation_radius,model,rate,prefactor,window_lo,window_hi,r_squared,residual_rms,decades";

    /// The single-row CSV form of a fit.
    pub fn to_csv_row(&self) -> String {
        let f = &self.fit;
        let model = serde_variant_name(f.model);
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.label,
            self.observation_radius,
            model,
            f.rate,
            f.prefactor,
            f.window.0,
            f.window.1,
            f.r_squared,
            f.residual_rms,
            self.decades
        )
    }

    /// The human-readable summary block of a fit.
    pub fn summary_block(&self) -> String {
        let f = &self.fit;
        let mut s = String::new();
        let _ = writeln!(s, "series {} (a = {}):", self.label, self.observation_radius);
        let _ = writeln!(s, "  verdict      {}", serde_variant_name(f.model));
        let _ = writeln!(s, "  rate         {:.6}", f.rate);
        let _ = writeln!(s, "  prefactor    {:.6e}", f.prefactor);
        let _ = writeln!(s, "  window       [{:.3}, {:.3}]", f.window.0, f.window.1);
        let _ = writeln!(s, "  r_squared    {:.6}", f.r_squared);
        let _ = writeln!(s, "  residual_rms {:.6e}", f.residual_rms);
        let _ = writeln!(s, "  decades      {:.3}", self.decades);
        s
    }
}

fn serde_variant_name(model: crate::decay::DecayModel) -> &'static str {
    match model {
        crate::decay::DecayModel::Extinct => "extinct",
        crate::decay::DecayModel::Exponential => "exponential",
        crate::decay::DecayModel::Polynomial => "polynomial",
        crate::decay::DecayModel::Inconclusive => "inconclusive",
    }
}

/// Write a fit table: the documented header plus one CSV row per fit.
pub fn fits_to_csv(rows: &[FitRow]) -> String {
    let mut out = String::from(FitRow::CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_row());
        out.push('\n');
    }
    out
}

/// Solver-side summary numbers.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SolverSummary {
    pub dt: f64,
    pub n_steps: usize,
    pub support_outer: f64,
    pub e_initial: f64,
    pub e_final: f64,
    /// Worst relative drift of total energy over the run.
    pub energy_drift: f64,
    /// Worst fraction of energy found beyond the causal front.
    pub front_leak: f64,
}

/// Per-run invariant verdicts deciding the pass flag.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantChecks {
    pub energy_drift_ok: bool,
    pub front_leak_ok: bool,
    pub assumptions_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    /// Crate version that produced the record.
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    /// Unix seconds; absent from every other artifact.
    pub started_at: u64,
    pub finished_at: u64,
    pub config: ExperimentConfig,
    pub solver: SolverSummary,
    pub assumption_reports: Vec<AssumptionReport>,
    pub fits: Vec<FitRow>,
    pub invariants: InvariantChecks,
    pub pass: bool,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialization cannot fail")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decay::{DecayFit, DecayModel};

    #[test]
    fn fit_rows_render_csv_and_summary() {
        let row = FitRow {
            label: "a=2".into(),
            observation_radius: 2.0,
            fit: DecayFit {
                model: DecayModel::Exponential,
                rate: 0.25,
                prefactor: 1.5,
                window: (10.0, 45.0),
                r_squared: 0.999,
                residual_rms: 0.01,
            },
            decades: 3.8,
        };
        let csv = fits_to_csv(std::slice::from_ref(&row));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(FitRow::CSV_HEADER));
        let data = lines.next().unwrap();
        assert!(data.starts_with("a=2,2,exponential,0.25,1.5,10,45,"));
        let block = row.summary_block();
        assert!(block.contains("verdict      exponential"));
        assert!(block.contains("rate         0.250000"));
    }
}
