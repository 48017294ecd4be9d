//! Config-driven orchestration: build a coefficient field, run structural
//! checks and solvers, classify decay, and persist deterministic artifacts
//! (CSV traces, SVG plots, binary snapshots, JSON run records).

pub mod commands;
pub mod config;
pub mod plot;
pub mod record;
pub mod snapshot;
pub mod trace;

use crate::decay::AnalysisError;
use crate::metric::MetricError;
use crate::planar::PlanarError;
use crate::radial::SolverError;
use config::ConfigError;
use snapshot::SnapshotError;
use thiserror::Error;
use trace::TraceError;

/// Exit codes, fixed and documented: 0 success (all configured checks
/// pass), 1 a check or verdict failed, 2 configuration or validation
/// problems, 3 solver instability, 4 the analysis wants a longer
/// observation, 5 input/output failures.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INSTABILITY: i32 = 3;
pub const EXIT_EXTEND_OBSERVATION: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CmdError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Planar(#[from] PlanarError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CmdError {
    /// Map errors onto the documented exit codes.
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) | CmdError::Metric(_) => EXIT_CONFIG,
            CmdError::Solver(SolverError::Instability { .. })
            | CmdError::Planar(PlanarError::Instability { .. }) => EXIT_INSTABILITY,
            CmdError::Solver(_) | CmdError::Planar(_) => EXIT_CONFIG,
            CmdError::Analysis(AnalysisError::ExtendObservation { .. }) => {
                EXIT_EXTEND_OBSERVATION
            }
            CmdError::Analysis(_) => EXIT_CONFIG,
            CmdError::Trace(TraceError::Io(_)) => EXIT_IO,
            CmdError::Trace(_) => EXIT_CONFIG,
            CmdError::Snapshot(SnapshotError::Io(_)) => EXIT_IO,
            CmdError::Snapshot(_) => EXIT_CONFIG,
            CmdError::Io(_) => EXIT_IO,
        }
    }
}

/// What a command hands back to the binary: text for stdout and the
/// overall verdict deciding exit 0 versus 1.
#[derive(Debug)]
pub struct CommandOutput {
    pub pass: bool,
    pub text: String,
}

impl CommandOutput {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}
