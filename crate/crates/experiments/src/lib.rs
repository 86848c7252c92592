//! Figure presets, parameter sweeps and a fast self-check for `mqm-core`.

pub mod config;
pub mod run;
pub mod selftest;
pub mod table;

pub use config::{DeltaSpec, ExperimentConfig, ExperimentKind, SweepTarget};
pub use run::run;
pub use selftest::{selftest, Mutation, SelftestOptions, SelftestReport};
pub use table::{Format, ResultTable};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] mqm_core::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl RunError {
    /// 2 for configuration problems, 3 for numerical defects.
    pub fn exit_code(&self) -> i32 {
        use mqm_core::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(E::QuadratureDefect { .. } | E::NotNormalized(_)) => 3,
            RunError::Numerical(_) => 2,
            RunError::Output(_) => 1,
        }
    }
}
