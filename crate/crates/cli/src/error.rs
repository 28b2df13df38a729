use std::fmt;

use thiserror::Error;

/// Pipeline stage an error came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Correlate,
    Select,
    Scale,
    Split,
    Train,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Correlate => "correlate",
            Stage::Select => "select",
            Stage::Scale => "scale",
            Stage::Split => "split",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
        })
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: qweather_core::Error,
    },

    /// Input that is well-formed config but unusable data (reports, CSVs).
    #[error("data error: {0}")]
    Data(String),

    #[error("write error: {0}")]
    Write(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Stage { stage: Stage::Config, .. } => 2,
            HarnessError::Stage { stage: Stage::Train | Stage::Evaluate, .. } => 4,
            HarnessError::Stage { .. } | HarnessError::Data(_) => 3,
            HarnessError::Write(_) => 1,
        }
    }
}

/// Attach a stage tag to a core result.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, HarnessError>;
}

impl<T> AtStage<T> for qweather_core::Result<T> {
    fn at(self, stage: Stage) -> Result<T, HarnessError> {
        self.map_err(|source| HarnessError::Stage { stage, source })
    }
}

pub(crate) fn write_err(path: &std::path::Path, e: impl fmt::Display) -> HarnessError {
    HarnessError::Write(format!("{}: {e}", path.display()))
}
