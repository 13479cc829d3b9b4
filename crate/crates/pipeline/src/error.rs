use std::fmt;

use serde::Serialize;

/// Pipeline step an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Mesh,
    Boundary,
    Membrane,
    Bending,
    Statics,
    Stress,
    Diffusion,
    Modes,
    Extract,
    Bundle,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Mesh => "mesh",
            Stage::Boundary => "boundary",
            Stage::Membrane => "membrane",
            Stage::Bending => "bending",
            Stage::Statics => "statics",
            Stage::Stress => "stress",
            Stage::Diffusion => "diffusion",
            Stage::Modes => "modes",
            Stage::Extract => "extract",
            Stage::Bundle => "bundle",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An error message tagged with the stage that produced it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("[{stage}] {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, err: impl fmt::Display) -> Self {
        Self { stage, message: err.to_string() }
    }

    /// Bad input rather than a numerical failure.
    pub fn is_client_error(&self) -> bool {
        matches!(self.stage, Stage::Config | Stage::Mesh | Stage::Boundary)
    }
}
