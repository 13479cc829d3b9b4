//! Session configuration files.

use std::path::{Path, PathBuf};

use diffstruct::eigen::Normalization;
use diffstruct::extract::DEFAULT_MAX_DEPTH;
use diffstruct::fem::{BoundarySpec, MaterialParams};
use diffstruct::mesh::TriangleMesh;
use diffstruct::operators::MassLumping;
use diffstruct::tensor::AnisotropySettings;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Stage};

fn default_gamma() -> f64 {
    1.0
}

fn default_k() -> usize {
    6
}

fn default_depth() -> u32 {
    DEFAULT_MAX_DEPTH
}

/// Everything the precompute chain needs besides the mesh itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    /// OBJ path, relative to the config file when loaded from disk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub material: MaterialParams,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub anisotropy: AnisotropySettings,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_depth")]
    pub max_depth: u32,
    #[serde(default)]
    pub mass_lumping: MassLumping,
    #[serde(default)]
    pub normalization: Normalization,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            mesh: None,
            boundary: BoundarySpec::default(),
            material: MaterialParams::default(),
            gamma: default_gamma(),
            anisotropy: AnisotropySettings::default(),
            k: default_k(),
            max_depth: default_depth(),
            mass_lumping: MassLumping::default(),
            normalization: Normalization::default(),
        }
    }
}

impl SessionConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::new(Stage::Config, e))
    }

    /// Reads a config and makes its mesh path absolute.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        if let Some(mesh) = &config.mesh {
            if mesh.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.mesh = Some(base.join(mesh));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::new(Stage::Config, msg));
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma must be finite and nonnegative, got {}", self.gamma));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        self.material.validate().map_err(|e| PipelineError::new(Stage::Config, e))?;
        self.anisotropy.validate().map_err(|e| PipelineError::new(Stage::Config, e))?;
        Ok(())
    }

    /// Checks that every selection is nonempty on `mesh`.
    pub fn check_selections(&self, mesh: &TriangleMesh) -> Result<(), PipelineError> {
        self.boundary.resolve(mesh).map(|_| ()).map_err(|e| PipelineError::new(Stage::Boundary, e))
    }
}
