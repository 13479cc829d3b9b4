//! Stripe parameter files: a single parameter object, or a table of named rows.

use std::path::Path;

use diffstruct::stripes::StripeParams;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedParams {
    pub name: String,
    #[serde(flatten)]
    pub params: StripeParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamsFile {
    Single(StripeParams),
    Table(Vec<NamedParams>),
}

impl ParamsFile {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| PipelineError::new(Stage::Config, e))?;
        if value.is_array() {
            serde_json::from_value(value).map(ParamsFile::Table)
        } else {
            serde_json::from_value(value).map(ParamsFile::Single)
        }
        .map_err(|e| PipelineError::new(Stage::Config, format!("params: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The single object, or the named row of a table.
    pub fn select(&self, row: Option<&str>) -> Result<StripeParams, PipelineError> {
        let params = match (self, row) {
            (ParamsFile::Single(p), None) => *p,
            (ParamsFile::Single(_), Some(r)) => {
                return Err(PipelineError::new(
                    Stage::Config,
                    format!("row {r:?} requested but the file holds a single parameter set"),
                ))
            }
            (ParamsFile::Table(rows), Some(r)) => {
                rows.iter().find(|n| n.name == r).map(|n| n.params).ok_or_else(|| {
                    let names: Vec<&str> = rows.iter().map(|n| n.name.as_str()).collect();
                    PipelineError::new(Stage::Config, format!("no row {r:?}; rows are {names:?}"))
                })?
            }
            (ParamsFile::Table(_), None) => {
                return Err(PipelineError::new(Stage::Config, "parameter table needs --row"))
            }
        };
        params.validate().map_err(|e| PipelineError::new(Stage::Config, e))?;
        Ok(params)
    }
}
