//! Versioned model serialization.
//!
//! Models are stored as self-describing JSON with a format version. JSON
//! floats use the shortest round-trip representation, so parameters
//! survive a save/load cycle bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use hotgrid_core::ensemble::HyperEnsemble;
use hotgrid_core::learners::LearnerModel;

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

/// What an experiment trains: nothing (majority baseline), one model, or
/// a hyper-ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    /// Constant zero scores.
    Majority,
    Single(LearnerModel),
    Ensemble(HyperEnsemble),
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Majority => "majority",
            TrainedModel::Single(_) => "single",
            TrainedModel::Ensemble(_) => "ensemble",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: TrainedModel,
}

pub fn save_model(path: &Path, model: &TrainedModel) -> CliResult<()> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::data("train", format!("serialize model: {e}")))?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io("train", parent, e))?;
    }
    std::fs::write(path, json).map_err(|e| CliError::io("train", path, e))
}

pub fn load_model(path: &Path) -> CliResult<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io("evaluate", path, e))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::data("evaluate", format!("{}: {e}", path.display())))?;
    if file.format_version != FORMAT_VERSION {
        return Err(CliError::data(
            "evaluate",
            format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                file.format_version
            ),
        ));
    }
    Ok(file.model)
}
