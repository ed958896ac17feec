//! Single-file model container.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{stratified_folds, Corpus};
use crate::ensemble::EnsembleModel;
use crate::error::{Result, TriageError};
use crate::gbt::TrainConfig;
use crate::topics::LdaConfig;

pub const FORMAT_VERSION: &str = "triage-model/1";

/// Which labeled posts were held out when the model was trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Holdout {
    pub k: usize,
    pub fold: usize,
    pub seed: u64,
}

impl Default for Holdout {
    fn default() -> Self {
        Self { k: 5, fold: 0, seed: 0 }
    }
}

impl Holdout {
    /// `(train ids, test ids)` of the labeled posts in `corpus`.
    pub fn split(&self, corpus: &Corpus) -> Result<(Vec<String>, Vec<String>)> {
        Ok(stratified_folds(&corpus.labels(), self.k, self.seed)?.split(self.fold))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelContainer {
    pub version: String,
    pub seed: u64,
    pub train_config: TrainConfig,
    pub lda_config: LdaConfig,
    /// Directory the lexicons were read from; their contents are embedded in
    /// the resources, so the model does not need it at prediction time.
    pub lexicon_dir: Option<String>,
    /// `None` when trained on every labeled post.
    pub holdout: Option<Holdout>,
    pub model: EnsembleModel,
}

impl ModelContainer {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.version != FORMAT_VERSION {
            return Err(TriageError::Config(format!(
                "model format `{}` is not supported (expected `{FORMAT_VERSION}`)",
                c.version
            )));
        }
        if c.model.members.is_empty() {
            return Err(TriageError::Config("model has no members".into()));
        }
        for m in &c.model.members {
            m.forest.validate()?;
        }
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| TriageError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
        Self::from_json(&text)
    }
}
